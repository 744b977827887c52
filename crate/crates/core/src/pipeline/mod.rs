//! Orchestration of the overall-synchrony and dynamic-consistency analyses.
//!
//! Work is streamed one stimulus at a time: recordings of a stimulus are
//! loaded (or generated), notch filtered and reduced to feature series,
//! then handed to the correlation engine. Only feature series are kept.

mod consistency;
mod extract;
mod report;
mod run;

pub use consistency::{
    category_test, consistency, CategoryResult, ConsistencyAxis, ConsistencyScore, StimulusConsistency,
};
pub use extract::{extract_features, ExtractionPlan};
pub use report::{
    AnalysisReport, ConsistencySection, DatasetSummary, DynamicCurve, DynamicSection, MarginMap, OverallSection,
    OverallSummary, REPORT_VERSION,
};
pub use run::{run_analysis, run_consistency, run_dynamic, run_overall, run_overall_tensors, Stages};

use serde::{Deserialize, Serialize};

use crate::corr::WindowSpec;
use crate::error::{Error, Result};
use crate::model::{FeatureConfig, Montage};
use crate::preprocess::BandDef;
use crate::stats::Alternative;

/// Feature selection as written in configuration files. DE bands are named
/// (`delta_theta`, `alpha`, `beta`, `gamma`) or given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSpec {
    Original {
        scale: usize,
    },
    FirstDifference {
        scale: usize,
    },
    DifferentialEntropy {
        band: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        range_hz: Option<[f64; 2]>,
    },
}

impl FeatureSpec {
    pub fn resolve(&self, sample_rate_hz: f64) -> Result<FeatureConfig> {
        let cfg = match self {
            FeatureSpec::Original { scale } => FeatureConfig::original(*scale),
            FeatureSpec::FirstDifference { scale } => FeatureConfig::first_difference(*scale),
            FeatureSpec::DifferentialEntropy { band, range_hz } => {
                let def = match range_hz {
                    Some([lo, hi]) => BandDef::new(band.clone(), *lo, *hi),
                    None => BandDef::standard()
                        .into_iter()
                        .find(|b| b.name.eq_ignore_ascii_case(band))
                        .ok_or_else(|| Error::Config(format!("unknown band {band:?}; give range_hz")))?,
                };
                let sr = sample_rate_hz.round();
                if (sr - sample_rate_hz).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "differential entropy needs an integral sample rate, got {sample_rate_hz}"
                    )));
                }
                FeatureConfig::differential_entropy(def, sr as usize)
            }
        };
        cfg.validate(sample_rate_hz)?;
        Ok(cfg)
    }
}

/// Whether the sessions of a subject count as separate records or are
/// averaged into one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Independent,
    SubjectAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchSpec {
    pub low_hz: f64,
    pub high_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsistencyConfig {
    /// Axis whose per-stimulus scores feed the category tests.
    pub category_axis: ConsistencyAxis,
    /// Window spec of the curves being compared; `None` takes the first.
    pub window: Option<WindowSpec>,
    pub threshold: f64,
    pub alternative: Alternative,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            category_axis: ConsistencyAxis::AcrossFeatures,
            window: None,
            threshold: 0.2,
            alternative: Alternative::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Features used by every stage.
    pub features: Vec<FeatureSpec>,
    /// Extra first-difference scales for the overall stage only.
    pub fd_scale_sweep: Vec<usize>,
    pub windows: Vec<WindowSpec>,
    pub alpha: f64,
    /// Channels of the overall stage; `None` means the whole montage.
    pub channels: Option<Vec<String>>,
    /// Channels of the dynamic stage; `None` means the montage's key electrodes.
    pub dynamic_channels: Option<Vec<String>>,
    pub grouping: Grouping,
    pub notch: Option<NotchSpec>,
    pub wilcoxon_alternative: Alternative,
    pub consistency: ConsistencyConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            features: vec![
                FeatureSpec::FirstDifference { scale: 20 },
                FeatureSpec::DifferentialEntropy {
                    band: "beta".into(),
                    range_hz: None,
                },
                FeatureSpec::DifferentialEntropy {
                    band: "gamma".into(),
                    range_hz: None,
                },
            ],
            fd_scale_sweep: vec![1, 5, 10, 20, 50, 100, 200],
            windows: vec![WindowSpec::new(10.0, 1.0), WindowSpec::new(70.0, 1.0)],
            alpha: 0.05,
            channels: None,
            dynamic_channels: None,
            grouping: Grouping::Independent,
            notch: Some(NotchSpec {
                low_hz: 48.0,
                high_hz: 52.0,
            }),
            wilcoxon_alternative: Alternative::TwoSided,
            consistency: ConsistencyConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self, sample_rate_hz: f64, montage: &Montage) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.features.is_empty() {
            return Err(Error::Config("at least one feature is required".into()));
        }
        self.feature_configs(sample_rate_hz)?;
        self.overall_configs(sample_rate_hz)?;
        if self.windows.is_empty() {
            return Err(Error::Config("at least one window spec is required".into()));
        }
        for w in &self.windows {
            if !(w.width_s.is_finite() && w.hop_s.is_finite() && w.width_s > 0.0 && w.hop_s > 0.0) {
                return Err(Error::Config(format!("window {w:?} must have positive width and hop")));
            }
        }
        if let Some(w) = &self.consistency.window {
            if !self.windows.contains(w) {
                return Err(Error::Config(format!(
                    "consistency window {w:?} is not among the window specs"
                )));
            }
        }
        if !self.consistency.threshold.is_finite() {
            return Err(Error::Config("consistency threshold must be finite".into()));
        }
        self.overall_channels(montage)?;
        self.dynamic_channels(montage)?;
        if let Some(n) = &self.notch {
            if !(n.low_hz > 0.0 && n.low_hz < n.high_hz && n.high_hz < sample_rate_hz / 2.0) {
                return Err(Error::Config(format!(
                    "notch band [{}, {}] Hz invalid at {sample_rate_hz} Hz",
                    n.low_hz, n.high_hz
                )));
            }
        }
        Ok(())
    }

    pub fn feature_configs(&self, sample_rate_hz: f64) -> Result<Vec<FeatureConfig>> {
        let mut out: Vec<FeatureConfig> = Vec::new();
        for spec in &self.features {
            let cfg = spec.resolve(sample_rate_hz)?;
            if out.contains(&cfg) {
                return Err(Error::Config(format!("feature {} listed twice", cfg.label())));
            }
            out.push(cfg);
        }
        Ok(out)
    }

    /// `features` followed by any sweep scale not already present.
    pub fn overall_configs(&self, sample_rate_hz: f64) -> Result<Vec<FeatureConfig>> {
        let mut out = self.feature_configs(sample_rate_hz)?;
        for &s in &self.fd_scale_sweep {
            let cfg = FeatureSpec::FirstDifference { scale: s }.resolve(sample_rate_hz)?;
            if !out.contains(&cfg) {
                out.push(cfg);
            }
        }
        Ok(out)
    }

    pub fn overall_channels(&self, montage: &Montage) -> Result<Vec<usize>> {
        match &self.channels {
            Some(list) => resolve_unique(montage, list),
            None => Ok((0..montage.len()).collect()),
        }
    }

    pub fn dynamic_channels(&self, montage: &Montage) -> Result<Vec<usize>> {
        match &self.dynamic_channels {
            Some(list) => resolve_unique(montage, list),
            None if !montage.key_electrodes().is_empty() => Ok(montage.key_indices()),
            None => Ok((0..montage.len()).collect()),
        }
    }

    pub fn consistency_window(&self) -> WindowSpec {
        self.consistency.window.unwrap_or(self.windows[0])
    }
}

fn resolve_unique(montage: &Montage, labels: &[String]) -> Result<Vec<usize>> {
    if labels.is_empty() {
        return Err(Error::Config("channel list is empty".into()));
    }
    let idx = montage.resolve(labels)?;
    for (i, c) in idx.iter().enumerate() {
        if idx[..i].contains(c) {
            return Err(Error::Config(format!(
                "channel {} listed twice",
                montage.channel_names()[*c]
            )));
        }
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates_on_seed_montage() {
        let cfg = AnalysisConfig::default();
        cfg.validate(200.0, &Montage::seed62()).unwrap();
        assert_eq!(cfg.feature_configs(200.0).unwrap().len(), 3);
        // FD_s20 appears once even though it is also in the sweep.
        assert_eq!(cfg.overall_configs(200.0).unwrap().len(), 9);
        assert_eq!(cfg.dynamic_channels(&Montage::seed62()).unwrap().len(), 6);
    }

    #[test]
    fn feature_spec_parsing() {
        let spec: FeatureSpec = serde_json::from_str(r#"{"kind":"differential_entropy","band":"gamma"}"#).unwrap();
        let cfg = spec.resolve(200.0).unwrap();
        assert_eq!(cfg.label(), "DE_gamma");
        assert_eq!(cfg.scale, 200);
        let custom: FeatureSpec =
            serde_json::from_str(r#"{"kind":"differential_entropy","band":"low","range_hz":[2,6]}"#).unwrap();
        assert_eq!(custom.resolve(200.0).unwrap().band.unwrap().high_hz, 6.0);
        assert!(serde_json::from_str::<FeatureSpec>(r#"{"kind":"first_difference","scale":2,"x":1}"#).is_err());
        let unknown = FeatureSpec::DifferentialEntropy {
            band: "kappa".into(),
            range_hz: None,
        };
        assert!(unknown.resolve(200.0).is_err());
    }

    #[test]
    fn invalid_settings_rejected() {
        let m = Montage::seed62();
        let mut c = AnalysisConfig {
            alpha: 1.5,
            ..AnalysisConfig::default()
        };
        assert!(c.validate(200.0, &m).is_err());
        c.alpha = 0.05;
        c.channels = Some(vec!["T7".into(), "t7".into()]);
        assert!(c.validate(200.0, &m).is_err());
        c.channels = Some(vec!["XX".into()]);
        assert!(c.validate(200.0, &m).is_err());
        c.channels = None;
        c.notch = Some(NotchSpec {
            low_hz: 48.0,
            high_hz: 52.0,
        });
        assert!(c.validate(100.0, &m).is_err());
    }
}
