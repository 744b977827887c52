use serde::{Deserialize, Serialize};

use super::consistency::{CategoryResult, ConsistencyAxis, ConsistencyScore, StimulusConsistency};
use super::AnalysisConfig;
use crate::corr::{DynamicIsc, OverallIscTensor, WindowSpec};
use crate::model::FeatureConfig;
use crate::stats::{synchronized_percentage, Margin, MarginCount, WindowFlag};

pub const REPORT_VERSION: u32 = 1;

/// Everything one analysis run produces. Invalid quantities are `None`,
/// never NaN, so the JSON form is always well defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: u32,
    pub config: AnalysisConfig,
    pub dataset: DatasetSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall: Option<OverallSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic: Option<DynamicSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub sample_rate_hz: f64,
    pub n_entries: usize,
    pub records: Vec<String>,
    pub stimuli: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallSection {
    pub alpha: f64,
    pub results: Vec<OverallSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginMap {
    pub margin: Margin,
    pub labels: Vec<String>,
    pub counts: Vec<MarginCount>,
}

impl MarginMap {
    pub fn percentages(&self) -> Vec<Option<f64>> {
        self.counts.iter().map(|c| c.percentage).collect()
    }
}

/// Summary of one feature configuration's overall ISC tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallSummary {
    pub feature: String,
    pub config: FeatureConfig,
    /// Stimuli x pairs x channels.
    pub dims: [usize; 3],
    pub channels: Vec<String>,
    /// Number of valid cells; also the Bonferroni family size.
    pub valid_cells: usize,
    pub significant_cells: usize,
    /// Mean coefficient per channel over every valid (stimulus, pair) cell.
    pub mean_r_by_channel: Vec<Option<f64>>,
    /// Channel, pair and film margins, in that order.
    pub margins: Vec<MarginMap>,
}

impl OverallSummary {
    pub fn from_tensor(t: &OverallIscTensor, alpha: f64) -> Self {
        let dims = t.dims();
        let margins = Margin::ALL
            .iter()
            .map(|&margin| MarginMap {
                margin,
                labels: match margin {
                    Margin::Channel => t.channels.clone(),
                    Margin::Film => t.stimuli.clone(),
                    Margin::Pair => t
                        .pairs
                        .pairs()
                        .iter()
                        .map(|&(i, j)| format!("{}~{}", t.records[i].label(), t.records[j].label()))
                        .collect(),
                },
                counts: synchronized_percentage(&t.adjusted_p, margin, alpha),
            })
            .collect::<Vec<_>>();
        let mut sums = vec![(0.0f64, 0usize); dims[2]];
        for f in 0..dims[0] {
            for p in 0..dims[1] {
                for (c, s) in sums.iter_mut().enumerate() {
                    if let Some(r) = t.r_at(f, p, c) {
                        s.0 += r;
                        s.1 += 1;
                    }
                }
            }
        }
        OverallSummary {
            feature: t.config.label(),
            config: t.config.clone(),
            dims,
            channels: t.channels.clone(),
            valid_cells: t.adjusted_p.valid_count(),
            significant_cells: t.adjusted_p.iter().flatten().filter(|p| *p < alpha).count(),
            mean_r_by_channel: sums.iter().map(|&(s, n)| (n > 0).then(|| s / n as f64)).collect(),
            margins,
        }
    }

    pub fn margin(&self, margin: Margin) -> &MarginMap {
        self.margins
            .iter()
            .find(|m| m.margin == margin)
            .expect("every margin is summarized")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicSection {
    pub alpha: f64,
    pub curves: Vec<DynamicCurve>,
}

impl DynamicSection {
    pub fn find(&self, stimulus: &str, channel: &str, feature: &str, window: &WindowSpec) -> Option<&DynamicCurve> {
        self.curves.iter().find(|c| {
            c.stimulus == stimulus
                && c.channel.eq_ignore_ascii_case(channel)
                && c.feature == feature
                && c.window == *window
        })
    }
}

/// One dynamic ISC curve with per-window significance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicCurve {
    pub stimulus: String,
    pub channel: String,
    pub feature: String,
    pub config: FeatureConfig,
    pub window: WindowSpec,
    pub start_times_s: Vec<f64>,
    pub mean_r: Vec<Option<f64>>,
    pub valid_pairs: Vec<usize>,
    pub raw_p: Vec<Option<f64>>,
    pub adjusted_p: Vec<Option<f64>>,
    pub significant: Vec<bool>,
    pub flags: Vec<Option<WindowFlag>>,
    /// `mean_r` z-scored over its valid windows; `None` when the curve is constant.
    pub z: Option<Vec<Option<f64>>>,
}

impl DynamicCurve {
    pub fn from_dynamic(d: DynamicIsc) -> Self {
        let n = d.n_windows();
        let sig = d.significance;
        let z = crate::stats::zscore(&d.mean_r.iter().flatten().copied().collect::<Vec<_>>())
            .ok()
            .map(|zs| {
                let mut it = zs.into_iter();
                d.mean_r.iter().map(|m| m.and_then(|_| it.next())).collect()
            });
        DynamicCurve {
            stimulus: d.origin.stimulus,
            channel: d.origin.channel,
            feature: d.origin.feature.label(),
            config: d.origin.feature,
            window: d.origin.window,
            start_times_s: d.start_times_s,
            mean_r: d.mean_r,
            valid_pairs: d.valid_pairs,
            raw_p: sig.as_ref().map_or_else(|| vec![None; n], |s| s.raw_p.clone()),
            adjusted_p: sig.as_ref().map_or_else(|| vec![None; n], |s| s.adjusted_p.clone()),
            significant: sig.as_ref().map_or_else(|| vec![false; n], |s| s.significant.clone()),
            flags: sig.map_or_else(|| vec![None; n], |s| s.flags),
            z,
        }
    }

    pub fn center_times_s(&self) -> Vec<f64> {
        self.start_times_s
            .iter()
            .map(|t| t + self.window.width_s / 2.0)
            .collect()
    }

    pub fn significant_fraction(&self) -> f64 {
        if self.significant.is_empty() {
            0.0
        } else {
            self.significant.iter().filter(|s| **s).count() as f64 / self.significant.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySection {
    pub window: WindowSpec,
    pub threshold: f64,
    pub category_axis: ConsistencyAxis,
    pub scores: Vec<ConsistencyScore>,
    pub per_stimulus: Vec<StimulusConsistency>,
    pub categories: Vec<CategoryResult>,
}
