use super::consistency::{category_test, consistency, ConsistencyAxis, ConsistencyScore, StimulusConsistency};
use super::extract::{extract_stimulus, layout, output_records, ExtractionPlan};
use super::report::{
    AnalysisReport, ConsistencySection, DatasetSummary, DynamicCurve, DynamicSection, OverallSection, OverallSummary,
    REPORT_VERSION,
};
use super::AnalysisConfig;
use crate::corr::{dynamic_isc_batch, overall_isc, BatchOptions, OverallIscTensor};
use crate::error::{Error, Result};
use crate::io::RecordingSource;
use crate::model::{FeatureConfig, StimulusCatalog};

/// Which report sections to produce. Consistency implies dynamic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub overall: bool,
    pub dynamic: bool,
    pub consistency: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        overall: true,
        dynamic: true,
        consistency: true,
    };
    pub const OVERALL: Stages = Stages {
        overall: true,
        dynamic: false,
        consistency: false,
    };
    pub const DYNAMIC: Stages = Stages {
        overall: false,
        dynamic: true,
        consistency: false,
    };
    pub const CONSISTENCY: Stages = Stages {
        overall: false,
        dynamic: true,
        consistency: true,
    };
}

struct Pass {
    overall: Option<Vec<OverallIscTensor>>,
    dynamic: Option<Vec<DynamicCurve>>,
    summary: DatasetSummary,
}

fn union_push<T: PartialEq + Clone>(acc: &mut Vec<T>, items: &[T]) -> Vec<usize> {
    items
        .iter()
        .map(|it| match acc.iter().position(|a| a == it) {
            Some(i) => i,
            None => {
                acc.push(it.clone());
                acc.len() - 1
            }
        })
        .collect()
}

/// One streaming pass over the stimuli computing the requested stages.
fn run_pass(source: &dyn RecordingSource, cfg: &AnalysisConfig, stages: Stages) -> Result<Pass> {
    let sr = source.sample_rate_hz();
    let montage = source.montage();
    cfg.validate(sr, montage)?;
    let dynamic = stages.dynamic || stages.consistency;

    let mut configs: Vec<FeatureConfig> = Vec::new();
    let mut channels: Vec<usize> = Vec::new();
    let (mut overall_cfg_idx, mut overall_ch_idx) = (Vec::new(), Vec::new());
    let (mut dyn_cfg_idx, mut dyn_ch_idx) = (Vec::new(), Vec::new());
    if stages.overall {
        overall_cfg_idx = union_push(&mut configs, &cfg.overall_configs(sr)?);
        overall_ch_idx = union_push(&mut channels, &cfg.overall_channels(montage)?);
    }
    if dynamic {
        dyn_cfg_idx = union_push(&mut configs, &cfg.feature_configs(sr)?);
        dyn_ch_idx = union_push(&mut channels, &cfg.dynamic_channels(montage)?);
    }
    let plan = ExtractionPlan::new(configs, channels, cfg.notch, cfg.grouping, sr)?;
    let layout = layout(source)?;
    let records = output_records(&layout, cfg.grouping);
    if records.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: records.len(),
        });
    }
    let dyn_channel_names: Vec<String> = cfg
        .dynamic_channels(montage)?
        .iter()
        .map(|&c| montage.channel_names()[c].clone())
        .collect();
    let options = BatchOptions {
        retain_pairs: false,
        significance_alpha: Some(cfg.alpha),
        alternative: cfg.wilcoxon_alternative,
    };

    let mut overall_parts: Vec<Vec<OverallIscTensor>> = vec![Vec::new(); overall_cfg_idx.len()];
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    for f in 0..layout.stimuli.len() {
        let sets = extract_stimulus(source, &plan, &layout, f)?;
        for (k, &ci) in overall_cfg_idx.iter().enumerate() {
            overall_parts[k].push(overall_isc(&sets[ci].select_channels(&overall_ch_idx))?);
        }
        if dynamic {
            let dyn_sets: Vec<_> = dyn_cfg_idx
                .iter()
                .map(|&ci| sets[ci].select_channels(&dyn_ch_idx))
                .collect();
            match dynamic_isc_batch(&dyn_sets, &cfg.windows, &dyn_channel_names, options) {
                Ok(batch) => curves.extend(batch.into_iter().map(DynamicCurve::from_dynamic)),
                Err(Error::Batch(mut v)) => failures.append(&mut v),
                Err(e) => return Err(e),
            }
        }
    }
    if !failures.is_empty() {
        return Err(Error::Batch(failures));
    }

    let overall = if stages.overall {
        Some(
            overall_parts
                .into_iter()
                .map(OverallIscTensor::concat)
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(Pass {
        overall,
        dynamic: dynamic.then_some(curves),
        summary: DatasetSummary {
            sample_rate_hz: sr,
            n_entries: source.keys().len(),
            records: records.iter().map(|r| r.label()).collect(),
            stimuli: layout.stimuli.clone(),
        },
    })
}

/// Run the requested stages and assemble the report.
pub fn run_analysis(source: &dyn RecordingSource, cfg: &AnalysisConfig, stages: Stages) -> Result<AnalysisReport> {
    let pass = run_pass(source, cfg, stages)?;
    let overall = pass.overall.map(|tensors| OverallSection {
        alpha: cfg.alpha,
        results: tensors
            .iter()
            .map(|t| OverallSummary::from_tensor(t, cfg.alpha))
            .collect(),
    });
    let dynamic = pass.dynamic.map(|curves| DynamicSection {
        alpha: cfg.alpha,
        curves,
    });
    let consistency = match (&dynamic, stages.consistency) {
        (Some(d), true) => Some(run_consistency(d, source.catalog(), cfg)?),
        _ => None,
    };
    Ok(AnalysisReport {
        version: REPORT_VERSION,
        config: cfg.clone(),
        dataset: pass.summary,
        overall,
        dynamic: if stages.dynamic { dynamic } else { None },
        consistency,
    })
}

/// Overall ISC per feature configuration, synchronized percentages per margin.
pub fn run_overall(source: &dyn RecordingSource, cfg: &AnalysisConfig) -> Result<OverallSection> {
    Ok(run_analysis(source, cfg, Stages::OVERALL)?
        .overall
        .expect("overall stage requested"))
}

/// The full overall tensors (Bonferroni applied across all stimuli).
pub fn run_overall_tensors(source: &dyn RecordingSource, cfg: &AnalysisConfig) -> Result<Vec<OverallIscTensor>> {
    Ok(run_pass(source, cfg, Stages::OVERALL)?
        .overall
        .expect("overall stage requested"))
}

pub fn run_dynamic(source: &dyn RecordingSource, cfg: &AnalysisConfig) -> Result<DynamicSection> {
    Ok(run_analysis(source, cfg, Stages::DYNAMIC)?
        .dynamic
        .expect("dynamic stage requested"))
}

/// Cross-feature and cross-channel consistency of the curves with the
/// configured window, then category tests on the configured axis.
pub fn run_consistency(
    dynamic: &DynamicSection,
    catalog: &StimulusCatalog,
    cfg: &AnalysisConfig,
) -> Result<ConsistencySection> {
    let window = cfg.consistency_window();
    let curves: Vec<&DynamicCurve> = dynamic.curves.iter().filter(|c| c.window == window).collect();
    let mut stimuli: Vec<&str> = Vec::new();
    let mut channels: Vec<&str> = Vec::new();
    let mut features: Vec<&str> = Vec::new();
    for c in &curves {
        for (list, v) in [
            (&mut stimuli, &c.stimulus),
            (&mut channels, &c.channel),
            (&mut features, &c.feature),
        ] {
            if !list.contains(&v.as_str()) {
                list.push(v);
            }
        }
    }

    let mut scores: Vec<ConsistencyScore> = Vec::new();
    for &s in &stimuli {
        if features.len() >= 2 {
            for &ch in &channels {
                let group: Vec<&DynamicCurve> = curves
                    .iter()
                    .copied()
                    .filter(|c| c.stimulus == s && c.channel == ch)
                    .collect();
                scores.push(consistency(&group, ConsistencyAxis::AcrossFeatures)?);
            }
        }
        if channels.len() >= 2 {
            for &fe in &features {
                let group: Vec<&DynamicCurve> = curves
                    .iter()
                    .copied()
                    .filter(|c| c.stimulus == s && c.feature == fe)
                    .collect();
                scores.push(consistency(&group, ConsistencyAxis::AcrossChannels)?);
            }
        }
    }

    let mut per_stimulus = Vec::new();
    for axis in [ConsistencyAxis::AcrossFeatures, ConsistencyAxis::AcrossChannels] {
        for &s in &stimuli {
            let vals: Vec<f64> = scores
                .iter()
                .filter(|x| x.axis == axis && x.stimulus == s)
                .filter_map(|x| x.mean_r)
                .collect();
            let n_scores = scores.iter().filter(|x| x.axis == axis && x.stimulus == s).count();
            if n_scores == 0 {
                continue;
            }
            per_stimulus.push(StimulusConsistency {
                stimulus: s.to_string(),
                axis,
                valence: catalog.valence_of(s),
                mean_r: (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64),
                n_scores,
            });
        }
    }

    let on_axis: Vec<StimulusConsistency> = per_stimulus
        .iter()
        .filter(|p| p.axis == cfg.consistency.category_axis)
        .cloned()
        .collect();
    let categories = category_test(
        &on_axis,
        catalog,
        cfg.consistency.threshold,
        cfg.consistency.alternative,
        cfg.alpha,
    );
    Ok(ConsistencySection {
        window,
        threshold: cfg.consistency.threshold,
        category_axis: cfg.consistency.category_axis,
        scores,
        per_stimulus,
        categories,
    })
}
