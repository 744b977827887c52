use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{Grouping, NotchSpec};
use crate::corr::{FeatureSet, RecordLabel, StimulusFeatures};
use crate::error::{Error, Result};
use crate::features::{differential_entropy_multi, extract_points};
use crate::io::RecordingSource;
use crate::model::{FeatureConfig, FeatureKind, FeatureSeries, SeriesOrigin};
use crate::preprocess::{BandDef, BandStopFilter};

/// What to extract from every recording.
#[derive(Debug, Clone)]
pub struct ExtractionPlan {
    pub configs: Vec<FeatureConfig>,
    /// Montage channel indices, in output order.
    pub channels: Vec<usize>,
    pub notch: Option<BandStopFilter>,
    pub grouping: Grouping,
}

impl ExtractionPlan {
    pub fn new(
        configs: Vec<FeatureConfig>,
        channels: Vec<usize>,
        notch: Option<NotchSpec>,
        grouping: Grouping,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        for c in &configs {
            c.validate(sample_rate_hz)?;
        }
        let notch = notch
            .map(|n| BandStopFilter::design(sample_rate_hz, n.low_hz, n.high_hz))
            .transpose()?;
        Ok(ExtractionPlan {
            configs,
            channels,
            notch,
            grouping,
        })
    }
}

/// Stimuli, records and the source entry of every (stimulus, record).
pub(crate) struct Layout {
    pub stimuli: Vec<String>,
    pub records: Vec<RecordLabel>,
    /// `entries[stimulus][record]` indexes `source.keys()`.
    pub entries: Vec<Vec<usize>>,
}

pub(crate) fn layout(source: &dyn RecordingSource) -> Result<Layout> {
    let keys = source.keys();
    let stimuli: Vec<String> = keys
        .iter()
        .map(|k| k.stimulus.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let records: Vec<RecordLabel> = keys
        .iter()
        .map(|k| RecordLabel::new(&k.subject, &k.session))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut entries = vec![vec![usize::MAX; records.len()]; stimuli.len()];
    for (i, k) in keys.iter().enumerate() {
        let f = stimuli.binary_search(&k.stimulus).expect("collected above");
        let r = records
            .binary_search(&RecordLabel::new(&k.subject, &k.session))
            .expect("collected above");
        entries[f][r] = i;
    }
    for (f, row) in entries.iter().enumerate() {
        if let Some(r) = row.iter().position(|&i| i == usize::MAX) {
            return Err(Error::Inconsistent(format!(
                "record {} has no recording for stimulus {}",
                records[r].label(),
                stimuli[f]
            )));
        }
    }
    Ok(Layout {
        stimuli,
        records,
        entries,
    })
}

/// Feature points of one recording: `[config][channel]`.
fn extract_record(source: &dyn RecordingSource, plan: &ExtractionPlan, entry: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    let rec = source.load(entry)?;
    let sr = rec.sample_rate_hz();
    let de_bands: Vec<&BandDef> = plan
        .configs
        .iter()
        .filter(|c| c.kind == FeatureKind::DifferentialEntropy)
        .map(|c| c.band.as_ref().expect("validated DE config has a band"))
        .collect();

    let mut out = vec![Vec::with_capacity(plan.channels.len()); plan.configs.len()];
    for &ch in &plan.channels {
        let raw = rec.channel(ch);
        let signal = match &plan.notch {
            Some(filter) => filter.apply(&raw).map_err(|e| Error::Format {
                entry: rec.id(),
                detail: format!("notch filter on channel {ch}: {e}"),
            })?,
            None => raw,
        };
        let mut de = if de_bands.is_empty() {
            Vec::new()
        } else {
            differential_entropy_multi(&signal, sr, &de_bands)?
        }
        .into_iter();
        for (i, cfg) in plan.configs.iter().enumerate() {
            let points = if cfg.kind == FeatureKind::DifferentialEntropy {
                de.next().expect("one DE series per DE config")
            } else {
                extract_points(&signal, cfg, sr)?
            };
            out[i].push(points);
        }
    }
    Ok(out)
}

/// Records after grouping, and for each the source records averaged into it.
fn grouped_records(records: &[RecordLabel], grouping: Grouping) -> Vec<(RecordLabel, Vec<usize>)> {
    match grouping {
        Grouping::Independent => records.iter().enumerate().map(|(i, r)| (r.clone(), vec![i])).collect(),
        Grouping::SubjectAverage => {
            let mut out: Vec<(RecordLabel, Vec<usize>)> = Vec::new();
            for (i, r) in records.iter().enumerate() {
                match out.last_mut() {
                    Some((label, members)) if label.subject == r.subject => members.push(i),
                    _ => out.push((RecordLabel::new(&r.subject, "avg"), vec![i])),
                }
            }
            out
        }
    }
}

pub(crate) fn output_records(layout: &Layout, grouping: Grouping) -> Vec<RecordLabel> {
    grouped_records(&layout.records, grouping)
        .into_iter()
        .map(|(l, _)| l)
        .collect()
}

/// One [`FeatureSet`] per config, each holding only stimulus `f`.
pub(crate) fn extract_stimulus(
    source: &dyn RecordingSource,
    plan: &ExtractionPlan,
    layout: &Layout,
    f: usize,
) -> Result<Vec<FeatureSet>> {
    let per_record: Vec<Vec<Vec<Vec<f64>>>> = layout.entries[f]
        .par_iter()
        .map(|&e| extract_record(source, plan, e))
        .collect::<Result<_>>()?;

    let montage = source.montage();
    let sr = source.sample_rate_hz();
    let stimulus = &layout.stimuli[f];
    let channels: Vec<String> = plan
        .channels
        .iter()
        .map(|&c| montage.channel_names()[c].clone())
        .collect();
    let groups = grouped_records(&layout.records, plan.grouping);

    let mut sets = Vec::with_capacity(plan.configs.len());
    for (i, cfg) in plan.configs.iter().enumerate() {
        let mut series = Vec::with_capacity(groups.len() * channels.len());
        for (label, members) in &groups {
            for (c, name) in channels.iter().enumerate() {
                let points = average(members.iter().map(|&m| per_record[m][i][c].as_slice()))?;
                series.push(FeatureSeries {
                    config: cfg.clone(),
                    origin: SeriesOrigin {
                        subject: label.subject.clone(),
                        session: label.session.clone(),
                        stimulus: stimulus.clone(),
                        channel: name.clone(),
                    },
                    points,
                    feature_rate_hz: cfg.feature_rate_hz(sr),
                });
            }
        }
        sets.push(FeatureSet {
            config: cfg.clone(),
            feature_rate_hz: cfg.feature_rate_hz(sr),
            channels: channels.clone(),
            records: groups.iter().map(|(l, _)| l.clone()).collect(),
            stimuli: vec![StimulusFeatures::new(stimulus.clone(), series, channels.len())?],
        });
    }
    Ok(sets)
}

fn average<'a>(mut parts: impl ExactSizeIterator<Item = &'a [f64]>) -> Result<Vec<f64>> {
    let n = parts.len();
    let first = parts.next().expect("every group has a member");
    if n == 1 {
        return Ok(first.to_vec());
    }
    let mut acc = first.to_vec();
    for p in parts {
        if p.len() != acc.len() {
            return Err(Error::LengthMismatch {
                left: acc.len(),
                right: p.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= n as f64;
    }
    Ok(acc)
}

/// Extract every stimulus into one [`FeatureSet`] per config. Holds all
/// feature series in memory; the pipeline runners stream instead.
pub fn extract_features(source: &dyn RecordingSource, plan: &ExtractionPlan) -> Result<Vec<FeatureSet>> {
    let layout = layout(source)?;
    let mut merged: Option<Vec<FeatureSet>> = None;
    for f in 0..layout.stimuli.len() {
        let sets = extract_stimulus(source, plan, &layout, f)?;
        match merged.as_mut() {
            None => merged = Some(sets),
            Some(all) => {
                for (acc, s) in all.iter_mut().zip(sets) {
                    acc.stimuli.extend(s.stimuli);
                }
            }
        }
    }
    merged.ok_or_else(|| Error::Inconsistent("dataset has no stimuli".into()))
}
