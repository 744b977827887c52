use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel;
use super::{enumerate_pairs, pcc_p_value, PairIndex};
use crate::error::{Error, Result};
use crate::model::{FeatureConfig, FeatureSeries};
use crate::stats::{bonferroni, PTensor};

/// One participant record within a stimulus: a subject-session (or a
/// subject when sessions are averaged).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordLabel {
    pub subject: String,
    pub session: String,
}

impl RecordLabel {
    pub fn new(subject: impl Into<String>, session: impl Into<String>) -> Self {
        RecordLabel {
            subject: subject.into(),
            session: session.into(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}_{}", self.subject, self.session)
    }
}

/// Feature series of every record and channel for one stimulus, record-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusFeatures {
    pub stimulus: String,
    series: Vec<FeatureSeries>,
    n_channels: usize,
}

impl StimulusFeatures {
    /// `series[r * n_channels + c]` holds record `r`, channel `c`.
    pub fn new(stimulus: impl Into<String>, series: Vec<FeatureSeries>, n_channels: usize) -> Result<Self> {
        if n_channels == 0 || !series.len().is_multiple_of(n_channels) {
            return Err(Error::Inconsistent(format!(
                "{} series do not tile {n_channels} channels",
                series.len()
            )));
        }
        Ok(StimulusFeatures {
            stimulus: stimulus.into(),
            series,
            n_channels,
        })
    }

    pub fn n_records(&self) -> usize {
        self.series.len() / self.n_channels
    }

    pub fn get(&self, record: usize, channel: usize) -> &FeatureSeries {
        &self.series[record * self.n_channels + channel]
    }

    /// Keep only the given channels, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> StimulusFeatures {
        let mut series = Vec::with_capacity(self.n_records() * channels.len());
        for r in 0..self.n_records() {
            for &c in channels {
                series.push(self.get(r, c).clone());
            }
        }
        StimulusFeatures {
            stimulus: self.stimulus.clone(),
            series,
            n_channels: channels.len(),
        }
    }

    /// Point slices for one channel across all records.
    pub fn channel_points(&self, channel: usize) -> Vec<&[f64]> {
        (0..self.n_records())
            .map(|r| self.get(r, channel).points.as_slice())
            .collect()
    }
}

/// All series extracted with one feature configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub config: FeatureConfig,
    pub feature_rate_hz: f64,
    pub channels: Vec<String>,
    pub records: Vec<RecordLabel>,
    pub stimuli: Vec<StimulusFeatures>,
}

impl FeatureSet {
    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.eq_ignore_ascii_case(label))
    }

    /// Restrict to a subset of this set's channels.
    pub fn select_channels(&self, channels: &[usize]) -> FeatureSet {
        FeatureSet {
            config: self.config.clone(),
            feature_rate_hz: self.feature_rate_hz,
            channels: channels.iter().map(|&c| self.channels[c].clone()).collect(),
            records: self.records.clone(),
            stimuli: self.stimuli.iter().map(|s| s.select_channels(channels)).collect(),
        }
    }

    /// Every stimulus carries the same records, and the series of each
    /// (stimulus, channel) share one length.
    pub fn check(&self) -> Result<()> {
        for stim in &self.stimuli {
            if stim.n_channels != self.channels.len() || stim.n_records() != self.records.len() {
                return Err(Error::Inconsistent(format!(
                    "stimulus {} holds {} records x {} channels, expected {} x {}",
                    stim.stimulus,
                    stim.n_records(),
                    stim.n_channels,
                    self.records.len(),
                    self.channels.len()
                )));
            }
            for c in 0..self.channels.len() {
                let lens: Vec<usize> = (0..stim.n_records()).map(|r| stim.get(r, c).points.len()).collect();
                if lens.windows(2).any(|w| w[0] != w[1]) {
                    return Err(Error::Inconsistent(format!(
                        "stimulus {} channel {}: series lengths differ ({:?})",
                        stim.stimulus, self.channels[c], lens
                    )));
                }
                for r in 0..stim.n_records() {
                    if stim.get(r, c).config != self.config {
                        return Err(Error::Inconsistent(format!(
                            "stimulus {} channel {}: mixed feature configurations",
                            stim.stimulus, self.channels[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Correlation, raw p and Bonferroni-adjusted p per (stimulus, pair, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct OverallIscTensor {
    pub config: FeatureConfig,
    pub stimuli: Vec<String>,
    pub channels: Vec<String>,
    pub records: Vec<RecordLabel>,
    pub pairs: PairIndex,
    /// Flat, stimulus-major then pair then channel. `None` marks degenerate cells.
    pub r: Vec<Option<f64>>,
    pub raw_p: PTensor,
    pub adjusted_p: PTensor,
}

impl OverallIscTensor {
    pub fn dims(&self) -> [usize; 3] {
        self.raw_p.dims()
    }

    pub fn r_at(&self, f: usize, p: usize, c: usize) -> Option<f64> {
        self.r[self.raw_p.flat_index(f, p, c)]
    }

    /// Stack per-stimulus tensors along the stimulus axis and redo the
    /// Bonferroni correction over the combined family.
    pub fn concat(parts: Vec<OverallIscTensor>) -> Result<OverallIscTensor> {
        let mut iter = parts.into_iter();
        let mut out = iter
            .next()
            .ok_or_else(|| Error::Inconsistent("no tensors to concatenate".into()))?;
        let mut p: Vec<Option<f64>> = out.raw_p.iter().collect();
        for part in iter {
            if part.config != out.config || part.channels != out.channels || part.records != out.records {
                return Err(Error::Inconsistent(
                    "tensors differ in feature, channels or records".into(),
                ));
            }
            out.stimuli.extend(part.stimuli);
            out.r.extend(part.r);
            p.extend(part.raw_p.iter());
        }
        let dims = [out.stimuli.len(), out.pairs.len(), out.channels.len()];
        out.raw_p = PTensor::from_options(dims, p)?;
        out.adjusted_p = bonferroni(&out.raw_p);
        Ok(out)
    }
}

/// Pearson correlation of full-length feature series for every record pair,
/// channel and stimulus. Cells are computed in parallel and written to fixed
/// positions, so the result does not depend on scheduling.
pub fn overall_isc(set: &FeatureSet) -> Result<OverallIscTensor> {
    set.check()?;
    let pairs = enumerate_pairs(set.records.len())?;
    let (n_f, n_p, n_c) = (set.stimuli.len(), pairs.len(), set.channels.len());

    let cells: Vec<(usize, usize)> = (0..n_f).flat_map(|f| (0..n_c).map(move |c| (f, c))).collect();
    let computed: Vec<Vec<Option<(f64, f64)>>> = cells
        .par_iter()
        .map(|&(f, c)| {
            let series = set.stimuli[f].channel_points(c);
            let len = series[0].len();
            if len < 3 {
                return Err(Error::TooShort { needed: 3, got: len });
            }
            let mut buf = vec![0.0; len * series.len()];
            let norms: Vec<Option<f64>> = series
                .iter()
                .zip(buf.chunks_exact_mut(len))
                .map(|(s, out)| kernel::center_into(s, out))
                .collect();
            pairs
                .pairs()
                .iter()
                .map(|&(i, j)| match (norms[i], norms[j]) {
                    (Some(ni), Some(nj)) => {
                        let r = kernel::correlation(&buf[i * len..(i + 1) * len], ni, &buf[j * len..(j + 1) * len], nj);
                        Ok(Some((r, pcc_p_value(r, len)?)))
                    }
                    _ => Ok(None),
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let total = n_f * n_p * n_c;
    let mut r = vec![None; total];
    let mut p = vec![None; total];
    for (&(f, c), cell) in cells.iter().zip(&computed) {
        for (k, v) in cell.iter().enumerate() {
            let idx = (f * n_p + k) * n_c + c;
            if let Some((rv, pv)) = v {
                r[idx] = Some(*rv);
                p[idx] = Some(*pv);
            }
        }
    }
    let raw_p = PTensor::from_options([n_f, n_p, n_c], p)?;
    let adjusted_p = bonferroni(&raw_p);
    Ok(OverallIscTensor {
        config: set.config.clone(),
        stimuli: set.stimuli.iter().map(|s| s.stimulus.clone()).collect(),
        channels: set.channels.clone(),
        records: set.records.clone(),
        pairs,
        r,
        raw_p,
        adjusted_p,
    })
}
