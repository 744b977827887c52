use serde::{Deserialize, Serialize};

use super::report::DynamicCurve;
use crate::corr::{pcc, WindowSpec};
use crate::error::{Error, Result};
use crate::model::{StimulusCatalog, Valence};
use crate::stats::{one_sample_t_with, Alternative};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyAxis {
    /// Curves of different features on one channel.
    AcrossFeatures,
    /// Curves of one feature on different channels.
    AcrossChannels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyScore {
    pub stimulus: String,
    pub axis: ConsistencyAxis,
    /// Fixed channel for [`ConsistencyAxis::AcrossFeatures`].
    pub channel: Option<String>,
    /// Fixed feature for [`ConsistencyAxis::AcrossChannels`].
    pub feature: Option<String>,
    pub window: WindowSpec,
    /// `None` when no curve pair shared three valid windows.
    pub mean_r: Option<f64>,
    pub curves: usize,
    pub pairs_used: usize,
}

/// Mean correlation of all unordered curve pairs. Each pair is compared on
/// the windows valid in both curves; pairs with fewer than three shared
/// windows or a constant side are skipped. Returns the mean (if any pair
/// survived) and the number of pairs used.
pub fn mean_pairwise_correlation(curves: &[&[Option<f64>]]) -> Result<(Option<f64>, usize)> {
    if curves.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: curves.len(),
        });
    }
    let n = curves[0].len();
    if let Some(bad) = curves.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: bad.len(),
        });
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            let (x, y): (Vec<f64>, Vec<f64>) = curves[a]
                .iter()
                .zip(curves[b].iter())
                .filter_map(|(u, v)| Some(((*u)?, (*v)?)))
                .unzip();
            if x.len() < 3 {
                continue;
            }
            if let Some(r) = pcc(&x, &y)? {
                sum += r;
                used += 1;
            }
        }
    }
    Ok(((used > 0).then(|| (sum / used as f64).clamp(-1.0, 1.0)), used))
}

/// Consistency of z-scored dynamic curves of one stimulus along `axis`.
/// All curves must share the stimulus and window spec.
pub fn consistency(curves: &[&DynamicCurve], axis: ConsistencyAxis) -> Result<ConsistencyScore> {
    let first = curves.first().ok_or(Error::TooShort { needed: 2, got: 0 })?;
    if curves
        .iter()
        .any(|c| c.stimulus != first.stimulus || c.window != first.window)
    {
        return Err(Error::Inconsistent("curves differ in stimulus or window spec".into()));
    }
    // Curves are aligned by window start time. Feature lengths can differ by
    // one point (first differences lose a sample), so the longer curves may
    // carry trailing windows the others lack; those are dropped.
    let shared = curves.iter().map(|c| c.start_times_s.len()).min().unwrap_or(0);
    for c in curves {
        if c.start_times_s[..shared]
            .iter()
            .zip(&first.start_times_s[..shared])
            .any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::Inconsistent(format!(
                "curve {}/{} is not aligned with {}/{}",
                c.channel, c.feature, first.channel, first.feature
            )));
        }
    }
    let series: Vec<&[Option<f64>]> = curves
        .iter()
        .map(|c| &c.z.as_deref().unwrap_or(&c.mean_r)[..shared])
        .collect();
    let (mean_r, pairs_used) = mean_pairwise_correlation(&series)?;
    let same = |f: fn(&DynamicCurve) -> &str| -> Option<String> {
        let v = f(first);
        curves.iter().all(|c| f(c) == v).then(|| v.to_string())
    };
    Ok(ConsistencyScore {
        stimulus: first.stimulus.clone(),
        axis,
        channel: same(|c| &c.channel),
        feature: same(|c| &c.feature),
        window: first.window,
        mean_r,
        curves: curves.len(),
        pairs_used,
    })
}

/// Mean of one stimulus's consistency scores along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusConsistency {
    pub stimulus: String,
    pub axis: ConsistencyAxis,
    pub valence: Option<Valence>,
    pub mean_r: Option<f64>,
    pub n_scores: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub valence: Valence,
    pub stimuli: Vec<String>,
    pub scores: Vec<f64>,
    pub threshold: f64,
    pub alternative: Alternative,
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1).
    pub sd: Option<f64>,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
    /// Why the test could not run, if it could not.
    pub error: Option<String>,
}

/// One-sample t-test of each valence category's per-stimulus scores
/// against `threshold`. Categories without stimuli in `scores` are omitted;
/// degenerate categories carry an `error` instead of a result.
pub fn category_test(
    scores: &[StimulusConsistency],
    catalog: &StimulusCatalog,
    threshold: f64,
    alternative: Alternative,
    alpha: f64,
) -> Vec<CategoryResult> {
    let mut out = Vec::new();
    for valence in Valence::ALL {
        let members: Vec<&StimulusConsistency> = scores
            .iter()
            .filter(|s| catalog.valence_of(&s.stimulus) == Some(valence))
            .collect();
        if members.is_empty() {
            continue;
        }
        let stimuli: Vec<String> = members
            .iter()
            .filter(|s| s.mean_r.is_some())
            .map(|s| s.stimulus.clone())
            .collect();
        let values: Vec<f64> = members.iter().filter_map(|s| s.mean_r).collect();
        let n = values.len();
        let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
        let sd = mean
            .filter(|_| n > 1)
            .map(|m| (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt());
        let (t, p_value, error) = match one_sample_t_with(&values, threshold, alternative) {
            Ok(r) => (Some(r.statistic), Some(r.p_value), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        out.push(CategoryResult {
            valence,
            stimuli,
            scores: values,
            threshold,
            alternative,
            mean,
            sd,
            t,
            p_value,
            significant: p_value.is_some_and(|p| p < alpha),
            error,
        });
    }
    out
}
