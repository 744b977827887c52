use serde::{Deserialize, Serialize};

use crate::corr::PairRMatrix;
use crate::error::Error;
use crate::stats::{bh_fdr_partial, wilcoxon_signed_rank_with, Alternative};

/// Why a window has no p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFlag {
    NoValidPairs,
    AllZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSignificance {
    pub alpha: f64,
    pub raw_p: Vec<Option<f64>>,
    pub adjusted_p: Vec<Option<f64>>,
    pub significant: Vec<bool>,
    pub flags: Vec<Option<WindowFlag>>,
}

impl WindowSignificance {
    pub fn significant_fraction(&self) -> f64 {
        if self.significant.is_empty() {
            return 0.0;
        }
        self.significant.iter().filter(|s| **s).count() as f64 / self.significant.len() as f64
    }
}

/// Two-sided Wilcoxon of each window's pair coefficients against zero, then
/// BH-FDR across the windows that produced a p-value. Windows without one are
/// flagged and never significant.
///
/// Pair coefficients sharing a record are not independent, so the nominal
/// error rate is approximate.
pub fn window_significance(pairs: &PairRMatrix, alpha: f64) -> WindowSignificance {
    window_significance_with(pairs, alpha, Alternative::TwoSided)
}

pub fn window_significance_with(pairs: &PairRMatrix, alpha: f64, alternative: Alternative) -> WindowSignificance {
    let n = pairs.n_windows();
    let mut raw_p = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    for k in 0..n {
        let values = pairs.window_values(k);
        if values.is_empty() {
            raw_p.push(None);
            flags.push(Some(WindowFlag::NoValidPairs));
            continue;
        }
        match wilcoxon_signed_rank_with(&values, 0.0, alternative) {
            Ok(t) => {
                raw_p.push(Some(t.p_value));
                flags.push(None);
            }
            Err(Error::Degenerate(_)) => {
                raw_p.push(None);
                flags.push(Some(WindowFlag::AllZero));
            }
            Err(e) => unreachable!("pair coefficients are finite: {e}"),
        }
    }
    let adjusted_p = bh_fdr_partial(&raw_p);
    let significant = adjusted_p.iter().map(|p| p.is_some_and(|p| p < alpha)).collect();
    WindowSignificance {
        alpha,
        raw_p,
        adjusted_p,
        significant,
        flags,
    }
}
