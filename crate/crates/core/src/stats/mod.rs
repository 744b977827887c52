//! Multiple-comparison corrections, rank and t tests, normalization and
//! synchronized percentages.

mod correction;
mod percentage;
mod rank;
pub mod special;
mod ttest;
mod window;

pub use correction::{bh_fdr, bh_fdr_partial, bonferroni, bonferroni_list, PTensor};
pub use percentage::{synchronized_percentage, Margin, MarginCount};
pub use rank::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, EXACT_MAX_N};
pub use ttest::{one_sample_t, one_sample_t_with, zscore};
pub use window::{window_significance, window_significance_with, WindowFlag, WindowSignificance};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WilcoxonExact,
    WilcoxonNormal,
    OneSampleT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: TestMethod,
}
