use serde::{Deserialize, Serialize};

use crate::stats::correction::PTensor;

/// Axis kept when summarizing a stimulus x pair x channel tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margin {
    Film,
    Pair,
    Channel,
}

impl Margin {
    pub const ALL: [Margin; 3] = [Margin::Channel, Margin::Pair, Margin::Film];

    fn axis(self) -> usize {
        match self {
            Margin::Film => 0,
            Margin::Pair => 1,
            Margin::Channel => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Margin::Film => "film",
            Margin::Pair => "pair",
            Margin::Channel => "channel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginCount {
    pub valid_cells: usize,
    pub significant_cells: usize,
    /// `None` when no valid cell exists along this index.
    pub percentage: Option<f64>,
}

/// Percentage of valid cells with adjusted p below `alpha`, for each index
/// along `margin`, pooling the other two axes.
pub fn synchronized_percentage(adjusted: &PTensor, margin: Margin, alpha: f64) -> Vec<MarginCount> {
    let dims = adjusted.dims();
    let axis = margin.axis();
    let mut valid = vec![0usize; dims[axis]];
    let mut hits = vec![0usize; dims[axis]];
    for f in 0..dims[0] {
        for p in 0..dims[1] {
            for c in 0..dims[2] {
                let idx = [f, p, c][axis];
                if let Some(v) = adjusted.get(f, p, c) {
                    valid[idx] += 1;
                    if v < alpha {
                        hits[idx] += 1;
                    }
                }
            }
        }
    }
    valid
        .into_iter()
        .zip(hits)
        .map(|(v, h)| MarginCount {
            valid_cells: v,
            significant_cells: h,
            percentage: (v > 0).then(|| 100.0 * h as f64 / v as f64),
        })
        .collect()
}
