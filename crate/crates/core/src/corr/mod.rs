//! Pairwise Pearson correlation, overall ISC tensors and the sliding-window engine.

mod dynamic;
mod kernel;
mod overall;

pub use dynamic::{
    dynamic_isc_batch, sliding_window_isc, window_count, BatchOptions, DynamicIsc, DynamicOrigin, PairRMatrix,
    WindowPoints, WindowSpec,
};
pub use overall::{overall_isc, FeatureSet, OverallIscTensor, RecordLabel, StimulusFeatures};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::special::betainc;

/// Pearson correlation of two equal-length series.
///
/// Returns `Ok(None)` when either series has zero variance.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let mut cx = vec![0.0; x.len()];
    let mut cy = vec![0.0; y.len()];
    let (Some(nx), Some(ny)) = (kernel::center_into(x, &mut cx), kernel::center_into(y, &mut cy)) else {
        return Ok(None);
    };
    Ok(Some(kernel::correlation(&cx, nx, &cy, ny)))
}

/// Two-tailed p-value of a Pearson coefficient under the null of no
/// correlation: t = r·√((n-2)/(1-r²)) with n-2 degrees of freedom,
/// evaluated as I_{1-r²}((n-2)/2, 1/2).
pub fn pcc_p_value(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    if r.is_nan() || r.abs() > 1.0 {
        return Err(Error::InvalidArgument(format!("correlation {r} outside [-1, 1]")));
    }
    let df = (n - 2) as f64;
    let x = (1.0 - r.abs()) * (1.0 + r.abs());
    Ok(betainc(df / 2.0, 0.5, x).clamp(0.0, 1.0))
}

/// Canonical lexicographic list of record pairs `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairIndex {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn n_records(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn get(&self, k: usize) -> (usize, usize) {
        self.pairs[k]
    }
}

pub fn enumerate_pairs(m: usize) -> Result<PairIndex> {
    if m < 2 {
        return Err(Error::TooShort { needed: 2, got: m });
    }
    let pairs = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    Ok(PairIndex { m, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pcc_hand_cases() {
        let x = [0.3, -1.0, 2.5, 4.0, 0.0];
        assert!((pcc(&x, &x).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert!((pcc(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap().unwrap() + 1.0).abs() < 1e-12);
        assert!((pcc(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap().unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pcc_errors_and_degenerate() {
        assert!(matches!(pcc(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch { .. })));
        assert!(pcc(&[1.0], &[1.0]).is_err());
        assert_eq!(pcc(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), None);
    }

    #[test]
    fn p_value_limits() {
        for n in [3, 10, 100] {
            assert_eq!(pcc_p_value(0.0, n).unwrap(), 1.0);
            assert_eq!(pcc_p_value(1.0, n).unwrap(), 0.0);
            assert_eq!(pcc_p_value(-1.0, n).unwrap(), 0.0);
        }
        assert!(pcc_p_value(0.5, 2).is_err());
        assert!(pcc_p_value(1.5, 10).is_err());
        assert!(pcc_p_value(f64::NAN, 10).is_err());
    }

    #[test]
    fn pairs_small_cases() {
        assert_eq!(enumerate_pairs(2).unwrap().pairs(), &[(0, 1)]);
        assert_eq!(enumerate_pairs(3).unwrap().pairs(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(enumerate_pairs(45).unwrap().len(), 990);
        assert!(enumerate_pairs(1).is_err());
    }

    proptest! {
        #[test]
        fn pcc_affine_invariance(
            xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..80),
            a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            b in -1e3f64..1e3,
            c in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            d in -1e3f64..1e3,
        ) {
            let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
            let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
            let base = pcc(&x, &y).unwrap();
            prop_assume!(base.is_some());
            let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ys: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let scaled = pcc(&xs, &ys).unwrap().unwrap();
            prop_assert!((scaled - (a * c).signum() * base.unwrap()).abs() < 1e-9);
            prop_assert_eq!(pcc(&x, &y).unwrap(), pcc(&y, &x).unwrap());
        }

        #[test]
        fn pair_index_invariants(m in 2usize..60) {
            let p = enumerate_pairs(m).unwrap();
            prop_assert_eq!(p.len(), m * (m - 1) / 2);
            prop_assert!(p.pairs().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(p.pairs().iter().all(|&(i, j)| i < j && j < m));
        }
    }
}
