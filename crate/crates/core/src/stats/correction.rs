//! Multiple-comparison corrections over p-value tensors and lists.

use crate::error::{Error, Result};

/// Three-axis p-value tensor (stimulus x pair x channel) with an invalid-cell mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PTensor {
    dims: [usize; 3],
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl PTensor {
    /// Invalid cells are `None`; valid values must lie in [0, 1].
    pub fn from_options(dims: [usize; 3], cells: Vec<Option<f64>>) -> Result<Self> {
        let len = dims.iter().product::<usize>();
        if cells.len() != len {
            return Err(Error::LengthMismatch {
                left: cells.len(),
                right: len,
            });
        }
        let mut values = Vec::with_capacity(len);
        let mut valid = Vec::with_capacity(len);
        for c in cells {
            match c {
                Some(p) if (0.0..=1.0).contains(&p) => {
                    values.push(p);
                    valid.push(true);
                }
                Some(p) => return Err(Error::InvalidArgument(format!("p-value {p} outside [0, 1]"))),
                None => {
                    values.push(f64::NAN);
                    valid.push(false);
                }
            }
        }
        Ok(PTensor { dims, values, valid })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat_index(&self, f: usize, p: usize, c: usize) -> usize {
        (f * self.dims[1] + p) * self.dims[2] + c
    }

    pub fn get(&self, f: usize, p: usize, c: usize) -> Option<f64> {
        self.get_flat(self.flat_index(f, p, c))
    }

    pub fn get_flat(&self, i: usize) -> Option<f64> {
        self.valid[i].then_some(self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.values.len()).map(|i| self.get_flat(i))
    }

    fn map_valid(&self, f: impl Fn(f64) -> f64) -> PTensor {
        PTensor {
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&self.valid)
                .map(|(&v, &ok)| if ok { f(v) } else { f64::NAN })
                .collect(),
            valid: self.valid.clone(),
        }
    }
}

/// Bonferroni: `min(1, p·m)` with `m` the number of valid cells across all
/// three axes. Invalid cells stay invalid.
pub fn bonferroni(p: &PTensor) -> PTensor {
    let m = p.valid_count() as f64;
    p.map_valid(|v| (v * m).min(1.0))
}

/// Bonferroni on a plain list (every entry counts as a test).
pub fn bonferroni_list(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    p.iter().map(|v| (v * m).min(1.0)).collect()
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn bh_fdr(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = f64::INFINITY;
    for rank in (1..=m).rev() {
        let idx = order[rank - 1];
        // m/rank >= 1 exactly, so q never rounds below p.
        let q = p[idx] * (m as f64 / rank as f64);
        running = running.min(q);
        adjusted[idx] = running.min(1.0);
    }
    adjusted
}

/// [`bh_fdr`] over the present entries only; `None` entries stay `None`.
pub fn bh_fdr_partial(p: &[Option<f64>]) -> Vec<Option<f64>> {
    let present: Vec<f64> = p.iter().flatten().copied().collect();
    let mut adjusted = bh_fdr(&present).into_iter();
    p.iter().map(|v| v.and_then(|_| adjusted.next())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bonferroni_examples() {
        let cells: Vec<Option<f64>> = (0..1000).map(|i| Some(if i == 0 { 1e-8 } else { 0.5 })).collect();
        let t = PTensor::from_options([10, 10, 10], cells).unwrap();
        let adj = bonferroni(&t);
        assert!((adj.get(0, 0, 0).unwrap() - 1e-5).abs() < 1e-18);
        assert_eq!(adj.get(0, 0, 1), Some(1.0));

        let single = PTensor::from_options([1, 1, 1], vec![Some(0.0123)]).unwrap();
        assert_eq!(bonferroni(&single).get(0, 0, 0), Some(0.0123));

        // Paper dimensions: 15 films x 990 pairs x 62 channels.
        assert_eq!(15 * 990 * 62, 920_700);
        assert_eq!((0.001f64 * 920_700.0).min(1.0), 1.0);
    }

    #[test]
    fn bonferroni_counts_only_valid_cells() {
        let t = PTensor::from_options([1, 2, 2], vec![Some(0.01), None, Some(0.02), None]).unwrap();
        let adj = bonferroni(&t);
        assert_eq!(adj.get(0, 0, 0), Some(0.02));
        assert_eq!(adj.get(0, 0, 1), None);
        assert_eq!(adj.get(0, 1, 0), Some(0.04));
    }

    #[test]
    fn ptensor_rejects_out_of_range() {
        assert!(PTensor::from_options([1, 1, 1], vec![Some(1.5)]).is_err());
        assert!(PTensor::from_options([1, 1, 2], vec![Some(0.5)]).is_err());
    }

    #[test]
    fn bh_examples() {
        let a = bh_fdr(&[0.01, 0.02, 0.03, 0.04]);
        for v in a {
            assert!((v - 0.04).abs() < 1e-15);
        }
        let b = bh_fdr(&[0.005, 0.1]);
        assert!((b[0] - 0.01).abs() < 1e-15 && (b[1] - 0.1).abs() < 1e-15);
        assert_eq!(bh_fdr(&[0.37]), vec![0.37]);
        assert!(bh_fdr(&[0.9, 0.95, 0.99]).iter().all(|v| (v - 0.99).abs() < 1e-15));
    }

    #[test]
    fn bh_partial_skips_missing() {
        let out = bh_fdr_partial(&[Some(0.005), None, Some(0.1)]);
        assert_eq!(out[1], None);
        assert!((out[0].unwrap() - 0.01).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bh_bounded_by_bonferroni(p in prop::collection::vec(0.0f64..=1.0, 1..60)) {
            let bh = bh_fdr(&p);
            let bf = bonferroni_list(&p);
            for i in 0..p.len() {
                prop_assert!(bh[i] >= p[i] - 1e-15);
                prop_assert!(bh[i] <= bf[i] + 1e-15);
                prop_assert!(bh[i] <= 1.0);
            }
        }
    }
}
