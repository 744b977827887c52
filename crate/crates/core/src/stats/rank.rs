//! Wilcoxon signed-rank test.

use crate::error::{Error, Result};
use crate::stats::special::normal_sf;
use crate::stats::{Alternative, TestMethod, TestResult};

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 15;

/// Two-sided Wilcoxon signed-rank test of `values` against `mu0`.
pub fn wilcoxon_signed_rank(values: &[f64], mu0: f64) -> Result<TestResult> {
    wilcoxon_signed_rank_with(values, mu0, Alternative::TwoSided)
}

/// Zero differences are dropped; tied magnitudes share their average rank.
/// Exact null distribution (by counting sign assignments) up to
/// [`EXACT_MAX_N`] differences, otherwise a normal approximation with tie
/// and continuity corrections. The statistic is W⁺.
pub fn wilcoxon_signed_rank_with(values: &[f64], mu0: f64, alternative: Alternative) -> Result<TestResult> {
    let diffs: Vec<f64> = values.iter().map(|v| v - mu0).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in Wilcoxon input".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Err(Error::Degenerate("all differences are zero".into()));
    }

    let (doubled_ranks, tie_sizes) = doubled_average_ranks(&diffs);
    let w_plus_doubled: u64 = diffs
        .iter()
        .zip(&doubled_ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let statistic = w_plus_doubled as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let counts = signed_rank_counts(&doubled_ranks);
        let total = (1u64 << n) as f64;
        let w = w_plus_doubled as usize;
        let lower = counts[..=w].iter().sum::<u64>() as f64 / total;
        let upper = counts[w..].iter().sum::<u64>() as f64 / total;
        let p = match alternative {
            Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
            Alternative::Greater => upper,
            Alternative::Less => lower,
        };
        return Ok(TestResult {
            statistic,
            p_value: p,
            n_effective: n,
            method: TestMethod::WilcoxonExact,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    let dev = statistic - mean;
    let p = match alternative {
        Alternative::TwoSided => {
            let z = (dev.abs() - 0.5).max(0.0) / sd;
            (2.0 * normal_sf(z)).min(1.0)
        }
        Alternative::Greater => normal_sf((dev - 0.5) / sd),
        Alternative::Less => normal_sf((-dev - 0.5) / sd),
    };
    Ok(TestResult {
        statistic,
        p_value: p,
        n_effective: n,
        method: TestMethod::WilcoxonNormal,
    })
}

/// Twice the average rank of each |d| (keeps half ranks integral) and the
/// sizes of tie groups.
fn doubled_average_ranks(diffs: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0u64; n];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // Ranks i+1..=j averaged, doubled: (i+1+j).
        let doubled = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = doubled;
        }
        if j - i > 1 {
            ties.push((j - i) as u64);
        }
        i = j;
    }
    (ranks, ties)
}

/// `counts[s]` = number of sign assignments whose doubled W⁺ equals `s`.
fn signed_rank_counts(doubled_ranks: &[u64]) -> Vec<u64> {
    let max: usize = doubled_ranks.iter().sum::<u64>() as usize;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Full 2^n enumeration of sign flips of |d| with average ranks.
    fn brute_force_two_sided(values: &[f64]) -> f64 {
        let d: Vec<f64> = values.iter().copied().filter(|v| *v != 0.0).collect();
        let n = d.len();
        let mut abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
        let mut sorted = abs.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let rank = |v: f64| {
            let lo = sorted.iter().position(|x| *x == v).unwrap();
            let hi = sorted.iter().rposition(|x| *x == v).unwrap();
            (lo + hi + 2) as f64 / 2.0
        };
        let ranks: Vec<f64> = abs.iter_mut().map(|v| rank(*v)).collect();
        let observed: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w <= observed + 1e-9 {
                le += 1;
            }
            if w >= observed - 1e-9 {
                ge += 1;
            }
        }
        let total = (1u64 << n) as f64;
        (2.0 * (le as f64 / total).min(ge as f64 / total)).min(1.0)
    }

    #[test]
    fn five_positive_differences() {
        let r = wilcoxon_signed_rank(&[0.3, 1.2, 0.8, 2.2, 0.1], 0.0).unwrap();
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 2.0 / 32.0);
        assert_eq!(r.method, TestMethod::WilcoxonExact);
    }

    #[test]
    fn antisymmetric_values_give_p_one() {
        let r = wilcoxon_signed_rank(&[1.5, -0.5, 2.5, -1.5, 3.5, 0.5, -2.5, -3.5], 0.0).unwrap();
        // Rank sum 1..=8 is 36; W- = 36 - W+.
        assert_eq!(r.statistic, 18.0);
        assert_eq!(r.p_value, 1.0);
        let r = wilcoxon_signed_rank(&[1.2, 0.8, 2.1, -0.8, -1.2, -2.1], 0.0).unwrap();
        assert_eq!(r.statistic, 10.5);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zeros_are_dropped_and_all_zero_errors() {
        let r = wilcoxon_signed_rank(&[0.2, 0.2, 0.5, 0.9], 0.2).unwrap();
        assert_eq!(r.n_effective, 2);
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 1.0], 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let cases: [&[f64]; 4] = [
            &[1.0, -2.0, 2.0, 3.0, -1.0, 4.0, 4.0],
            &[0.5, 0.5, 0.5, -0.5],
            &[-3.0, -1.0, 2.0, 5.0, -7.0, 11.0, 13.0, -17.0, 19.0, 23.0],
            &[1.0, 2.0],
        ];
        for c in cases {
            let r = wilcoxon_signed_rank(c, 0.0).unwrap();
            assert!((r.p_value - brute_force_two_sided(c)).abs() < 1e-15, "{c:?}");
        }
    }

    #[test]
    fn one_sided_alternatives() {
        let v = [0.3, 1.2, 0.8, 2.2, 0.1];
        let g = wilcoxon_signed_rank_with(&v, 0.0, Alternative::Greater).unwrap();
        let l = wilcoxon_signed_rank_with(&v, 0.0, Alternative::Less).unwrap();
        assert_eq!(g.p_value, 1.0 / 32.0);
        assert_eq!(l.p_value, 1.0);
    }

    #[test]
    fn normal_path_used_above_fifteen() {
        let v: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&v, 0.0).unwrap();
        assert_eq!(r.method, TestMethod::WilcoxonNormal);
        assert_eq!(r.statistic, 210.0);
        assert!(r.p_value < 1e-3);
    }
}
