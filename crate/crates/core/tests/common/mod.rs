//! Independent reference implementations used by the integration and
//! acceptance tests. None of these call into the crate's numerics.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// P(|T| > t) for Student t with `nu` degrees of freedom, by integrating
/// the density after the substitution t = √ν·tanθ, which turns it into
/// cos^(ν−1)θ on [0, π/2).
pub fn t_two_sided_by_angle(theta0: f64, nu: f64) -> f64 {
    const N: usize = 200_000;
    let g = |th: f64| th.cos().max(0.0).powf(nu - 1.0);
    let total = simpson(g, 0.0, FRAC_PI_2, N);
    let tail = simpson(g, theta0, FRAC_PI_2, N);
    tail / total
}

/// Two-tailed p of a Pearson coefficient from `n` points: sinθ0 = |r|.
pub fn pcc_p_oracle(r: f64, n: usize) -> f64 {
    t_two_sided_by_angle(r.abs().asin(), (n - 2) as f64)
}

/// One-sided (greater) p of a t statistic.
pub fn t_greater_oracle(t: f64, df: f64) -> f64 {
    let half = t_two_sided_by_angle((t.abs() / df.sqrt()).atan(), df) / 2.0;
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Variance of `window` after removing every DFT component whose
/// frequency lies outside [low, high] (DC always removed), measured in the
/// time domain after an O(N²) inverse transform.
pub fn band_filtered_variance(window: &[f64], sample_rate_hz: f64, low: f64, high: f64) -> f64 {
    let n = window.len();
    let nf = n as f64;
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..n {
        let f = k.min(n - k) as f64 * sample_rate_hz / nf;
        if k == 0 || f < low || f > high {
            continue;
        }
        let (mut sr, mut si) = (0.0, 0.0);
        for (t, x) in window.iter().enumerate() {
            let ang = -2.0 * PI * ((k * t) % n) as f64 / nf;
            sr += x * ang.cos();
            si += x * ang.sin();
        }
        re[k] = sr;
        im[k] = si;
    }
    let mut y = vec![0.0; n];
    for (t, yt) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in 0..n {
            if re[k] == 0.0 && im[k] == 0.0 {
                continue;
            }
            let ang = 2.0 * PI * ((k * t) % n) as f64 / nf;
            s += re[k] * ang.cos() - im[k] * ang.sin();
        }
        *yt = s / nf;
    }
    let mean = y.iter().sum::<f64>() / nf;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf
}

/// Exact two-sided Wilcoxon p by listing all 2ⁿ sign assignments of the
/// average ranks of the non-zero |values|.
pub fn wilcoxon_enumeration_p(values: &[f64]) -> f64 {
    let d: Vec<f64> = values.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    // Doubled average rank: 2·(#smaller) + (#equal) + 1.
    let ranks2: Vec<u64> = d
        .iter()
        .map(|a| {
            let smaller = d.iter().filter(|b| b.abs() < a.abs()).count() as u64;
            let equal = d.iter().filter(|b| b.abs() == a.abs()).count() as u64;
            2 * smaller + equal + 1
        })
        .collect();
    let observed: u64 = d.iter().zip(&ranks2).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks2[i]).sum();
        if w <= observed {
            le += 1;
        }
        if w >= observed {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * (le as f64 / total).min(ge as f64 / total)).min(1.0)
}

/// Step-up BH straight from its definition: the adjusted value of the
/// j-th smallest p is min over k ≥ j of p₍ₖ₎·m/k, capped at one.
pub fn bh_brute(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    p.iter()
        .map(|&v| {
            let j = sorted.iter().position(|s| *s == v).unwrap() + 1;
            let mut best = f64::INFINITY;
            for k in j..=m {
                best = best.min(sorted[k - 1] * (m as f64 / k as f64));
            }
            best.min(1.0)
        })
        .collect()
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &p)| ((i + 1) as f64 / n - p).max(p - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Pearson r by the textbook two-pass formula.
pub fn naive_pcc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Lag-one autocorrelation of the present values of a curve.
pub fn lag1_autocorrelation(curve: &[Option<f64>]) -> f64 {
    let v: Vec<f64> = curve.iter().flatten().copied().collect();
    naive_pcc(&v[..v.len() - 1], &v[1..])
}
