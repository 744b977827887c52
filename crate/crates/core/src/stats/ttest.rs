use crate::error::{Error, Result};
use crate::stats::special::{student_t_sf, student_t_two_sided};
use crate::stats::{Alternative, TestMethod, TestResult};

/// One-sample t-test against `mu0`, one-sided "greater" (threshold exceedance).
pub fn one_sample_t(values: &[f64], mu0: f64) -> Result<TestResult> {
    one_sample_t_with(values, mu0, Alternative::Greater)
}

/// Sample standard deviation (n-1 denominator).
pub fn one_sample_t_with(values: &[f64], mu0: f64, alternative: Alternative) -> Result<TestResult> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var.is_nan() || var <= 0.0 || var.sqrt() <= 1e-14 * mean.abs().max(1e-300) {
        return Err(Error::Degenerate("zero sample variance".into()));
    }
    let t = (mean - mu0) / (var.sqrt() / nf.sqrt());
    let df = nf - 1.0;
    let p = match alternative {
        Alternative::Greater => student_t_sf(t, df),
        Alternative::Less => student_t_sf(-t, df),
        Alternative::TwoSided => student_t_two_sided(t, df),
    };
    Ok(TestResult {
        statistic: t,
        p_value: p,
        n_effective: n,
        method: TestMethod::OneSampleT,
    })
}

/// Standardize with the population (1/n) standard deviation.
pub fn zscore(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    // Second pass removes the rounding left in the first mean.
    let resid = centered.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = centered.iter().map(|v| v - resid).collect();
    let sd = (centered.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sd.is_nan() || sd <= 64.0 * f64::EPSILON * scale {
        return Err(Error::Degenerate("constant series cannot be z-scored".into()));
    }
    Ok(centered.iter().map(|v| v / sd).collect())
}
