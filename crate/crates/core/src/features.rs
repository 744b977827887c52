//! Original, first-difference and differential-entropy feature series.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::model::{FeatureConfig, FeatureKind, FeatureSeries, SeriesOrigin};
use crate::preprocess::{BandDef, WindowSpectrum};

/// Variance floor (µV²) applied before the logarithm.
pub const DE_VARIANCE_FLOOR: f64 = 1e-12;

/// Mean absolute value over consecutive blocks of `scale` samples.
///
/// Output length is `⌊N/scale⌋`; a trailing partial block is dropped.
pub fn original_points(signal: &[f64], scale: usize) -> Result<Vec<f64>> {
    check_scale(scale)?;
    if signal.len() < scale {
        return Err(Error::TooShort {
            needed: scale,
            got: signal.len(),
        });
    }
    Ok(signal
        .chunks_exact(scale)
        .map(|block| block.iter().map(|v| v.abs()).sum::<f64>() / scale as f64)
        .collect())
}

/// Mean absolute consecutive difference over blocks of `scale` differences.
///
/// Only the `N-1` differences that exist are used, so the output length is
/// `⌊(N-1)/scale⌋`.
pub fn first_difference_points(signal: &[f64], scale: usize) -> Result<Vec<f64>> {
    check_scale(scale)?;
    if signal.len() <= scale {
        return Err(Error::TooShort {
            needed: scale + 1,
            got: signal.len(),
        });
    }
    let n_points = (signal.len() - 1) / scale;
    Ok((0..n_points)
        .map(|i| {
            let start = i * scale;
            signal[start..=start + scale]
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .sum::<f64>()
                / scale as f64
        })
        .collect())
}

/// `½·ln(2πe·σ²)` per non-overlapping one-second window, where σ² is the
/// band-restricted periodogram variance of the window.
pub fn differential_entropy_points(signal: &[f64], sample_rate_hz: f64, band: &BandDef) -> Result<Vec<f64>> {
    let window = one_second(sample_rate_hz)?;
    band.validate(sample_rate_hz)?;
    if signal.len() < window {
        return Err(Error::TooShort {
            needed: window,
            got: signal.len(),
        });
    }
    Ok(signal
        .chunks_exact(window)
        .map(|w| entropy_of(WindowSpectrum::new(w, sample_rate_hz).band_variance(band)))
        .collect())
}

/// Several DE bands from one pass of FFTs.
pub fn differential_entropy_multi(signal: &[f64], sample_rate_hz: f64, bands: &[&BandDef]) -> Result<Vec<Vec<f64>>> {
    let window = one_second(sample_rate_hz)?;
    for b in bands {
        b.validate(sample_rate_hz)?;
    }
    if signal.len() < window {
        return Err(Error::TooShort {
            needed: window,
            got: signal.len(),
        });
    }
    let mut out = vec![Vec::with_capacity(signal.len() / window); bands.len()];
    for w in signal.chunks_exact(window) {
        let spec = WindowSpectrum::new(w, sample_rate_hz);
        for (series, band) in out.iter_mut().zip(bands) {
            series.push(entropy_of(spec.band_variance(band)));
        }
    }
    Ok(out)
}

pub(crate) fn entropy_of(variance: f64) -> f64 {
    0.5 * (2.0 * PI * E * variance.max(DE_VARIANCE_FLOOR)).ln()
}

fn check_scale(scale: usize) -> Result<()> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be at least 1".into()));
    }
    Ok(())
}

fn one_second(sample_rate_hz: f64) -> Result<usize> {
    let n = sample_rate_hz.round();
    if !(n >= 2.0 && (sample_rate_hz - n).abs() < 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "differential entropy needs an integral sample rate, got {sample_rate_hz}"
        )));
    }
    Ok(n as usize)
}

pub fn extract_original(
    signal: &[f64],
    scale: usize,
    sample_rate_hz: f64,
    origin: SeriesOrigin,
) -> Result<FeatureSeries> {
    let config = FeatureConfig::original(scale);
    Ok(FeatureSeries {
        points: original_points(signal, scale)?,
        feature_rate_hz: config.feature_rate_hz(sample_rate_hz),
        config,
        origin,
    })
}

pub fn extract_first_difference(
    signal: &[f64],
    scale: usize,
    sample_rate_hz: f64,
    origin: SeriesOrigin,
) -> Result<FeatureSeries> {
    let config = FeatureConfig::first_difference(scale);
    Ok(FeatureSeries {
        points: first_difference_points(signal, scale)?,
        feature_rate_hz: config.feature_rate_hz(sample_rate_hz),
        config,
        origin,
    })
}

pub fn extract_differential_entropy(
    signal: &[f64],
    sample_rate_hz: f64,
    band: &BandDef,
    origin: SeriesOrigin,
) -> Result<FeatureSeries> {
    let points = differential_entropy_points(signal, sample_rate_hz, band)?;
    let config = FeatureConfig::differential_entropy(band.clone(), sample_rate_hz.round() as usize);
    Ok(FeatureSeries {
        points,
        feature_rate_hz: 1.0,
        config,
        origin,
    })
}

/// Dispatch on a [`FeatureConfig`].
pub fn extract(
    signal: &[f64],
    config: &FeatureConfig,
    sample_rate_hz: f64,
    origin: SeriesOrigin,
) -> Result<FeatureSeries> {
    config.validate(sample_rate_hz)?;
    let points = extract_points(signal, config, sample_rate_hz)?;
    Ok(FeatureSeries {
        points,
        feature_rate_hz: config.feature_rate_hz(sample_rate_hz),
        config: config.clone(),
        origin,
    })
}

/// Points only, for callers that track provenance themselves.
pub fn extract_points(signal: &[f64], config: &FeatureConfig, sample_rate_hz: f64) -> Result<Vec<f64>> {
    match config.kind {
        FeatureKind::Original => original_points(signal, config.scale),
        FeatureKind::FirstDifference => first_difference_points(signal, config.scale),
        FeatureKind::DifferentialEntropy => {
            let band = config
                .band
                .as_ref()
                .ok_or_else(|| Error::Config("differential entropy requires a band".into()))?;
            differential_entropy_points(signal, sample_rate_hz, band)
        }
    }
}

/// Expected number of points for a signal of `n` samples.
pub fn expected_len(config: &FeatureConfig, n: usize) -> usize {
    match config.kind {
        FeatureKind::Original | FeatureKind::DifferentialEntropy => n / config.scale,
        FeatureKind::FirstDifference => n.saturating_sub(1) / config.scale,
    }
}
