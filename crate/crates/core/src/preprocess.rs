//! Line-noise removal and band-restricted spectral variance.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named frequency interval `[low_hz, high_hz]`, closed at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandDef {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandDef {
    pub fn new(name: impl Into<String>, low_hz: f64, high_hz: f64) -> Self {
        BandDef {
            name: name.into(),
            low_hz,
            high_hz,
        }
    }

    pub fn delta_theta() -> Self {
        BandDef::new("delta_theta", 1.0, 7.0)
    }

    pub fn alpha() -> Self {
        BandDef::new("alpha", 8.0, 13.0)
    }

    pub fn beta() -> Self {
        BandDef::new("beta", 14.0, 29.0)
    }

    pub fn gamma() -> Self {
        BandDef::new("gamma", 30.0, 47.0)
    }

    /// The four bands used for differential entropy.
    pub fn standard() -> [BandDef; 4] {
        [Self::delta_theta(), Self::alpha(), Self::beta(), Self::gamma()]
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let nyquist = sample_rate_hz / 2.0;
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < nyquist) {
            return Err(Error::InvalidArgument(format!(
                "band {:?} [{}, {}] Hz must satisfy 0 < low < high < {nyquist}",
                self.name, self.low_hz, self.high_hz
            )));
        }
        Ok(())
    }

    fn contains(&self, f_hz: f64) -> bool {
        const TOL: f64 = 1e-9;
        f_hz >= self.low_hz - TOL && f_hz <= self.high_hz + TOL
    }
}

/// Second-order section with `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        (self.b[0] + self.b[1] * zi + self.b[2] * zi2) / (1.0 + self.a[0] * zi + self.a[1] * zi2)
    }

    fn max_pole_radius(&self) -> f64 {
        let (a1, a2) = (self.a[0], self.a[1]);
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            a2.sqrt()
        } else {
            let s = disc.sqrt();
            ((-a1 + s) / 2.0).abs().max(((-a1 - s) / 2.0).abs())
        }
    }

    /// Transposed direct form II, zero initial state, in place.
    fn run(&self, x: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + s1;
            s1 = b1 * input - a1 * y + s2;
            s2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Cascade of band-stop biquads applied forward and backward.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStopFilter {
    sections: Vec<Biquad>,
    sample_rate_hz: f64,
    warmup: usize,
}

// Contract the designed filter must meet once applied forward-backward.
const STOP_ATTEN_DB: f64 = 20.0;
const PASS_RIPPLE_DB: f64 = 1.0;
const TRANSITION_HZ: f64 = 2.0;
// Design headroom over the contract.
const DESIGN_MARGIN_DB: f64 = 1.0;

impl BandStopFilter {
    /// Butterworth band-stop of the given prototype order via the bilinear
    /// transform with pre-warped edges. Yields `order` sections.
    pub fn butterworth(order: usize, sample_rate_hz: f64, edge_low_hz: f64, edge_high_hz: f64) -> Result<Self> {
        let nyquist = sample_rate_hz / 2.0;
        if order == 0 || !(edge_low_hz > 0.0 && edge_low_hz < edge_high_hz && edge_high_hz < nyquist) {
            return Err(Error::InvalidArgument(format!(
                "band-stop edges [{edge_low_hz}, {edge_high_hz}] Hz invalid for {sample_rate_hz} Hz"
            )));
        }
        let fs2 = 2.0 * sample_rate_hz;
        let wl = fs2 * (PI * edge_low_hz / sample_rate_hz).tan();
        let wh = fs2 * (PI * edge_high_hz / sample_rate_hz).tan();
        let bw = wh - wl;
        let w0 = (wl * wh).sqrt();

        let zero = (Complex64::new(fs2, w0)) / Complex64::new(fs2, -w0);
        let cos0 = zero.re;

        let mut poles = Vec::with_capacity(order);
        for k in 0..order {
            let m = -(order as f64) + 1.0 + 2.0 * k as f64;
            let proto = -Complex64::from_polar(1.0, PI * m / (2.0 * order as f64));
            let half = (bw / 2.0) / proto;
            let disc = (half * half - w0 * w0).sqrt();
            for analog in [half + disc, half - disc] {
                let digital = (fs2 + analog) / (fs2 - analog);
                if digital.im > 0.0 {
                    poles.push(digital);
                }
            }
        }
        if poles.len() != order {
            return Err(Error::InvalidArgument(format!(
                "band-stop design produced {} complex pole pairs for order {order}",
                poles.len()
            )));
        }
        poles.sort_by(|a, b| a.arg().total_cmp(&b.arg()));

        let sections: Vec<Biquad> = poles
            .into_iter()
            .map(|p| {
                let a = [-2.0 * p.re, p.norm_sqr()];
                let gain = (1.0 + a[0] + a[1]) / (2.0 - 2.0 * cos0);
                Biquad {
                    b: [gain, -2.0 * cos0 * gain, gain],
                    a,
                }
            })
            .collect();

        let radius = sections.iter().map(Biquad::max_pole_radius).fold(0.0, f64::max);
        if radius >= 1.0 {
            return Err(Error::InvalidArgument("unstable band-stop design".into()));
        }
        // Samples for the slowest mode to decay by 1e-9.
        let warmup = ((1e-9f64).ln() / radius.ln()).ceil() as usize;

        Ok(BandStopFilter {
            sections,
            sample_rate_hz,
            warmup: warmup.max(3 * (2 * order + 1)),
        })
    }

    /// Smallest Butterworth design whose zero-phase response attenuates
    /// `[stop_low, stop_high]` by at least 20 dB and deviates by at most
    /// 1 dB beyond a 2 Hz transition margin on either side.
    pub fn design(sample_rate_hz: f64, stop_low_hz: f64, stop_high_hz: f64) -> Result<Self> {
        let nyquist = sample_rate_hz / 2.0;
        if !(sample_rate_hz.is_finite() && stop_low_hz > 0.0 && stop_low_hz < stop_high_hz && stop_high_hz < nyquist) {
            return Err(Error::InvalidArgument(format!(
                "stop band [{stop_low_hz}, {stop_high_hz}] Hz must satisfy 0 < low < high < {nyquist}"
            )));
        }
        for order in 1..=10 {
            for step in 0..20 {
                let widen = step as f64 * 0.1;
                let (lo, hi) = (stop_low_hz - widen, stop_high_hz + widen);
                if lo <= 0.0 || hi >= nyquist {
                    break;
                }
                let filter = Self::butterworth(order, sample_rate_hz, lo, hi)?;
                if filter.meets_contract(stop_low_hz, stop_high_hz, DESIGN_MARGIN_DB) {
                    return Ok(filter);
                }
            }
        }
        Err(Error::InvalidArgument(format!(
            "no band-stop design meets the attenuation contract for [{stop_low_hz}, {stop_high_hz}] Hz at {sample_rate_hz} Hz"
        )))
    }

    /// Zero-phase gain in dB (forward-backward doubles the single-pass value).
    pub fn zero_phase_gain_db(&self, f_hz: f64) -> f64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * f_hz / self.sample_rate_hz);
        let h: Complex64 = self.sections.iter().map(|s| s.response(z)).product();
        20.0 * h.norm_sqr().max(1e-300).log10()
    }

    fn meets_contract(&self, stop_low: f64, stop_high: f64, margin_db: f64) -> bool {
        let nyquist = self.sample_rate_hz / 2.0;
        let grid = |from: f64, to: f64, step: f64| {
            let n = ((to - from) / step).floor() as usize;
            (0..=n).map(move |i| from + i as f64 * step)
        };
        let stop_ok = grid(stop_low, stop_high, 0.02)
            .chain(std::iter::once(stop_high))
            .all(|f| self.zero_phase_gain_db(f) <= -(STOP_ATTEN_DB + margin_db));
        if !stop_ok {
            return false;
        }
        let ripple = PASS_RIPPLE_DB - margin_db / 10.0;
        let lower = stop_low - TRANSITION_HZ;
        let upper = stop_high + TRANSITION_HZ;
        let lower_ok = lower <= 0.0 || grid(0.0, lower, 0.05).all(|f| self.zero_phase_gain_db(f).abs() <= ripple);
        let upper_ok =
            upper >= nyquist || grid(upper, nyquist, 0.05).all(|f| self.zero_phase_gain_db(f).abs() <= ripple);
        lower_ok && upper_ok
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Minimum signal length accepted by [`BandStopFilter::apply`] is `warmup() + 1`.
    pub fn warmup(&self) -> usize {
        self.warmup
    }

    /// Forward-backward filtering with odd-reflection padding of `warmup()`
    /// samples at each end. Output has the input's length.
    pub fn apply(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let n = signal.len();
        let pad = self.warmup;
        if n <= pad {
            return Err(Error::TooShort {
                needed: pad + 1,
                got: n,
            });
        }
        let first = signal[0];
        let last = signal[n - 1];
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
        ext.extend_from_slice(signal);
        ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

        for s in &self.sections {
            s.run(&mut ext);
        }
        ext.reverse();
        for s in &self.sections {
            s.run(&mut ext);
        }
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Remove `[stop_low_hz, stop_high_hz]` with a zero-phase band-stop filter.
pub fn notch_filter(signal: &[f64], sample_rate_hz: f64, stop_low_hz: f64, stop_high_hz: f64) -> Result<Vec<f64>> {
    BandStopFilter::design(sample_rate_hz, stop_low_hz, stop_high_hz)?.apply(signal)
}

/// One-sided periodogram of a mean-removed window, reusable across bands.
pub struct WindowSpectrum {
    /// Power per bin `k = 1..=len/2`, index 0 holds the DC bin (always zero weight).
    power: Vec<f64>,
    bin_hz: f64,
}

type CachedPlan = (usize, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static PLAN_CACHE: RefCell<Vec<CachedPlan>> = const { RefCell::new(Vec::new()) };
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLAN_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        if let Some((_, plan)) = cache.iter().find(|(l, _)| *l == len) {
            return Arc::clone(plan);
        }
        let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len));
        cache.push((len, Arc::clone(&plan)));
        plan
    })
}

impl WindowSpectrum {
    pub fn new(window: &[f64], sample_rate_hz: f64) -> Self {
        let n = window.len();
        let mean = window.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex64> = window.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
        forward_plan(n).process(&mut buf);
        let n2 = (n * n) as f64;
        let half = n / 2;
        let power = (0..=half)
            .map(|k| {
                if k == 0 {
                    0.0
                } else if n.is_multiple_of(2) && k == half {
                    buf[k].norm_sqr() / n2
                } else {
                    2.0 * buf[k].norm_sqr() / n2
                }
            })
            .collect();
        WindowSpectrum {
            power,
            bin_hz: sample_rate_hz / n as f64,
        }
    }

    /// Sum of one-sided power over bins whose frequency lies in the band (DC excluded).
    pub fn band_variance(&self, band: &BandDef) -> f64 {
        self.power
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(k, _)| band.contains(*k as f64 * self.bin_hz))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn total_variance(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Band-restricted variance of a one-second window from its periodogram.
pub fn band_spectrum_variance(window: &[f64], sample_rate_hz: f64, band: &BandDef) -> Result<f64> {
    let expected = sample_rate_hz.round();
    if (sample_rate_hz - expected).abs() > 1e-9 || window.len() != expected as usize {
        return Err(Error::InvalidArgument(format!(
            "window must hold exactly one second ({sample_rate_hz} samples), got {}",
            window.len()
        )));
    }
    band.validate(sample_rate_hz)?;
    Ok(WindowSpectrum::new(window, sample_rate_hz).band_variance(band))
}
