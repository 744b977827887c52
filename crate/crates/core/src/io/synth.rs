//! Deterministic synthetic cohorts with a known shared arousal envelope.
//!
//! Random streams come from ChaCha8 keyed by a SplitMix64 expansion of
//! `rng_seed`; each quantity draws from its own stream id (see
//! [`stream_id`]), so any entry can be generated independently and in any
//! order. Gaussian draws use Box-Muller on 53-bit uniforms.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::dataset::{write_json, write_recording, DatasetManifest, ManifestEntry, MANIFEST_VERSION};
use crate::error::{Error, Result};
use crate::model::{Montage, Recording, StimulusCatalog, StimulusInfo, Valence, KEY_ELECTRODES};

/// One rectangular burst of shared arousal. Overlapping bursts add.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Burst {
    pub start_s: f64,
    pub end_s: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub n_sessions: usize,
    pub n_stimuli: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// 62 selects the built-in 10-20 montage; any other count yields `CH01..`.
    pub n_channels: usize,
    pub injected_channels: Vec<usize>,
    pub envelope: Vec<Burst>,
    pub subject_gain_range: [f64; 2],
    pub subject_lag_range_ms: [f64; 2],
    pub noise_sigma: f64,
    pub carrier_band_hz: [f64; 2],
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let montage = Montage::seed62();
        SynthConfig {
            n_subjects: 15,
            n_sessions: 3,
            n_stimuli: 15,
            duration_s: 240.0,
            sample_rate_hz: 200.0,
            n_channels: 62,
            injected_channels: KEY_ELECTRODES
                .iter()
                .map(|k| montage.index_of(k).expect("key electrode in built-in montage"))
                .collect(),
            envelope: vec![
                Burst {
                    start_s: 40.0,
                    end_s: 55.0,
                    amplitude: 3.0,
                },
                Burst {
                    start_s: 110.0,
                    end_s: 125.0,
                    amplitude: 3.0,
                },
                Burst {
                    start_s: 180.0,
                    end_s: 195.0,
                    amplitude: 3.0,
                },
            ],
            subject_gain_range: [0.8, 1.2],
            subject_lag_range_ms: [0.0, 20.0],
            noise_sigma: 1.0,
            carrier_band_hz: [14.0, 47.0],
            rng_seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_subjects == 0 || self.n_sessions == 0 || self.n_stimuli == 0 || self.n_channels == 0 {
            return bad("subject, session, stimulus and channel counts must be positive".into());
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!("sample rate {} must be positive", self.sample_rate_hz));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration {} must be positive", self.duration_s));
        }
        let n = self.duration_s * self.sample_rate_hz;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return bad("duration x sample rate must be a whole number of samples".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return bad(format!("noise_sigma {} must be positive", self.noise_sigma));
        }
        for (i, &c) in self.injected_channels.iter().enumerate() {
            if c >= self.n_channels {
                return bad(format!("injected channel {c} outside 0..{}", self.n_channels));
            }
            if self.injected_channels[..i].contains(&c) {
                return bad(format!("injected channel {c} listed twice"));
            }
        }
        for b in &self.envelope {
            let ok = b.start_s.is_finite()
                && b.end_s.is_finite()
                && 0.0 <= b.start_s
                && b.start_s < b.end_s
                && b.end_s <= self.duration_s
                && b.amplitude.is_finite()
                && b.amplitude >= 0.0;
            if !ok {
                return bad(format!(
                    "burst [{}, {}] x {} must lie within [0, {}] with non-negative amplitude",
                    b.start_s, b.end_s, b.amplitude, self.duration_s
                ));
            }
        }
        let [g0, g1] = self.subject_gain_range;
        if !(g0.is_finite() && g1.is_finite() && 0.0 < g0 && g0 <= g1) {
            return bad(format!("subject_gain_range [{g0}, {g1}] must be positive and ordered"));
        }
        let [l0, l1] = self.subject_lag_range_ms;
        if !(l0.is_finite() && l1.is_finite() && 0.0 <= l0 && l0 <= l1) {
            return bad(format!(
                "subject_lag_range_ms [{l0}, {l1}] must be non-negative and ordered"
            ));
        }
        let [c0, c1] = self.carrier_band_hz;
        if !(0.0 < c0 && c0 < c1 && c1 < self.sample_rate_hz / 2.0) {
            return bad(format!("carrier band [{c0}, {c1}] must lie inside (0, Nyquist)"));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn montage(&self) -> Result<Montage> {
        if self.n_channels == 62 {
            Ok(Montage::seed62())
        } else {
            Montage::numbered(self.n_channels)
        }
    }

    pub fn subject_id(&self, i: usize) -> String {
        format!("s{:0w$}", i + 1, w = digits(self.n_subjects))
    }

    pub fn session_id(&self, i: usize) -> String {
        format!("{}", i + 1)
    }

    pub fn stimulus_id(&self, i: usize) -> String {
        format!("film{:0w$}", i + 1, w = digits(self.n_stimuli))
    }

    /// Stimuli cycle through positive, neutral, negative.
    pub fn catalog(&self) -> StimulusCatalog {
        StimulusCatalog {
            entries: (0..self.n_stimuli)
                .map(|k| StimulusInfo {
                    stimulus: self.stimulus_id(k),
                    duration_s: self.duration_s,
                    valence: Valence::ALL[k % 3],
                })
                .collect(),
        }
    }

    /// Envelope value at time `t` seconds.
    pub fn envelope_at(&self, t: f64) -> f64 {
        self.envelope
            .iter()
            .filter(|b| b.start_s <= t && t < b.end_s)
            .map(|b| b.amplitude)
            .sum()
    }

    fn max_lag_samples(&self) -> usize {
        (self.subject_lag_range_ms[1] * self.sample_rate_hz / 1000.0).round() as usize
    }
}

fn digits(n: usize) -> usize {
    n.to_string().len().max(2)
}

/// Index of one generated recording within the cohort grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryIndex {
    pub subject: usize,
    pub session: usize,
    pub stimulus: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusTruth {
    pub stimulus: String,
    /// Per-second mean of the shared envelope.
    pub envelope: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub envelope_rate_hz: f64,
    pub injected_channels: Vec<usize>,
    pub injected_labels: Vec<String>,
    pub bursts: Vec<Burst>,
    pub stimuli: Vec<StimulusTruth>,
}

#[derive(Clone, Copy)]
enum Stream {
    Carrier { stimulus: usize, channel: usize },
    Subject { subject: usize },
    Noise(EntryIndex),
}

/// 64-bit ChaCha stream id: a 4-bit tag followed by the indices of the
/// quantity being drawn.
fn stream_id(s: Stream) -> u64 {
    match s {
        Stream::Carrier { stimulus, channel } => (1 << 60) | ((stimulus as u64) << 24) | channel as u64,
        Stream::Subject { subject } => (2 << 60) | subject as u64,
        Stream::Noise(e) => (3 << 60) | ((e.subject as u64) << 40) | ((e.session as u64) << 20) | e.stimulus as u64,
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    fn new(seed: u64, stream: Stream) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id(stream));
        Gaussian { rng, spare: None }
    }

    /// Uniform on [0, 1) with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }
}

/// Unit-variance Gaussian noise brick-wall filtered to the carrier band,
/// `n_samples + max lag` long. Identical for every subject.
fn carrier(cfg: &SynthConfig, stimulus: usize, channel: usize) -> Vec<f64> {
    let n = cfg.n_samples() + cfg.max_lag_samples();
    let mut g = Gaussian::new(cfg.rng_seed, Stream::Carrier { stimulus, channel });
    let mut buf: Vec<Complex64> = (0..n).map(|_| Complex64::new(g.next(), 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let [lo, hi] = cfg.carrier_band_hz;
    for (k, v) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let f = bin as f64 * cfg.sample_rate_hz / n as f64;
        if !(lo <= f && f <= hi) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut out: Vec<f64> = buf.iter().map(|c| c.re / n as f64).collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
    for v in &mut out {
        *v = (*v - mean) * scale;
    }
    out
}

/// Gain and lag (in samples) of one subject.
fn subject_params(cfg: &SynthConfig, subject: usize) -> (f64, usize) {
    let mut g = Gaussian::new(cfg.rng_seed, Stream::Subject { subject });
    let [g0, g1] = cfg.subject_gain_range;
    let gain = g0 + (g1 - g0) * g.uniform();
    let [l0, l1] = cfg.subject_lag_range_ms;
    let lag_ms = l0 + (l1 - l0) * g.uniform();
    let lag = (lag_ms * cfg.sample_rate_hz / 1000.0).round() as usize;
    (gain, lag.min(cfg.max_lag_samples()))
}

/// Carriers for one stimulus, keyed by injected channel, in config order.
pub struct StimulusCarriers {
    stimulus: usize,
    carriers: Vec<(usize, Vec<f64>)>,
}

impl StimulusCarriers {
    pub fn new(cfg: &SynthConfig, stimulus: usize) -> Self {
        StimulusCarriers {
            stimulus,
            carriers: cfg
                .injected_channels
                .iter()
                .map(|&c| (c, carrier(cfg, stimulus, c)))
                .collect(),
        }
    }
}

/// Generate one recording. `carriers` must belong to `entry.stimulus`.
pub fn generate_recording(
    cfg: &SynthConfig,
    montage: &Arc<Montage>,
    entry: EntryIndex,
    carriers: &StimulusCarriers,
) -> Result<Recording> {
    assert_eq!(carriers.stimulus, entry.stimulus, "carrier set for another stimulus");
    let n = cfg.n_samples();
    let n_ch = cfg.n_channels;
    let mut noise = Gaussian::new(cfg.rng_seed, Stream::Noise(entry));
    let mut data = Vec::with_capacity(n_ch * n);
    for _ in 0..n_ch * n {
        data.push(cfg.noise_sigma * noise.next());
    }

    let (gain, lag) = subject_params(cfg, entry.subject);
    let max_lag = cfg.max_lag_samples();
    let envelope: Vec<f64> = (0..n)
        .map(|t| cfg.envelope_at((t as f64 - lag as f64) / cfg.sample_rate_hz))
        .collect();
    for (channel, c) in &carriers.carriers {
        let row = &mut data[channel * n..(channel + 1) * n];
        for t in 0..n {
            row[t] += gain * envelope[t] * c[t + max_lag - lag];
        }
    }

    let samples =
        Array2::from_shape_vec((n_ch, n), data.into_iter().map(|v| v as f32).collect()).expect("shape matches buffer");
    Recording::new(
        cfg.subject_id(entry.subject),
        cfg.session_id(entry.session),
        cfg.stimulus_id(entry.stimulus),
        samples,
        cfg.sample_rate_hz,
        Arc::clone(montage),
    )
}

/// Every entry index in canonical (subject, session, stimulus) order.
pub fn cohort_entries(cfg: &SynthConfig) -> Vec<EntryIndex> {
    let mut out = Vec::with_capacity(cfg.n_subjects * cfg.n_sessions * cfg.n_stimuli);
    for subject in 0..cfg.n_subjects {
        for session in 0..cfg.n_sessions {
            for stimulus in 0..cfg.n_stimuli {
                out.push(EntryIndex {
                    subject,
                    session,
                    stimulus,
                });
            }
        }
    }
    out
}

pub fn ground_truth(cfg: &SynthConfig) -> Result<GroundTruth> {
    let montage = cfg.montage()?;
    let seconds = (cfg.duration_s.floor()) as usize;
    let per_second: Vec<f64> = (0..seconds)
        .map(|s| {
            let steps = cfg.sample_rate_hz.round().max(1.0) as usize;
            (0..steps)
                .map(|k| cfg.envelope_at(s as f64 + k as f64 / steps as f64))
                .sum::<f64>()
                / steps as f64
        })
        .collect();
    Ok(GroundTruth {
        envelope_rate_hz: 1.0,
        injected_channels: cfg.injected_channels.clone(),
        injected_labels: cfg
            .injected_channels
            .iter()
            .map(|&c| montage.channel_names()[c].clone())
            .collect(),
        bursts: cfg.envelope.clone(),
        stimuli: (0..cfg.n_stimuli)
            .map(|k| StimulusTruth {
                stimulus: cfg.stimulus_id(k),
                envelope: per_second.clone(),
            })
            .collect(),
    })
}

/// Generate the full cohort in memory, in canonical order. Large cohorts
/// should go through [`super::SyntheticSource`] instead.
pub fn generate_cohort(cfg: &SynthConfig) -> Result<(Vec<Recording>, GroundTruth)> {
    cfg.validate()?;
    let montage = Arc::new(cfg.montage()?);
    let carriers: Vec<StimulusCarriers> = (0..cfg.n_stimuli)
        .into_par_iter()
        .map(|k| StimulusCarriers::new(cfg, k))
        .collect();
    let recordings = cohort_entries(cfg)
        .par_iter()
        .map(|&e| generate_recording(cfg, &montage, e, &carriers[e.stimulus]))
        .collect::<Result<Vec<_>>>()?;
    Ok((recordings, ground_truth(cfg)?))
}

/// Write manifest, recordings and ground truth under `dir`. The config is
/// validated before anything touches the filesystem.
pub fn write_cohort(cfg: &SynthConfig, dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let montage = Arc::new(cfg.montage()?);
    let entries = cohort_entries(cfg);
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        root: "recordings".into(),
        sample_rate_hz: cfg.sample_rate_hz,
        montage: (*montage).clone(),
        entries: entries
            .iter()
            .map(|e| {
                let (subject, session, stimulus) = (
                    cfg.subject_id(e.subject),
                    cfg.session_id(e.session),
                    cfg.stimulus_id(e.stimulus),
                );
                ManifestEntry {
                    path: format!("{subject}_{session}_{stimulus}.f32").into(),
                    subject,
                    session,
                    stimulus,
                }
            })
            .collect(),
        catalog: cfg.catalog(),
    };
    let truth = ground_truth(cfg)?;
    let root = dir.join(&manifest.root);
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;

    for stimulus in 0..cfg.n_stimuli {
        let carriers = StimulusCarriers::new(cfg, stimulus);
        entries
            .iter()
            .zip(&manifest.entries)
            .filter(|(e, _)| e.stimulus == stimulus)
            .collect::<Vec<_>>()
            .par_iter()
            .try_for_each(|(e, m)| {
                let rec = generate_recording(cfg, &montage, **e, &carriers)?;
                write_recording(&root.join(&m.path), &rec)
            })?;
    }
    write_json(&dir.join("ground_truth.json"), &truth)?;
    manifest.write(&dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SynthConfig {
        SynthConfig {
            n_subjects: 2,
            n_sessions: 1,
            n_stimuli: 2,
            duration_s: 60.0,
            n_channels: 4,
            injected_channels: vec![1, 2],
            envelope: vec![Burst {
                start_s: 10.0,
                end_s: 40.0,
                amplitude: 2.0,
            }],
            ..SynthConfig::default()
        }
    }

    fn variance(x: &[f32]) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().map(|&v| v as f64).sum::<f64>() / n;
        x.iter().map(|&v| (v as f64 - m).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn default_config_is_valid() {
        SynthConfig::default().validate().unwrap();
        tiny().validate().unwrap();
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (a, ta) = generate_cohort(&tiny()).unwrap();
        let (b, tb) = generate_cohort(&tiny()).unwrap();
        assert_eq!(ta, tb);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.samples(), y.samples());
        }
        let mut other = tiny();
        other.rng_seed += 1;
        let (c, _) = generate_cohort(&other).unwrap();
        assert_ne!(a[0].samples(), c[0].samples());
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let cfg = SynthConfig {
            envelope: vec![],
            ..tiny()
        };
        let (recs, _) = generate_cohort(&cfg).unwrap();
        let row = recs[0].samples().row(0).to_vec();
        assert!(row.len() >= 10_000);
        assert!((variance(&row) - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_amplitude_leaves_injected_channels_noise_like() {
        let mut cfg = tiny();
        cfg.envelope[0].amplitude = 0.0;
        let (recs, _) = generate_cohort(&cfg).unwrap();
        let s = recs[0].samples();
        let ratio = variance(&s.row(1).to_vec()) / variance(&s.row(0).to_vec());
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }

    #[test]
    fn injected_channels_share_content() {
        let (recs, truth) = generate_cohort(&tiny()).unwrap();
        assert_eq!(truth.injected_channels, vec![1, 2]);
        assert_eq!(truth.stimuli[0].envelope.len(), 60);
        assert_eq!(truth.stimuli[0].envelope[20], 2.0);
        // Burst raises in-burst power well above the noise floor.
        let row = recs[0].samples().row(1).to_vec();
        let inside = variance(&row[2400..7600]);
        let outside = variance(&row[9000..]);
        assert!(inside > 3.0 * outside);
    }

    #[test]
    fn invalid_configs_rejected() {
        type Edit = Box<dyn Fn(&mut SynthConfig)>;
        let cases: Vec<Edit> = vec![
            Box::new(|c| c.noise_sigma = 0.0),
            Box::new(|c| c.injected_channels = vec![9]),
            Box::new(|c| c.envelope[0].end_s = 61.0),
            Box::new(|c| c.envelope[0].start_s = -1.0),
            Box::new(|c| c.n_subjects = 0),
            Box::new(|c| c.carrier_band_hz = [14.0, 120.0]),
            Box::new(|c| c.duration_s = 0.0025),
        ];
        for mutate in cases {
            let mut cfg = tiny();
            mutate(&mut cfg);
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let json = r#"{"n_subjects": 2, "bogus": 1}"#;
        assert!(serde_json::from_str::<SynthConfig>(json).is_err());
        let partial: SynthConfig = serde_json::from_str(r#"{"n_subjects": 2}"#).unwrap();
        assert_eq!(partial.n_sessions, 3);
    }

    #[test]
    fn write_cohort_produces_loadable_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            duration_s: 5.0,
            envelope: vec![],
            ..tiny()
        };
        write_cohort(&cfg, dir.path()).unwrap();
        let m = DatasetManifest::read(&dir.path().join("manifest.json")).unwrap();
        let loaded = crate::io::load_dataset(&m).unwrap();
        let (generated, _) = generate_cohort(&cfg).unwrap();
        assert_eq!(loaded.len(), generated.len());
        for (a, b) in loaded.iter().zip(&generated) {
            assert_eq!(a.id(), b.id());
            assert_eq!(a.samples(), b.samples());
        }
        assert!(dir.path().join("ground_truth.json").is_file());
    }
}
