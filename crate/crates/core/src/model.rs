//! Core domain types shared by every stage: montages, recordings, feature
//! configurations and feature series.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::BandDef;

/// The 62-channel 10-20 layout used by the SEED recordings, in file order.
pub const SEED_62_CHANNELS: [&str; 62] = [
    "FP1", "FPZ", "FP2", "AF3", "AF4", "F7", "F5", "F3", "F1", "FZ", "F2", "F4", "F6", "F8", "FT7", "FC5", "FC3",
    "FC1", "FCZ", "FC2", "FC4", "FC6", "FT8", "T7", "C5", "C3", "C1", "CZ", "C2", "C4", "C6", "T8", "TP7", "CP5",
    "CP3", "CP1", "CPZ", "CP2", "CP4", "CP6", "TP8", "P7", "P5", "P3", "P1", "PZ", "P2", "P4", "P6", "P8", "PO7",
    "PO5", "PO3", "POZ", "PO4", "PO6", "PO8", "CB1", "O1", "OZ", "O2", "CB2",
];

/// Temporal-lobe electrodes with the strongest synchrony.
pub const KEY_ELECTRODES: [&str; 6] = ["FT7", "FT8", "TP7", "TP8", "T7", "T8"];

/// Ordered channel labels plus a designated subset of key electrodes.
///
/// Labels are matched case-insensitively everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MontageRepr", into = "MontageRepr")]
pub struct Montage {
    channel_names: Vec<String>,
    key_electrodes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MontageRepr {
    channel_names: Vec<String>,
    #[serde(default)]
    key_electrodes: Vec<String>,
}

impl TryFrom<MontageRepr> for Montage {
    type Error = Error;

    fn try_from(repr: MontageRepr) -> Result<Self> {
        Montage::new(repr.channel_names, repr.key_electrodes)
    }
}

impl From<Montage> for MontageRepr {
    fn from(m: Montage) -> Self {
        MontageRepr {
            channel_names: m.channel_names,
            key_electrodes: m.key_electrodes,
        }
    }
}

impl Montage {
    pub fn new(channel_names: Vec<String>, key_electrodes: Vec<String>) -> Result<Self> {
        if channel_names.is_empty() {
            return Err(Error::InvalidArgument("montage has no channels".into()));
        }
        for (i, name) in channel_names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::InvalidArgument(format!("channel {i} has an empty label")));
            }
            if channel_names[..i].iter().any(|o| o.eq_ignore_ascii_case(name)) {
                return Err(Error::InvalidArgument(format!("duplicate channel label {name:?}")));
            }
        }
        for key in &key_electrodes {
            if !channel_names.iter().any(|c| c.eq_ignore_ascii_case(key)) {
                return Err(Error::InvalidArgument(format!(
                    "key electrode {key:?} is not in the montage"
                )));
            }
        }
        Ok(Montage {
            channel_names,
            key_electrodes,
        })
    }

    /// The built-in 62-channel 10-20 montage with the six temporal key electrodes.
    pub fn seed62() -> Self {
        Montage {
            channel_names: SEED_62_CHANNELS.iter().map(|s| s.to_string()).collect(),
            key_electrodes: KEY_ELECTRODES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `CH01`, `CH02`, ... with no key electrodes.
    pub fn numbered(n: usize) -> Result<Self> {
        let width = n.to_string().len().max(2);
        Montage::new((1..=n).map(|i| format!("CH{i:0width$}")).collect(), Vec::new())
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn key_electrodes(&self) -> &[String] {
        &self.key_electrodes
    }

    pub fn len(&self) -> usize {
        self.channel_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channel_names.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.channel_names.iter().position(|c| c.eq_ignore_ascii_case(label))
    }

    /// Resolve a list of labels to channel indices, failing on the first unknown label.
    pub fn resolve(&self, labels: &[String]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.index_of(l)
                    .ok_or_else(|| Error::Config(format!("unknown channel {l:?}")))
            })
            .collect()
    }

    pub fn key_indices(&self) -> Vec<usize> {
        self.key_electrodes.iter().filter_map(|k| self.index_of(k)).collect()
    }
}

/// A single invariant a recording failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DimensionMismatch { rows: usize, channels: usize },
    ZeroLength,
    NonFinite { channel: usize, sample: usize },
    BadSampleRate { sample_rate_hz: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { rows, channels } => {
                write!(f, "{rows} signal rows for a {channels}-channel montage")
            }
            Violation::ZeroLength => write!(f, "recording has zero samples"),
            Violation::NonFinite { channel, sample } => {
                write!(f, "non-finite value at channel {channel}, sample {sample}")
            }
            Violation::BadSampleRate { sample_rate_hz } => {
                write!(f, "sample rate {sample_rate_hz} is not positive and finite")
            }
        }
    }
}

/// One subject-session-stimulus multichannel signal, channels x time, in µV.
#[derive(Debug, Clone)]
pub struct Recording {
    subject_id: String,
    session_id: String,
    stimulus_id: String,
    samples: Array2<f32>,
    sample_rate_hz: f64,
    montage: Arc<Montage>,
}

impl Recording {
    /// Build and validate.
    pub fn new(
        subject_id: impl Into<String>,
        session_id: impl Into<String>,
        stimulus_id: impl Into<String>,
        samples: Array2<f32>,
        sample_rate_hz: f64,
        montage: Arc<Montage>,
    ) -> Result<Self> {
        let rec = Self::new_unchecked(subject_id, session_id, stimulus_id, samples, sample_rate_hz, montage);
        let violations = validate_recording(&rec);
        if violations.is_empty() {
            Ok(rec)
        } else {
            Err(Error::InvalidRecording {
                id: rec.id(),
                violations,
            })
        }
    }

    /// Build without checking invariants; pair with [`validate_recording`].
    pub fn new_unchecked(
        subject_id: impl Into<String>,
        session_id: impl Into<String>,
        stimulus_id: impl Into<String>,
        samples: Array2<f32>,
        sample_rate_hz: f64,
        montage: Arc<Montage>,
    ) -> Self {
        Recording {
            subject_id: subject_id.into(),
            session_id: session_id.into(),
            stimulus_id: stimulus_id.into(),
            samples,
            sample_rate_hz,
            montage,
        }
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn stimulus_id(&self) -> &str {
        &self.stimulus_id
    }

    pub fn samples(&self) -> &Array2<f32> {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn montage(&self) -> &Arc<Montage> {
        &self.montage
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }

    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.subject_id, self.session_id, self.stimulus_id)
    }

    /// One channel widened to f64.
    pub fn channel(&self, index: usize) -> Vec<f64> {
        self.samples.row(index).iter().map(|&v| v as f64).collect()
    }
}

/// Check every recording invariant and return all violations found.
pub fn validate_recording(rec: &Recording) -> Vec<Violation> {
    let mut out = Vec::new();
    let (rows, cols) = rec.samples.dim();
    if rows != rec.montage.len() {
        out.push(Violation::DimensionMismatch {
            rows,
            channels: rec.montage.len(),
        });
    }
    if cols == 0 {
        out.push(Violation::ZeroLength);
    }
    if !(rec.sample_rate_hz.is_finite() && rec.sample_rate_hz > 0.0) {
        out.push(Violation::BadSampleRate {
            sample_rate_hz: rec.sample_rate_hz,
        });
    }
    if let Some(((channel, sample), _)) = rec.samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
        out.push(Violation::NonFinite { channel, sample });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Original,
    FirstDifference,
    DifferentialEntropy,
}

/// Which feature to extract and at what temporal scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    /// Samples aggregated into one feature point.
    pub scale: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandDef>,
}

impl FeatureConfig {
    pub fn original(scale: usize) -> Self {
        FeatureConfig {
            kind: FeatureKind::Original,
            scale,
            band: None,
        }
    }

    pub fn first_difference(scale: usize) -> Self {
        FeatureConfig {
            kind: FeatureKind::FirstDifference,
            scale,
            band: None,
        }
    }

    /// DE always uses one-second windows, so the scale equals the sample rate.
    pub fn differential_entropy(band: BandDef, sample_rate_hz: usize) -> Self {
        FeatureConfig {
            kind: FeatureKind::DifferentialEntropy,
            scale: sample_rate_hz,
            band: Some(band),
        }
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if self.scale == 0 {
            return Err(Error::Config(format!("{}: scale must be positive", self.label())));
        }
        match self.kind {
            FeatureKind::Original | FeatureKind::FirstDifference => {
                if self.band.is_some() {
                    return Err(Error::Config(format!(
                        "{}: band is only valid for differential entropy",
                        self.label()
                    )));
                }
            }
            FeatureKind::DifferentialEntropy => {
                let band = self
                    .band
                    .as_ref()
                    .ok_or_else(|| Error::Config("differential entropy requires a band".into()))?;
                if (self.scale as f64 - sample_rate_hz).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "{}: scale {} must equal the sample rate {sample_rate_hz}",
                        self.label(),
                        self.scale
                    )));
                }
                band.validate(sample_rate_hz)?;
            }
        }
        Ok(())
    }

    pub fn feature_rate_hz(&self, sample_rate_hz: f64) -> f64 {
        sample_rate_hz / self.scale as f64
    }

    /// Short stable label, e.g. `FD_s20` or `DE_gamma`.
    pub fn label(&self) -> String {
        match (&self.kind, &self.band) {
            (FeatureKind::Original, _) => format!("O_s{}", self.scale),
            (FeatureKind::FirstDifference, _) => format!("FD_s{}", self.scale),
            (FeatureKind::DifferentialEntropy, Some(b)) => format!("DE_{}", b.name),
            (FeatureKind::DifferentialEntropy, None) => "DE".to_string(),
        }
    }
}

/// Identifies where a feature series came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesOrigin {
    pub subject: String,
    pub session: String,
    pub stimulus: String,
    pub channel: String,
}

/// Per-channel feature points at reduced temporal resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub config: FeatureConfig,
    pub origin: SeriesOrigin,
    pub points: Vec<f64>,
    pub feature_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Positive,
    Neutral,
    Negative,
}

impl Valence {
    pub const ALL: [Valence; 3] = [Valence::Positive, Valence::Neutral, Valence::Negative];

    pub fn as_str(&self) -> &'static str {
        match self {
            Valence::Positive => "positive",
            Valence::Neutral => "neutral",
            Valence::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusInfo {
    pub stimulus: String,
    pub duration_s: f64,
    pub valence: Valence,
}

/// Per-stimulus duration and valence label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StimulusCatalog {
    pub entries: Vec<StimulusInfo>,
}

impl StimulusCatalog {
    pub fn get(&self, stimulus: &str) -> Option<&StimulusInfo> {
        self.entries.iter().find(|e| e.stimulus == stimulus)
    }

    pub fn valence_of(&self, stimulus: &str) -> Option<Valence> {
        self.get(stimulus).map(|e| e.valence)
    }

    /// Stimuli carrying `valence`, in catalog order.
    pub fn stimuli_with(&self, valence: Valence) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.valence == valence)
            .map(|e| e.stimulus.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn montage() -> Arc<Montage> {
        Arc::new(Montage::seed62())
    }

    #[test]
    fn seed_montage_is_valid() {
        let m = Montage::seed62();
        assert_eq!(m.len(), 62);
        Montage::new(m.channel_names().to_vec(), m.key_electrodes().to_vec()).unwrap();
        assert_eq!(m.index_of("t7"), Some(23));
        assert_eq!(m.key_indices().len(), 6);
    }

    #[test]
    fn montage_rejects_duplicates_and_foreign_keys() {
        let dup = Montage::new(vec!["T7".into(), "t7".into()], vec![]);
        assert!(dup.is_err());
        let foreign = Montage::new(vec!["T7".into()], vec!["T8".into()]);
        assert!(foreign.is_err());
        assert!(Montage::new(vec!["".into()], vec![]).is_err());
    }

    #[test]
    fn valid_recording_passes() {
        let rec = Recording::new_unchecked("s1", "1", "f1", Array2::zeros((62, 48000)), 200.0, montage());
        assert!(validate_recording(&rec).is_empty());
    }

    #[test]
    fn row_count_mismatch_is_reported() {
        let rec = Recording::new_unchecked("s1", "1", "f1", Array2::zeros((61, 100)), 200.0, montage());
        assert_eq!(
            validate_recording(&rec),
            vec![Violation::DimensionMismatch { rows: 61, channels: 62 }]
        );
    }

    #[test]
    fn nan_sample_is_reported() {
        let mut samples = Array2::zeros((62, 100));
        samples[[5, 17]] = f32::NAN;
        let rec = Recording::new_unchecked("s1", "1", "f1", samples.clone(), 200.0, montage());
        assert_eq!(
            validate_recording(&rec),
            vec![Violation::NonFinite { channel: 5, sample: 17 }]
        );
        assert!(Recording::new("s1", "1", "f1", samples, 200.0, montage()).is_err());
    }

    #[test]
    fn zero_length_and_bad_rate() {
        let rec = Recording::new_unchecked("s", "1", "f", Array2::zeros((62, 0)), 0.0, montage());
        let v = validate_recording(&rec);
        assert!(v.contains(&Violation::ZeroLength));
        assert!(v.contains(&Violation::BadSampleRate { sample_rate_hz: 0.0 }));
    }

    #[test]
    fn feature_config_invariants() {
        let gamma = BandDef::new("gamma", 30.0, 47.0);
        assert!(FeatureConfig::differential_entropy(gamma.clone(), 200)
            .validate(200.0)
            .is_ok());
        let mut wrong_scale = FeatureConfig::differential_entropy(gamma.clone(), 200);
        wrong_scale.scale = 100;
        assert!(wrong_scale.validate(200.0).is_err());
        let mut fd_band = FeatureConfig::first_difference(20);
        fd_band.band = Some(gamma);
        assert!(fd_band.validate(200.0).is_err());
        assert!(FeatureConfig::original(0).validate(200.0).is_err());
        let fd = FeatureConfig::first_difference(20);
        assert_eq!(fd.feature_rate_hz(200.0) * fd.scale as f64, 200.0);
    }
}
