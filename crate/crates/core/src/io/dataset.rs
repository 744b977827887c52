use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Montage, Recording, StimulusCatalog};

pub const MANIFEST_VERSION: u32 = 1;

/// One (subject, session, stimulus) recording file, relative to the manifest root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub subject: String,
    pub session: String,
    pub stimulus: String,
    pub path: PathBuf,
}

impl ManifestEntry {
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.subject, self.session, self.stimulus)
    }

    fn key(&self) -> (&str, &str, &str) {
        (&self.subject, &self.session, &self.stimulus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    /// Directory holding the recording files. Relative roots are resolved
    /// against the manifest's own directory by [`DatasetManifest::read`].
    pub root: PathBuf,
    pub sample_rate_hz: f64,
    pub montage: Montage,
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub catalog: StimulusCatalog,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if manifest.root.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            manifest.root = base.join(&manifest.root);
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Config(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sample rate {} is not positive",
                self.sample_rate_hz
            )));
        }
        if self.entries.is_empty() {
            return Err(Error::Config("manifest lists no entries".into()));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.key()) {
                return Err(Error::Config(format!("duplicate entry {}", e.id())));
            }
            if !self.catalog.entries.is_empty() && self.catalog.get(&e.stimulus).is_none() {
                return Err(Error::Config(format!(
                    "stimulus {} is missing from the catalog",
                    e.stimulus
                )));
            }
        }
        Ok(())
    }

    /// Entries sorted by (subject, session, stimulus).
    pub fn canonical_entries(&self) -> Vec<&ManifestEntry> {
        let mut v: Vec<&ManifestEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| a.key().cmp(&b.key()));
        v
    }

    pub fn entry_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }
}

/// JSON sidecar stored next to each raw recording as `<file>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingHeader {
    pub channel_names: Vec<String>,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    #[serde(default = "default_units")]
    pub units: String,
}

fn default_units() -> String {
    "uV".to_string()
}

pub fn sidecar_path(data_path: &Path) -> PathBuf {
    let mut s = data_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write samples as little-endian f32, channel-major, plus the JSON sidecar.
pub fn write_recording(path: &Path, rec: &Recording) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rec.samples().rows() {
        for v in row {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let header = RecordingHeader {
        channel_names: rec.montage().channel_names().to_vec(),
        sample_rate_hz: rec.sample_rate_hz(),
        n_samples: rec.n_samples(),
        units: default_units(),
    };
    write_json(&sidecar_path(path), &header)
}

/// Read one manifest entry and check it against the manifest montage and rate.
pub fn load_entry(manifest: &DatasetManifest, entry: &ManifestEntry, montage: &Arc<Montage>) -> Result<Recording> {
    let id = entry.id();
    let data_path = manifest.entry_path(entry);
    let header_path = sidecar_path(&data_path);
    for p in [&data_path, &header_path] {
        if !p.is_file() {
            return Err(Error::MissingFile {
                entry: id,
                path: p.clone(),
            });
        }
    }
    let header_text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: RecordingHeader = serde_json::from_str(&header_text).map_err(|e| Error::Format {
        entry: id.clone(),
        detail: format!("sidecar {}: {e}", header_path.display()),
    })?;

    if header.channel_names.len() != montage.len() {
        return Err(Error::ShapeMismatch {
            entry: id,
            detail: format!(
                "file has {} channels, montage has {}",
                header.channel_names.len(),
                montage.len()
            ),
        });
    }
    for (i, (got, want)) in header.channel_names.iter().zip(montage.channel_names()).enumerate() {
        if !got.eq_ignore_ascii_case(want) {
            return Err(Error::ShapeMismatch {
                entry: id,
                detail: format!("channel {i} is {got:?}, montage expects {want:?}"),
            });
        }
    }
    if header.sample_rate_hz != manifest.sample_rate_hz {
        return Err(Error::ShapeMismatch {
            entry: id,
            detail: format!(
                "sample rate {} differs from manifest {}",
                header.sample_rate_hz, manifest.sample_rate_hz
            ),
        });
    }

    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let expected = montage.len() * header.n_samples * 4;
    if bytes.len() != expected {
        return Err(Error::Format {
            entry: id,
            detail: format!("{} bytes on disk, header implies {expected}", bytes.len()),
        });
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let samples = Array2::from_shape_vec((montage.len(), header.n_samples), values).map_err(|e| Error::Format {
        entry: id.clone(),
        detail: e.to_string(),
    })?;
    Recording::new(
        &entry.subject,
        &entry.session,
        &entry.stimulus,
        samples,
        manifest.sample_rate_hz,
        Arc::clone(montage),
    )
}

/// Load every entry, validated, in canonical (subject, session, stimulus) order.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<Vec<Recording>> {
    manifest.validate()?;
    let montage = Arc::new(manifest.montage.clone());
    manifest
        .canonical_entries()
        .par_iter()
        .map(|e| load_entry(manifest, e, &montage))
        .collect()
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
