use std::sync::{Arc, Mutex};

use super::dataset::{load_entry, DatasetManifest, ManifestEntry};
use super::synth::{cohort_entries, generate_recording, EntryIndex, StimulusCarriers, SynthConfig};
use crate::error::{Error, Result};
use crate::model::{Montage, Recording, StimulusCatalog};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryKey {
    pub subject: String,
    pub session: String,
    pub stimulus: String,
}

/// Anything that can hand out recordings one entry at a time, so a cohort
/// never has to sit in memory as a whole.
pub trait RecordingSource: Sync {
    fn montage(&self) -> &Arc<Montage>;
    fn sample_rate_hz(&self) -> f64;
    fn catalog(&self) -> &StimulusCatalog;
    /// Entry keys in canonical (subject, session, stimulus) order.
    fn keys(&self) -> &[EntryKey];
    /// Load entry `index` of [`RecordingSource::keys`].
    fn load(&self, index: usize) -> Result<Recording>;
}

pub struct DatasetSource {
    manifest: DatasetManifest,
    montage: Arc<Montage>,
    entries: Vec<ManifestEntry>,
    keys: Vec<EntryKey>,
}

impl DatasetSource {
    pub fn new(manifest: DatasetManifest) -> Result<Self> {
        manifest.validate()?;
        let entries: Vec<ManifestEntry> = manifest.canonical_entries().into_iter().cloned().collect();
        let keys = entries
            .iter()
            .map(|e| EntryKey {
                subject: e.subject.clone(),
                session: e.session.clone(),
                stimulus: e.stimulus.clone(),
            })
            .collect();
        Ok(DatasetSource {
            montage: Arc::new(manifest.montage.clone()),
            manifest,
            entries,
            keys,
        })
    }
}

impl RecordingSource for DatasetSource {
    fn montage(&self) -> &Arc<Montage> {
        &self.montage
    }

    fn sample_rate_hz(&self) -> f64 {
        self.manifest.sample_rate_hz
    }

    fn catalog(&self) -> &StimulusCatalog {
        &self.manifest.catalog
    }

    fn keys(&self) -> &[EntryKey] {
        &self.keys
    }

    fn load(&self, index: usize) -> Result<Recording> {
        load_entry(&self.manifest, &self.entries[index], &self.montage)
    }
}

/// Generates each recording on demand. Carriers of the most recent stimulus
/// are cached since they are shared by every record of that stimulus.
pub struct SyntheticSource {
    cfg: SynthConfig,
    montage: Arc<Montage>,
    catalog: StimulusCatalog,
    indices: Vec<EntryIndex>,
    keys: Vec<EntryKey>,
    carriers: Mutex<Vec<Option<Arc<StimulusCarriers>>>>,
}

impl SyntheticSource {
    pub fn new(cfg: SynthConfig) -> Result<Self> {
        cfg.validate()?;
        let indices = cohort_entries(&cfg);
        let keys = indices
            .iter()
            .map(|e| EntryKey {
                subject: cfg.subject_id(e.subject),
                session: cfg.session_id(e.session),
                stimulus: cfg.stimulus_id(e.stimulus),
            })
            .collect();
        Ok(SyntheticSource {
            montage: Arc::new(cfg.montage()?),
            catalog: cfg.catalog(),
            carriers: Mutex::new(vec![None; cfg.n_stimuli]),
            indices,
            keys,
            cfg,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    fn carriers_for(&self, stimulus: usize) -> Arc<StimulusCarriers> {
        if let Some(c) = &self.carriers.lock().expect("carrier cache poisoned")[stimulus] {
            return Arc::clone(c);
        }
        let built = Arc::new(StimulusCarriers::new(&self.cfg, stimulus));
        let mut cache = self.carriers.lock().expect("carrier cache poisoned");
        // Keep only a handful of stimuli resident.
        let resident = cache.iter().filter(|c| c.is_some()).count();
        if resident >= 4 {
            for slot in cache.iter_mut() {
                *slot = None;
            }
        }
        cache[stimulus].get_or_insert(built).clone()
    }
}

impl RecordingSource for SyntheticSource {
    fn montage(&self) -> &Arc<Montage> {
        &self.montage
    }

    fn sample_rate_hz(&self) -> f64 {
        self.cfg.sample_rate_hz
    }

    fn catalog(&self) -> &StimulusCatalog {
        &self.catalog
    }

    fn keys(&self) -> &[EntryKey] {
        &self.keys
    }

    fn load(&self, index: usize) -> Result<Recording> {
        let entry = self.indices[index];
        let carriers = self.carriers_for(entry.stimulus);
        generate_recording(&self.cfg, &self.montage, entry, &carriers)
    }
}

/// Recordings already in memory.
pub struct MemorySource {
    recordings: Vec<Recording>,
    montage: Arc<Montage>,
    catalog: StimulusCatalog,
    keys: Vec<EntryKey>,
}

impl MemorySource {
    /// Sorts into canonical order; all recordings must share montage and rate.
    pub fn new(mut recordings: Vec<Recording>, catalog: StimulusCatalog) -> Result<Self> {
        let first = recordings
            .first()
            .ok_or_else(|| Error::Inconsistent("no recordings".into()))?;
        let montage = Arc::clone(first.montage());
        let rate = first.sample_rate_hz();
        for r in &recordings {
            if **r.montage() != *montage || r.sample_rate_hz() != rate {
                return Err(Error::Inconsistent(format!(
                    "recording {} differs in montage or sample rate",
                    r.id()
                )));
            }
        }
        recordings.sort_by(|a, b| {
            (a.subject_id(), a.session_id(), a.stimulus_id()).cmp(&(b.subject_id(), b.session_id(), b.stimulus_id()))
        });
        let keys: Vec<EntryKey> = recordings
            .iter()
            .map(|r| EntryKey {
                subject: r.subject_id().to_string(),
                session: r.session_id().to_string(),
                stimulus: r.stimulus_id().to_string(),
            })
            .collect();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Inconsistent(
                "duplicate (subject, session, stimulus) recording".into(),
            ));
        }
        Ok(MemorySource {
            recordings,
            montage,
            catalog,
            keys,
        })
    }
}

impl RecordingSource for MemorySource {
    fn montage(&self) -> &Arc<Montage> {
        &self.montage
    }

    fn sample_rate_hz(&self) -> f64 {
        self.recordings[0].sample_rate_hz()
    }

    fn catalog(&self) -> &StimulusCatalog {
        &self.catalog
    }

    fn keys(&self) -> &[EntryKey] {
        &self.keys
    }

    fn load(&self, index: usize) -> Result<Recording> {
        Ok(self.recordings[index].clone())
    }
}
