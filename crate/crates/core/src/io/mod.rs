//! Dataset manifests, raw recording files, synthetic cohorts and reports.

mod dataset;
mod report;
mod source;
mod synth;

pub use dataset::{
    load_dataset, load_entry, sidecar_path, write_recording, DatasetManifest, ManifestEntry, RecordingHeader,
    MANIFEST_VERSION,
};
pub use report::{
    curve_file_name, read_report_json, write_curve_csv, write_margin_csv, write_report, ReportFormat, REPORT_JSON,
};
pub use source::{DatasetSource, EntryKey, MemorySource, RecordingSource, SyntheticSource};
pub use synth::{
    cohort_entries, generate_cohort, generate_recording, ground_truth, write_cohort, Burst, EntryIndex, GroundTruth,
    StimulusCarriers, StimulusTruth, SynthConfig,
};
