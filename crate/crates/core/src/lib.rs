//! Single-electrode, feature-based inter-subject correlation (ISC) for
//! multichannel biosignals: feature extraction, overall and sliding-window
//! ISC, the statistics around them, and a synthetic cohort generator.

pub mod corr;
pub mod error;
pub mod features;
pub mod io;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod preprocess;
pub mod stats;

pub use corr::{
    dynamic_isc_batch, enumerate_pairs, overall_isc, pcc, pcc_p_value, sliding_window_isc, window_count, BatchOptions,
    DynamicIsc, FeatureSet, OverallIscTensor, PairIndex, RecordLabel, WindowSpec,
};
pub use error::{Error, ErrorClass, Result};
pub use model::{
    validate_recording, FeatureConfig, FeatureKind, FeatureSeries, Montage, Recording, StimulusCatalog, Valence,
};
pub use preprocess::BandDef;
