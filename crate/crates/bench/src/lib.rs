//! Seeded workloads shared by the benches.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use eegsync_core::corr::StimulusFeatures;
use eegsync_core::model::{FeatureConfig, FeatureSeries, SeriesOrigin};
use eegsync_core::{FeatureSet, RecordLabel};

pub const SAMPLE_RATE_HZ: f64 = 200.0;

/// Gaussian noise, `n` samples.
pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// One stimulus of FD-shaped engine input: every record sees a shared
/// per-channel component plus its own noise.
pub fn feature_stimulus(n_records: usize, n_channels: usize, len: usize, rate_hz: f64, seed: u64) -> FeatureSet {
    let mut rng = StdRng::seed_from_u64(seed);
    let config = FeatureConfig::first_difference(20);
    let channels: Vec<String> = (0..n_channels).map(|i| format!("C{i}")).collect();
    let shared: Vec<Vec<f64>> = (0..n_channels)
        .map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut series = Vec::with_capacity(n_records * n_channels);
    for r in 0..n_records {
        for (ch, s) in channels.iter().zip(&shared) {
            let points = s
                .iter()
                .map(|v: &f64| 1.0 + 0.3 * v + rng.sample::<f64, _>(StandardNormal))
                .collect();
            series.push(FeatureSeries {
                config: config.clone(),
                origin: SeriesOrigin {
                    subject: format!("s{r:02}"),
                    session: "1".into(),
                    stimulus: "film01".into(),
                    channel: ch.clone(),
                },
                points,
                feature_rate_hz: rate_hz,
            });
        }
    }
    FeatureSet {
        config,
        feature_rate_hz: rate_hz,
        channels,
        records: (0..n_records)
            .map(|r| RecordLabel::new(format!("s{r:02}"), "1"))
            .collect(),
        stimuli: vec![StimulusFeatures::new("film01", series, n_channels).unwrap()],
    }
}
