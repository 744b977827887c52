use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{self, CompensatedSum};
use super::{enumerate_pairs, FeatureSet, PairIndex};
use crate::error::{CellFailure, Error, Result};
use crate::model::{FeatureConfig, FeatureSeries};
use crate::stats::{window_significance_with, Alternative, WindowSignificance};

/// Sliding window width and hop, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub width_s: f64,
    pub hop_s: f64,
}

/// A [`WindowSpec`] resolved against a feature rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowPoints {
    pub width: usize,
    pub hop: usize,
}

impl WindowSpec {
    pub fn new(width_s: f64, hop_s: f64) -> Self {
        WindowSpec { width_s, hop_s }
    }

    pub fn label(&self) -> String {
        format!("w{}s_h{}s", self.width_s, self.hop_s)
    }

    /// Convert to whole feature points; widths and hops must land on the
    /// feature grid.
    pub fn points(&self, feature_rate_hz: f64) -> Result<WindowPoints> {
        let to_points = |secs: f64, what: &str| -> Result<usize> {
            let raw = secs * feature_rate_hz;
            let rounded = raw.round();
            if !(raw.is_finite() && rounded >= 1.0 && (raw - rounded).abs() <= 1e-6 * rounded.max(1.0)) {
                return Err(Error::Config(format!(
                    "window {what} {secs} s is not a whole number of points at {feature_rate_hz} Hz"
                )));
            }
            Ok(rounded as usize)
        };
        let width = to_points(self.width_s, "width")?;
        let hop = to_points(self.hop_s, "hop")?;
        if width < 3 {
            return Err(Error::Config(format!(
                "window width must span at least 3 points, got {width}"
            )));
        }
        Ok(WindowPoints { width, hop })
    }
}

/// `⌊(len - width) / hop⌋ + 1`, or 0 when the series is shorter than a window.
pub fn window_count(len: usize, width: usize, hop: usize) -> usize {
    if len < width || hop == 0 {
        0
    } else {
        (len - width) / hop + 1
    }
}

/// Per-pair coefficients of every window, window-major. NaN marks
/// degenerate pairs internally; accessors return `None` for them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRMatrix {
    n_windows: usize,
    n_pairs: usize,
    values: Vec<f64>,
}

impl PairRMatrix {
    pub fn n_windows(&self) -> usize {
        self.n_windows
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn get(&self, window: usize, pair: usize) -> Option<f64> {
        let v = self.values[window * self.n_pairs + pair];
        (!v.is_nan()).then_some(v)
    }

    /// Valid coefficients of one window in pair order.
    pub fn window_values(&self, window: usize) -> Vec<f64> {
        self.values[window * self.n_pairs..(window + 1) * self.n_pairs]
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicOrigin {
    pub stimulus: String,
    pub channel: String,
    pub feature: FeatureConfig,
    pub window: WindowSpec,
}

/// Pair-averaged windowed correlation for one (stimulus, channel, feature, window).
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicIsc {
    pub origin: DynamicOrigin,
    pub start_times_s: Vec<f64>,
    /// `None` for windows in which every pair was degenerate.
    pub mean_r: Vec<Option<f64>>,
    /// Number of non-degenerate pairs contributing to each window.
    pub valid_pairs: Vec<usize>,
    pub pair_r: Option<PairRMatrix>,
    pub significance: Option<WindowSignificance>,
}

impl DynamicIsc {
    pub fn n_windows(&self) -> usize {
        self.mean_r.len()
    }

    /// Window centre times, `start + width / 2`.
    pub fn center_times_s(&self) -> Vec<f64> {
        let half = self.origin.window.width_s / 2.0;
        self.start_times_s.iter().map(|t| t + half).collect()
    }
}

struct WindowedRun {
    mean_r: Vec<Option<f64>>,
    valid_pairs: Vec<usize>,
    pair_r: Option<PairRMatrix>,
}

fn run_windows(series: &[&[f64]], pairs: &PairIndex, win: WindowPoints, retain_pairs: bool) -> Result<WindowedRun> {
    let len = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::LengthMismatch {
            left: len,
            right: bad.len(),
        });
    }
    if len < win.width {
        return Err(Error::TooShort {
            needed: win.width,
            got: len,
        });
    }
    let n_windows = window_count(len, win.width, win.hop);
    let m = series.len();
    let mut buf = vec![0.0; m * win.width];
    let mut norms = vec![None; m];
    let mut mean_r = Vec::with_capacity(n_windows);
    let mut valid_pairs = Vec::with_capacity(n_windows);
    let mut pair_values = if retain_pairs {
        Vec::with_capacity(n_windows * pairs.len())
    } else {
        Vec::new()
    };

    for k in 0..n_windows {
        let start = k * win.hop;
        for (i, s) in series.iter().enumerate() {
            norms[i] = kernel::center_into(
                &s[start..start + win.width],
                &mut buf[i * win.width..(i + 1) * win.width],
            );
        }
        let mut sum = CompensatedSum::default();
        let mut count = 0usize;
        for &(i, j) in pairs.pairs() {
            let r = match (norms[i], norms[j]) {
                (Some(ni), Some(nj)) => {
                    let r = kernel::correlation(
                        &buf[i * win.width..(i + 1) * win.width],
                        ni,
                        &buf[j * win.width..(j + 1) * win.width],
                        nj,
                    );
                    sum.add(r);
                    count += 1;
                    r
                }
                _ => f64::NAN,
            };
            if retain_pairs {
                pair_values.push(r);
            }
        }
        mean_r.push((count > 0).then(|| (sum.value() / count as f64).clamp(-1.0, 1.0)));
        valid_pairs.push(count);
    }

    Ok(WindowedRun {
        mean_r,
        valid_pairs,
        pair_r: retain_pairs.then(|| PairRMatrix {
            n_windows,
            n_pairs: pairs.len(),
            values: pair_values,
        }),
    })
}

/// Sliding-window ISC over the feature series of one stimulus and channel,
/// one series per record, retaining the per-pair coefficients.
pub fn sliding_window_isc(series: &[FeatureSeries], spec: &WindowSpec) -> Result<DynamicIsc> {
    let first = series.first().ok_or(Error::TooShort { needed: 2, got: 0 })?;
    let pairs = enumerate_pairs(series.len())?;
    let win = spec.points(first.feature_rate_hz)?;
    let points: Vec<&[f64]> = series.iter().map(|s| s.points.as_slice()).collect();
    let run = run_windows(&points, &pairs, win, true)?;
    Ok(assemble(
        DynamicOrigin {
            stimulus: first.origin.stimulus.clone(),
            channel: first.origin.channel.clone(),
            feature: first.config.clone(),
            window: *spec,
        },
        first.feature_rate_hz,
        win,
        run,
    ))
}

fn assemble(origin: DynamicOrigin, rate: f64, win: WindowPoints, run: WindowedRun) -> DynamicIsc {
    let start_times_s = (0..run.mean_r.len()).map(|k| (k * win.hop) as f64 / rate).collect();
    DynamicIsc {
        origin,
        start_times_s,
        mean_r: run.mean_r,
        valid_pairs: run.valid_pairs,
        pair_r: run.pair_r,
        significance: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchOptions {
    /// Keep the per-pair coefficient matrix in each result.
    pub retain_pairs: bool,
    /// Run per-window Wilcoxon + BH significance with this alpha.
    pub significance_alpha: Option<f64>,
    pub alternative: Alternative,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            retain_pairs: false,
            significance_alpha: Some(0.05),
            alternative: Alternative::TwoSided,
        }
    }
}

/// Sliding-window ISC over every (stimulus, channel, feature set, window)
/// cell, in that nesting order. Cells run in parallel on the current rayon
/// pool; each cell's reduction is sequential in canonical pair order, so the
/// output is identical for any worker count. Failed cells are gathered into
/// a single [`Error::Batch`].
pub fn dynamic_isc_batch(
    sets: &[FeatureSet],
    specs: &[WindowSpec],
    channels: &[String],
    options: BatchOptions,
) -> Result<Vec<DynamicIsc>> {
    struct Cell<'a> {
        set: &'a FeatureSet,
        stimulus: usize,
        channel: Option<usize>,
        channel_label: &'a str,
        spec: WindowSpec,
    }

    let n_stimuli = sets.first().map_or(0, |s| s.stimuli.len());
    for set in sets {
        set.check()?;
        if set.stimuli.len() != n_stimuli {
            return Err(Error::Inconsistent("feature sets cover different stimuli".into()));
        }
    }

    let mut cells = Vec::new();
    for stimulus in 0..n_stimuli {
        for label in channels {
            for set in sets {
                for spec in specs {
                    cells.push(Cell {
                        set,
                        stimulus,
                        channel: set.channel_index(label),
                        channel_label: label,
                        spec: *spec,
                    });
                }
            }
        }
    }

    let results: Vec<std::result::Result<DynamicIsc, CellFailure>> = cells
        .par_iter()
        .map(|cell| {
            let stim = &cell.set.stimuli[cell.stimulus];
            let name = format!(
                "{}/{}/{}/{}",
                stim.stimulus,
                cell.channel_label,
                cell.set.config.label(),
                cell.spec.label()
            );
            let fail = |e: Error| CellFailure {
                cell: name.clone(),
                message: e.to_string(),
            };
            let channel = cell
                .channel
                .ok_or_else(|| fail(Error::Config(format!("channel {} not extracted", cell.channel_label))))?;
            let pairs = enumerate_pairs(cell.set.records.len()).map_err(fail)?;
            let win = cell.spec.points(cell.set.feature_rate_hz).map_err(fail)?;
            let retain = options.retain_pairs || options.significance_alpha.is_some();
            let run = run_windows(&stim.channel_points(channel), &pairs, win, retain).map_err(fail)?;
            let mut out = assemble(
                DynamicOrigin {
                    stimulus: stim.stimulus.clone(),
                    channel: cell.set.channels[channel].clone(),
                    feature: cell.set.config.clone(),
                    window: cell.spec,
                },
                cell.set.feature_rate_hz,
                win,
                run,
            );
            if let (Some(alpha), Some(pr)) = (options.significance_alpha, out.pair_r.as_ref()) {
                out.significance = Some(window_significance_with(pr, alpha, options.alternative));
            }
            if !options.retain_pairs {
                out.pair_r = None;
            }
            Ok(out)
        })
        .collect();

    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(d) => ok.push(d),
            Err(f) => failures.push(f),
        }
    }
    if failures.is_empty() {
        Ok(ok)
    } else {
        Err(Error::Batch(failures))
    }
}
