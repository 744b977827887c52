//! Shared numeric kernel for every Pearson correlation in the crate.
//!
//! Overall and windowed correlations both go through [`center_into`] and
//! [`dot`], so a full-width window reproduces the overall coefficient bit
//! for bit.

/// Relative spread below which a series counts as constant.
const DEGENERATE_REL: f64 = 1e-13;

/// Write `x - mean(x)` into `out` and return the Euclidean norm of the
/// centered values, or `None` when the series has (numerically) zero variance.
pub(crate) fn center_into(x: &[f64], out: &mut [f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), out.len());
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    for (o, v) in out.iter_mut().zip(x) {
        *o = v - mean;
    }
    let resid = out.iter().sum::<f64>() / n;
    for o in out.iter_mut() {
        *o -= resid;
    }
    let ss = dot(out, out);
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = DEGENERATE_REL * scale;
    if !(ss.is_finite() && ss > n * floor * floor && ss > 0.0) {
        return None;
    }
    Some(ss.sqrt())
}

/// Dot product with four interleaved accumulators combined in a fixed order.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail_a = chunks_a.remainder();
    let tail_b = chunks_b.remainder();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (x, y) in tail_a.iter().zip(tail_b) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

#[inline]
pub(crate) fn correlation(a: &[f64], norm_a: f64, b: &[f64], norm_b: f64) -> f64 {
    (dot(a, b) / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

/// Neumaier compensated sum, accumulated in call order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
