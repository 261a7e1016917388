//! Gradient-harmonized cross-entropy: per-label gradient norms, unit-region
//! histogram density with EMA smoothing, and the reweighted loss.
//!
//! The per-label difficulty measure is g = 1 - p[true], which equals half
//! the L1 norm of p - t̂ for a one-hot target, so g stays in [0, 1] for any
//! class count. [0, 1] is split into m equal unit regions; the density of a
//! label is approximated by m times the count of its region, optionally
//! smoothed across batches by an exponential moving average, and each label
//! is weighted by N over its density.

use crate::numcore::{Mat, PROB_FLOOR};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GhmError {
    #[error("gradient norm {g} outside [0, 1]")]
    OutOfRange { g: f64 },
    #[error("epsilon must lie in (0, 1]")]
    BadEpsilon,
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("bin count must be at least 1")]
    BadBinCount,
}

/// g = 1 - p[true_class], in [0, 1]. Small g means an easy, well-classified
/// label.
pub fn gradient_norm(p: &[f64], true_class: usize) -> Result<f64, GhmError> {
    if true_class >= p.len() {
        return Err(GhmError::ClassOutOfRange {
            class: true_class,
            classes: p.len(),
        });
    }
    Ok(1.0 - p[true_class])
}

/// Index of the unit region holding g: floor(g * m), clamped so g = 1 lands
/// in the last bin. Bins are half-open [j/m, (j+1)/m).
pub fn bin_index(g: f64, m: usize) -> Result<usize, GhmError> {
    if m == 0 {
        return Err(GhmError::BadBinCount);
    }
    if !(0.0..=1.0).contains(&g) {
        return Err(GhmError::OutOfRange { g });
    }
    Ok(((g * m as f64) as usize).min(m - 1))
}

/// Exact (unbinned) gradient density: the number of g_k within epsilon/2 of
/// g (half-open on the right), divided by the valid window length
/// min(g + eps/2, 1) - max(g - eps/2, 0). Reference oracle for the binned
/// approximation.
pub fn exact_density(g: f64, all_g: &[f64], epsilon: f64) -> Result<f64, GhmError> {
    if epsilon <= 0.0 || epsilon > 1.0 {
        return Err(GhmError::BadEpsilon);
    }
    let lo = g - epsilon / 2.0;
    let hi = g + epsilon / 2.0;
    let count = all_g.iter().filter(|&&x| x >= lo && x < hi).count();
    let valid = hi.min(1.0) - lo.max(0.0);
    Ok(count as f64 / valid)
}

/// Stateful histogram over the m unit regions. `u` holds the counts of the
/// latest batch, `a` the EMA-smoothed counts across batches.
#[derive(Clone, Debug)]
pub struct GradientHistogram {
    m: usize,
    alpha: f64,
    u: Vec<f64>,
    a: Vec<f64>,
}

pub const DEFAULT_BINS: usize = 24;
pub const DEFAULT_MOMENTUM: f64 = 0.75;

impl Default for GradientHistogram {
    fn default() -> Self {
        Self::new(DEFAULT_BINS, DEFAULT_MOMENTUM)
    }
}

impl GradientHistogram {
    pub fn new(m: usize, alpha: f64) -> Self {
        assert!(m >= 1, "at least one unit region");
        assert!((0.0..=1.0).contains(&alpha), "momentum must lie in [0, 1]");
        GradientHistogram {
            m,
            alpha,
            u: vec![0.0; m],
            a: vec![0.0; m],
        }
    }

    pub fn bins(&self) -> usize {
        self.m
    }

    pub fn momentum(&self) -> f64 {
        self.alpha
    }

    pub fn batch_counts(&self) -> &[f64] {
        &self.u
    }

    pub fn ema_counts(&self) -> &[f64] {
        &self.a
    }

    /// Histogram update plus per-label weights from precomputed gradient
    /// norms. With `ema` the density reads the smoothed counts (falling
    /// back to the batch count for a cold bin); without it, the batch
    /// counts directly. Values of g outside [0, 1] from floating-point
    /// slop are clamped.
    pub fn update_and_weights_from_norms(&mut self, g: &[f64], ema: bool) -> Result<Vec<f64>, GhmError> {
        if g.is_empty() {
            return Err(GhmError::EmptyBatch);
        }
        let n = g.len() as f64;
        let indices: Vec<usize> = g
            .iter()
            .map(|&x| bin_index(x.clamp(0.0, 1.0), self.m))
            .collect::<Result<_, _>>()?;
        self.u.fill(0.0);
        for &j in &indices {
            self.u[j] += 1.0;
        }
        if ema {
            for j in 0..self.m {
                self.a[j] = self.alpha * self.a[j] + (1.0 - self.alpha) * self.u[j];
            }
        }
        let m = self.m as f64;
        let weights = indices
            .iter()
            .map(|&j| {
                let count = if ema {
                    // cold start: a bin observed now but never smoothed in
                    if self.a[j] > 0.0 { self.a[j] } else { self.u[j] }
                } else {
                    self.u[j]
                };
                n / (m * count)
            })
            .collect();
        Ok(weights)
    }

    /// As above, from probability rows and their true classes.
    pub fn update_and_weights(
        &mut self,
        p_batch: &Mat<f64>,
        true_classes: &[usize],
        ema: bool,
    ) -> Result<Vec<f64>, GhmError> {
        if p_batch.rows != true_classes.len() {
            return Err(GhmError::EmptyBatch);
        }
        let g: Vec<f64> = (0..p_batch.rows)
            .map(|i| gradient_norm(p_batch.row(i), true_classes[i]))
            .collect::<Result<_, _>>()?;
        self.update_and_weights_from_norms(&g, ema)
    }
}

/// -(1/n) sum_i beta_i ln(max(p_i[t_i], floor)). With every beta at 1 this
/// is the plain mean cross-entropy.
pub fn ghm_cross_entropy(
    p_batch: &Mat<f64>,
    true_classes: &[usize],
    hist: &mut GradientHistogram,
    ema: bool,
) -> Result<f64, GhmError> {
    let weights = hist.update_and_weights(p_batch, true_classes, ema)?;
    let n = p_batch.rows as f64;
    let mut loss = 0.0;
    for (i, (&t, &w)) in true_classes.iter().zip(&weights).enumerate() {
        loss -= w * p_batch.row(i)[t].max(PROB_FLOOR).ln();
    }
    Ok(loss / n)
}

/// Per-epoch bin counts recorded by the trainer: `u` accumulates every
/// batch's counts over the epoch, `a` is the EMA state at epoch end.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramSnapshot {
    pub epoch: usize,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
}
