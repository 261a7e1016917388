//! Adam with linear learning-rate warmup, operating on flat parameter
//! slices so the caller decides how tensors are grouped.

use super::real::Real;
use super::NumError;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Linear warmup: the learning rate is multiplied by min(1, step / warmup),
/// with steps counted from 1. warmup = 0 disables the ramp.
#[derive(Clone, Copy, Debug)]
pub struct WarmupLinear {
    pub warmup_steps: u64,
}

impl WarmupLinear {
    pub fn factor(&self, step: u64) -> f64 {
        if self.warmup_steps == 0 {
            1.0
        } else {
            (step as f64 / self.warmup_steps as f64).min(1.0)
        }
    }
}

/// First/second moment buffers, one pair per parameter tensor.
pub struct AdamState<F: Real> {
    pub step: u64,
    cfg: AdamConfig,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> AdamState<F> {
    pub fn new(sizes: &[usize], cfg: AdamConfig) -> Self {
        AdamState {
            step: 0,
            cfg,
            m: sizes.iter().map(|&s| vec![F::zero(); s]).collect(),
            v: sizes.iter().map(|&s| vec![F::zero(); s]).collect(),
        }
    }

    /// One update over all parameter tensors. `lrs[i]` is the base learning
    /// rate for tensor i (group scheduling is the caller's concern); the
    /// warmup factor applies on top. A non-finite gradient anywhere aborts
    /// the whole step before any parameter moves.
    pub fn step(
        &mut self,
        params: &mut [&mut [F]],
        grads: &[&[F]],
        lrs: &[f64],
        schedule: &WarmupLinear,
    ) -> Result<(), NumError> {
        assert_eq!(params.len(), self.m.len(), "adam: parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "adam: gradient count mismatch");
        assert_eq!(lrs.len(), self.m.len(), "adam: lr count mismatch");
        for (idx, g) in grads.iter().enumerate() {
            if g.iter().any(|x| !x.is_finite()) {
                return Err(NumError::NonFiniteGradient { tensor: idx });
            }
        }
        self.step += 1;
        let t = self.step;
        let b1 = F::from_f64(self.cfg.beta1);
        let b2 = F::from_f64(self.cfg.beta2);
        let one_m_b1 = F::from_f64(1.0 - self.cfg.beta1);
        let one_m_b2 = F::from_f64(1.0 - self.cfg.beta2);
        let eps = F::from_f64(self.cfg.eps);
        let bias1 = 1.0 - self.cfg.beta1.powi(t as i32);
        let bias2 = 1.0 - self.cfg.beta2.powi(t as i32);
        let warm = schedule.factor(t);

        for i in 0..params.len() {
            if lrs[i] <= 0.0 {
                // lr must be positive for an active group; 0 freezes it
                assert!(lrs[i] == 0.0, "adam: negative learning rate");
                continue;
            }
            let lr_t = F::from_f64(lrs[i] * warm / bias1);
            let bias2_inv_sqrt = F::from_f64(1.0 / bias2.sqrt());
            let p = &mut params[i];
            let g = grads[i];
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for j in 0..p.len() {
                m[j] = b1 * m[j] + one_m_b1 * g[j];
                v[j] = b2 * v[j] + one_m_b2 * g[j] * g[j];
                let vhat_sqrt = (v[j] * bias2_inv_sqrt * bias2_inv_sqrt).sqrt();
                p[j] = p[j] - lr_t * m[j] / (vhat_sqrt + eps);
            }
        }
        Ok(())
    }
}

/// Scale all gradient tensors so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm<F: Real>(grads: &mut [Vec<F>], max_norm: f64) -> f64 {
    let mut sq = 0.0;
    for g in grads.iter() {
        for &x in g.iter() {
            let x = x.to_f64();
            sq += x * x;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = F::from_f64(max_norm / norm);
        for g in grads.iter_mut() {
            for x in g.iter_mut() {
                *x *= s;
            }
        }
    }
    norm
}
