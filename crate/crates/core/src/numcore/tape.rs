//! Define-by-run computation tape. A tape is rebuilt for every forward pass
//! and confined to one thread; records are stored in construction order,
//! which is already a topological order, so backward is a single reverse
//! sweep that touches every reachable record once.

use super::kernels::{matmul_nn, matmul_nt, matmul_tn};
use super::real::Real;
use super::tensor::{DiffTensor, Op, Var};
use super::NumError;

/// Floor applied before taking logs of probabilities.
pub const PROB_FLOOR: f64 = 1e-12;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub struct Tape<F: Real> {
    nodes: Vec<DiffTensor<F>>,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable leaf: participates in gradient computation.
    pub fn leaf(&mut self, values: Vec<F>, shape: &[usize]) -> Var {
        self.insert(values, shape, true, None)
    }

    /// Constant: never accumulates gradient.
    pub fn constant(&mut self, values: Vec<F>, shape: &[usize]) -> Var {
        self.insert(values, shape, false, None)
    }

    pub fn scalar_constant(&mut self, value: F) -> Var {
        self.constant(vec![value], &[1])
    }

    /// Re-enter a computed tensor as a constant, cutting the gradient path.
    pub fn detach(&mut self, v: Var) -> Var {
        let values = self.nodes[v.0].values.clone();
        let shape = self.nodes[v.0].shape.clone();
        self.constant(values, &shape)
    }

    fn insert(&mut self, values: Vec<F>, shape: &[usize], requires_grad: bool, node: Option<Op>) -> Var {
        let numel: usize = shape.iter().product();
        assert_eq!(values.len(), numel, "value buffer does not match shape {shape:?}");
        self.nodes.push(DiffTensor {
            shape: shape.to_vec(),
            values,
            grad: Vec::new(),
            requires_grad,
            node,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, values: Vec<F>, shape: Vec<usize>, op: Op) -> Var {
        let requires_grad = op.inputs().iter().any(|v| self.nodes[v.0].requires_grad);
        let numel: usize = shape.iter().product();
        debug_assert_eq!(values.len(), numel);
        self.nodes.push(DiffTensor {
            shape,
            values,
            grad: Vec::new(),
            requires_grad,
            node: Some(op),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn tensor(&self, v: Var) -> &DiffTensor<F> {
        &self.nodes[v.0]
    }

    pub fn values(&self, v: Var) -> &[F] {
        &self.nodes[v.0].values
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    /// Gradient buffer of `v`; empty when no backward pass has written it.
    pub fn grad(&self, v: Var) -> &[F] {
        &self.nodes[v.0].grad
    }

    pub fn scalar(&self, v: Var) -> F {
        assert_eq!(self.nodes[v.0].numel(), 1, "tensor is not a scalar");
        self.nodes[v.0].values[0]
    }

    // ── forward ops ──────────────────────────────────────────────────

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.nodes[a.0].shape, self.nodes[b.0].shape, "add: shape mismatch");
        let values = zip_map(&self.nodes[a.0].values, &self.nodes[b.0].values, |x, y| x + y);
        let shape = self.nodes[a.0].shape.clone();
        self.push(values, shape, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.nodes[a.0].shape, self.nodes[b.0].shape, "sub: shape mismatch");
        let values = zip_map(&self.nodes[a.0].values, &self.nodes[b.0].values, |x, y| x - y);
        let shape = self.nodes[a.0].shape.clone();
        self.push(values, shape, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.nodes[a.0].shape, self.nodes[b.0].shape, "mul: shape mismatch");
        let values = zip_map(&self.nodes[a.0].values, &self.nodes[b.0].values, |x, y| x * y);
        let shape = self.nodes[a.0].shape.clone();
        self.push(values, shape, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let c = F::from_f64(factor);
        let values = self.nodes[a.0].values.iter().map(|&x| x * c).collect();
        let shape = self.nodes[a.0].shape.clone();
        self.push(values, shape, Op::Scale(a, factor))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.nodes[a.0].dims2();
        let (k2, n) = self.nodes[b.0].dims2();
        assert_eq!(k, k2, "matmul: inner dimensions differ ({k} vs {k2})");
        let mut values = vec![F::zero(); m * n];
        matmul_nn(&self.nodes[a.0].values, &self.nodes[b.0].values, m, k, n, &mut values);
        self.push(values, vec![m, n], Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let (m, n) = self.nodes[a.0].dims2();
        let src = &self.nodes[a.0].values;
        let mut values = vec![F::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                values[j * m + i] = src[i * n + j];
            }
        }
        self.push(values, vec![n, m], Op::Transpose(a))
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let (m, n) = self.nodes[a.0].dims2();
        assert_eq!(self.nodes[bias.0].numel(), n, "add_bias: bias length mismatch");
        let b = &self.nodes[bias.0].values;
        let mut values = self.nodes[a.0].values.clone();
        for i in 0..m {
            for j in 0..n {
                values[i * n + j] += b[j];
            }
        }
        self.push(values, vec![m, n], Op::AddBias(a, bias))
    }

    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Var {
        let (v, h) = self.nodes[table.0].dims2();
        let src = &self.nodes[table.0].values;
        let mut values = Vec::with_capacity(ids.len() * h);
        for &id in ids {
            assert!(id < v, "gather_rows: row id {id} out of range {v}");
            values.extend_from_slice(&src[id * h..id * h + h]);
        }
        self.push(values, vec![ids.len(), h], Op::GatherRows(table, ids.to_vec()))
    }

    pub fn cols(&mut self, input: Var, start: usize, len: usize) -> Var {
        let (m, n) = self.nodes[input.0].dims2();
        assert!(start + len <= n, "cols: slice out of range");
        let src = &self.nodes[input.0].values;
        let mut values = Vec::with_capacity(m * len);
        for i in 0..m {
            values.extend_from_slice(&src[i * n + start..i * n + start + len]);
        }
        self.push(values, vec![m, len], Op::Cols { input, start, len })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let m = self.nodes[parts[0].0].dims2().0;
        let total: usize = parts.iter().map(|p| self.nodes[p.0].dims2().1).sum();
        let mut values = Vec::with_capacity(m * total);
        for i in 0..m {
            for p in parts {
                let (pm, pn) = self.nodes[p.0].dims2();
                assert_eq!(pm, m, "concat_cols: row count mismatch");
                let src = &self.nodes[p.0].values;
                values.extend_from_slice(&src[i * pn..i * pn + pn]);
            }
        }
        self.push(values, vec![m, total], Op::ConcatCols(parts.to_vec()))
    }

    pub fn layer_norm(&mut self, input: Var, gamma: Var, beta: Var, eps: f64) -> Var {
        let (m, n) = self.nodes[input.0].dims2();
        assert_eq!(self.nodes[gamma.0].numel(), n);
        assert_eq!(self.nodes[beta.0].numel(), n);
        let x = &self.nodes[input.0].values;
        let g = &self.nodes[gamma.0].values;
        let b = &self.nodes[beta.0].values;
        let mut values = vec![F::zero(); m * n];
        for i in 0..m {
            let row = &x[i * n..i * n + n];
            let (mean, inv_std) = row_moments(row, eps);
            for j in 0..n {
                values[i * n + j] = (row[j] - mean) * inv_std * g[j] + b[j];
            }
        }
        self.push(values, vec![m, n], Op::LayerNorm { input, gamma, beta, eps })
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let c = F::from_f64(GELU_C);
        let k = F::from_f64(GELU_A);
        let half = F::from_f64(0.5);
        let one = F::one();
        let values = self.nodes[a.0]
            .values
            .iter()
            .map(|&x| half * x * (one + (c * (x + k * x * x * x)).tanh()))
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        self.push(values, shape, Op::Gelu(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let values = self.nodes[a.0].values.iter().map(|&x| x.max(F::zero())).collect();
        let shape = self.nodes[a.0].shape.clone();
        self.push(values, shape, Op::Relu(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let (m, n) = self.nodes[a.0].dims2();
        let x = &self.nodes[a.0].values;
        let mut values = vec![F::zero(); m * n];
        for i in 0..m {
            softmax_row(&x[i * n..i * n + n], &mut values[i * n..i * n + n]);
        }
        self.push(values, vec![m, n], Op::SoftmaxRows(a))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].values.iter().copied().sum();
        self.push(vec![s], vec![1], Op::SumAll(a))
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.nodes[a.0].numel();
        let s = self.sum_all(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// Weighted negative log-likelihood over probability rows. `weights`
    /// carries both loss weights and the position mask (weight 0 drops a
    /// row); `denom` is the normalization count.
    pub fn nll_rows(&mut self, probs: Var, targets: &[usize], weights: &[f64], denom: f64) -> Var {
        let (m, n) = self.nodes[probs.0].dims2();
        assert_eq!(targets.len(), m, "nll_rows: target count mismatch");
        assert_eq!(weights.len(), m, "nll_rows: weight count mismatch");
        assert!(denom > 0.0, "nll_rows: non-positive normalization");
        let p = &self.nodes[probs.0].values;
        let mut total = 0.0;
        for i in 0..m {
            if weights[i] == 0.0 {
                continue;
            }
            assert!(targets[i] < n, "nll_rows: target class out of range");
            let pi = p[i * n + targets[i]].to_f64().max(PROB_FLOOR);
            total -= weights[i] * pi.ln();
        }
        let value = F::from_f64(total / denom);
        self.push(
            vec![value],
            vec![1],
            Op::NllRows {
                probs,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
                denom,
            },
        )
    }

    /// Row-weighted mean KL divergence between two probability-row tensors.
    pub fn kl_rows(&mut self, p: Var, q: Var, row_weights: &[f64], denom: f64) -> Var {
        let (m, n) = self.nodes[p.0].dims2();
        assert_eq!(self.nodes[q.0].shape, self.nodes[p.0].shape, "kl_rows: shape mismatch");
        assert_eq!(row_weights.len(), m, "kl_rows: weight count mismatch");
        assert!(denom > 0.0, "kl_rows: non-positive normalization");
        let pv = &self.nodes[p.0].values;
        let qv = &self.nodes[q.0].values;
        let mut total = 0.0;
        for i in 0..m {
            if row_weights[i] == 0.0 {
                continue;
            }
            total += row_weights[i] * kl_row(&pv[i * n..i * n + n], &qv[i * n..i * n + n]);
        }
        let value = F::from_f64(total / denom);
        self.push(
            vec![value],
            vec![1],
            Op::KlRows {
                p,
                q,
                row_weights: row_weights.to_vec(),
                denom,
            },
        )
    }

    /// Columnwise max over each token's segment. `segments[i]` is the
    /// half-open row range of the segment containing token i.
    pub fn segment_max_rows(&mut self, input: Var, segments: &[(usize, usize)]) -> Var {
        let (m, n) = self.nodes[input.0].dims2();
        assert_eq!(segments.len(), m, "segment_max_rows: segment count mismatch");
        let x = &self.nodes[input.0].values;
        let mut values = vec![F::zero(); m * n];
        for (i, &(b, e)) in segments.iter().enumerate() {
            assert!(b < e && e <= m, "segment_max_rows: bad segment [{b}, {e})");
            let out = &mut values[i * n..i * n + n];
            out.copy_from_slice(&x[b * n..b * n + n]);
            for r in b + 1..e {
                for j in 0..n {
                    let v = x[r * n + j];
                    if v > out[j] {
                        out[j] = v;
                    }
                }
            }
        }
        self.push(
            values,
            vec![m, n],
            Op::SegmentMaxRows {
                input,
                segments: segments.to_vec(),
            },
        )
    }

    // ── backward ─────────────────────────────────────────────────────

    /// Reverse sweep from a scalar root. Gradients of `requires_grad`
    /// tensors accumulate across repeated calls; the root itself receives
    /// gradient 1 per call.
    pub fn backward(&mut self, root: Var) -> Result<(), NumError> {
        if root.0 >= self.nodes.len() {
            return Err(NumError::DetachedRoot);
        }
        if self.nodes[root.0].numel() != 1 {
            return Err(NumError::NonScalarRoot {
                shape: self.nodes[root.0].shape.clone(),
            });
        }
        // Leaf gradients accumulate across calls; intermediate results are
        // rezeroed so each call contributes d(root)/d(leaf) exactly once.
        for node in &mut self.nodes[..=root.0] {
            if !node.requires_grad {
                continue;
            }
            if node.grad.is_empty() {
                node.grad = vec![F::zero(); node.values.len()];
            } else if node.node.is_some() {
                node.grad.fill(F::zero());
            }
        }
        if !self.nodes[root.0].requires_grad {
            // Root depends on no trainable leaf; nothing to propagate.
            return Ok(());
        }
        self.nodes[root.0].grad[0] += F::one();

        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad || self.nodes[i].node.is_none() {
                continue;
            }
            let g = std::mem::take(&mut self.nodes[i].grad);
            let op = self.nodes[i].node.clone().expect("checked above");
            self.propagate(i, &op, &g);
            self.nodes[i].grad = g;
        }
        Ok(())
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn acc(&mut self, v: Var, delta: &[F]) {
        let dst = &mut self.nodes[v.0].grad;
        debug_assert_eq!(dst.len(), delta.len());
        for (d, &s) in dst.iter_mut().zip(delta.iter()) {
            *d += s;
        }
    }

    fn propagate(&mut self, out: usize, op: &Op, g: &[F]) {
        match *op {
            Op::Add(a, b) => {
                if self.wants(a) {
                    self.acc(a, g);
                }
                if self.wants(b) {
                    self.acc(b, g);
                }
            }
            Op::Sub(a, b) => {
                if self.wants(a) {
                    self.acc(a, g);
                }
                if self.wants(b) {
                    let neg: Vec<F> = g.iter().map(|&x| -x).collect();
                    self.acc(b, &neg);
                }
            }
            Op::Mul(a, b) => {
                if self.wants(a) {
                    let d = zip_map(g, &self.nodes[b.0].values, |x, y| x * y);
                    self.acc(a, &d);
                }
                if self.wants(b) {
                    let d = zip_map(g, &self.nodes[a.0].values, |x, y| x * y);
                    self.acc(b, &d);
                }
            }
            Op::Scale(a, factor) => {
                if self.wants(a) {
                    let c = F::from_f64(factor);
                    let d: Vec<F> = g.iter().map(|&x| x * c).collect();
                    self.acc(a, &d);
                }
            }
            Op::MatMul(a, b) => {
                let (m, k) = self.nodes[a.0].dims2();
                let n = self.nodes[b.0].dims2().1;
                if self.wants(a) {
                    // da += g @ b^T
                    let mut d = vec![F::zero(); m * k];
                    matmul_nt(g, &self.nodes[b.0].values, m, n, k, &mut d);
                    self.acc(a, &d);
                }
                if self.wants(b) {
                    // db += a^T @ g
                    let mut d = vec![F::zero(); k * n];
                    matmul_tn(&self.nodes[a.0].values, g, m, k, n, &mut d);
                    self.acc(b, &d);
                }
            }
            Op::Transpose(a) => {
                if self.wants(a) {
                    let (m, n) = self.nodes[a.0].dims2();
                    let mut d = vec![F::zero(); m * n];
                    for i in 0..m {
                        for j in 0..n {
                            d[i * n + j] = g[j * m + i];
                        }
                    }
                    self.acc(a, &d);
                }
            }
            Op::AddBias(a, bias) => {
                if self.wants(a) {
                    self.acc(a, g);
                }
                if self.wants(bias) {
                    let (m, n) = self.nodes[a.0].dims2();
                    let mut d = vec![F::zero(); n];
                    for i in 0..m {
                        for j in 0..n {
                            d[j] += g[i * n + j];
                        }
                    }
                    self.acc(bias, &d);
                }
            }
            Op::GatherRows(table, ref ids) => {
                if self.wants(table) {
                    let h = self.nodes[table.0].dims2().1;
                    let dst = &mut self.nodes[table.0].grad;
                    for (i, &id) in ids.iter().enumerate() {
                        for j in 0..h {
                            dst[id * h + j] += g[i * h + j];
                        }
                    }
                }
            }
            Op::Cols { input, start, len } => {
                if self.wants(input) {
                    let (m, n) = self.nodes[input.0].dims2();
                    let dst = &mut self.nodes[input.0].grad;
                    for i in 0..m {
                        for j in 0..len {
                            dst[i * n + start + j] += g[i * len + j];
                        }
                    }
                }
            }
            Op::ConcatCols(ref parts) => {
                let m = self.nodes[parts[0].0].dims2().0;
                let total: usize = parts.iter().map(|p| self.nodes[p.0].dims2().1).sum();
                let mut offset = 0;
                for &p in parts {
                    let pn = self.nodes[p.0].dims2().1;
                    if self.wants(p) {
                        let mut d = vec![F::zero(); m * pn];
                        for i in 0..m {
                            for j in 0..pn {
                                d[i * pn + j] = g[i * total + offset + j];
                            }
                        }
                        self.acc(p, &d);
                    }
                    offset += pn;
                }
            }
            Op::LayerNorm { input, gamma, beta, eps } => {
                let (m, n) = self.nodes[input.0].dims2();
                let inv_n = F::from_f64(1.0 / n as f64);
                let x = self.nodes[input.0].values.clone();
                let gam = self.nodes[gamma.0].values.clone();
                let mut dx = vec![F::zero(); m * n];
                let mut dgamma = vec![F::zero(); n];
                let mut dbeta = vec![F::zero(); n];
                for i in 0..m {
                    let row = &x[i * n..i * n + n];
                    let (mean, inv_std) = row_moments(row, eps);
                    let gr = &g[i * n..i * n + n];
                    let mut sum_gy = F::zero();
                    let mut sum_gy_xhat = F::zero();
                    for j in 0..n {
                        let xhat = (row[j] - mean) * inv_std;
                        let gy = gr[j] * gam[j];
                        sum_gy += gy;
                        sum_gy_xhat += gy * xhat;
                        dgamma[j] += gr[j] * xhat;
                        dbeta[j] += gr[j];
                    }
                    let mean_gy = sum_gy * inv_n;
                    let mean_gy_xhat = sum_gy_xhat * inv_n;
                    for j in 0..n {
                        let xhat = (row[j] - mean) * inv_std;
                        dx[i * n + j] = inv_std * (gr[j] * gam[j] - mean_gy - xhat * mean_gy_xhat);
                    }
                }
                if self.wants(input) {
                    self.acc(input, &dx);
                }
                if self.wants(gamma) {
                    self.acc(gamma, &dgamma);
                }
                if self.wants(beta) {
                    self.acc(beta, &dbeta);
                }
            }
            Op::Gelu(a) => {
                if self.wants(a) {
                    let c = F::from_f64(GELU_C);
                    let k = F::from_f64(GELU_A);
                    let half = F::from_f64(0.5);
                    let three_k = F::from_f64(3.0 * GELU_A);
                    let one = F::one();
                    let d = zip_map(g, &self.nodes[a.0].values, |gy, x| {
                        let inner = c * (x + k * x * x * x);
                        let t = inner.tanh();
                        let sech2 = one - t * t;
                        let d_inner = c * (one + three_k * x * x);
                        gy * (half * (one + t) + half * x * sech2 * d_inner)
                    });
                    self.acc(a, &d);
                }
            }
            Op::Relu(a) => {
                if self.wants(a) {
                    let d = zip_map(g, &self.nodes[a.0].values, |gy, x| {
                        if x > F::zero() {
                            gy
                        } else {
                            F::zero()
                        }
                    });
                    self.acc(a, &d);
                }
            }
            Op::SoftmaxRows(a) => {
                if self.wants(a) {
                    let (m, n) = self.nodes[a.0].dims2();
                    let y = self.nodes[out].values.clone();
                    let mut d = vec![F::zero(); m * n];
                    for i in 0..m {
                        let yr = &y[i * n..i * n + n];
                        let gr = &g[i * n..i * n + n];
                        let mut dot = F::zero();
                        for j in 0..n {
                            dot += gr[j] * yr[j];
                        }
                        for j in 0..n {
                            d[i * n + j] = yr[j] * (gr[j] - dot);
                        }
                    }
                    self.acc(a, &d);
                }
            }
            Op::SumAll(a) => {
                if self.wants(a) {
                    let d = vec![g[0]; self.nodes[a.0].numel()];
                    self.acc(a, &d);
                }
            }
            Op::NllRows { probs, ref targets, ref weights, denom } => {
                if self.wants(probs) {
                    let (m, n) = self.nodes[probs.0].dims2();
                    let p = &self.nodes[probs.0].values;
                    let mut d = vec![F::zero(); m * n];
                    let g0 = g[0].to_f64();
                    for i in 0..m {
                        if weights[i] == 0.0 {
                            continue;
                        }
                        let t = targets[i];
                        let pi = p[i * n + t].to_f64().max(PROB_FLOOR);
                        d[i * n + t] = F::from_f64(-g0 * weights[i] / (denom * pi));
                    }
                    self.acc(probs, &d);
                }
            }
            Op::KlRows { p, q, ref row_weights, denom } => {
                let (m, n) = self.nodes[p.0].dims2();
                let g0 = g[0].to_f64();
                if self.wants(q) {
                    let pv = &self.nodes[p.0].values;
                    let qv = &self.nodes[q.0].values;
                    let mut d = vec![F::zero(); m * n];
                    for i in 0..m {
                        if row_weights[i] == 0.0 {
                            continue;
                        }
                        let w = g0 * row_weights[i] / denom;
                        for j in 0..n {
                            let pij = pv[i * n + j].to_f64();
                            let qij = qv[i * n + j].to_f64();
                            if pij > 0.0 && qij > PROB_FLOOR {
                                d[i * n + j] = F::from_f64(-w * pij / qij);
                            }
                        }
                    }
                    self.acc(q, &d);
                }
                if self.wants(p) {
                    let pv = &self.nodes[p.0].values;
                    let qv = &self.nodes[q.0].values;
                    let mut d = vec![F::zero(); m * n];
                    for i in 0..m {
                        if row_weights[i] == 0.0 {
                            continue;
                        }
                        let w = g0 * row_weights[i] / denom;
                        for j in 0..n {
                            let pij = pv[i * n + j].to_f64();
                            if pij > 0.0 {
                                let qij = qv[i * n + j].to_f64().max(PROB_FLOOR);
                                d[i * n + j] = F::from_f64(w * ((pij / qij).ln() + 1.0));
                            }
                        }
                    }
                    self.acc(p, &d);
                }
            }
            Op::SegmentMaxRows { input, ref segments } => {
                if self.wants(input) {
                    let (m, n) = self.nodes[input.0].dims2();
                    let x = self.nodes[input.0].values.clone();
                    let mut d = vec![F::zero(); m * n];
                    for (i, &(b, e)) in segments.iter().enumerate() {
                        for j in 0..n {
                            // first row attaining the max wins ties
                            let mut arg = b;
                            let mut best = x[b * n + j];
                            for r in b + 1..e {
                                if x[r * n + j] > best {
                                    best = x[r * n + j];
                                    arg = r;
                                }
                            }
                            d[arg * n + j] += g[i * n + j];
                        }
                    }
                    self.acc(input, &d);
                }
            }
        }
    }
}

#[inline]
fn zip_map<F: Real>(a: &[F], b: &[F], f: impl Fn(F, F) -> F) -> Vec<F> {
    a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect()
}

#[inline]
fn row_moments<F: Real>(row: &[F], eps: f64) -> (F, F) {
    let n = F::from_f64(row.len() as f64);
    let mut mean = F::zero();
    for &v in row {
        mean += v;
    }
    mean = mean / n;
    let mut var = F::zero();
    for &v in row {
        let d = v - mean;
        var += d * d;
    }
    var = var / n;
    let inv_std = (var + F::from_f64(eps)).sqrt().recip();
    (mean, inv_std)
}

pub(crate) fn softmax_row<F: Real>(x: &[F], out: &mut [F]) {
    let mut max = x[0];
    for &v in &x[1..] {
        if v > max {
            max = v;
        }
    }
    let mut sum = F::zero();
    for (o, &v) in out.iter_mut().zip(x.iter()) {
        *o = (v - max).exp();
        sum += *o;
    }
    let inv = sum.recip();
    for o in out.iter_mut() {
        *o = *o * inv;
    }
}

pub(crate) fn kl_row<F: Real>(p: &[F], q: &[F]) -> f64 {
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        let pi = pi.to_f64();
        if pi > 0.0 {
            let qi = qi.to_f64().max(PROB_FLOOR);
            s += pi * (pi.ln() - qi.ln());
        }
    }
    s
}
