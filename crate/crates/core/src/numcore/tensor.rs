//! Tensor storage and the operation records that link results back into the
//! tape.

use super::real::Real;

/// Handle to a tensor living on a [`super::Tape`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Operation record: which inputs produced a tensor and under what rule.
///
/// Auxiliary constants (targets, masks, scale factors) are stored in f64 and
/// converted at use, so the record itself is precision-free.
#[derive(Clone, Debug)]
pub enum Op {
    /// Elementwise sum of two same-shape tensors.
    Add(Var, Var),
    /// Elementwise difference.
    Sub(Var, Var),
    /// Elementwise product.
    Mul(Var, Var),
    /// Multiply by a compile-time constant.
    Scale(Var, f64),
    /// 2-d matrix product.
    MatMul(Var, Var),
    /// 2-d transpose.
    Transpose(Var),
    /// Row-broadcast bias add: (n, c) + (c).
    AddBias(Var, Var),
    /// Row lookup into a (v, h) table; gradient scatters back by row id.
    GatherRows(Var, Vec<usize>),
    /// Column slice [start, start+len) of a 2-d tensor.
    Cols { input: Var, start: usize, len: usize },
    /// Horizontal concatenation of 2-d tensors with equal row counts.
    ConcatCols(Vec<Var>),
    /// Row-wise layer normalization with learned gain and shift.
    LayerNorm { input: Var, gamma: Var, beta: Var, eps: f64 },
    Gelu(Var),
    Relu(Var),
    /// Stabilized softmax along each row of a 2-d tensor.
    SoftmaxRows(Var),
    /// Sum of all elements, producing a scalar.
    SumAll(Var),
    /// Weighted negative log-likelihood over probability rows:
    /// -(1/denom) * sum_i weights[i] * ln(max(probs[i][targets[i]], floor)).
    NllRows {
        probs: Var,
        targets: Vec<usize>,
        weights: Vec<f64>,
        denom: f64,
    },
    /// Row-weighted KL divergence between probability rows:
    /// (1/denom) * sum_i w[i] * sum_c p ln(p / max(q, floor)).
    KlRows {
        p: Var,
        q: Var,
        row_weights: Vec<f64>,
        denom: f64,
    },
    /// Per-token segment max: output row i is the columnwise max over the
    /// input rows of the segment containing token i.
    SegmentMaxRows {
        input: Var,
        segments: Vec<(usize, usize)>,
    },
}

impl Op {
    pub(crate) fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::MatMul(a, b) | Op::AddBias(a, b) => {
                vec![*a, *b]
            }
            Op::Scale(a, _)
            | Op::Transpose(a)
            | Op::GatherRows(a, _)
            | Op::Gelu(a)
            | Op::Relu(a)
            | Op::SoftmaxRows(a)
            | Op::SumAll(a) => vec![*a],
            Op::Cols { input, .. } | Op::SegmentMaxRows { input, .. } => vec![*input],
            Op::ConcatCols(parts) => parts.clone(),
            Op::LayerNorm { input, gamma, beta, .. } => vec![*input, *gamma, *beta],
            Op::NllRows { probs, .. } => vec![*probs],
            Op::KlRows { p, q, .. } => vec![*p, *q],
        }
    }
}

/// Dense tensor participating in the computation graph.
///
/// `node` is `None` for leaves and constants; otherwise it records the
/// producing operation. `grad` stays empty until a backward pass allocates
/// it, and a constant never receives one.
#[derive(Clone, Debug)]
pub struct DiffTensor<F: Real> {
    pub(crate) shape: Vec<usize>,
    pub(crate) values: Vec<F>,
    pub(crate) grad: Vec<F>,
    pub(crate) requires_grad: bool,
    pub(crate) node: Option<Op>,
}

impl<F: Real> DiffTensor<F> {
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// Accumulated gradient; empty if no backward pass has reached this
    /// tensor (always empty for constants).
    pub fn grad(&self) -> &[F] {
        &self.grad
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.node.is_none()
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub(crate) fn dims2(&self) -> (usize, usize) {
        assert_eq!(self.shape.len(), 2, "expected a 2-d tensor, got {:?}", self.shape);
        (self.shape[0], self.shape[1])
    }
}
