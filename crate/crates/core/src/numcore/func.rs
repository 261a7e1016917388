//! Plain (non-recorded) numeric routines shared by the loss modules and the
//! test oracles.

use super::real::Real;
use super::tape::{kl_row, softmax_row, PROB_FLOOR};
use super::NumError;

/// Dense row-major matrix for math outside the computation graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<F: Real> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Real> Mat<F> {
    pub fn new(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols);
            data.extend_from_slice(r);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }
}

/// Numerically stabilized softmax along `axis` (0 = down columns, 1 = along
/// rows). Every slice along the axis sums to 1.
pub fn softmax<F: Real>(x: &Mat<F>, axis: usize) -> Result<Mat<F>, NumError> {
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(NumError::NonFinite { what: "softmax input" });
    }
    let mut out = Mat::zeros(x.rows, x.cols);
    match axis {
        1 => {
            for i in 0..x.rows {
                softmax_row(x.row(i), out.row_mut(i));
            }
        }
        0 => {
            for j in 0..x.cols {
                let col: Vec<F> = (0..x.rows).map(|i| x.data[i * x.cols + j]).collect();
                let mut res = vec![F::zero(); x.rows];
                softmax_row(&col, &mut res);
                for i in 0..x.rows {
                    out.data[i * x.cols + j] = res[i];
                }
            }
        }
        _ => {
            return Err(NumError::BadAxis { axis });
        }
    }
    Ok(out)
}

/// The analytic gradient of softmax cross-entropy with respect to the
/// logits: p - t̂. The tape produces the identical expression when softmax
/// feeds a negative log-likelihood, which is what the histogram reweighting
/// relies on.
pub fn cross_entropy_grad_identity<F: Real>(p: &[F], onehot: &[F]) -> Result<Vec<F>, NumError> {
    if p.len() != onehot.len() {
        return Err(NumError::ShapeMismatch {
            context: "cross_entropy_grad_identity",
            left: vec![p.len()],
            right: vec![onehot.len()],
        });
    }
    Ok(p.iter().zip(onehot.iter()).map(|(&pi, &ti)| pi - ti).collect())
}

/// Mean over rows of sum_c p ln(p / q), with q floored at 1e-12 so the log
/// never sees zero. Nonnegative, and zero iff p equals q row by row.
pub fn kl_divergence<F: Real>(p: &Mat<F>, q: &Mat<F>) -> Result<f64, NumError> {
    if p.rows != q.rows || p.cols != q.cols {
        return Err(NumError::ShapeMismatch {
            context: "kl_divergence",
            left: vec![p.rows, p.cols],
            right: vec![q.rows, q.cols],
        });
    }
    let mut total = 0.0;
    for i in 0..p.rows {
        total += kl_row(p.row(i), q.row(i));
    }
    Ok(total / p.rows as f64)
}

/// Probability floor shared with the graph ops.
pub fn prob_floor() -> f64 {
    PROB_FLOOR
}
