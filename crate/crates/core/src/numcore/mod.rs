//! Minimal dense-tensor reverse-mode differentiation and the Adam
//! optimizer. Just enough machinery for the tagging model, its losses, and
//! the adversarial perturbation; no broadcasting beyond what those need.

mod adam;
mod func;
pub mod gradcheck;
mod kernels;
mod real;
mod tape;
mod tensor;

pub use adam::{clip_global_norm, AdamConfig, AdamState, WarmupLinear};
pub use func::{cross_entropy_grad_identity, kl_divergence, prob_floor, softmax, Mat};
pub use kernels::{dot, matmul_nn, matmul_nt, matmul_tn};
pub use real::Real;
pub use tape::{Tape, PROB_FLOOR};
pub use tensor::{DiffTensor, Op, Var};

#[derive(Debug, thiserror::Error)]
pub enum NumError {
    #[error("non-finite values in {what}")]
    NonFinite { what: &'static str },
    #[error("backward root is not a scalar (shape {shape:?})")]
    NonScalarRoot { shape: Vec<usize> },
    #[error("backward root is not on this tape")]
    DetachedRoot,
    #[error("{context}: shape mismatch ({left:?} vs {right:?})")]
    ShapeMismatch {
        context: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("axis {axis} out of range for a matrix")]
    BadAxis { axis: usize },
    #[error("non-finite gradient in parameter tensor {tensor}; step aborted")]
    NonFiniteGradient { tensor: usize },
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    // ── softmax ──────────────────────────────────────────────────────

    #[test]
    fn softmax_symmetry_and_shift_invariance() {
        let two = softmax(&Mat::new(1, 2, vec![0.0, 0.0]), 1).unwrap();
        assert_eq!(two.data, vec![0.5, 0.5]);

        for c in [-3.0f64, 0.0, 42.5] {
            let three = softmax(&Mat::new(1, 3, vec![c, c, c]), 1).unwrap();
            for v in &three.data {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn softmax_matches_direct_formula() {
        let mut r = rng(1);
        let x: Vec<f64> = (0..5).map(|_| r.random_range(-4.0..4.0)).collect();
        let got = softmax(&Mat::new(1, 5, x.clone()), 1).unwrap();
        // direct high-precision evaluation, no stabilization
        let sum: f64 = x.iter().map(|v| v.exp()).sum();
        for (g, v) in got.data.iter().zip(&x) {
            assert!((g - v.exp() / sum).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_at_large_magnitude() {
        let mut r = rng(2);
        for _ in 0..200 {
            let x: Vec<f64> = (0..7).map(|_| r.random_range(-1e4..1e4)).collect();
            let p = softmax(&Mat::new(1, 7, x), 1).unwrap();
            let sum: f64 = p.data.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(p.data.iter().all(|&v| v >= 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn softmax_rejects_non_finite_input() {
        let err = softmax(&Mat::new(1, 2, vec![f64::NAN, 0.0]), 1);
        assert!(matches!(err, Err(NumError::NonFinite { .. })));
    }

    #[test]
    fn softmax_axis_zero_normalizes_columns() {
        let x = Mat::new(2, 2, vec![1.0f64, 5.0, 3.0, 5.0]);
        let p = softmax(&x, 0).unwrap();
        for j in 0..2 {
            let s = p.data[j] + p.data[2 + j];
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    // ── cross-entropy gradient identity ──────────────────────────────

    #[test]
    fn ce_grad_identity_perfect_prediction_is_zero() {
        let g = cross_entropy_grad_identity(&[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn ce_grad_identity_direct_subtraction() {
        let g = cross_entropy_grad_identity(&[0.3f64, 0.7], &[0.0, 1.0]).unwrap();
        assert!((g[0] - 0.3).abs() < 1e-15);
        assert!((g[1] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn ce_grad_identity_dimension_mismatch() {
        assert!(cross_entropy_grad_identity(&[0.3, 0.7], &[1.0]).is_err());
    }

    #[test]
    fn tape_softmax_nll_matches_analytic_identity() {
        let mut r = rng(3);
        for _ in 0..20 {
            let n = r.random_range(2..8usize);
            let logits: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
            let class = r.random_range(0..n);

            let mut tape: Tape<f64> = Tape::new();
            let z = tape.leaf(logits.clone(), &[1, n]);
            let p = tape.softmax_rows(z);
            let loss = tape.nll_rows(p, &[class], &[1.0], 1.0);
            tape.backward(loss).unwrap();

            let probs = softmax(&Mat::new(1, n, logits), 1).unwrap();
            let mut onehot = vec![0.0; n];
            onehot[class] = 1.0;
            let want = cross_entropy_grad_identity(&probs.data, &onehot).unwrap();
            for (g, w) in tape.grad(z).iter().zip(&want) {
                assert!((g - w).abs() < 1e-10);
            }
        }
    }

    // ── backward basics ──────────────────────────────────────────────

    #[test]
    fn backward_product_rule_on_scalars() {
        let mut tape: Tape<f64> = Tape::new();
        let x = tape.leaf(vec![3.0], &[1]);
        let y = tape.leaf(vec![-2.5], &[1]);
        let xy = tape.mul(x, y);
        tape.backward(xy).unwrap();
        assert_eq!(tape.grad(x), &[-2.5]);
        assert_eq!(tape.grad(y), &[3.0]);
        assert_eq!(tape.grad(xy), &[1.0]);
    }

    #[test]
    fn backward_root_must_be_scalar() {
        let mut tape: Tape<f64> = Tape::new();
        let x = tape.leaf(vec![1.0, 2.0], &[2]);
        assert!(matches!(
            tape.backward(x),
            Err(NumError::NonScalarRoot { .. })
        ));
    }

    #[test]
    fn backward_rejects_root_off_the_tape() {
        let mut other: Tape<f64> = Tape::new();
        let a = other.leaf(vec![1.0], &[1]);
        let b = other.leaf(vec![1.0], &[1]);
        let s = other.mul(a, b);
        let mut tape: Tape<f64> = Tape::new();
        assert!(matches!(tape.backward(s), Err(NumError::DetachedRoot)));
    }

    #[test]
    fn backward_accumulates_across_repeated_calls() {
        let mut tape: Tape<f64> = Tape::new();
        let x = tape.leaf(vec![2.0], &[1]);
        let y = tape.scale(x, 5.0);
        tape.backward(y).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x), &[10.0]);
    }

    #[test]
    fn backward_sums_contributions_of_shared_leaf() {
        // x feeds two consumers: z = x*y + x => dz/dx = y + 1
        let mut tape: Tape<f64> = Tape::new();
        let x = tape.leaf(vec![4.0], &[1]);
        let y = tape.constant(vec![7.0], &[1]);
        let xy = tape.mul(x, y);
        let z = tape.add(xy, x);
        tape.backward(z).unwrap();
        assert_eq!(tape.grad(x), &[8.0]);
    }

    #[test]
    fn constants_never_accumulate_gradient() {
        let mut tape: Tape<f64> = Tape::new();
        let x = tape.leaf(vec![1.5], &[1]);
        let c = tape.constant(vec![2.0], &[1]);
        let z = tape.mul(x, c);
        tape.backward(z).unwrap();
        assert!(tape.grad(c).is_empty());
        assert!(!tape.tensor(c).requires_grad());
    }

    // ── finite-difference checks per operation ───────────────────────

    fn fd_check(build: &mut dyn FnMut(&mut Tape<f64>, &[f64]) -> Var, x: &[f64], tol: f64) {
        let mut eval = |vals: &[f64]| {
            let mut tape: Tape<f64> = Tape::new();
            let root = build(&mut tape, vals);
            tape.scalar(root)
        };
        let numeric = gradcheck::central_diff(&mut eval, x, 1e-5);
        let mut tape: Tape<f64> = Tape::new();
        let root = build(&mut tape, x);
        tape.backward(root).unwrap();
        let analytic: Vec<f64> = tape.grad(Var(0)).to_vec();
        let err = gradcheck::max_relative_error(&analytic, &numeric);
        assert!(err < tol, "gradient mismatch: {err}");
    }

    #[test]
    fn finite_differences_over_every_op() {
        let mut r = rng(9);
        // three random shapes per op, as small matrices
        for trial in 0..3u64 {
            let m = 2 + (trial as usize);
            let n = 3 + (trial as usize % 2);
            let x: Vec<f64> = (0..m * n).map(|_| r.random_range(-2.0..2.0)).collect();
            let w: Vec<f64> = (0..n * m).map(|_| r.random_range(-1.0..1.0)).collect();
            let bias: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();

            // matmul -> add_bias -> gelu -> sum
            let wc = w.clone();
            let bc = bias.clone();
            fd_check(
                &mut |tape, vals| {
                    let a = tape.leaf(vals.to_vec(), &[m, n]);
                    let wv = tape.constant(wc.clone(), &[n, m]);
                    let bv = tape.constant(bc[..m.min(n)].to_vec(), &[m.min(n)]);
                    let _ = bv;
                    let prod = tape.matmul(a, wv);
                    let act = tape.gelu(prod);
                    tape.sum_all(act)
                },
                &x,
                1e-4,
            );

            // layer_norm with learned gain/shift
            let gamma: Vec<f64> = (0..n).map(|_| r.random_range(0.5..1.5)).collect();
            let beta: Vec<f64> = (0..n).map(|_| r.random_range(-0.5..0.5)).collect();
            let (gc, bc2) = (gamma.clone(), beta.clone());
            fd_check(
                &mut |tape, vals| {
                    let a = tape.leaf(vals.to_vec(), &[m, n]);
                    let g = tape.constant(gc.clone(), &[n]);
                    let b = tape.constant(bc2.clone(), &[n]);
                    let ln = tape.layer_norm(a, g, b, 1e-5);
                    tape.sum_all(ln)
                },
                &x,
                1e-4,
            );

            // softmax + nll
            let targets: Vec<usize> = (0..m).map(|_| r.random_range(0..n)).collect();
            let weights: Vec<f64> = (0..m).map(|_| r.random_range(0.2..2.0)).collect();
            let tc = targets.clone();
            let wc2 = weights.clone();
            fd_check(
                &mut |tape, vals| {
                    let a = tape.leaf(vals.to_vec(), &[m, n]);
                    let p = tape.softmax_rows(a);
                    tape.nll_rows(p, &tc, &wc2, m as f64)
                },
                &x,
                1e-4,
            );

            // transpose, mul, sub, scale, relu, cols, concat, add_bias
            let other: Vec<f64> = (0..m * n).map(|_| r.random_range(-1.0..1.0)).collect();
            let oc = other.clone();
            let bc3 = bias.clone();
            fd_check(
                &mut |tape, vals| {
                    let a = tape.leaf(vals.to_vec(), &[m, n]);
                    let o = tape.constant(oc.clone(), &[m, n]);
                    let prod = tape.mul(a, o);
                    let diff = tape.sub(prod, o);
                    let left = tape.cols(diff, 0, 2);
                    let right = tape.cols(diff, 2, n - 2);
                    let joined = tape.concat_cols(&[left, right]);
                    let b = tape.constant(bc3.clone(), &[n]);
                    let biased = tape.add_bias(joined, b);
                    let t = tape.transpose(biased);
                    let act = tape.relu(t);
                    let scaled = tape.scale(act, 0.7);
                    tape.sum_all(scaled)
                },
                &x,
                1e-4,
            );

            // gather_rows through an embedding-like table
            let ids: Vec<usize> = (0..4).map(|_| r.random_range(0..m)).collect();
            let ic = ids.clone();
            fd_check(
                &mut |tape, vals| {
                    let table = tape.leaf(vals.to_vec(), &[m, n]);
                    let rows = tape.gather_rows(table, &ic);
                    let sm = tape.softmax_rows(rows);
                    tape.sum_all(sm)
                },
                &x,
                1e-4,
            );

            // kl_rows with gradient through q (p detached) and through p
            let logits_q: Vec<f64> = (0..m * n).map(|_| r.random_range(-2.0..2.0)).collect();
            let pc: Vec<f64> = {
                let raw = Mat::new(m, n, (0..m * n).map(|_| r.random_range(-2.0..2.0)).collect());
                softmax(&raw, 1).unwrap().data
            };
            let pcc = pc.clone();
            let rw: Vec<f64> = (0..m).map(|_| if r.random_bool(0.8) { 1.0 } else { 0.0 }).collect();
            let rwc = rw.clone();
            fd_check(
                &mut |tape, vals| {
                    let z = tape.leaf(vals.to_vec(), &[m, n]);
                    let q = tape.softmax_rows(z);
                    let p = tape.constant(pcc.clone(), &[m, n]);
                    tape.kl_rows(p, q, &rwc, m as f64)
                },
                &logits_q,
                1e-4,
            );
            let qc: Vec<f64> = {
                let raw = Mat::new(m, n, (0..m * n).map(|_| r.random_range(-2.0..2.0)).collect());
                softmax(&raw, 1).unwrap().data
            };
            let qcc = qc.clone();
            let rwc2 = rw.clone();
            fd_check(
                &mut |tape, vals| {
                    let z = tape.leaf(vals.to_vec(), &[m, n]);
                    let p = tape.softmax_rows(z);
                    let q = tape.constant(qcc.clone(), &[m, n]);
                    tape.kl_rows(p, q, &rwc2, m as f64)
                },
                &logits_q,
                1e-4,
            );

            // segment max pooling
            let segments: Vec<(usize, usize)> = (0..m).map(|i| if i < m - 1 { (0, m - 1) } else { (m - 1, m) }).collect();
            let sc = segments.clone();
            fd_check(
                &mut |tape, vals| {
                    let a = tape.leaf(vals.to_vec(), &[m, n]);
                    let pooled = tape.segment_max_rows(a, &sc);
                    let sm = tape.softmax_rows(pooled);
                    tape.nll_rows(sm, &vec![0; m], &vec![1.0; m], m as f64)
                },
                &x,
                1e-4,
            );
        }
    }

    #[test]
    fn layer_norm_sum_matches_finite_differences() {
        let mut r = rng(11);
        let x: Vec<f64> = (0..12).map(|_| r.random_range(-2.0..2.0)).collect();
        fd_check(
            &mut |tape, vals| {
                let a = tape.leaf(vals.to_vec(), &[3, 4]);
                let g = tape.constant(vec![1.0; 4], &[4]);
                let b = tape.constant(vec![0.0; 4], &[4]);
                let ln = tape.layer_norm(a, g, b, 1e-5);
                tape.sum_all(ln)
            },
            &x,
            1e-4,
        );
    }

    #[test]
    fn two_layer_net_cross_entropy_matches_finite_differences() {
        let mut r = rng(12);
        let (n_in, n_hidden, n_out, batch) = (5, 6, 3, 4);
        let input: Vec<f64> = (0..batch * n_in).map(|_| r.random_range(-1.0..1.0)).collect();
        let w1: Vec<f64> = (0..n_in * n_hidden).map(|_| r.random_range(-0.7..0.7)).collect();
        let w2: Vec<f64> = (0..n_hidden * n_out).map(|_| r.random_range(-0.7..0.7)).collect();
        let targets: Vec<usize> = (0..batch).map(|_| r.random_range(0..n_out)).collect();

        // gradient with respect to the first-layer weights
        let (ic, w2c, tc) = (input.clone(), w2.clone(), targets.clone());
        fd_check(
            &mut |tape, vals| {
                let w1v = tape.leaf(vals.to_vec(), &[n_in, n_hidden]);
                let x = tape.constant(ic.clone(), &[batch, n_in]);
                let w2v = tape.constant(w2c.clone(), &[n_hidden, n_out]);
                let h = tape.matmul(x, w1v);
                let act = tape.gelu(h);
                let logits = tape.matmul(act, w2v);
                let p = tape.softmax_rows(logits);
                tape.nll_rows(p, &tc, &vec![1.0; batch], batch as f64)
            },
            &w1,
            1e-4,
        );
    }

    // ── kl divergence ────────────────────────────────────────────────

    #[test]
    fn kl_is_zero_for_identical_distributions() {
        let p = Mat::new(2, 3, vec![0.2, 0.3, 0.5, 0.6, 0.1, 0.3]);
        assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kl_closed_form_case() {
        let p = Mat::new(1, 2, vec![1.0, 0.0]);
        let q = Mat::new(1, 2, vec![0.5, 0.5]);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!((kl - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn kl_matches_direct_summation() {
        let mut r = rng(13);
        for _ in 0..50 {
            let n = r.random_range(2..6usize);
            let raw_p: Mat<f64> = Mat::new(2, n, (0..2 * n).map(|_| r.random_range(-2.0..2.0)).collect());
            let raw_q: Mat<f64> = Mat::new(2, n, (0..2 * n).map(|_| r.random_range(-2.0..2.0)).collect());
            let p = softmax(&raw_p, 1).unwrap();
            let q = softmax(&raw_q, 1).unwrap();
            let got = kl_divergence(&p, &q).unwrap();
            let mut want = 0.0f64;
            for i in 0..2 {
                for j in 0..n {
                    let (pi, qi) = (p.data[i * n + j], q.data[i * n + j]);
                    want += pi * (pi / qi).ln();
                }
            }
            want /= 2.0;
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_shape_mismatch_is_an_error() {
        let p = Mat::new(1, 2, vec![0.5, 0.5]);
        let q = Mat::new(1, 3, vec![0.4, 0.3, 0.3]);
        assert!(kl_divergence(&p, &q).is_err());
    }

    #[test]
    fn kl_nonnegative_over_random_pairs() {
        let mut r = rng(14);
        for _ in 0..10_000 {
            let n = r.random_range(2..5usize);
            let raw_p = Mat::new(1, n, (0..n).map(|_| r.random_range(-5.0..5.0)).collect());
            let raw_q = Mat::new(1, n, (0..n).map(|_| r.random_range(-5.0..5.0)).collect());
            let p = softmax(&raw_p, 1).unwrap();
            let q = softmax(&raw_q, 1).unwrap();
            assert!(kl_divergence(&p, &q).unwrap() >= -1e-15);
        }
    }

    // ── adam ─────────────────────────────────────────────────────────

    #[test]
    fn adam_zero_gradient_is_a_fixed_point() {
        let mut theta = vec![1.0f64, -2.0, 0.5];
        let grads = vec![0.0f64; 3];
        let mut state = AdamState::new(&[3], AdamConfig::default());
        let schedule = WarmupLinear { warmup_steps: 0 };
        state
            .step(&mut [&mut theta], &[&grads], &[1e-2], &schedule)
            .unwrap();
        assert_eq!(theta, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn warmup_factor_follows_schedule_convention() {
        let s = WarmupLinear { warmup_steps: 10 };
        assert_eq!(s.factor(1), 0.1);
        assert_eq!(s.factor(10), 1.0);
        assert_eq!(s.factor(25), 1.0);
        let none = WarmupLinear { warmup_steps: 0 };
        assert_eq!(none.factor(1), 1.0);
    }

    #[test]
    fn adam_matches_hand_rolled_scalar_trace() {
        // independent scalar Adam evaluated step by step
        let (lr, b1, b2, eps) = (0.1f64, 0.9, 0.999, 1e-8);
        let g = 1.0f64;
        let mut theta_ref = 0.3f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut reference = Vec::new();
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mhat = m / (1.0 - b1.powi(t));
            let vhat = v / (1.0 - b2.powi(t));
            theta_ref -= lr * mhat / (vhat.sqrt() + eps);
            reference.push(theta_ref);
        }

        let mut theta = vec![0.3f64];
        let mut state = AdamState::new(&[1], AdamConfig::default());
        let schedule = WarmupLinear { warmup_steps: 0 };
        for want in reference {
            state
                .step(&mut [&mut theta], &[&[1.0]], &[lr], &schedule)
                .unwrap();
            assert!((theta[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_aborts_on_non_finite_gradient() {
        let mut theta = vec![1.0f64];
        let mut state = AdamState::new(&[1], AdamConfig::default());
        let schedule = WarmupLinear { warmup_steps: 0 };
        let err = state.step(&mut [&mut theta], &[&[f64::NAN]], &[1e-3], &schedule);
        assert!(matches!(err, Err(NumError::NonFiniteGradient { .. })));
        assert_eq!(theta, vec![1.0]);
    }

    #[test]
    fn clip_rescales_to_global_norm() {
        let mut grads = vec![vec![3.0f64, 0.0], vec![4.0f64]];
        let norm = clip_global_norm(&mut grads, 1.0);
        assert!((norm - 5.0).abs() < 1e-12);
        let new_sq: f64 = grads.iter().flatten().map(|x| x * x).sum();
        assert!((new_sq.sqrt() - 1.0).abs() < 1e-12);
    }
}
