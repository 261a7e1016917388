//! Central finite differences for validating reverse-mode gradients. Uses
//! forward evaluations only, so it stays independent of the backward pass
//! it is used to check.

/// d f / d x_i by central differences on a freshly evaluated closure.
/// `f` must rebuild its computation from the given input buffer.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Directional derivative (f(x + h u) - f(x - h u)) / 2h.
pub fn central_diff_directional(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    direction: &[f64],
    h: f64,
) -> f64 {
    assert_eq!(x.len(), direction.len());
    let up: Vec<f64> = x.iter().zip(direction).map(|(&a, &d)| a + h * d).collect();
    let down: Vec<f64> = x.iter().zip(direction).map(|(&a, &d)| a - h * d).collect();
    (f(&up) - f(&down)) / (2.0 * h)
}

/// |a - b| relative to the larger magnitude, with an absolute floor so
/// near-zero pairs compare absolutely.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Largest elementwise relative error between two gradient vectors.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| relative_error(x, y))
        .fold(0.0, f64::max)
}
