//! Flat-slice matrix kernels. All accumulate into `out` so backward passes
//! can reuse them for gradient accumulation.

use super::real::Real;

/// Dot product with eight independent accumulators so the loop vectorizes
/// under strict IEEE semantics. The summation order is fixed, which keeps
/// results reproducible run to run.
#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    const LANES: usize = 16;
    let mut acc = [F::zero(); LANES];
    let chunks = a.len() / LANES;
    for c in 0..chunks {
        let ab = &a[c * LANES..c * LANES + LANES];
        let bb = &b[c * LANES..c * LANES + LANES];
        for l in 0..LANES {
            acc[l] = acc[l] + ab[l] * bb[l];
        }
    }
    let mut s = F::zero();
    let mut stride = LANES / 2;
    while stride > 0 {
        for l in 0..stride {
            acc[l] = acc[l] + acc[l + stride];
        }
        stride /= 2;
    }
    s = s + acc[0];
    for i in chunks * LANES..a.len() {
        s = s + a[i] * b[i];
    }
    s
}

/// out[m,n] += a[m,k] @ b[k,n]
pub fn matmul_nn<F: Real>(a: &[F], b: &[F], m: usize, k: usize, n: usize, out: &mut [F]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..i * k + k];
        let orow = &mut out[i * n..i * n + n];
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b[p * n..p * n + n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o = *o + av * bv;
            }
        }
    }
}

/// out[m,n] += a[m,k] @ b[n,k]^T
pub fn matmul_nt<F: Real>(a: &[F], b: &[F], m: usize, k: usize, n: usize, out: &mut [F]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..i * k + k];
        let orow = &mut out[i * n..i * n + n];
        for (j, o) in orow.iter_mut().enumerate() {
            *o = *o + dot(arow, &b[j * k..j * k + k]);
        }
    }
}

/// out[k,n] += a[m,k]^T @ b[m,n]
pub fn matmul_tn<F: Real>(a: &[F], b: &[F], m: usize, k: usize, n: usize, out: &mut [F]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    for i in 0..m {
        let arow = &a[i * k..i * k + k];
        let brow = &b[i * n..i * n + n];
        for (p, &av) in arow.iter().enumerate() {
            let orow = &mut out[p * n..p * n + n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o = *o + av * bv;
            }
        }
    }
}
