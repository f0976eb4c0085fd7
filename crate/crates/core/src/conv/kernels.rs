//! Inner loops shared by the optimized paths.

use crate::scalar::Scalar;

/// `acc[i] += x[i] * w`, left to right.
#[inline]
pub(crate) fn axpy<T: Scalar>(acc: &mut [T], w: T, x: &[T]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += v * w;
    }
}

/// `acc[i] += x[i * step] * w`.
#[inline]
pub(crate) fn axpy_strided<T: Scalar>(acc: &mut [T], w: T, x: &[T], step: usize) {
    for (i, a) in acc.iter_mut().enumerate() {
        *a += x[i * step] * w;
    }
}

/// `out[i * step] += x[i] * w`.
#[inline]
pub(crate) fn scatter_strided<T: Scalar>(out: &mut [T], w: T, x: &[T], step: usize) {
    for (i, &v) in x.iter().enumerate() {
        out[i * step] += v * w;
    }
}

const LANES: usize = 8;

/// Dot product with eight fixed partial sums, reduced in lane order.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [T::zero(); LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            lanes[l] += xa[l] * xb[l];
        }
    }
    for (l, (&x, &y)) in ca.remainder().iter().zip(cb.remainder()).enumerate() {
        lanes[l] += x * y;
    }
    lanes.iter().fold(T::zero(), |s, &v| s + v)
}

/// `Σ a[i] * b[i * step]`, left to right.
#[inline]
pub(crate) fn dot_strided<T: Scalar>(a: &[T], b: &[T], step: usize) -> T {
    let mut s = T::zero();
    for (i, &v) in a.iter().enumerate() {
        s += v * b[i * step];
    }
    s
}
