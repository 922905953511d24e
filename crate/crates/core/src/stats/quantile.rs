use crate::scalar::{cmp, Scalar};

/// Linear-interpolation quantile of an ascending slice
/// (`h = (n - 1) p`, interpolate between order statistics).
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: T) -> T {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let n = sorted.len();
    let h = T::of_usize(n - 1) * p.max(T::zero()).min(T::one());
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - T::of_usize(lo);
    if frac == T::zero() {
        return sorted[lo];
    }
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantile<T: Scalar>(x: &[T], p: T) -> T {
    let mut v = x.to_vec();
    v.sort_by(cmp);
    quantile_sorted(&v, p)
}

pub fn median<T: Scalar>(x: &[T]) -> T {
    quantile(x, T::half())
}
