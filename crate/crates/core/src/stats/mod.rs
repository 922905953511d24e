//! Rank statistics: rankits, semiparametric PCA, rank correlation and a
//! smooth log-spline CDF used to rescale scores onto `[0, 1]`.

mod logspline;
mod normal;
mod quantile;
mod rankit;
mod spca;

use thiserror::Error;

pub use logspline::{CdfMethod, SmoothCdf};
pub use normal::{phi, phi_inverse};
pub use quantile::{median, quantile, quantile_sorted};
pub use rankit::{mean_ranks, rankit, RankitVector};
pub use spca::{spca, SpcaResult};

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("probability {0} outside (0, 1)")]
    DomainError(f64),
    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),
    #[error("zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("non-finite input at position {0}")]
    NonFinite(usize),
}

pub fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::of_usize(x.len())
}

/// Pearson correlation.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (*a - mx, *b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one()))
}

/// Spearman correlation computed as the Pearson correlation of the rankits.
pub fn spearman_on_rankits<T: Scalar>(x: &[T], y: &[T]) -> Result<T, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    pearson(&rankit(x).values, &rankit(y).values)
}
