use std::collections::BTreeMap;

use super::{Autoencoder, OrdinalSchema, SeiError, ThermometerMatrix};
use crate::scalar::Scalar;
use crate::stats::{pearson, quantile_sorted};

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdScores<T> {
    /// Oriented and min-max scaled to `[0, 1]`, in row order.
    pub scores: Vec<T>,
    /// Raw bottleneck activations, in row order.
    pub codes: Vec<T>,
    /// Whether the code was negated so that higher means better-off.
    pub flipped: bool,
}

/// Bottleneck codes for every row, oriented to correlate positively with
/// the level of `orient_by` and rescaled to `[0, 1]`.
pub fn score_households<T: Scalar>(
    model: &Autoencoder<T>,
    schema: &OrdinalSchema,
    x: &ThermometerMatrix<T>,
    orient_by: usize,
) -> Result<HouseholdScores<T>, SeiError> {
    if model.input_width() != x.cols() || schema.width() != x.cols() {
        return Err(SeiError::DimensionMismatch { expected: model.input_width(), got: x.cols() });
    }
    if orient_by >= schema.len() {
        return Err(SeiError::InvalidSchema(format!("no variable at index {orient_by}")));
    }
    let codes: Vec<T> = (0..x.rows()).map(|r| model.encode(x.row(r))).collect();
    let cols = schema.columns(orient_by);
    let level: Vec<T> = (0..x.rows()).map(|r| x.row(r)[cols.clone()].iter().copied().sum()).collect();
    let flipped = matches!(pearson(&codes, &level), Ok(r) if r < T::zero());
    let oriented: Vec<T> = codes.iter().map(|&c| if flipped { -c } else { c }).collect();
    let lo = oriented.iter().copied().fold(T::infinity(), T::min);
    let hi = oriented.iter().copied().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    let scores = oriented
        .iter()
        .map(|&c| if span > T::zero() { (c - lo) / span } else { T::zero() })
        .collect();
    Ok(HouseholdScores { scores, codes, flipped })
}

/// `(Q1 + 2 median + Q3) / 4` with linearly interpolated quartiles.
pub fn trimean<T: Scalar>(x: &[T]) -> Option<T> {
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(crate::scalar::cmp);
    let q = |p: f64| quantile_sorted(&v, T::of(p));
    Some((q(0.25) + T::two() * q(0.5) + q(0.75)) / T::of(4.0))
}

/// Trimean of household scores grouped by block.
pub fn trimean_blocks<T: Scalar, K: Ord + Clone>(scores: &[T], block_of: &[K]) -> BTreeMap<K, T> {
    let mut groups: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for (s, b) in scores.iter().zip(block_of) {
        groups.entry(b.clone()).or_default().push(*s);
    }
    groups.into_iter().filter_map(|(k, v)| trimean(&v).map(|t| (k, t))).collect()
}
