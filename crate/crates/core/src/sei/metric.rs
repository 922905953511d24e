use super::{Autoencoder, OrdinalSchema, SeiError, ThermometerMatrix};
use crate::scalar::Scalar;

/// Per-cell weight in the reconstruction metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MetricWeighting {
    /// `1 / Σ(K - 1)`: a perfect reconstruction scores 1.
    #[default]
    Normalized,
    /// `1 / ΣK`: caps the metric at `Σ(K - 1) / ΣK`.
    Literal,
}

/// Streaming mean, over rows, of the weighted sum of per-cell likelihoods
/// `x̂` when the cell is 1 and `1 - x̂` when it is 0.
#[derive(Debug, Clone)]
pub struct MetricAccumulator<T> {
    weight: T,
    sum: T,
    rows: usize,
}

impl<T: Scalar> MetricAccumulator<T> {
    pub fn new(schema: &OrdinalSchema, weighting: MetricWeighting) -> Self {
        let denom = match weighting {
            MetricWeighting::Normalized => schema.width(),
            MetricWeighting::Literal => schema.total_levels(),
        };
        MetricAccumulator { weight: T::one() / T::of_usize(denom), sum: T::zero(), rows: 0 }
    }

    pub fn add(&mut self, x: &[T], x_hat: &[T]) {
        let lo = T::of(1e-7);
        let hi = T::one() - lo;
        let row: T = x
            .iter()
            .zip(x_hat)
            .map(|(x, y)| {
                let y = y.max(lo).min(hi);
                (*x * y.ln() + (T::one() - *x) * (T::one() - y).ln()).exp()
            })
            .sum();
        self.sum += row * self.weight;
        self.rows += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.sum += other.sum;
        self.rows += other.rows;
    }

    pub fn value(&self) -> T {
        if self.rows == 0 {
            return T::zero();
        }
        self.sum / T::of_usize(self.rows)
    }
}

/// Reconstruction metric of `model` on `x`, dropout off.
pub fn evaluate_model<T: Scalar>(
    model: &Autoencoder<T>,
    schema: &OrdinalSchema,
    x: &ThermometerMatrix<T>,
    weighting: MetricWeighting,
) -> Result<T, SeiError> {
    if model.input_width() != x.cols() || schema.width() != x.cols() {
        return Err(SeiError::DimensionMismatch { expected: model.input_width(), got: x.cols() });
    }
    let mut acc = MetricAccumulator::new(schema, weighting);
    for r in 0..x.rows() {
        acc.add(x.row(r), &model.reconstruct(x.row(r)));
    }
    Ok(acc.value())
}
