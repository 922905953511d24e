use super::{IndexError, CDF_KNOTS};
use crate::scalar::Scalar;
use crate::stats::SmoothCdf;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityScale<T> {
    /// Per block; `None` for blocks without positive finite area.
    pub d: Vec<Option<T>>,
    /// Inhabitants per km², same convention.
    pub density: Vec<Option<T>>,
}

/// Smooth CDF of population density, evaluated per block.
pub fn density_scale<T: Scalar>(population: &[T], area_km2: &[T]) -> Result<DensityScale<T>, IndexError> {
    if population.len() != area_km2.len() {
        return Err(IndexError::LengthMismatch(population.len(), area_km2.len()));
    }
    let density: Vec<Option<T>> = population
        .iter()
        .zip(area_km2)
        .map(|(h, a)| (*a > T::zero() && a.is_finite() && h.is_finite()).then(|| *h / *a))
        .collect();
    let valid: Vec<T> = density.iter().flatten().copied().collect();
    if valid.iter().all(|v| *v == valid[0]) {
        // A point mass: every block sits at the top of its distribution.
        return Ok(DensityScale { d: density.iter().map(|v| v.map(|_| T::one())).collect(), density });
    }
    let cdf = SmoothCdf::fit(&valid, CDF_KNOTS)?;
    let d = density.iter().map(|v| v.map(|x| cdf.cdf(x))).collect();
    Ok(DensityScale { d, density })
}

/// `HV^alpha * d^beta * AI`, divided by its mean over the `included`
/// blocks. Every block gets a value; only the included ones set the scale.
pub fn chppi<T: Scalar>(hv: &[T], d: &[T], ai: &[T], included: &[bool], alpha: T, beta: T) -> Result<Vec<T>, IndexError> {
    let n = ai.len();
    for len in [hv.len(), d.len(), included.len()] {
        if len != n {
            return Err(IndexError::LengthMismatch(n, len));
        }
    }
    if !(alpha >= T::zero() && beta >= T::zero() && alpha.is_finite() && beta.is_finite()) {
        return Err(IndexError::InvalidParameter(format!("exponents must be finite and non-negative, got {alpha}, {beta}")));
    }
    let raw: Vec<T> = (0..n).map(|i| hv[i].powf(alpha) * d[i].powf(beta) * ai[i]).collect();
    let (sum, count) = raw
        .iter()
        .zip(included)
        .filter(|(_, inc)| **inc)
        .fold((T::zero(), 0usize), |(s, c), (v, _)| (s + *v, c + 1));
    if count == 0 || !(sum > T::zero()) {
        return Err(IndexError::AllZeroAffinity);
    }
    let mean = sum / T::of_usize(count);
    Ok(raw.into_iter().map(|v| v / mean).collect())
}
