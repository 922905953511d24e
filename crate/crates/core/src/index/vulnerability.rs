use super::{IndexError, CDF_KNOTS};
use crate::scalar::Scalar;
use crate::stats::{spca, spearman_on_rankits, SmoothCdf};

#[derive(Debug, Clone, PartialEq)]
pub struct HealthVulnerability<T> {
    /// Per block, in input order, within `[0, 1]`.
    pub hv: Vec<T>,
    /// Oriented first-component scores before the CDF rescaling.
    pub scores: Vec<T>,
    /// Blocks whose travel time was infinite and replaced by the largest
    /// finite one.
    pub imputed: Vec<bool>,
    /// Variance share of the first component.
    pub explained: T,
    pub flipped: bool,
}

/// Combines travel time `delta` (minutes, possibly infinite) and
/// socio-economic level `eta` into a vulnerability score that grows with
/// travel time and falls with `eta`.
pub fn health_vulnerability<T: Scalar>(delta: &[T], eta: &[T]) -> Result<HealthVulnerability<T>, IndexError> {
    if delta.len() != eta.len() {
        return Err(IndexError::LengthMismatch(delta.len(), eta.len()));
    }
    let max_finite = delta.iter().copied().filter(|d| d.is_finite()).fold(T::neg_infinity(), T::max);
    if !max_finite.is_finite() {
        return Err(IndexError::DegenerateInputs("no finite travel time".into()));
    }
    let imputed: Vec<bool> = delta.iter().map(|d| d.is_infinite() && *d > T::zero()).collect();
    if let Some(i) = delta.iter().zip(&imputed).position(|(d, imp)| !imp && !d.is_finite()) {
        return Err(IndexError::DegenerateInputs(format!("travel time at position {i} is not a number")));
    }
    let d: Vec<T> = delta.iter().zip(&imputed).map(|(v, imp)| if *imp { max_finite } else { *v }).collect();
    for (name, col) in [("travel time", &d[..]), ("socio-economic level", eta)] {
        if col.iter().all(|v| *v == col[0]) {
            return Err(IndexError::DegenerateInputs(format!("{name} is constant")));
        }
    }
    let fit = spca(&[d.clone(), eta.to_vec()])?;
    let mut scores = fit.scores[0].clone();
    let flipped = spearman_on_rankits(&scores, &d)? < T::zero();
    if flipped {
        scores.iter_mut().for_each(|s| *s = -*s);
    }
    let cdf = SmoothCdf::fit(&scores, CDF_KNOTS)?;
    let hv = scores.iter().map(|s| cdf.cdf(*s)).collect();
    Ok(HealthVulnerability { hv, scores, imputed, explained: fit.explained[0], flipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comonotone_pair_is_one_dimensional() {
        let delta: Vec<f64> = (0..40).map(|i| 3.0 + i as f64 * 0.7).collect();
        let eta: Vec<f64> = (0..40).map(|i| 1.0 - (i as f64 / 40.0).powi(3)).collect();
        let out = health_vulnerability(&delta, &eta).unwrap();
        assert!((out.explained - 1.0).abs() < 1e-9);
        assert!(out.hv.windows(2).all(|w| w[1] >= w[0]));
        assert!(out.hv.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn unreachable_blocks_take_the_largest_time() {
        let mut delta: Vec<f64> = (0..30).map(|i| i as f64).collect();
        delta[4] = f64::INFINITY;
        let eta: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64).collect();
        let out = health_vulnerability(&delta, &eta).unwrap();
        assert_eq!(out.imputed.iter().filter(|b| **b).count(), 1);
        assert!(out.imputed[4]);
        assert!(out.hv.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn constant_column_is_rejected() {
        let delta = vec![5.0f64; 20];
        let eta: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(matches!(health_vulnerability(&delta, &eta), Err(IndexError::DegenerateInputs(_))));
        assert!(matches!(health_vulnerability(&eta, &delta[..19]), Err(IndexError::LengthMismatch(20, 19))));
    }
}
