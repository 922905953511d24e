use libm::erfc;

use super::StatsError;
use crate::scalar::Scalar;

/// Standard normal CDF.
pub fn phi<T: Scalar>(z: T) -> T {
    T::of(0.5 * erfc(-z.f64() / std::f64::consts::SQRT_2))
}

// Acklam's rational approximation coefficients.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549671180849017e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn acklam(p: f64) -> f64 {
    const LOW: f64 = 0.02425;
    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// Standard normal quantile: rational approximation refined by Halley steps
/// against the complementary error function.
pub fn phi_inverse<T: Scalar>(p: T) -> Result<T, StatsError> {
    let pf = p.f64();
    if !(pf > 0.0 && pf < 1.0) {
        return Err(StatsError::DomainError(pf));
    }
    // 1 - pf is exact for pf >= 0.5; refine on the lower tail only.
    if pf > 0.5 {
        return phi_inverse(T::of(1.0 - pf)).map(|z| -z);
    }
    let mut x = acklam(pf);
    for _ in 0..2 {
        let e = 0.5 * erfc(-x / std::f64::consts::SQRT_2) - pf;
        let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
        x -= u / (1.0 + x * u / 2.0);
    }
    Ok(T::of(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_maps_to_zero() {
        assert_eq!(phi_inverse(0.5f64).unwrap(), 0.0);
    }

    #[test]
    fn known_quantile() {
        // 97.5% point from a 50-digit evaluation of the normal quantile.
        let z = phi_inverse(0.975f64).unwrap();
        assert!((z - 1.959_963_984_540_054).abs() < 1e-12, "{z:.17}");
    }

    #[test]
    fn antisymmetric_and_round_trips() {
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let z = phi_inverse(p).unwrap();
            assert!((z + phi_inverse(1.0 - p).unwrap()).abs() < 1e-12);
            assert!((phi(z) - p).abs() <= 1e-9, "p={p}");
        }
        for p in [1e-10f64, 1e-6, 3e-3, 0.999_999] {
            assert!((phi(phi_inverse(p).unwrap()) - p).abs() <= 1e-9 * p.max(1e-3));
        }
    }

    #[test]
    fn rejects_closed_endpoints() {
        assert!(phi_inverse(0.0f64).is_err());
        assert!(phi_inverse(1.0f64).is_err());
        assert!(phi_inverse(f64::NAN).is_err());
    }
}
