use log::warn;

use super::{phi_inverse, rankit, StatsError};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::scalar::Scalar;

/// Output of [`spca`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpcaResult<T> {
    /// `scores[c][i]`: coordinate of case `i` on component `c`.
    pub scores: Vec<Vec<T>>,
    /// `loadings[c]`: unit eigenvector of component `c` over the kept columns.
    pub loadings: Vec<Vec<T>>,
    /// Eigenvalues of the normal-score covariance, descending.
    pub eigenvalues: Vec<T>,
    /// Singular values of the centered normal-score matrix (`S`, with `Σ = U S² Uᵗ / n`).
    pub singular_values: Vec<T>,
    /// Share of total variance per component; sums to one.
    pub explained: Vec<T>,
    /// Input column positions that entered the analysis.
    pub kept_columns: Vec<usize>,
    /// Constant input columns that were dropped.
    pub dropped_columns: Vec<usize>,
}

/// Semiparametric PCA: each column is replaced by the normal quantiles of its
/// rankits, then the population covariance (`1/n`) is diagonalised.
///
/// Scores are the centered normal scores projected onto the eigenvectors
/// (`Z U`). Each eigenvector is signed so its largest-magnitude loading is
/// positive.
pub fn spca<T: Scalar>(columns: &[Vec<T>]) -> Result<SpcaResult<T>, StatsError> {
    if columns.is_empty() {
        return Err(StatsError::DegenerateMatrix("no variables".into()));
    }
    let n = columns[0].len();
    for c in columns {
        if c.len() != n {
            return Err(StatsError::LengthMismatch(n, c.len()));
        }
        if let Some(i) = c.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
    }
    if n <= columns.len() {
        return Err(StatsError::TooFewObservations {
            needed: columns.len() + 1,
            got: n,
        });
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (j, c) in columns.iter().enumerate() {
        if c.iter().all(|v| *v == c[0]) {
            warn!("spca: dropping constant column {j}");
            dropped.push(j);
        } else {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(StatsError::DegenerateMatrix("all columns are constant".into()));
    }

    let nf = T::of_usize(n);
    let mut z: Vec<Vec<T>> = Vec::with_capacity(kept.len());
    for &j in &kept {
        let mut col = rankit(&columns[j])
            .values
            .into_iter()
            .map(phi_inverse)
            .collect::<Result<Vec<T>, _>>()?;
        let m = col.iter().copied().sum::<T>() / nf;
        col.iter_mut().for_each(|v| *v -= m);
        z.push(col);
    }

    let p = kept.len();
    let cov = SquareMatrix::from_fn(p, |a, b| {
        z[a].iter().zip(&z[b]).map(|(x, y)| *x * *y).sum::<T>() / nf
    });
    let eig = symmetric_eigen(&cov);

    let loadings: Vec<Vec<T>> = eig
        .vectors
        .into_iter()
        .map(|mut v| {
            let mut lead = 0;
            for k in 1..v.len() {
                if v[k].abs() > v[lead].abs() {
                    lead = k;
                }
            }
            if v[lead] < T::zero() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    let eigenvalues: Vec<T> = eig.values.iter().map(|l| l.max(T::zero())).collect();
    let total: T = eigenvalues.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(StatsError::DegenerateMatrix("zero total variance".into()));
    }
    let explained = eigenvalues.iter().map(|l| *l / total).collect();
    let singular_values = eigenvalues.iter().map(|l| (*l * nf).sqrt()).collect();

    let scores = loadings
        .iter()
        .map(|u| {
            (0..n)
                .map(|i| (0..p).map(|k| z[k][i] * u[k]).sum::<T>())
                .collect()
        })
        .collect();

    Ok(SpcaResult {
        scores,
        loadings,
        eigenvalues,
        singular_values,
        explained,
        kept_columns: kept,
        dropped_columns: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_explains_everything() {
        let r = spca(&[vec![3.0, 1.0, 2.0, 8.0]]).unwrap();
        assert_eq!(r.explained, vec![1.0]);
        assert_eq!(r.loadings, vec![vec![1.0]]);
    }

    #[test]
    fn comonotone_columns_collapse_to_one_component() {
        let a: Vec<f64> = (0..50).map(|k| ((k * 13) % 50) as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| (v / 7.0).exp()).collect();
        let r = spca(&[a, b]).unwrap();
        assert!((r.explained[0] - 1.0).abs() < 1e-9);
        assert!((r.explained.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let r = spca(&[vec![1.0; 6], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(r.dropped_columns, vec![0]);
        assert_eq!(r.kept_columns, vec![1]);
        assert!(spca(&[vec![2.0; 5]]).is_err());
    }

    #[test]
    fn needs_more_cases_than_variables() {
        assert!(matches!(
            spca(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(StatsError::TooFewObservations { .. })
        ));
    }
}
