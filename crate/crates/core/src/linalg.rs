//! Small dense linear algebra: a row-major square matrix and a cyclic
//! Jacobi eigensolver for symmetric matrices.
//!
//! The matrices handled here are tiny (a handful of variables or a few dozen
//! categories), so Jacobi's quadratic sweeps are cheap and give eigenvectors
//! that are orthogonal to working precision.

use crate::scalar::{cmp, Scalar};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    fn off_diagonal_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).pow2();
                }
            }
        }
        s.sqrt()
    }
}

/// Eigen-decomposition of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<T>>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal mass is below machine
/// precision relative to the matrix norm.
pub fn symmetric_eigen<T: Scalar>(matrix: &SquareMatrix<T>) -> SymmetricEigen<T> {
    let n = matrix.dim();
    let mut a = matrix.clone();
    let mut v = SquareMatrix::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() });

    let scale = {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s += a.get(i, j).pow2();
            }
        }
        s.sqrt()
    };
    let tol = T::epsilon() * scale.max(T::min_positive_value());

    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_norm() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (T::two() * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp(&a.get(j, j), &a.get(i, i)).then(i.cmp(&j)));
    SymmetricEigen {
        values: order.iter().map(|&k| a.get(k, k)).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|i| v.get(i, k)).collect())
            .collect(),
    }
}
