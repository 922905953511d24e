//! Log-spline density estimate and its CDF.
//!
//! The log-density on a slightly padded data range is a natural cubic spline
//! (linear beyond the boundary knots). Candidate knots sit at sample quantiles;
//! coefficients maximise a lightly ridge-penalised likelihood by Newton's
//! method, and knots are dropped greedily while AIC improves. The CDF is
//! integrated panel by panel with Gauss-Legendre quadrature; inside a panel the
//! log-density is interpolated linearly so evaluation is monotone by
//! construction.

use super::{phi, quantile_sorted, StatsError};
use crate::scalar::{cmp, Scalar};

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];
const PANELS_PER_SEGMENT: usize = 32;
const MAX_NEWTON: usize = 200;
const RIDGE: f64 = 1e-6;
const MIN_SAMPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMethod {
    Logspline,
    /// Gaussian-kernel smoothed empirical CDF, used when the spline fit fails.
    KernelFallback,
}

/// Smooth, monotone CDF estimate.
#[derive(Debug, Clone)]
pub struct SmoothCdf<T> {
    method: CdfMethod,
    origin: T,
    width: T,
    knots: Vec<T>,
    theta: Vec<T>,
    log_norm: T,
    edges: Vec<T>,
    edge_log_density: Vec<T>,
    cum: Vec<T>,
    aic: T,
    sample: Vec<T>,
    bandwidth: T,
}

struct Fit<T> {
    theta: Vec<T>,
    log_norm: T,
    loglik: T,
}

struct Quadrature<T> {
    edges: Vec<T>,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Quadrature<T> {
    fn new(knots: &[T]) -> Self {
        let mut bounds = vec![T::zero()];
        for &k in knots {
            if k > *bounds.last().unwrap() && k < T::one() {
                bounds.push(k);
            }
        }
        bounds.push(T::one());
        let mut edges = vec![T::zero()];
        for w in bounds.windows(2) {
            let h = (w[1] - w[0]) / T::of_usize(PANELS_PER_SEGMENT);
            for k in 1..=PANELS_PER_SEGMENT {
                edges.push(if k == PANELS_PER_SEGMENT { w[1] } else { w[0] + h * T::of_usize(k) });
            }
        }
        let mut nodes = Vec::with_capacity((edges.len() - 1) * 5);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            let half = (w[1] - w[0]) * T::half();
            let mid = (w[1] + w[0]) * T::half();
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                nodes.push(mid + half * T::of(*x));
                weights.push(half * T::of(wt));
            }
        }
        Self { edges, nodes, weights }
    }
}

/// Natural cubic spline basis without the constant: `u`, then the truncated
/// power differences `d_k - d_{K-1}`.
fn basis<T: Scalar>(u: T, knots: &[T], out: &mut Vec<T>) {
    out.clear();
    out.push(u);
    let k = knots.len();
    if k < 3 {
        return;
    }
    let last = knots[k - 1];
    let cube = |v: T| if v > T::zero() { v * v * v } else { T::zero() };
    let d = |j: usize| (cube(u - knots[j]) - cube(u - last)) / (last - knots[j]);
    let dk1 = d(k - 2);
    for j in 0..(k - 2) {
        out.push(d(j) - dk1);
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| cmp(&a[i][col].abs(), &a[j][col].abs()))?;
        if !(a[piv][col].abs() > T::zero()) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let s: T = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn fit_coefficients<T: Scalar>(u: &[T], knots: &[T], quad: &Quadrature<T>) -> Option<Fit<T>> {
    let n = T::of_usize(u.len());
    let mut buf = Vec::new();
    let p = {
        basis(T::half(), knots, &mut buf);
        buf.len()
    };
    let mut suff = vec![T::zero(); p];
    for &x in u {
        basis(x, knots, &mut buf);
        for (s, b) in suff.iter_mut().zip(&buf) {
            *s += *b;
        }
    }
    let qb: Vec<Vec<T>> = quad
        .nodes
        .iter()
        .map(|&x| {
            basis(x, knots, &mut buf);
            buf.clone()
        })
        .collect();
    let ridge = T::of(RIDGE) * n;

    // Returns (penalised loglik, log normaliser, mean, covariance).
    let moments = |theta: &[T]| -> Option<(T, T, Vec<T>, Vec<Vec<T>>)> {
        let eta: Vec<T> = qb.iter().map(|b| dot(theta, b)).collect();
        let top = eta.iter().copied().fold(T::neg_infinity(), T::max);
        let mut z = T::zero();
        let mut m = vec![T::zero(); p];
        let mut c = vec![vec![T::zero(); p]; p];
        for ((e, b), w) in eta.iter().zip(&qb).zip(&quad.weights) {
            let f = *w * (*e - top).exp();
            z += f;
            for a in 0..p {
                m[a] += f * b[a];
                for bb in 0..=a {
                    c[a][bb] += f * b[a] * b[bb];
                }
            }
        }
        if !(z > T::zero()) || !z.is_finite() {
            return None;
        }
        for a in 0..p {
            m[a] /= z;
        }
        for a in 0..p {
            for bb in 0..=a {
                let v = c[a][bb] / z - m[a] * m[bb];
                c[a][bb] = v;
                c[bb][a] = v;
            }
        }
        let log_norm = top + z.ln();
        let ll = dot(theta, &suff) - n * log_norm - ridge * T::half() * dot(theta, theta);
        ll.is_finite().then_some((ll, log_norm, m, c))
    };

    let mut theta = vec![T::zero(); p];
    let (mut ll, mut log_norm, mut m, mut c) = moments(&theta)?;
    for _ in 0..MAX_NEWTON {
        let grad: Vec<T> = (0..p).map(|a| suff[a] - n * m[a] - ridge * theta[a]).collect();
        let hess: Vec<Vec<T>> = (0..p)
            .map(|a| (0..p).map(|b| n * c[a][b] + if a == b { ridge } else { T::zero() }).collect())
            .collect();
        let step = solve(hess, grad.clone())?;
        let decrement = dot(&grad, &step);
        if decrement <= T::of(1e-11) * n.max(T::one()) {
            break;
        }
        let mut s = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<T> = theta.iter().zip(&step).map(|(t, d)| *t + s * *d).collect();
            if let Some((ll2, ln2, m2, c2)) = moments(&trial) {
                if ll2 >= ll - T::of(1e-12) * ll.abs() {
                    theta = trial;
                    ll = ll2;
                    log_norm = ln2;
                    m = m2;
                    c = c2;
                    accepted = true;
                    break;
                }
            }
            s *= T::half();
        }
        if !accepted {
            break;
        }
    }
    let loglik = dot(&theta, &suff) - n * log_norm;
    (theta.iter().all(|t| t.is_finite()) && loglik.is_finite()).then_some(Fit {
        theta,
        log_norm,
        loglik,
    })
}

impl<T: Scalar> SmoothCdf<T> {
    /// Fits on a sample of at least ten finite values with up to `max_knots`
    /// candidate knots, deleting knots greedily by AIC.
    pub fn fit(x: &[T], max_knots: usize) -> Result<Self, StatsError> {
        if x.len() < MIN_SAMPLE {
            return Err(StatsError::TooFewObservations {
                needed: MIN_SAMPLE,
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
        let mut sorted = x.to_vec();
        sorted.sort_by(cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let range = hi - lo;
        if !(range > T::zero()) {
            return Ok(Self::kernel(sorted));
        }
        let pad = range / T::of_usize(x.len());
        let origin = lo - pad;
        let width = range + pad + pad;
        let u: Vec<T> = x.iter().map(|v| (*v - origin) / width).collect();
        let su: Vec<T> = sorted.iter().map(|v| (*v - origin) / width).collect();

        let k = max_knots.max(2);
        let mut knots: Vec<T> = Vec::with_capacity(k);
        for j in 0..k {
            let prob = T::of(0.05) + T::of(0.9) * T::of_usize(j) / T::of_usize(k - 1);
            let q = quantile_sorted(&su, prob);
            if knots.last().is_none_or(|last| q - *last > T::of(1e-9)) {
                knots.push(q);
            }
        }

        let aic = |fit: &Fit<T>, knots: &[T]| -> T {
            let p = if knots.len() < 3 { 1 } else { knots.len() - 1 };
            -T::two() * (fit.loglik - T::of_usize(x.len()) * width.ln()) + T::two() * T::of_usize(p)
        };
        let attempt = |knots: &[T]| fit_coefficients(&u, knots, &Quadrature::new(knots));

        let Some(mut best) = attempt(&knots) else {
            return Ok(Self::kernel(sorted));
        };
        let mut best_aic = aic(&best, &knots);
        while knots.len() > 2 {
            let mut round: Option<(usize, Fit<T>, T)> = None;
            for drop in 0..knots.len() {
                let trial: Vec<T> = knots
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, v)| *v)
                    .collect();
                if let Some(f) = attempt(&trial) {
                    let a = aic(&f, &trial);
                    if round.as_ref().is_none_or(|r| a < r.2) {
                        round = Some((drop, f, a));
                    }
                }
            }
            match round {
                Some((drop, f, a)) if a < best_aic => {
                    knots.remove(drop);
                    best = f;
                    best_aic = a;
                }
                _ => break,
            }
        }

        let quad = Quadrature::new(&knots);
        let mut buf = Vec::new();
        let mut log_density = |v: T| {
            basis(v, &knots, &mut buf);
            dot(&best.theta, &buf) - best.log_norm
        };
        let edge_log_density: Vec<T> = quad.edges.iter().map(|&e| log_density(e)).collect();
        let mut cum = Vec::with_capacity(quad.edges.len());
        cum.push(T::zero());
        let mut acc = T::zero();
        for j in 0..quad.edges.len() - 1 {
            let mut panel = T::zero();
            for q in 0..5 {
                let idx = j * 5 + q;
                panel += quad.weights[idx] * log_density(quad.nodes[idx]).exp();
            }
            acc += panel;
            cum.push(acc);
        }
        if !acc.is_finite() || !(acc > T::zero()) {
            return Ok(Self::kernel(sorted));
        }
        // Absorb quadrature rounding so the table ends at exactly one.
        for c in cum.iter_mut() {
            *c /= acc;
        }

        Ok(Self {
            method: CdfMethod::Logspline,
            origin,
            width,
            knots: knots.iter().map(|k| origin + *k * width).collect(),
            theta: best.theta,
            log_norm: best.log_norm,
            edges: quad.edges,
            edge_log_density,
            cum,
            aic: best_aic,
            sample: Vec::new(),
            bandwidth: T::zero(),
        })
    }

    fn kernel(sorted: Vec<T>) -> Self {
        let n = T::of_usize(sorted.len());
        let m = sorted.iter().copied().sum::<T>() / n;
        let sd = (sorted.iter().map(|v| (*v - m).pow2()).sum::<T>() / n).sqrt();
        let iqr = quantile_sorted(&sorted, T::of(0.75)) - quantile_sorted(&sorted, T::of(0.25));
        let spread = if iqr > T::zero() { sd.min(iqr / T::of(1.34)) } else { sd };
        let mut h = T::of(0.9) * spread * n.powf(T::of(-0.2));
        if !(h > T::zero()) {
            h = m.abs().max(T::one()) * T::of(1e-6);
        }
        Self {
            method: CdfMethod::KernelFallback,
            origin: sorted[0],
            width: sorted[sorted.len() - 1] - sorted[0],
            knots: Vec::new(),
            theta: Vec::new(),
            log_norm: T::zero(),
            edges: Vec::new(),
            edge_log_density: Vec::new(),
            cum: Vec::new(),
            aic: T::nan(),
            sample: sorted,
            bandwidth: h,
        }
    }

    pub fn method(&self) -> CdfMethod {
        self.method
    }

    pub fn is_fallback(&self) -> bool {
        self.method == CdfMethod::KernelFallback
    }

    /// Knot locations in data units (empty for the kernel fallback).
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn aic(&self) -> T {
        self.aic
    }

    /// Estimated density at `x` in data units (log-spline fits only).
    pub fn density(&self, x: T) -> T {
        if self.is_fallback() {
            return T::nan();
        }
        let u = (x - self.origin) / self.width;
        if u < T::zero() || u > T::one() {
            return T::zero();
        }
        let inner: Vec<T> = self.knots.iter().map(|k| (*k - self.origin) / self.width).collect();
        let mut buf = Vec::new();
        basis(u, &inner, &mut buf);
        (dot(&self.theta, &buf) - self.log_norm).exp() / self.width
    }

    pub fn cdf(&self, x: T) -> T {
        if self.is_fallback() {
            let h = self.bandwidth;
            let s: T = self.sample.iter().map(|xi| phi((x - *xi) / h)).sum();
            return (s / T::of_usize(self.sample.len())).min(T::one()).max(T::zero());
        }
        let u = (x - self.origin) / self.width;
        if !(u > T::zero()) {
            return T::zero();
        }
        if u >= T::one() {
            return T::one();
        }
        let j = self.edges.partition_point(|e| *e <= u) - 1;
        let (e0, e1) = (self.edges[j], self.edges[j + 1]);
        let h = e1 - e0;
        let slope = (self.edge_log_density[j + 1] - self.edge_log_density[j]) / h;
        let t = u - e0;
        let frac = if (slope * h).abs() > T::of(1e-12) {
            (slope * t).exp_m1() / (slope * h).exp_m1()
        } else {
            t / h
        };
        let panel = self.cum[j + 1] - self.cum[j];
        (self.cum[j] + panel * frac.max(T::zero()).min(T::one())).min(T::one())
    }
}
