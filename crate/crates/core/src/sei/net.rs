use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SeiError, ThermometerMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderConfig {
    /// Width of the two intermediate layers; `None` picks `max(8, ceil(D / 2))`.
    pub hidden: Option<usize>,
    /// Drop probability on the intermediate layers during training.
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Batches per epoch; `None` uses `ceil(N / batch_size)`.
    pub batches_per_epoch: Option<usize>,
    pub learning_rate: f64,
    /// Multiplicative learning-rate factor applied after every epoch.
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            hidden: None,
            dropout: 0.5,
            epochs: 60,
            batch_size: 32,
            batches_per_epoch: None,
            learning_rate: 5e-3,
            lr_decay: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense<T> {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs x inputs`.
    w: Vec<T>,
    b: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn glorot(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = (0..inputs * outputs).map(|_| T::of(rng.gen_range(-limit..limit))).collect();
        Dense { inputs, outputs, w, b: vec![T::zero(); outputs] }
    }

    fn forward(&self, x: &[T], out: &mut [T]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            *slot = self.b[o] + row.iter().zip(x).map(|(w, v)| *w * *v).sum::<T>();
        }
    }

    /// Accumulates parameter gradients for upstream `delta` at input `x` and
    /// writes the gradient with respect to `x` into `dx` when given.
    fn backward(&self, x: &[T], delta: &[T], grad: &mut Dense<T>, dx: Option<&mut [T]>) {
        for (o, &d) in delta.iter().enumerate() {
            grad.b[o] += d;
            let row = &mut grad.w[o * self.inputs..(o + 1) * self.inputs];
            for (g, v) in row.iter_mut().zip(x) {
                *g += d * *v;
            }
        }
        if let Some(dx) = dx {
            for (i, slot) in dx.iter_mut().enumerate() {
                *slot = delta.iter().enumerate().map(|(o, d)| *d * self.w[o * self.inputs + i]).sum();
            }
        }
    }

    fn zeroed(&self) -> Self {
        Dense { inputs: self.inputs, outputs: self.outputs, w: vec![T::zero(); self.w.len()], b: vec![T::zero(); self.b.len()] }
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.w.iter_mut().chain(self.b.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &T> {
        self.w.iter().chain(self.b.iter())
    }
}

/// `D -> h -> 1 -> h -> D` autoencoder: tanh hidden and bottleneck units,
/// logistic outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder<T> {
    layers: [Dense<T>; 4],
}

struct Trace<T> {
    h1: Vec<T>,
    h1d: Vec<T>,
    code: T,
    h3: Vec<T>,
    h3d: Vec<T>,
    y: Vec<T>,
}

fn logistic<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Autoencoder<T> {
    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn hidden_width(&self) -> usize {
        self.layers[0].outputs
    }

    /// Bottleneck activation.
    pub fn encode(&self, x: &[T]) -> T {
        let mut h1 = vec![T::zero(); self.hidden_width()];
        self.layers[0].forward(x, &mut h1);
        h1.iter_mut().for_each(|v| *v = v.tanh());
        let mut z = [T::zero()];
        self.layers[1].forward(&h1, &mut z);
        z[0].tanh()
    }

    /// Output probabilities for a bottleneck value.
    pub fn decode(&self, code: T) -> Vec<T> {
        let mut h3 = vec![T::zero(); self.hidden_width()];
        self.layers[2].forward(&[code], &mut h3);
        h3.iter_mut().for_each(|v| *v = v.tanh());
        let mut y = vec![T::zero(); self.input_width()];
        self.layers[3].forward(&h3, &mut y);
        y.iter_mut().for_each(|v| *v = logistic(*v));
        y
    }

    pub fn reconstruct(&self, x: &[T]) -> Vec<T> {
        self.decode(self.encode(x))
    }

    /// Forward pass with inverted-dropout masks (`None` disables dropout).
    fn trace(&self, x: &[T], masks: Option<(&[T], &[T])>) -> Trace<T> {
        let h = self.hidden_width();
        let mut h1 = vec![T::zero(); h];
        self.layers[0].forward(x, &mut h1);
        h1.iter_mut().for_each(|v| *v = v.tanh());
        let h1d: Vec<T> = match masks {
            Some((m, _)) => h1.iter().zip(m).map(|(a, b)| *a * *b).collect(),
            None => h1.clone(),
        };
        let mut z = [T::zero()];
        self.layers[1].forward(&h1d, &mut z);
        let code = z[0].tanh();
        let mut h3 = vec![T::zero(); h];
        self.layers[2].forward(&[code], &mut h3);
        h3.iter_mut().for_each(|v| *v = v.tanh());
        let h3d: Vec<T> = match masks {
            Some((_, m)) => h3.iter().zip(m).map(|(a, b)| *a * *b).collect(),
            None => h3.clone(),
        };
        let mut y = vec![T::zero(); self.input_width()];
        self.layers[3].forward(&h3d, &mut y);
        y.iter_mut().for_each(|v| *v = logistic(*v));
        Trace { h1, h1d, code, h3, h3d, y }
    }

    pub fn parameters(&self) -> Vec<T> {
        self.layers.iter().flat_map(|l| l.params().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Mean training cross-entropy per epoch, with dropout active.
    pub epoch_loss: Vec<f64>,
    /// Cross-entropy over the whole matrix with dropout off, per epoch.
    pub eval_loss: Vec<f64>,
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
    lr: T,
}

impl<T: Scalar> Adam<T> {
    fn step(&mut self, layers: &mut [Dense<T>; 4], grads: &[Dense<T>; 4]) {
        self.t += 1;
        let (b1, b2, eps) = (T::of(0.9), T::of(0.999), T::of(1e-8));
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let mut i = 0;
        for (layer, grad) in layers.iter_mut().zip(grads) {
            for (p, &g) in layer.params_mut().zip(grad.params()) {
                self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
                self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
                *p -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + eps);
                i += 1;
            }
        }
    }
}

fn bce<T: Scalar>(x: &[T], y: &[T]) -> T {
    let lo = T::of(1e-7);
    let hi = T::one() - lo;
    x.iter()
        .zip(y)
        .map(|(x, y)| {
            let y = y.max(lo).min(hi);
            -(*x * y.ln() + (T::one() - *x) * (T::one() - y).ln())
        })
        .sum::<T>()
        / T::of_usize(x.len())
}

/// Trains with Adam on binary cross-entropy. Each batch is drawn with
/// replacement from the rows; all randomness comes from `config.seed`.
pub fn train_autoencoder<T: Scalar>(
    x: &ThermometerMatrix<T>,
    config: &AutoencoderConfig,
) -> Result<(Autoencoder<T>, TrainingReport), SeiError> {
    let (n, d) = (x.rows(), x.cols());
    if d < 2 {
        return Err(SeiError::InvalidConfig(format!("need at least 2 encoded columns, got {d}")));
    }
    if config.batch_size == 0 || n < config.batch_size {
        return Err(SeiError::InvalidConfig(format!("batch size {} with {n} rows", config.batch_size)));
    }
    if !(0.0..1.0).contains(&config.dropout) {
        return Err(SeiError::InvalidConfig(format!("dropout {} outside [0, 1)", config.dropout)));
    }
    if !(config.learning_rate > 0.0) {
        return Err(SeiError::InvalidConfig("learning rate must be positive".into()));
    }
    if !(config.lr_decay > 0.0 && config.lr_decay <= 1.0) {
        return Err(SeiError::InvalidConfig(format!("learning-rate decay {} outside (0, 1]", config.lr_decay)));
    }
    let h = config.hidden.unwrap_or_else(|| 8.max(d.div_ceil(2)));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Autoencoder {
        layers: [Dense::glorot(d, h, &mut rng), Dense::glorot(h, 1, &mut rng), Dense::glorot(1, h, &mut rng), Dense::glorot(h, d, &mut rng)],
    };
    // Start the output biases at the column log-odds.
    for c in 0..d {
        let p = (0..n).map(|r| x.row(r)[c].f64()).sum::<f64>() / n as f64;
        let p = p.clamp(1e-3, 1.0 - 1e-3);
        model.layers[3].b[c] = T::of((p / (1.0 - p)).ln());
    }
    let count = model.parameters().len();
    let mut adam = Adam { m: vec![T::zero(); count], v: vec![T::zero(); count], t: 0, lr: T::of(config.learning_rate) };
    let keep = 1.0 - config.dropout;
    let scale = T::of(1.0 / keep);
    let batches = config.batches_per_epoch.unwrap_or_else(|| n.div_ceil(config.batch_size)).max(1);
    let inv = T::one() / T::of_usize(config.batch_size * d);
    let mut report = TrainingReport { epoch_loss: Vec::with_capacity(config.epochs), eval_loss: Vec::new() };

    let mut grads: [Dense<T>; 4] = [
        model.layers[0].zeroed(),
        model.layers[1].zeroed(),
        model.layers[2].zeroed(),
        model.layers[3].zeroed(),
    ];
    let mut m1 = vec![T::one(); h];
    let mut m3 = vec![T::one(); h];
    let mut d4 = vec![T::zero(); d];
    let mut dh3 = vec![T::zero(); h];
    let mut dcode = [T::zero()];
    let mut dh1 = vec![T::zero(); h];

    for epoch in 0..config.epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..batches {
            for g in grads.iter_mut() {
                g.params_mut().for_each(|p| *p = T::zero());
            }
            let mut batch_loss = T::zero();
            for _ in 0..config.batch_size {
                let row = x.row(rng.gen_range(0..n));
                for m in m1.iter_mut().chain(m3.iter_mut()) {
                    *m = if rng.gen::<f64>() < keep { scale } else { T::zero() };
                }
                let t = model.trace(row, Some((&m1, &m3)));
                batch_loss += bce(row, &t.y);
                for c in 0..d {
                    d4[c] = (t.y[c] - row[c]) * inv;
                }
                model.layers[3].backward(&t.h3d, &d4, &mut grads[3], Some(&mut dh3));
                for k in 0..h {
                    dh3[k] = dh3[k] * m3[k] * (T::one() - t.h3[k] * t.h3[k]);
                }
                model.layers[2].backward(&[t.code], &dh3, &mut grads[2], Some(&mut dcode));
                let dz2 = [dcode[0] * (T::one() - t.code * t.code)];
                model.layers[1].backward(&t.h1d, &dz2, &mut grads[1], Some(&mut dh1));
                for k in 0..h {
                    dh1[k] = dh1[k] * m1[k] * (T::one() - t.h1[k] * t.h1[k]);
                }
                model.layers[0].backward(row, &dh1, &mut grads[0], None);
            }
            let bl = (batch_loss / T::of_usize(config.batch_size)).f64();
            if !bl.is_finite() {
                return Err(SeiError::NonFiniteLoss { epoch, last: report.epoch_loss.last().copied().unwrap_or(f64::NAN) });
            }
            epoch_loss += bl;
            adam.step(&mut model.layers, &grads);
        }
        report.epoch_loss.push(epoch_loss / batches as f64);
        let eval = (0..n).map(|r| bce(x.row(r), &model.reconstruct(x.row(r))).f64()).sum::<f64>() / n as f64;
        if !eval.is_finite() {
            return Err(SeiError::NonFiniteLoss { epoch, last: report.eval_loss.last().copied().unwrap_or(f64::NAN) });
        }
        report.eval_loss.push(eval);
        adam.lr = adam.lr * T::of(config.lr_decay);
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_difference_matches_backprop() -> bool {
        // One sample, dropout off: compare the analytic gradient of the
        // first-layer weights with central differences of the loss.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = 4;
        let h = 3;
        let model = Autoencoder {
            layers: [Dense::glorot(d, h, &mut rng), Dense::glorot(h, 1, &mut rng), Dense::glorot(1, h, &mut rng), Dense::glorot(h, d, &mut rng)],
        };
        let x = [1.0f64, 0.0, 1.0, 1.0];
        let ones = vec![1.0; h];
        let t = model.trace(&x, Some((&ones, &ones)));
        let inv = 1.0 / d as f64;
        let d4: Vec<f64> = (0..d).map(|c| (t.y[c] - x[c]) * inv).collect();
        let mut grads = [model.layers[0].zeroed(), model.layers[1].zeroed(), model.layers[2].zeroed(), model.layers[3].zeroed()];
        let mut dh3 = vec![0.0; h];
        model.layers[3].backward(&t.h3d, &d4, &mut grads[3], Some(&mut dh3));
        for k in 0..h {
            dh3[k] *= 1.0 - t.h3[k] * t.h3[k];
        }
        let mut dcode = [0.0];
        model.layers[2].backward(&[t.code], &dh3, &mut grads[2], Some(&mut dcode));
        let dz2 = [dcode[0] * (1.0 - t.code * t.code)];
        let mut dh1 = vec![0.0; h];
        model.layers[1].backward(&t.h1d, &dz2, &mut grads[1], Some(&mut dh1));
        for k in 0..h {
            dh1[k] *= 1.0 - t.h1[k] * t.h1[k];
        }
        model.layers[0].backward(&x, &dh1, &mut grads[0], None);
        let eps = 1e-6;
        for layer in 0..4 {
            for i in 0..model.layers[layer].w.len() {
                let mut plus = model.clone();
                plus.layers[layer].w[i] += eps;
                let mut minus = model.clone();
                minus.layers[layer].w[i] -= eps;
                let num = (bce(&x, &plus.reconstruct(&x)) - bce(&x, &minus.reconstruct(&x))) / (2.0 * eps);
                if (num - grads[layer].w[i]).abs() > 1e-7 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn gradients_match_finite_differences() {
        assert!(finite_difference_matches_backprop());
    }

    #[test]
    fn config_validation() {
        let x = ThermometerMatrix::<f64>::from_rows(vec![vec![0.0, 1.0]; 4]).unwrap();
        let bad = AutoencoderConfig { batch_size: 10, ..AutoencoderConfig::default() };
        assert!(matches!(train_autoencoder(&x, &bad), Err(SeiError::InvalidConfig(_))));
        let narrow = ThermometerMatrix::<f64>::from_rows(vec![vec![1.0]; 40]).unwrap();
        assert!(train_autoencoder(&narrow, &AutoencoderConfig::default()).is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| (0..6).map(|c| if (i + c) % 3 == 0 { 1.0 } else { 0.0 }).collect()).collect();
        let x = ThermometerMatrix::from_rows(rows).unwrap();
        let cfg = AutoencoderConfig { epochs: 3, seed: 9, ..AutoencoderConfig::default() };
        let (a, ra) = train_autoencoder(&x, &cfg).unwrap();
        let (b, rb) = train_autoencoder(&x, &cfg).unwrap();
        assert_eq!(a.parameters(), b.parameters());
        assert_eq!(ra, rb);
        let (c, _) = train_autoencoder(&x, &AutoencoderConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.parameters(), c.parameters());
    }
}
