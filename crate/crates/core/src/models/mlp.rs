//! Fully connected ReLU network with dropout and a softmax head, trained by
//! Adam on mini-batch cross-entropy.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_HIDDEN: [usize; 6] = [512, 512, 256, 256, 128, 128];
pub const DEFAULT_DROPOUT: [f64; 6] = [0.2, 0.5, 0.5, 0.5, 0.5, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Disables dropout entirely when false (used by numerical checks).
    pub dropout: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            dropout: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("mlp.epochs and mlp.batch_size must be at least 1".into()));
        }
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
            || !unit(self.beta1)
            || !unit(self.beta2)
            || !(self.epsilon > 0.0 && self.epsilon.is_finite())
        {
            return Err(Error::Config("invalid Adam settings".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Dense<T> {
    /// `fan_in × fan_out`.
    #[serde(with = "crate::matrix_serde")]
    pub weights: Array2<T>,
    #[serde(with = "crate::matrix_serde::vector")]
    pub biases: Array1<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MlpModel<T> {
    /// `[input, hidden…, n_classes]`.
    pub widths: Vec<usize>,
    /// One rate per hidden layer, applied to its activations in training.
    pub dropout: Vec<f64>,
    pub layers: Vec<Dense<T>>,
    pub seed: u64,
}

/// Gradients in the same layout as `MlpModel::layers`.
pub type Gradients<T> = Vec<Dense<T>>;

#[derive(Debug, Clone)]
pub struct MlpTraining<T> {
    pub model: MlpModel<T>,
    /// Mean training loss per epoch.
    pub loss_history: Vec<T>,
}

/// The default six-hidden-layer network.
pub fn mlp_init<T: Real>(input_dim: usize, n_classes: usize, seed: u64) -> Result<MlpModel<T>> {
    let mut widths = vec![input_dim];
    widths.extend_from_slice(&DEFAULT_HIDDEN);
    widths.push(n_classes);
    MlpModel::new(widths, DEFAULT_DROPOUT.to_vec(), seed)
}

impl<T: Real> MlpModel<T> {
    /// He-initialized weights (variance 2/fan_in), zero biases.
    pub fn new(widths: Vec<usize>, dropout: Vec<f64>, seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config("MLP widths must be positive with at least input and output".into()));
        }
        if dropout.len() != widths.len() - 2 || dropout.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(Error::Config("one dropout rate in [0, 1) per hidden layer required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths
            .windows(2)
            .map(|w| {
                let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
                Dense {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || T::lit(normal.sample(&mut rng))),
                    biases: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(MlpModel { widths, dropout, layers, seed })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.widths.last().expect("non-empty widths")
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub(crate) fn check(&self) -> Result<()> {
        let ok = self.widths.len() == self.layers.len() + 1
            && self.dropout.len() + 2 == self.widths.len()
            && self
                .layers
                .iter()
                .zip(self.widths.windows(2))
                .all(|(l, w)| l.weights.dim() == (w[0], w[1]) && l.biases.len() == w[1]);
        if ok {
            Ok(())
        } else {
            Err(Error::ModelFormat("MLP layer shapes do not follow the width chain".into()))
        }
    }

    fn check_input(&self, x: &Array2<T>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        Ok(())
    }

    /// Hidden activations (after ReLU) and output logits, without dropout.
    pub fn activations(&self, x: &Array2<T>) -> Result<(Vec<Array2<T>>, Array2<T>)> {
        self.check_input(x)?;
        let mut hidden = Vec::with_capacity(self.layers.len() - 1);
        let mut a = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights) + &layer.biases;
            if l + 1 == self.layers.len() {
                return Ok((hidden, z));
            }
            a = z.mapv(|v| v.max(T::zero()));
            hidden.push(a.clone());
        }
        unreachable!("at least one layer")
    }

    pub fn predict_proba(&self, x: &Array2<T>) -> Result<Array2<T>> {
        let (_, logits) = self.activations(x)?;
        Ok(softmax(&logits))
    }

    pub fn predict(&self, x: &Array2<T>) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.rows().into_iter().map(|r| argmax(r.as_slice().expect("contiguous"))).collect())
    }

    /// Mean cross-entropy over the batch with dropout off.
    pub fn loss(&self, x: &Array2<T>, y: &[usize]) -> Result<T> {
        self.check_labels(x, y)?;
        let (_, logits) = self.activations(x)?;
        Ok(cross_entropy(&logits, y))
    }

    /// Loss and exact gradients with dropout off.
    pub fn loss_and_gradients(&self, x: &Array2<T>, y: &[usize]) -> Result<(T, Gradients<T>)> {
        self.check_labels(x, y)?;
        self.check_input(x)?;
        Ok(self.backprop(x, y, None))
    }

    fn check_labels(&self, x: &Array2<T>, y: &[usize]) -> Result<()> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if let Some(&c) = y.iter().find(|&&c| c >= self.n_classes()) {
            return Err(Error::InvalidInput(format!("class index {c} out of range")));
        }
        Ok(())
    }

    fn backprop(&self, x: &Array2<T>, y: &[usize], mut rng: Option<&mut ChaCha8Rng>) -> (T, Gradients<T>) {
        let depth = self.layers.len();
        // inputs[l] feeds layer l; masks[l] multiplies hidden layer l.
        let mut inputs = Vec::with_capacity(depth);
        let mut masks: Vec<Option<Array2<T>>> = Vec::with_capacity(depth - 1);
        let mut a = x.clone();
        let mut logits = None;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights) + &layer.biases;
            inputs.push(a);
            if l + 1 == depth {
                logits = Some(z);
                break;
            }
            let mut h = z.mapv(|v| v.max(T::zero()));
            let mask =
                match rng.as_deref_mut() {
                    Some(r) if self.dropout[l] > 0.0 => {
                        let keep = 1.0 - self.dropout[l];
                        let scale = T::lit(1.0 / keep);
                        let m = Array2::from_shape_simple_fn(h.dim(), || {
                            if r.random::<f64>() < keep {
                                scale
                            } else {
                                T::zero()
                            }
                        });
                        h *= &m;
                        Some(m)
                    }
                    _ => None,
                };
            masks.push(mask);
            a = h;
        }
        let logits = logits.expect("output layer");
        let loss = cross_entropy(&logits, y);

        let batch = T::from_usize_lossy(y.len());
        let mut delta = softmax(&logits);
        for (mut row, &c) in delta.rows_mut().into_iter().zip(y) {
            row[c] -= T::one();
        }
        delta.mapv_inplace(|v| v / batch);

        let mut grads: Vec<Dense<T>> = Vec::with_capacity(depth);
        for l in (0..depth).rev() {
            let input = &inputs[l];
            grads.push(Dense { weights: input.t().dot(&delta), biases: delta.sum_axis(Axis(0)) });
            if l == 0 {
                break;
            }
            let mut back = delta.dot(&self.layers[l].weights.t());
            // `input` is the post-dropout activation of hidden layer l-1; it is
            // zero wherever ReLU or the mask zeroed the unit.
            if let Some(m) = &masks[l - 1] {
                back *= m;
            }
            back.zip_mut_with(input, |d, &act| {
                if act <= T::zero() {
                    *d = T::zero();
                }
            });
            delta = back;
        }
        grads.reverse();
        (loss, grads)
    }
}

fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

pub fn softmax<T: Real>(logits: &Array2<T>) -> Array2<T> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn cross_entropy<T: Real>(logits: &Array2<T>, y: &[usize]) -> T {
    let total: T = logits
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &c)| {
            let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
            let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
            lse - row[c]
        })
        .sum();
    total / T::from_usize_lossy(y.len())
}

struct Adam<T> {
    m: Vec<Dense<T>>,
    v: Vec<Dense<T>>,
    t: i32,
}

impl<T: Real> Adam<T> {
    fn new(model: &MlpModel<T>) -> Self {
        let zeros: Vec<Dense<T>> = model
            .layers
            .iter()
            .map(|l| Dense { weights: Array2::zeros(l.weights.dim()), biases: Array1::zeros(l.biases.len()) })
            .collect();
        Adam { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn step(&mut self, model: &mut MlpModel<T>, grads: &Gradients<T>, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let lr = T::lit(cfg.learning_rate);
        let eps = T::lit(cfg.epsilon);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= lr * mh / (vh.sqrt() + eps);
        };
        for (((layer, g), m), v) in model.layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            ndarray::Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut layer.biases)
                .and(&g.biases)
                .and(&mut m.biases)
                .and(&mut v.biases)
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}

pub fn mlp_train<T: Real>(model: MlpModel<T>, x: &Array2<T>, y: &[usize], cfg: &TrainConfig) -> Result<MlpTraining<T>> {
    mlp_train_observed(model, x, y, cfg, |_, _| {})
}

/// As [`mlp_train`], calling `observe(epoch, mean_loss)` after every epoch.
pub fn mlp_train_observed<T: Real>(
    mut model: MlpModel<T>,
    x: &Array2<T>,
    y: &[usize],
    cfg: &TrainConfig,
    mut observe: impl FnMut(usize, T),
) -> Result<MlpTraining<T>> {
    cfg.validate()?;
    model.check()?;
    model.check_input(x)?;
    model.check_labels(x, y)?;
    if y.is_empty() {
        return Err(Error::InvalidInput("MLP training set is empty".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = T::zero();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let drop_rng = if cfg.dropout { Some(&mut rng) } else { None };
            let (loss, grads) = model.backprop(&xb, &yb, drop_rng);
            if !loss.is_finite() {
                let max_w = model.layers.iter().flat_map(|l| l.weights.iter()).fold(T::zero(), |m, w| m.max(w.abs()));
                return Err(Error::NonFiniteLoss(format!(
                    "epoch {epoch}, batch {b}: loss {loss}, largest |weight| {max_w}"
                )));
            }
            total += loss * T::from_usize_lossy(chunk.len());
            adam.step(&mut model, &grads, cfg);
        }
        let mean = total / T::from_usize_lossy(y.len());
        observe(epoch, mean);
        history.push(mean);
    }
    Ok(MlpTraining { model, loss_history: history })
}
