//! Feed-forward network with ReLU hidden layers and a logistic output,
//! trained by minibatch Adam.

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::registry::mismatch;
use super::{
    sigmoid, softplus, target, validate_training, ClassifierError, ClassifierKind, Detector, Hyperparameters,
    TrainedModel, Trainer,
};
use crate::corpus::Label;
use crate::text::{FeatureMatrix, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Coefficient of `½‖W‖²` over all weight matrices (biases excluded).
    pub weight_decay: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![100],
            epochs: 200,
            batch_size: 200,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: String| Err(ClassifierError::InvalidHyperparameter(m));
        if self.hidden.contains(&0) {
            return bad(format!("hidden layer sizes must be >= 1, got {:?}", self.hidden));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.weight_decay > 0.0) {
            return bad(format!("weight_decay must be > 0, got {}", self.weight_decay));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Logistic,
}

/// Dense layer; `weights[i * n_out + o]` connects input `i` to output `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Layer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
            activation,
        }
    }

    fn pre_activation_dense(&self, input: &[f64]) -> Vec<f64> {
        let mut z = self.biases.clone();
        for (i, &a) in input.iter().enumerate() {
            if a != 0.0 {
                let w = &self.weights[i * self.n_out..(i + 1) * self.n_out];
                z.iter_mut().zip(w).for_each(|(zo, wo)| *zo += a * wo);
            }
        }
        z
    }

    fn pre_activation_sparse(&self, input: &SparseVector) -> Vec<f64> {
        let mut z = self.biases.clone();
        for &(i, a) in input.entries() {
            let w = &self.weights[i * self.n_out..(i + 1) * self.n_out];
            z.iter_mut().zip(w).for_each(|(zo, wo)| *zo += a * wo);
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    /// Mean training loss per epoch, penalty included.
    pub loss_curve: Vec<f64>,
}

impl MlpModel {
    /// All-zero weights and biases.
    pub fn zeros(n_features: usize, hidden: &[usize]) -> Self {
        let mut sizes = vec![n_features];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let last = sizes.len() - 2;
        let layers = (0..sizes.len() - 1)
            .map(|l| {
                let act = if l == last {
                    Activation::Logistic
                } else {
                    Activation::Relu
                };
                Layer::zeros(sizes[l], sizes[l + 1], act)
            })
            .collect();
        MlpModel {
            layers,
            loss_curve: Vec::new(),
        }
    }

    /// Glorot-uniform weights `U(-b, b)`, `b = sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn initialized(n_features: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut m = MlpModel::zeros(n_features, hidden);
        for layer in &mut m.layers {
            let bound = (6.0 / (layer.n_in + layer.n_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            layer.weights.iter_mut().for_each(|w| *w = dist.sample(rng));
        }
        m
    }

    /// Post-activation outputs of every hidden layer, then the output logit.
    fn forward(&self, row: &SparseVector) -> (Vec<Vec<f64>>, f64) {
        let mut hidden = Vec::with_capacity(self.layers.len() - 1);
        let mut z = self.layers[0].pre_activation_sparse(row);
        for layer in &self.layers[1..] {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
            let next = layer.pre_activation_dense(&z);
            hidden.push(z);
            z = next;
        }
        (hidden, z[0])
    }

    pub fn output_logit(&self, row: &SparseVector) -> f64 {
        self.forward(row).1
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "parameter count");
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    /// Mean logloss over `rows` plus `weight_decay · ½‖W‖²`, and its
    /// gradient in [`flat_params`](Self::flat_params) order.
    pub fn loss_and_gradient(
        &self,
        x: &FeatureMatrix,
        y: &[Label],
        rows: &[usize],
        weight_decay: f64,
    ) -> (f64, Vec<f64>) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
            .collect();
        let loss = self.accumulate(x, y, rows, weight_decay, &mut grads);
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads {
            flat.extend(gw);
            flat.extend(gb);
        }
        (loss, flat)
    }

    /// Writes the batch gradient into `grads` (overwriting) and returns the loss.
    fn accumulate(
        &self,
        x: &FeatureMatrix,
        y: &[Label],
        rows: &[usize],
        weight_decay: f64,
        grads: &mut [(Vec<f64>, Vec<f64>)],
    ) -> f64 {
        for (gw, gb) in grads.iter_mut() {
            gw.iter_mut().for_each(|g| *g = 0.0);
            gb.iter_mut().for_each(|g| *g = 0.0);
        }
        let scale = 1.0 / rows.len() as f64;
        let n_layers = self.layers.len();
        let mut loss = 0.0;
        for &r in rows {
            let row = x.row(r);
            let (hidden, z) = self.forward(row);
            let t = target(y[r]);
            loss += softplus(z) - t * z;

            let mut delta = vec![(sigmoid(z) - t) * scale];
            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let (gw, gb) = &mut grads[l];
                gb.iter_mut().zip(&delta).for_each(|(g, d)| *g += d);
                if l == 0 {
                    for &(i, a) in row.entries() {
                        let g = &mut gw[i * layer.n_out..(i + 1) * layer.n_out];
                        g.iter_mut().zip(&delta).for_each(|(g, d)| *g += a * d);
                    }
                    break;
                }
                let input = &hidden[l - 1];
                let mut prev = vec![0.0; layer.n_in];
                for (i, &a) in input.iter().enumerate() {
                    let w = &layer.weights[i * layer.n_out..(i + 1) * layer.n_out];
                    if a > 0.0 {
                        let g = &mut gw[i * layer.n_out..(i + 1) * layer.n_out];
                        g.iter_mut().zip(&delta).for_each(|(g, d)| *g += a * d);
                        // ReLU derivative is 1 where the unit was active
                        prev[i] = w.iter().zip(&delta).map(|(w, d)| w * d).sum();
                    }
                }
                delta = prev;
            }
        }
        let mut penalty = 0.0;
        for (layer, (gw, _)) in self.layers.iter().zip(grads.iter_mut()) {
            for (g, &w) in gw.iter_mut().zip(&layer.weights) {
                penalty += w * w;
                *g += weight_decay * w;
            }
        }
        loss * scale + 0.5 * weight_decay * penalty
    }
}

impl Detector for MlpModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Mlp
    }

    fn n_features(&self) -> usize {
        self.layers[0].n_in
    }

    fn predict_ai(&self, row: &SparseVector) -> f64 {
        sigmoid(self.output_logit(row))
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step<'a>(&mut self, params: impl Iterator<Item = (&'a mut f64, &'a f64)>) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for ((p, &g), (m, v)) in params.zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
        }
    }
}

pub fn fit_mlp(x: &FeatureMatrix, y: &[Label], params: &MlpParams, seed: u64) -> Result<MlpModel, ClassifierError> {
    params.validate()?;
    validate_training(x, y)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(1);

    let mut model = MlpModel::initialized(x.n_cols(), &params.hidden, &mut init_rng);
    let mut grads: Vec<(Vec<f64>, Vec<f64>)> = model
        .layers
        .iter()
        .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
        .collect();
    let mut adam = Adam::new(model.n_params(), params.learning_rate);
    let mut order: Vec<usize> = (0..y.len()).collect();

    for epoch in 0..params.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(params.batch_size).enumerate() {
            let loss = model.accumulate(x, y, batch, params.weight_decay, &mut grads);
            if !loss.is_finite() {
                return Err(ClassifierError::NonFinite {
                    what: "mlp loss",
                    at: format!("epoch {epoch}, batch {b}"),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            let pairs = model.layers.iter_mut().zip(grads.iter()).flat_map(|(l, (gw, gb))| {
                l.weights
                    .iter_mut()
                    .zip(gw.iter())
                    .chain(l.biases.iter_mut().zip(gb.iter()))
            });
            adam.step(pairs);
        }
        model.loss_curve.push(epoch_loss / y.len() as f64);
    }
    Ok(model)
}

pub struct MlpTrainer;

impl Trainer for MlpTrainer {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Mlp
    }

    fn fit(
        &self,
        hp: &Hyperparameters,
        x: &FeatureMatrix,
        y: &[Label],
        seed: u64,
    ) -> Result<TrainedModel, ClassifierError> {
        match hp {
            Hyperparameters::Mlp(p) => Ok(TrainedModel::Mlp(fit_mlp(x, y, p, seed)?)),
            other => Err(mismatch(self.kind(), other)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Ai, Human};

    #[test]
    fn zero_network_outputs_half() {
        let m = MlpModel::zeros(3, &[4]);
        for row in [SparseVector::new(), SparseVector::from_dense(&[1.0, -2.0, 3.0])] {
            assert_eq!(m.predict_ai(&row), 0.5);
        }
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = MlpModel::initialized(3, &[4, 2], &mut rng);
        let flat = m.flat_params();
        assert_eq!(flat.len(), 3 * 4 + 4 + 4 * 2 + 2 + 2 + 1);
        let doubled: Vec<f64> = flat.iter().map(|v| v * 2.0).collect();
        m.set_flat_params(&doubled);
        assert_eq!(m.flat_params(), doubled);
    }

    #[test]
    fn separable_points_fit_exactly() {
        let x = FeatureMatrix::from_dense(&[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.1, 0.9], vec![0.0, 1.0]]);
        let y = [Human, Human, Ai, Ai];
        let m = fit_mlp(&x, &y, &MlpParams::default(), 0).unwrap();
        for (i, label) in y.iter().enumerate() {
            assert_eq!(super::super::label_for(m.predict_ai(x.row(i))), *label, "row {i}");
        }
        assert!(m.loss_curve.last().unwrap() < m.loss_curve.first().unwrap());
    }

    #[test]
    fn same_seed_same_model() {
        let x = FeatureMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]);
        let y = [Human, Ai, Ai];
        let p = MlpParams {
            hidden: vec![5],
            epochs: 10,
            batch_size: 2,
            ..Default::default()
        };
        assert_eq!(fit_mlp(&x, &y, &p, 4).unwrap(), fit_mlp(&x, &y, &p, 4).unwrap());
        assert_ne!(fit_mlp(&x, &y, &p, 4).unwrap(), fit_mlp(&x, &y, &p, 5).unwrap());
    }
}
