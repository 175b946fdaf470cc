//! L2-penalized logistic regression fitted with L-BFGS.
//!
//! Objective: `sum_i logloss(sigmoid(w.x_i + b), y_i) + ||w||^2 / (2C)`,
//! bias unpenalized.

use serde::{Deserialize, Serialize};

use super::lbfgs::{self, LbfgsConfig};
use super::registry::mismatch;
use super::{
    sigmoid, softplus, target, validate_training, ClassifierError, ClassifierKind, Detector, Hyperparameters,
    TrainedModel, Trainer,
};
use crate::corpus::Label;
use crate::text::{FeatureMatrix, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// Inverse regularization strength.
    pub c: f64,
    /// L-BFGS iteration cap.
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            c: 1.0,
            max_iter: 100,
            tol: 1e-5,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.c > 0.0) {
            return Err(ClassifierError::InvalidHyperparameter(format!(
                "C must be > 0, got {}",
                self.c
            )));
        }
        if self.max_iter == 0 {
            return Err(ClassifierError::InvalidHyperparameter("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ClassifierError::InvalidHyperparameter(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at the returned parameters.
    pub objective: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &SparseVector) -> f64 {
        row.dot_dense(&self.weights) + self.bias
    }
}

impl Detector for LogisticModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::LogisticRegression
    }

    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_ai(&self, row: &SparseVector) -> f64 {
        sigmoid(self.decision(row))
    }
}

/// Objective and gradient at `params = [w..., b]`.
pub fn objective_and_gradient(x: &FeatureMatrix, y: &[Label], c: f64, params: &[f64], grad: &mut [f64]) -> f64 {
    let d = x.n_cols();
    let (w, b) = (&params[..d], params[d]);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (row, &label) in x.rows().iter().zip(y) {
        let z = row.dot_dense(w) + b;
        let t = target(label);
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for &(j, v) in row.entries() {
            grad[j] += r * v;
        }
        grad[d] += r;
    }
    let mut penalty = 0.0;
    for j in 0..d {
        penalty += w[j] * w[j];
        grad[j] += w[j] / c;
    }
    loss + penalty / (2.0 * c)
}

pub fn fit_logistic_regression(
    x: &FeatureMatrix,
    y: &[Label],
    params: &LogisticParams,
) -> Result<LogisticModel, ClassifierError> {
    params.validate()?;
    validate_training(x, y)?;
    let d = x.n_cols();
    let cfg = LbfgsConfig {
        memory: 10,
        max_iter: params.max_iter,
        tol: params.tol,
    };
    let result = lbfgs::minimize(
        |p, g| objective_and_gradient(x, y, params.c, p, g),
        vec![0.0; d + 1],
        &cfg,
    )
    .map_err(|e| ClassifierError::NonFinite {
        what: "logistic loss",
        at: format!("iteration {}", e.iteration),
    })?;
    if !result.converged {
        log::debug!(
            "logistic regression stopped after {} iterations with gradient norm {:.3e}",
            result.iterations,
            result.grad_inf_norm
        );
    }
    let mut x_opt = result.x;
    let bias = x_opt.pop().expect("bias slot");
    Ok(LogisticModel {
        weights: x_opt,
        bias,
        c: params.c,
        iterations: result.iterations,
        converged: result.converged,
        objective: result.value,
    })
}

pub struct LogisticRegressionTrainer;

impl Trainer for LogisticRegressionTrainer {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::LogisticRegression
    }

    fn fit(
        &self,
        hp: &Hyperparameters,
        x: &FeatureMatrix,
        y: &[Label],
        _seed: u64,
    ) -> Result<TrainedModel, ClassifierError> {
        match hp {
            Hyperparameters::LogisticRegression(p) => {
                Ok(TrainedModel::LogisticRegression(fit_logistic_regression(x, y, p)?))
            }
            other => Err(mismatch(self.kind(), other)),
        }
    }
}
