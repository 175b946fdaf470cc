//! Multinomial Naive Bayes with additive smoothing.
//!
//! TF-IDF values are treated as fractional pseudo-counts.

use serde::{Deserialize, Serialize};

use super::registry::mismatch;
use super::{
    sigmoid, validate_training, ClassifierError, ClassifierKind, Detector, Hyperparameters, TrainedModel, Trainer,
};
use crate::corpus::Label;
use crate::text::{FeatureMatrix, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesParams {
    /// Additive (Laplace/Lidstone) smoothing.
    pub alpha: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { alpha: 1.0 }
    }
}

impl NaiveBayesParams {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.alpha > 0.0 && self.alpha.is_finite() {
            Ok(())
        } else {
            Err(ClassifierError::InvalidHyperparameter(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    /// `ln(class count / n)`, indexed by label value.
    pub class_log_prior: [f64; 2],
    /// `feature_log_prob[c][j] = ln((N_cj + alpha) / (N_c + alpha * d))`.
    pub feature_log_prob: [Vec<f64>; 2],
    pub alpha: f64,
}

impl NaiveBayesModel {
    /// Unnormalized joint log-likelihood per class.
    pub fn joint_log_likelihood(&self, row: &SparseVector) -> [f64; 2] {
        [0, 1].map(|c| self.class_log_prior[c] + row.dot_dense(&self.feature_log_prob[c]))
    }
}

impl Detector for NaiveBayesModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::NaiveBayes
    }

    fn n_features(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    fn predict_ai(&self, row: &SparseVector) -> f64 {
        let [h, a] = self.joint_log_likelihood(row);
        sigmoid(a - h)
    }
}

pub fn fit_naive_bayes(
    x: &FeatureMatrix,
    y: &[Label],
    params: &NaiveBayesParams,
) -> Result<NaiveBayesModel, ClassifierError> {
    params.validate()?;
    validate_training(x, y)?;
    let d = x.n_cols();
    let mut feature_count = [vec![0.0; d], vec![0.0; d]];
    let mut class_count = [0usize; 2];
    for (r, (row, &label)) in x.rows().iter().zip(y).enumerate() {
        let c = label.as_u8() as usize;
        class_count[c] += 1;
        for &(j, v) in row.entries() {
            if v < 0.0 {
                return Err(ClassifierError::NegativeFeature {
                    row: r,
                    col: j,
                    value: v,
                });
            }
            feature_count[c][j] += v;
        }
    }
    let n = y.len() as f64;
    let alpha = params.alpha;
    let feature_log_prob = feature_count.map(|counts| {
        let total: f64 = counts.iter().sum::<f64>() + alpha * d as f64;
        let log_total = total.ln();
        counts.iter().map(|&c| (c + alpha).ln() - log_total).collect()
    });
    Ok(NaiveBayesModel {
        class_log_prior: class_count.map(|c| (c as f64 / n).ln()),
        feature_log_prob,
        alpha,
    })
}

pub struct NaiveBayesTrainer;

impl Trainer for NaiveBayesTrainer {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::NaiveBayes
    }

    fn fit(
        &self,
        hp: &Hyperparameters,
        x: &FeatureMatrix,
        y: &[Label],
        _seed: u64,
    ) -> Result<TrainedModel, ClassifierError> {
        match hp {
            Hyperparameters::NaiveBayes(p) => Ok(TrainedModel::NaiveBayes(fit_naive_bayes(x, y, p)?)),
            other => Err(mismatch(self.kind(), other)),
        }
    }
}
