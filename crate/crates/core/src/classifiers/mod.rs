//! The five detectors and their shared probability interface.
//!
//! Every algorithm implements [`Trainer`] and is registered by name in a
//! [`Registry`]; fitted models implement [`Detector`]. [`TrainedModel`] is
//! the serializable union over the learned parameterizations.

pub mod boosting;
pub mod forest;
pub mod lbfgs;
pub mod logistic;
pub mod mlp;
pub mod naive_bayes;
mod registry;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::text::{FeatureMatrix, SparseVector};

pub use boosting::{BoostedTreesModel, BoostingParams, GradientBoostingTrainer};
pub use forest::{ForestModel, ForestParams, MaxFeatures, RandomForestTrainer};
pub use logistic::{LogisticModel, LogisticParams, LogisticRegressionTrainer};
pub use mlp::{MlpModel, MlpParams, MlpTrainer};
pub use naive_bayes::{NaiveBayesModel, NaiveBayesParams, NaiveBayesTrainer};
pub use registry::{Registry, Trainer};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("feature matrix has {rows} rows but {labels} labels were given")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("training data contains only class {0}; both classes are required")]
    SingleClass(Label),
    #[error("training data is empty")]
    Empty,
    #[error("negative feature value {value} at row {row}, column {col}")]
    NegativeFeature { row: usize, col: usize, value: f64 },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("model expects {expected} features, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite {what} at {at}")]
    NonFinite { what: &'static str, at: String },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("unknown classifier kind {0:?}")]
    UnknownKind(String),
    #[error("trainer {trainer} cannot use hyperparameters for {given}")]
    SpecMismatch {
        trainer: ClassifierKind,
        given: ClassifierKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    LogisticRegression,
    RandomForest,
    GradientBoostedTrees,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::LogisticRegression,
        ClassifierKind::RandomForest,
        ClassifierKind::GradientBoostedTrees,
        ClassifierKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::GradientBoostedTrees => "gradient_boosted_trees",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ClassifierError::UnknownKind(s.to_string()))
    }
}

/// Per-kind hyperparameters. Serializes as the inner record only; the kind
/// travels alongside it in [`ClassifierSpec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Hyperparameters {
    NaiveBayes(NaiveBayesParams),
    LogisticRegression(LogisticParams),
    RandomForest(ForestParams),
    GradientBoostedTrees(BoostingParams),
    Mlp(MlpParams),
}

impl Hyperparameters {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            Hyperparameters::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            Hyperparameters::RandomForest(_) => ClassifierKind::RandomForest,
            Hyperparameters::GradientBoostedTrees(_) => ClassifierKind::GradientBoostedTrees,
            Hyperparameters::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn defaults(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::NaiveBayes => Hyperparameters::NaiveBayes(Default::default()),
            ClassifierKind::LogisticRegression => Hyperparameters::LogisticRegression(Default::default()),
            ClassifierKind::RandomForest => Hyperparameters::RandomForest(Default::default()),
            ClassifierKind::GradientBoostedTrees => Hyperparameters::GradientBoostedTrees(Default::default()),
            ClassifierKind::Mlp => Hyperparameters::Mlp(Default::default()),
        }
    }

    /// Parses a JSON object of hyperparameters for `kind`; missing fields take defaults.
    pub fn from_json(kind: ClassifierKind, value: serde_json::Value) -> Result<Self, serde_json::Error> {
        let value = if value.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            value
        };
        Ok(match kind {
            ClassifierKind::NaiveBayes => Hyperparameters::NaiveBayes(serde_json::from_value(value)?),
            ClassifierKind::LogisticRegression => Hyperparameters::LogisticRegression(serde_json::from_value(value)?),
            ClassifierKind::RandomForest => Hyperparameters::RandomForest(serde_json::from_value(value)?),
            ClassifierKind::GradientBoostedTrees => {
                Hyperparameters::GradientBoostedTrees(serde_json::from_value(value)?)
            }
            ClassifierKind::Mlp => Hyperparameters::Mlp(serde_json::from_value(value)?),
        })
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        match self {
            Hyperparameters::NaiveBayes(p) => p.validate(),
            Hyperparameters::LogisticRegression(p) => p.validate(),
            Hyperparameters::RandomForest(p) => p.validate(),
            Hyperparameters::GradientBoostedTrees(p) => p.validate(),
            Hyperparameters::Mlp(p) => p.validate(),
        }
    }
}

/// Which classifier to train, with what settings and seed.
///
/// Serialized as `{"kind": ..., "hyperparameters": {...}, "seed": ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSpec {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        ClassifierSpec {
            hyperparameters: Hyperparameters::defaults(kind),
            seed,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.hyperparameters.kind()
    }
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::new(ClassifierKind::NaiveBayes, 0)
    }
}

#[derive(Serialize, Deserialize)]
struct ClassifierSpecRepr {
    kind: ClassifierKind,
    #[serde(default)]
    hyperparameters: serde_json::Value,
    #[serde(default)]
    seed: u64,
}

impl Serialize for ClassifierSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let hyperparameters = serde_json::to_value(&self.hyperparameters).map_err(serde::ser::Error::custom)?;
        ClassifierSpecRepr {
            kind: self.kind(),
            hyperparameters,
            seed: self.seed,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClassifierSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ClassifierSpecRepr::deserialize(deserializer)?;
        let hyperparameters =
            Hyperparameters::from_json(repr.kind, repr.hyperparameters).map_err(serde::de::Error::custom)?;
        Ok(ClassifierSpec {
            hyperparameters,
            seed: repr.seed,
        })
    }
}

/// `(p_human, p_ai)`, summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityPair {
    pub p_human: f64,
    pub p_ai: f64,
}

impl ProbabilityPair {
    /// Clamps to `[0, 1]` and sets `p_human = 1 - p_ai`.
    pub fn from_ai(p_ai: f64) -> Self {
        let p_ai = p_ai.clamp(0.0, 1.0);
        ProbabilityPair {
            p_human: 1.0 - p_ai,
            p_ai,
        }
    }

    /// AI iff `p_ai >= 0.5`.
    pub fn label(&self) -> Label {
        label_for(self.p_ai)
    }
}

/// Decision rule shared by every model: ties at 0.5 go to the AI class.
pub fn label_for(p_ai: f64) -> Label {
    if p_ai >= 0.5 {
        Label::Ai
    } else {
        Label::Human
    }
}

/// A fitted binary detector.
pub trait Detector: Send + Sync {
    fn kind(&self) -> ClassifierKind;

    /// Input dimensionality the model was trained on.
    fn n_features(&self) -> usize;

    /// Probability of the AI class for one feature row.
    fn predict_ai(&self, row: &SparseVector) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum TrainedModel {
    NaiveBayes(NaiveBayesModel),
    LogisticRegression(LogisticModel),
    RandomForest(ForestModel),
    GradientBoostedTrees(BoostedTreesModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn detector(&self) -> &dyn Detector {
        match self {
            TrainedModel::NaiveBayes(m) => m,
            TrainedModel::LogisticRegression(m) => m,
            TrainedModel::RandomForest(m) => m,
            TrainedModel::GradientBoostedTrees(m) => m,
            TrainedModel::Mlp(m) => m,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.detector().kind()
    }

    pub fn n_features(&self) -> usize {
        self.detector().n_features()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<ProbabilityPair>, ClassifierError> {
        predict_proba(self.detector(), x)
    }

    pub fn predict_label(&self, x: &FeatureMatrix) -> Result<Vec<Label>, ClassifierError> {
        predict_label(self.detector(), x)
    }
}

pub fn predict_proba(model: &dyn Detector, x: &FeatureMatrix) -> Result<Vec<ProbabilityPair>, ClassifierError> {
    if x.n_cols() != model.n_features() {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.n_features(),
            got: x.n_cols(),
        });
    }
    Ok(x.rows()
        .par_iter()
        .map(|row| ProbabilityPair::from_ai(model.predict_ai(row)))
        .collect())
}

pub fn predict_label(model: &dyn Detector, x: &FeatureMatrix) -> Result<Vec<Label>, ClassifierError> {
    Ok(predict_proba(model, x)?.iter().map(ProbabilityPair::label).collect())
}

/// Mean binary logloss of a model on labeled data, with probabilities
/// clipped to `[1e-15, 1 - 1e-15]`.
pub fn mean_logloss(model: &dyn Detector, x: &FeatureMatrix, y: &[Label]) -> Result<f64, ClassifierError> {
    let probs = predict_proba(model, x)?;
    if probs.len() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: probs.len(),
            labels: y.len(),
        });
    }
    let total: f64 = probs
        .iter()
        .zip(y)
        .map(|(p, &l)| {
            let p = p.p_ai.clamp(1e-15, 1.0 - 1e-15);
            if l.is_ai() {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / y.len().max(1) as f64)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn target(label: Label) -> f64 {
    if label.is_ai() {
        1.0
    } else {
        0.0
    }
}

/// Shape, finiteness and two-class checks shared by every trainer.
pub(crate) fn validate_training(x: &FeatureMatrix, y: &[Label]) -> Result<(), ClassifierError> {
    if x.n_rows() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    let first = *y.first().ok_or(ClassifierError::Empty)?;
    if y.iter().all(|&l| l == first) {
        return Err(ClassifierError::SingleClass(first));
    }
    for (row, v) in x.rows().iter().enumerate() {
        if let Some(&(col, _)) = v.entries().iter().find(|(_, val)| !val.is_finite()) {
            return Err(ClassifierError::NonFiniteFeature { row, col });
        }
    }
    Ok(())
}
