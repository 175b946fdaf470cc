use std::collections::BTreeMap;

use super::{
    ClassifierError, ClassifierKind, ClassifierSpec, GradientBoostingTrainer, Hyperparameters,
    LogisticRegressionTrainer, MlpTrainer, NaiveBayesTrainer, RandomForestTrainer, TrainedModel,
};
use crate::corpus::Label;
use crate::text::FeatureMatrix;

/// One classifier family. Implementations are stateless; everything a fit
/// needs arrives through its arguments.
pub trait Trainer: Send + Sync {
    fn kind(&self) -> ClassifierKind;

    fn name(&self) -> &'static str {
        self.kind().as_str()
    }

    fn default_hyperparameters(&self) -> Hyperparameters {
        Hyperparameters::defaults(self.kind())
    }

    fn fit(
        &self,
        hyperparameters: &Hyperparameters,
        x: &FeatureMatrix,
        y: &[Label],
        seed: u64,
    ) -> Result<TrainedModel, ClassifierError>;
}

/// Trainers by name.
pub struct Registry {
    trainers: BTreeMap<&'static str, Box<dyn Trainer>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            trainers: BTreeMap::new(),
        }
    }

    /// All five built-in detectors.
    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(NaiveBayesTrainer));
        r.register(Box::new(LogisticRegressionTrainer));
        r.register(Box::new(RandomForestTrainer));
        r.register(Box::new(GradientBoostingTrainer));
        r.register(Box::new(MlpTrainer));
        r
    }

    /// Adds a trainer, replacing any previous one with the same name.
    pub fn register(&mut self, trainer: Box<dyn Trainer>) -> Option<Box<dyn Trainer>> {
        self.trainers.insert(trainer.name(), trainer)
    }

    pub fn get(&self, name: &str) -> Result<&dyn Trainer, ClassifierError> {
        self.trainers
            .get(name)
            .map(|t| t.as_ref())
            .ok_or_else(|| ClassifierError::UnknownKind(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.trainers.keys().copied()
    }

    /// Looks up the trainer for `spec` and fits it.
    pub fn fit(&self, spec: &ClassifierSpec, x: &FeatureMatrix, y: &[Label]) -> Result<TrainedModel, ClassifierError> {
        let trainer = self.get(spec.kind().as_str())?;
        trainer.fit(&spec.hyperparameters, x, y, spec.seed)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

/// Fails with [`ClassifierError::SpecMismatch`] unless `hp` belongs to `trainer`.
pub(crate) fn mismatch(trainer: ClassifierKind, hp: &Hyperparameters) -> ClassifierError {
    ClassifierError::SpecMismatch {
        trainer,
        given: hp.kind(),
    }
}
