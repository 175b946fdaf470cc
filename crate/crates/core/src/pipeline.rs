//! Raw text in, AI-class probability out.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{
    mean_logloss, ClassifierError, ClassifierKind, ClassifierSpec, ProbabilityPair, Registry, TrainedModel,
};
use crate::corpus::Corpus;
use crate::text::{FittedVocabulary, TextError, TokenizerConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("batch size must be >= 1")]
    ZeroBatch,
    #[error("scorer returned {got} scores for {expected} texts")]
    ScoreCount { expected: usize, got: usize },
}

/// Anything that maps a batch of texts to AI-class probabilities.
pub trait TextScorer: Send + Sync {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, PipelineError>;
}

/// A per-text scoring function used as a black box.
pub struct FnScorer<F>(pub F);

impl<F> TextScorer for FnScorer<F>
where
    F: Fn(&str) -> f64 + Send + Sync,
{
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, PipelineError> {
        Ok(texts.iter().map(|t| (self.0)(t)).collect())
    }
}

/// Fitted vocabulary plus classifier: tokenize → counts → TF-IDF → model.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub vocabulary: FittedVocabulary,
    pub model: TrainedModel,
}

impl Pipeline {
    pub fn new(vocabulary: FittedVocabulary, model: TrainedModel) -> Result<Self, PipelineError> {
        if vocabulary.n_features() != model.n_features() {
            return Err(ClassifierError::DimensionMismatch {
                expected: model.n_features(),
                got: vocabulary.n_features(),
            }
            .into());
        }
        Ok(Pipeline { vocabulary, model })
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        self.vocabulary.config()
    }

    pub fn predict_proba<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<ProbabilityPair>, PipelineError> {
        let x = self.vocabulary.featurize_all(texts)?;
        Ok(self.model.predict_proba(&x)?)
    }
}

impl TextScorer for Pipeline {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, PipelineError> {
        Ok(self.predict_proba(texts)?.into_iter().map(|p| p.p_ai).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub classifier: ClassifierKind,
    pub n_documents: usize,
    pub n_human: usize,
    pub n_ai: usize,
    /// Kept tokens, excluding the OOV slot.
    pub vocabulary_size: usize,
    pub n_features: usize,
    /// Mean logloss of the fitted model on its own training matrix.
    pub training_logloss: f64,
}

/// Fits the vocabulary and IDF on `train` only, then the classifier named by `spec`.
pub fn train_pipeline(
    train: &Corpus,
    tokenizer: &TokenizerConfig,
    spec: &ClassifierSpec,
    registry: &Registry,
) -> Result<(Pipeline, TrainingSummary), PipelineError> {
    spec.hyperparameters.validate()?;
    let mut vocabulary = FittedVocabulary::fit(tokenizer, train)?;
    vocabulary.fit_tfidf()?;
    let x = vocabulary.featurize_all(&train.texts())?;
    let y = train.labels();
    let model = registry.fit(spec, &x, &y)?;
    let training_logloss = mean_logloss(model.detector(), &x, &y)?;
    let (n_human, n_ai) = train.class_counts();
    let summary = TrainingSummary {
        classifier: spec.kind(),
        n_documents: train.len(),
        n_human,
        n_ai,
        vocabulary_size: vocabulary.len(),
        n_features: vocabulary.n_features(),
        training_logloss,
    };
    Ok((Pipeline::new(vocabulary, model)?, summary))
}

/// Scores `texts` in consecutive chunks of at most `batch_size`, keeping input order.
pub fn batched_predict(
    scorer: &dyn TextScorer,
    texts: &[String],
    batch_size: usize,
) -> Result<Vec<f64>, PipelineError> {
    if batch_size == 0 {
        return Err(PipelineError::ZeroBatch);
    }
    let chunks: Vec<Vec<f64>> = texts
        .par_chunks(batch_size)
        .map(|chunk| {
            let scores = scorer.score_batch(chunk)?;
            if scores.len() != chunk.len() {
                return Err(PipelineError::ScoreCount {
                    expected: chunk.len(),
                    got: scores.len(),
                });
            }
            Ok(scores)
        })
        .collect::<Result<_, _>>()?;
    Ok(chunks.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Recording(Mutex<Vec<usize>>);

    impl TextScorer for Recording {
        fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, PipelineError> {
            self.0.lock().unwrap().push(texts.len());
            Ok(texts.iter().map(|t| t.len() as f64).collect())
        }
    }

    #[test]
    fn thirty_three_texts_two_batches_in_order() {
        let texts: Vec<String> = (0..33).map(|i| "x".repeat(i)).collect();
        let rec = Recording(Mutex::new(vec![]));
        let out = batched_predict(&rec, &texts, 32).unwrap();
        assert_eq!(out, (0..33).map(|i| i as f64).collect::<Vec<_>>());
        let mut sizes = rec.0.into_inner().unwrap();
        sizes.sort();
        assert_eq!(sizes, vec![1, 32]);
    }

    #[test]
    fn zero_batch_rejected() {
        let s = FnScorer(|_: &str| 0.5);
        assert!(matches!(batched_predict(&s, &[], 0), Err(PipelineError::ZeroBatch)));
    }
}
