//! Versioned JSON model files.
//!
//! An artifact bundles the fitted vocabulary, the classifier spec and
//! parameters, and the fingerprint of the vocabulary the classifier was
//! trained against. Loading refuses files whose fingerprints disagree.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifiers::{ClassifierSpec, TrainedModel};
use crate::corpus::Corpus;
use crate::pipeline::{Pipeline, PipelineError};
use crate::text::{FittedVocabulary, TextError, TokenizerConfig, VocabularyDocument};

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("unsupported artifact version {found} (supported: {ARTIFACT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("vocabulary fingerprint mismatch: model was trained against {expected}, artifact vocabulary is {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("malformed artifact: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub spec: ClassifierSpec,
    pub vocabulary_fingerprint: String,
    pub trained: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub vocabulary: VocabularyDocument,
    pub model: ModelSection,
    /// Hash of the training corpus, tokenizer settings and classifier spec.
    pub training_fingerprint: String,
}

/// SHA-256 over the training documents (in order), tokenizer config and spec.
pub fn training_fingerprint(train: &Corpus, tokenizer: &TokenizerConfig, spec: &ClassifierSpec) -> String {
    let mut h = Sha256::new();
    for d in &train.documents {
        h.update(d.label.as_u8().to_le_bytes());
        h.update((d.text.len() as u64).to_le_bytes());
        h.update(d.text.as_bytes());
    }
    h.update(serde_json::to_vec(tokenizer).expect("tokenizer config serializes"));
    h.update(serde_json::to_vec(spec).expect("classifier spec serializes"));
    hex::encode(h.finalize())
}

impl ModelArtifact {
    pub fn new(pipeline: &Pipeline, spec: &ClassifierSpec, training_fingerprint: String) -> Self {
        ModelArtifact {
            version: ARTIFACT_VERSION,
            vocabulary: pipeline.vocabulary.to_document(),
            model: ModelSection {
                spec: spec.clone(),
                vocabulary_fingerprint: pipeline.vocabulary.fingerprint(),
                trained: pipeline.model.clone(),
            },
            training_fingerprint,
        }
    }

    pub fn to_json(&self) -> Result<String, ArtifactError> {
        Ok(serde_json::to_string(self)? + "\n")
    }

    /// Checks the version before looking at anything else.
    pub fn from_json(s: &str) -> Result<Self, ArtifactError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(s)?;
        if header.version != ARTIFACT_VERSION {
            return Err(ArtifactError::UnsupportedVersion { found: header.version });
        }
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        let json = self.to_json()?;
        fs::write(path, json).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let s = fs::read_to_string(path).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&s)
    }

    /// Rebuilds the vocabulary and verifies its fingerprint.
    pub fn pipeline(&self) -> Result<Pipeline, ArtifactError> {
        let vocabulary = FittedVocabulary::from_document(self.vocabulary.clone())?;
        let found = vocabulary.fingerprint();
        if found != self.model.vocabulary_fingerprint {
            return Err(ArtifactError::FingerprintMismatch {
                expected: self.model.vocabulary_fingerprint.clone(),
                found,
            });
        }
        Ok(Pipeline::new(vocabulary, self.model.trained.clone())?)
    }
}
