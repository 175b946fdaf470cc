use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{tokenize, FeatureMatrix, SparseVector, TextError, TokenizerConfig};
use crate::corpus::Corpus;

/// Index of the out-of-vocabulary bucket.
pub const OOV_INDEX: usize = 0;
pub const VOCABULARY_VERSION: u32 = 1;

/// Capped token index with document frequencies and smoothed IDF weights.
///
/// Index 0 is the OOV bucket; kept tokens occupy `1..=len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedVocabulary {
    config: TokenizerConfig,
    /// `tokens[0]` is the OOV token.
    tokens: Vec<String>,
    token_to_index: HashMap<String, usize>,
    doc_frequency: Vec<u64>,
    n_docs: u64,
    idf: Vec<f64>,
}

/// On-disk form of a [`FittedVocabulary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyDocument {
    pub version: u32,
    pub config: TokenizerConfig,
    pub tokens: Vec<String>,
    pub doc_frequency: Vec<u64>,
    pub n_docs: u64,
    pub idf: Vec<f64>,
}

impl FittedVocabulary {
    /// Ranks tokens by corpus frequency (ties: first appearance), keeps the
    /// top `max_vocab`, counts document frequencies and fits IDF.
    pub fn fit(cfg: &TokenizerConfig, corpus: &Corpus) -> Result<Self, TextError> {
        let texts: Vec<&str> = corpus.documents.iter().map(|d| d.text.as_str()).collect();
        Self::fit_texts(cfg, &texts)
    }

    pub fn fit_texts(cfg: &TokenizerConfig, texts: &[&str]) -> Result<Self, TextError> {
        cfg.validate()?;
        if texts.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let tokenized: Vec<Vec<String>> = texts.iter().map(|t| tokenize(cfg, t)).collect();

        // token -> (total count, first appearance)
        let mut stats: HashMap<&str, (u64, usize)> = HashMap::new();
        let mut next_seen = 0usize;
        for token in tokenized.iter().flatten() {
            if *token == cfg.oov_token {
                continue;
            }
            let entry = stats.entry(token.as_str()).or_insert_with(|| {
                next_seen += 1;
                (0, next_seen - 1)
            });
            entry.0 += 1;
        }
        let mut ranked: Vec<(&str, u64, usize)> = stats.into_iter().map(|(t, (c, f))| (t, c, f)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.truncate(cfg.max_vocab);

        let mut tokens = Vec::with_capacity(ranked.len() + 1);
        tokens.push(cfg.oov_token.clone());
        tokens.extend(ranked.iter().map(|(t, _, _)| t.to_string()));
        let token_to_index: HashMap<String, usize> =
            tokens.iter().enumerate().skip(1).map(|(i, t)| (t.clone(), i)).collect();

        let mut doc_frequency = vec![0u64; tokens.len()];
        let mut seen = vec![usize::MAX; tokens.len()];
        for (doc, toks) in tokenized.iter().enumerate() {
            for t in toks {
                let idx = token_to_index.get(t).copied().unwrap_or(OOV_INDEX);
                if seen[idx] != doc {
                    seen[idx] = doc;
                    doc_frequency[idx] += 1;
                }
            }
        }

        let mut vocab = FittedVocabulary {
            config: cfg.clone(),
            tokens,
            token_to_index,
            doc_frequency,
            n_docs: texts.len() as u64,
            idf: Vec::new(),
        };
        vocab.fit_tfidf()?;
        Ok(vocab)
    }

    /// `idf[j] = ln((1 + n_docs) / (1 + df[j])) + 1`, including the OOV slot.
    pub fn fit_tfidf(&mut self) -> Result<(), TextError> {
        if self.n_docs == 0 || self.doc_frequency.len() != self.tokens.len() {
            return Err(TextError::NotFitted("document frequencies are missing"));
        }
        let n = self.n_docs as f64;
        self.idf = self
            .doc_frequency
            .iter()
            .map(|&df| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
            .collect();
        Ok(())
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    /// Number of kept tokens, excluding OOV.
    pub fn len(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature dimensionality, OOV column included.
    pub fn n_features(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.token_to_index.get(token).copied().unwrap_or(OOV_INDEX)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn doc_frequency(&self, index: usize) -> u64 {
        self.doc_frequency[index]
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(&self.config, text)
    }

    /// Bag-of-words counts; unknown tokens accumulate at index 0.
    pub fn counts(&self, text: &str) -> SparseVector {
        let pairs = self.tokenize(text).iter().map(|t| (self.index_of(t), 1.0)).collect();
        SparseVector::from_pairs(pairs)
    }

    /// Multiplies by IDF then L2-normalizes. Zero vectors pass through.
    pub fn transform_tfidf(&self, v: &SparseVector) -> Result<SparseVector, TextError> {
        if self.idf.len() != self.tokens.len() {
            return Err(TextError::NotFitted("idf weights are missing"));
        }
        let weighted: Vec<(usize, f64)> = v
            .entries()
            .iter()
            .map(|&(i, x)| {
                self.idf
                    .get(i)
                    .map(|w| (i, x * w))
                    .ok_or(TextError::Corrupt(format!("feature index {i} outside vocabulary")))
            })
            .collect::<Result<_, _>>()?;
        let weighted = SparseVector::from_pairs(weighted);
        let norm = weighted.norm();
        if norm == 0.0 {
            return Ok(weighted);
        }
        Ok(weighted.scaled(1.0 / norm))
    }

    /// Tokenize, count and TF-IDF transform one text.
    pub fn featurize(&self, text: &str) -> Result<SparseVector, TextError> {
        self.transform_tfidf(&self.counts(text))
    }

    pub fn featurize_all<S: AsRef<str>>(&self, texts: &[S]) -> Result<FeatureMatrix, TextError> {
        let rows = texts
            .iter()
            .map(|t| self.featurize(t.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureMatrix::new(rows, self.n_features()))
    }

    pub fn to_document(&self) -> VocabularyDocument {
        VocabularyDocument {
            version: VOCABULARY_VERSION,
            config: self.config.clone(),
            tokens: self.tokens.clone(),
            doc_frequency: self.doc_frequency.clone(),
            n_docs: self.n_docs,
            idf: self.idf.clone(),
        }
    }

    pub fn from_document(doc: VocabularyDocument) -> Result<Self, TextError> {
        if doc.version != VOCABULARY_VERSION {
            return Err(TextError::UnsupportedVersion(doc.version));
        }
        if doc.tokens.is_empty() || doc.tokens.len() != doc.doc_frequency.len() || doc.tokens.len() != doc.idf.len() {
            return Err(TextError::Corrupt(
                "token, frequency and idf arrays disagree in length".into(),
            ));
        }
        if doc.idf.iter().any(|&w| !(w > 0.0)) {
            return Err(TextError::Corrupt("idf weights must be positive".into()));
        }
        let token_to_index: HashMap<String, usize> = doc
            .tokens
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if token_to_index.len() != doc.tokens.len() - 1 {
            return Err(TextError::Corrupt("duplicate tokens".into()));
        }
        Ok(FittedVocabulary {
            config: doc.config,
            tokens: doc.tokens,
            token_to_index,
            doc_frequency: doc.doc_frequency,
            n_docs: doc.n_docs,
            idf: doc.idf,
        })
    }

    /// SHA-256 over the serialized vocabulary document, hex encoded.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_document()).expect("vocabulary serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

impl Serialize for FittedVocabulary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FittedVocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = VocabularyDocument::deserialize(deserializer)?;
        FittedVocabulary::from_document(doc).map_err(serde::de::Error::custom)
    }
}
