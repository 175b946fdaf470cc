//! Tokenization, bag-of-words counts and TF-IDF features.

mod sparse;
mod vocabulary;

pub use sparse::{FeatureMatrix, SparseVector};
pub use vocabulary::{FittedVocabulary, VocabularyDocument, OOV_INDEX, VOCABULARY_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// ASCII punctuation plus tab.
pub const DEFAULT_FILTER_CHARS: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~\t";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub max_vocab: usize,
    pub oov_token: String,
    pub lowercase: bool,
    pub filter_chars: String,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            max_vocab: 5000,
            oov_token: "OOV".to_string(),
            lowercase: true,
            filter_chars: DEFAULT_FILTER_CHARS.to_string(),
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<(), TextError> {
        if self.max_vocab == 0 {
            return Err(TextError::InvalidConfig("max_vocab must be at least 1".into()));
        }
        if self.oov_token.is_empty() {
            return Err(TextError::InvalidConfig("oov_token must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TextError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary is not fitted: {0}")]
    NotFitted(&'static str),
    #[error("invalid tokenizer config: {0}")]
    InvalidConfig(String),
    #[error("unsupported vocabulary version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt vocabulary: {0}")]
    Corrupt(String),
}

/// Filter characters become spaces, optionally lowercase, split on whitespace.
pub fn tokenize(cfg: &TokenizerConfig, text: &str) -> Vec<String> {
    let filtered: String = text
        .chars()
        .map(|c| if cfg.filter_chars.contains(c) { ' ' } else { c })
        .collect();
    let filtered = if cfg.lowercase {
        filtered.to_lowercase()
    } else {
        filtered
    };
    filtered.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        let cfg = TokenizerConfig::default();
        assert_eq!(tokenize(&cfg, "Hello, world! hello"), vec!["hello", "world", "hello"]);
        assert!(tokenize(&cfg, "").is_empty());
        assert_eq!(tokenize(&cfg, "A-B c"), vec!["a", "b", "c"]);
    }

    #[test]
    fn tokenize_respects_flags() {
        let cfg = TokenizerConfig {
            lowercase: false,
            filter_chars: String::new(),
            ..TokenizerConfig::default()
        };
        assert_eq!(tokenize(&cfg, "A-B\tc"), vec!["A-B", "c"]);
    }

    proptest! {
        #[test]
        fn retokenizing_joined_tokens_is_stable(s in "\\PC{0,60}") {
            let cfg = TokenizerConfig::default();
            let once = tokenize(&cfg, &s);
            let again = tokenize(&cfg, &once.join(" "));
            prop_assert_eq!(again, once);
        }
    }
}
