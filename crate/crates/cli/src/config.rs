//! The JSON run configuration. Every section is optional; flags override it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use textsleuth::classifiers::ClassifierSpec;
use textsleuth::corpus::SplitSpec;
use textsleuth::datagen::{LlmProviderConfig, PromptProtocol};
use textsleuth::explain::ExplanationConfig;
use textsleuth::text::TokenizerConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub model_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenSettings {
    pub provider: LlmProviderConfig,
    pub protocol: PromptProtocol,
    /// Documents generated concurrently.
    pub parallelism: usize,
    pub stub_seed: u64,
}

impl Default for DatagenSettings {
    fn default() -> Self {
        DatagenSettings {
            provider: LlmProviderConfig::default(),
            protocol: PromptProtocol::default(),
            parallelism: 4,
            stub_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tokenizer: TokenizerConfig,
    pub split: SplitSpec,
    pub classifier: ClassifierSpec,
    pub explanation: ExplanationConfig,
    pub paths: Paths,
    pub datagen: DatagenSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Applies one seed to every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split.seed = seed;
        self.classifier.seed = seed;
        self.explanation.seed = seed;
        self.datagen.stub_seed = seed;
        self
    }
}
