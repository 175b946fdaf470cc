use serde_json::{json, Value};
use thiserror::Error;

use textsleuth::artifact::ArtifactError;
use textsleuth::corpus::CorpusError;
use textsleuth::datagen::{DatagenError, ProviderError};
use textsleuth::explain::ExplainError;
use textsleuth::metrics::MetricsError;
use textsleuth::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {reason}")]
    Config { path: String, reason: String },
    #[error("no {0} given: pass it as a flag or set it in the config file")]
    Missing(&'static str),
    #[error("{what} needs both classes, found {human} human and {ai} AI documents")]
    SingleClass {
        what: &'static str,
        human: usize,
        ai: usize,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Missing(_) => "missing_argument",
            CliError::SingleClass { .. } => "single_class",
            CliError::Corpus(_) => "corpus",
            CliError::Pipeline(_) => "pipeline",
            CliError::Artifact(ArtifactError::FingerprintMismatch { .. }) => "fingerprint_mismatch",
            CliError::Artifact(ArtifactError::UnsupportedVersion { .. }) => "unsupported_version",
            CliError::Artifact(_) => "artifact",
            CliError::Explain(_) => "explain",
            CliError::Metrics(_) => "metrics",
            CliError::Datagen(_) | CliError::Provider(_) => "datagen",
            CliError::Io { .. } => "io",
        }
    }

    /// The object written to stderr on failure.
    pub fn to_json(&self) -> Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}})
    }

    /// Process exit status: 2 for bad invocations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Missing(_) | CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}
