//! The `textsleuth` command line: train, evaluate, predict, explain and
//! generate paired data.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use textsleuth::classifiers::ClassifierKind;

use crate::commands::{DatagenOptions, PredictInput, TrainOptions};
use crate::config::RunConfig;
use crate::error::{io_error, CliError};

#[derive(Debug, Parser)]
#[command(name = "textsleuth", version, about = "Human vs. LLM text detectors")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for splitting, training, explanation sampling and the stub provider.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only print command output, no summaries or warnings.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a vocabulary and classifier, then write a model artifact.
    Train(TrainArgs),
    /// Score a labeled test set and write the metrics report and curves.
    Evaluate(EvaluateArgs),
    /// Print {id, p_human, p_ai, label} JSON lines.
    Predict(PredictArgs),
    /// Explain one prediction with word attributions.
    Explain(ExplainArgs),
    /// Generate an AI counterpart for every human document.
    Datagen(DatagenArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub split_out: Option<PathBuf>,
    /// naive_bayes, logistic_regression, random_forest, gradient_boosted_trees or mlp.
    #[arg(long)]
    pub classifier: Option<ClassifierKind>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct PredictSource {
    #[arg(long, group = "source")]
    pub text: Option<String>,
    /// JSONL, CSV or plain text (one document per line).
    #[arg(long, group = "source")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: PredictSource,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub text: String,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub num_samples: Option<usize>,
    /// Write the explanation JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    /// Human-written documents; labels in the file are ignored.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Use the offline deterministic provider.
    #[arg(long)]
    pub stub: bool,
    /// Ask for output about as long as each human text.
    #[arg(long)]
    pub short_mode: bool,
    #[arg(long)]
    pub provider_config: Option<PathBuf>,
    #[arg(long)]
    pub parallelism: Option<usize>,
}

fn emit<T: Serialize>(quiet: bool, value: &T) {
    if !quiet {
        println!("{}", serde_json::to_string_pretty(value).expect("summary serializes"));
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    match cli.command {
        Command::Train(a) => {
            let out = commands::cmd_train(
                &cfg,
                &TrainOptions {
                    train: a.train,
                    test: a.test,
                    model_out: a.model_out,
                    split_out: a.split_out,
                    classifier: a.classifier,
                },
            )?;
            emit(cli.quiet, &out);
        }
        Command::Evaluate(a) => {
            let report = commands::cmd_evaluate(&cfg, &a.model, a.test.as_deref(), a.report_out.as_deref())?;
            emit(cli.quiet, &report);
        }
        Command::Predict(a) => {
            let input = match (a.source.text, a.source.input) {
                (Some(t), _) => PredictInput::Text(t),
                (None, Some(p)) => PredictInput::File(p),
                (None, None) => return Err(CliError::Missing("--text or --input")),
            };
            commands::cmd_predict(&a.model, &input, &mut std::io::stdout().lock())?;
        }
        Command::Explain(a) => {
            let mut ecfg = cfg.explanation.clone();
            if let Some(k) = a.top_k {
                ecfg.top_k = k;
            }
            if let Some(n) = a.num_samples {
                ecfg.num_samples = n;
            }
            match &a.out {
                Some(path) => {
                    let mut buf = Vec::new();
                    commands::cmd_explain(&a.model, &a.text, &ecfg, a.svg.as_deref(), &mut buf)?;
                    std::fs::write(path, buf).map_err(io_error(path))?;
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    commands::cmd_explain(&a.model, &a.text, &ecfg, a.svg.as_deref(), &mut stdout)?;
                    stdout.flush().map_err(io_error(std::path::Path::new("<stdout>")))?;
                }
            }
        }
        Command::Datagen(a) => {
            let out = commands::cmd_datagen(
                &cfg,
                &DatagenOptions {
                    input: a.input,
                    output: a.output,
                    log: a.log,
                    stub: a.stub,
                    short_mode: a.short_mode,
                    provider_config: a.provider_config,
                    parallelism: a.parallelism,
                },
            )?;
            emit(cli.quiet, &out);
        }
    }
    Ok(())
}
