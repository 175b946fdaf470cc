//! One function per subcommand. Each takes resolved inputs and returns a
//! serializable outcome; printing is left to the caller.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use textsleuth::artifact::{training_fingerprint, ModelArtifact};
use textsleuth::classifiers::{label_for, ClassifierKind, ClassifierSpec, Registry};
use textsleuth::corpus::{
    clean, deduplicate, load_corpus_auto, load_texts, split_train_test, write_corpus, write_jsonl, Corpus,
    CorpusFormat, Label, LabelSource, TextRecord,
};
use textsleuth::datagen::{build_paired_dataset, write_generation_log, HttpProvider, LlmProvider, StubProvider};
use textsleuth::explain::{explain, render_svg, ExplanationConfig};
use textsleuth::metrics::{evaluate, write_curve_csv, ConfusionMatrix, HeadlineMetrics};
use textsleuth::pipeline::{batched_predict, train_pipeline, Pipeline, TrainingSummary};

use crate::config::RunConfig;
use crate::error::{io_error, CliError};

/// Batch size used when scoring corpora.
pub const PREDICT_BATCH: usize = 32;

fn require_two_classes(corpus: &Corpus, what: &'static str) -> Result<(), CliError> {
    let (human, ai) = corpus.class_counts();
    if human == 0 || ai == 0 {
        return Err(CliError::SingleClass { what, human, ai });
    }
    Ok(())
}

fn load_labeled(path: &Path) -> Result<Corpus, CliError> {
    Ok(deduplicate(&clean(&load_corpus_auto(path, &LabelSource::default())?)))
}

fn load_pipeline(model: &Path) -> Result<Pipeline, CliError> {
    Ok(ModelArtifact::load(model)?.pipeline()?)
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub train: Option<PathBuf>,
    /// Pre-split test file; when set the training file is used whole.
    pub test: Option<PathBuf>,
    pub model_out: Option<PathBuf>,
    /// Directory receiving `train.jsonl` and `test.jsonl` of the split.
    pub split_out: Option<PathBuf>,
    pub classifier: Option<ClassifierKind>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainOutcome {
    pub model_path: PathBuf,
    pub summary: TrainingSummary,
    /// Documents held out by the split; zero with a pre-split test file.
    pub n_held_out: usize,
    pub training_fingerprint: String,
}

pub fn cmd_train(cfg: &RunConfig, opts: &TrainOptions) -> Result<TrainOutcome, CliError> {
    let train_path = opts
        .train
        .as_ref()
        .or(cfg.paths.train_data.as_ref())
        .ok_or(CliError::Missing("train_data"))?;
    let model_path = opts
        .model_out
        .clone()
        .or(cfg.paths.model_out.clone())
        .ok_or(CliError::Missing("model_out"))?;
    let spec = match opts.classifier {
        Some(kind) if kind != cfg.classifier.kind() => ClassifierSpec::new(kind, cfg.classifier.seed),
        _ => cfg.classifier.clone(),
    };

    let corpus = load_labeled(train_path)?;
    let (train, held_out) = if opts.test.is_some() || cfg.paths.test_data.is_some() {
        (corpus, Corpus::new("held-out", vec![]))
    } else {
        cfg.split.validate()?;
        split_train_test(&corpus, &cfg.split)?
    };
    require_two_classes(&train, "training data")?;
    if let Some(dir) = &opts.split_out {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
        write_jsonl(&train, &dir.join("train.jsonl"))?;
        write_jsonl(&held_out, &dir.join("test.jsonl"))?;
    }

    let (pipeline, summary) = train_pipeline(&train, &cfg.tokenizer, &spec, &Registry::builtin())?;
    let fingerprint = training_fingerprint(&train, &cfg.tokenizer, &spec);
    ModelArtifact::new(&pipeline, &spec, fingerprint.clone()).save(&model_path)?;
    log::info!("wrote {}", model_path.display());
    Ok(TrainOutcome {
        model_path,
        summary,
        n_held_out: held_out.len(),
        training_fingerprint: fingerprint,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CurveFiles {
    pub roc_csv: String,
    pub det_csv: String,
}

/// The evaluation report written to disk. Positive class is AI.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ReportDocument {
    pub classifier: ClassifierKind,
    pub positive_class: String,
    pub threshold: f64,
    pub n_samples: usize,
    pub metrics: HeadlineMetrics,
    pub confusion: ConfusionMatrix,
    /// File names relative to the report's directory.
    pub curves: CurveFiles,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_curve(points: &[textsleuth::metrics::CurvePoint], path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_error(path))?;
    write_curve_csv(points, BufWriter::new(file))?;
    Ok(())
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    model: &Path,
    test: Option<&Path>,
    report_out: Option<&Path>,
) -> Result<ReportDocument, CliError> {
    let test = test
        .or(cfg.paths.test_data.as_deref())
        .ok_or(CliError::Missing("test_data"))?;
    let report_path = report_out
        .or(cfg.paths.report_out.as_deref())
        .ok_or(CliError::Missing("report_out"))?;
    // fingerprint is verified here, before any text is scored
    let pipeline = load_pipeline(model)?;
    let corpus = clean(&load_corpus_auto(test, &LabelSource::default())?);
    require_two_classes(&corpus, "test data")?;

    let scores = batched_predict(&pipeline, &corpus.texts(), PREDICT_BATCH)?;
    let report = evaluate(&scores, &corpus.labels())?;
    let roc_path = sibling(report_path, "roc.csv");
    let det_path = sibling(report_path, "det.csv");
    write_curve(&report.roc.points, &roc_path)?;
    write_curve(&report.det, &det_path)?;

    let file_name = |p: &Path| p.file_name().unwrap_or_default().to_string_lossy().into_owned();
    let doc = ReportDocument {
        classifier: pipeline.model.kind(),
        positive_class: report.positive_class.clone(),
        threshold: report.threshold,
        n_samples: report.n_samples,
        metrics: report.headline(),
        confusion: report.confusion,
        curves: CurveFiles {
            roc_csv: file_name(&roc_path),
            det_csv: file_name(&det_path),
        },
    };
    let json = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    fs::write(report_path, json).map_err(io_error(report_path))?;
    Ok(doc)
}

#[derive(Debug, Clone)]
pub enum PredictInput {
    Text(String),
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PredictionLine {
    pub id: String,
    pub p_human: f64,
    pub p_ai: f64,
    pub label: Label,
}

/// Writes one JSON line per input text; returns the number written.
pub fn cmd_predict(model: &Path, input: &PredictInput, out: &mut dyn Write) -> Result<usize, CliError> {
    let pipeline = load_pipeline(model)?;
    let records = match input {
        PredictInput::Text(text) => vec![TextRecord {
            id: "0".into(),
            text: text.clone(),
        }],
        PredictInput::File(path) => load_texts(path)?,
    };
    let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
    let scores = batched_predict(&pipeline, &texts, PREDICT_BATCH)?;
    let mut lines = String::new();
    for (r, p_ai) in records.iter().zip(scores) {
        let line = PredictionLine {
            id: r.id.clone(),
            p_human: 1.0 - p_ai,
            p_ai,
            label: label_for(p_ai),
        };
        lines.push_str(&serde_json::to_string(&line).expect("prediction serializes"));
        lines.push('\n');
    }
    out.write_all(lines.as_bytes())
        .map_err(io_error(Path::new("<output>")))?;
    Ok(records.len())
}

/// Writes the explanation JSON to `out` and, optionally, an SVG bar chart.
pub fn cmd_explain(
    model: &Path,
    text: &str,
    cfg: &ExplanationConfig,
    svg: Option<&Path>,
    out: &mut dyn Write,
) -> Result<textsleuth::explain::Explanation, CliError> {
    let pipeline = load_pipeline(model)?;
    let explanation = explain(&pipeline, pipeline.tokenizer(), text, cfg)?;
    let json = serde_json::to_string(&explanation).expect("explanation serializes") + "\n";
    out.write_all(json.as_bytes())
        .map_err(io_error(Path::new("<output>")))?;
    if let Some(path) = svg {
        fs::write(path, render_svg(&explanation)).map_err(io_error(path))?;
    }
    Ok(explanation)
}

#[derive(Debug, Clone, Default)]
pub struct DatagenOptions {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Defaults to `<output stem>.generations.jsonl`.
    pub log: Option<PathBuf>,
    pub stub: bool,
    pub short_mode: bool,
    /// JSON provider config replacing the one in the run config.
    pub provider_config: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatagenOutcome {
    pub output: PathBuf,
    pub log: PathBuf,
    pub provider: String,
    pub n_documents: usize,
    pub n_generated: usize,
    /// `(source id, message)` for each skipped document.
    pub failures: Vec<(String, String)>,
}

pub fn cmd_datagen(cfg: &RunConfig, opts: &DatagenOptions) -> Result<DatagenOutcome, CliError> {
    let humans = load_corpus_auto(&opts.input, &LabelSource::Fixed(Label::Human))?;
    let mut protocol = cfg.datagen.protocol.clone();
    protocol.short_mode |= opts.short_mode;
    let client: Box<dyn LlmProvider> = if opts.stub {
        Box::new(StubProvider::new(cfg.datagen.stub_seed))
    } else {
        let provider = match &opts.provider_config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(io_error(path))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?
            }
            None => cfg.datagen.provider.clone(),
        };
        Box::new(HttpProvider::new(provider)?)
    };
    let parallelism = opts.parallelism.unwrap_or(cfg.datagen.parallelism);
    let paired = build_paired_dataset(&humans, client.as_ref(), &protocol, parallelism)?;

    let format = CorpusFormat::from_path(&opts.output).unwrap_or(CorpusFormat::Jsonl);
    write_corpus(&paired.corpus, &opts.output, format)?;
    let log = opts
        .log
        .clone()
        .unwrap_or_else(|| sibling(&opts.output, "generations.jsonl"));
    write_generation_log(&paired.records, &log)?;
    Ok(DatagenOutcome {
        output: opts.output.clone(),
        log,
        provider: client.name(),
        n_documents: paired.corpus.len(),
        n_generated: paired.records.len(),
        failures: paired
            .failures
            .iter()
            .map(|e| (e.source_id().unwrap_or_default().to_string(), e.to_string()))
            .collect(),
    })
}
