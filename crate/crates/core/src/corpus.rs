//! Labeled text corpora: loading, cleaning, deduplication and seeded splits.
//!
//! Records are read from JSONL (`{"id"?, "text", "label", "domain"?}`) or
//! from CSV with a header row. Splits shuffle with ChaCha8 keyed on the
//! split seed followed by a Fisher-Yates pass, so partitions are identical
//! across platforms.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Binary class. Serialized as the integer 0 (human) or 1 (LLM).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Human,
    Ai,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Human => 0,
            Label::Ai => 1,
        }
    }

    pub fn is_ai(self) -> bool {
        self == Label::Ai
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Human => Label::Ai,
            Label::Ai => Label::Human,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(Label::Human),
            1 => Ok(Label::Ai),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.as_u8()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: String,
    pub text: String,
    pub label: Label,
    #[serde(default, rename = "domain", skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub documents: Vec<LabeledDocument>,
    pub source_name: String,
}

impl Corpus {
    pub fn new(source_name: impl Into<String>, documents: Vec<LabeledDocument>) -> Self {
        Corpus {
            documents,
            source_name: source_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.text.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.documents.iter().map(|d| d.label).collect()
    }

    /// Returns `(human, ai)` document counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let ai = self.documents.iter().filter(|d| d.label.is_ai()).count();
        (self.documents.len() - ai, ai)
    }

    pub fn has_both_classes(&self) -> bool {
        let (h, a) = self.class_counts();
        h > 0 && a > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.train_fraction > 0.0 && self.train_fraction < 1.0 {
            Ok(())
        } else {
            Err(CorpusError::InvalidSplit(self.train_fraction))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<CorpusFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(CorpusFormat::Jsonl),
            "csv" => Some(CorpusFormat::Csv),
            _ => None,
        }
    }
}

/// Where a record's label comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSource {
    /// Read from the named field/column (0 or 1).
    Column(String),
    /// Every record gets this label; any label field is ignored.
    Fixed(Label),
}

impl Default for LabelSource {
    fn default() -> Self {
        LabelSource::Column("label".to_string())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("corpus is empty")]
    Empty,
    #[error("corpus has {0} document(s); at least 2 are needed to split")]
    TooSmall(usize),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidSplit(f64),
    #[error("cannot infer corpus format from {}", .0.display())]
    UnknownFormat(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Replaces newlines with spaces, collapses whitespace runs and trims.
pub fn clean_text(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Applies [`clean_text`] to every document.
pub fn clean(corpus: &Corpus) -> Corpus {
    let documents = corpus
        .documents
        .iter()
        .map(|d| LabeledDocument {
            text: clean_text(&d.text),
            ..d.clone()
        })
        .collect();
    Corpus::new(corpus.source_name.clone(), documents)
}

/// Keeps the first document for each distinct cleaned text.
pub fn deduplicate(corpus: &Corpus) -> Corpus {
    let mut seen = HashSet::new();
    let documents = corpus
        .documents
        .iter()
        .filter(|d| seen.insert(clean_text(&d.text)))
        .cloned()
        .collect();
    Corpus::new(corpus.source_name.clone(), documents)
}

/// Seeded shuffle then cut at `floor(train_fraction * n)`.
pub fn split_train_test(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus), CorpusError> {
    spec.validate()?;
    let n = corpus.len();
    if n < 2 {
        return Err(CorpusError::TooSmall(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let n_train = (spec.train_fraction * n as f64).floor() as usize;
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus.documents[i].clone()).collect();
    let train = Corpus::new(format!("{}:train", corpus.source_name), pick(&order[..n_train]));
    let test = Corpus::new(format!("{}:test", corpus.source_name), pick(&order[n_train..]));

    if let (Some(a), Some(b)) = (ai_fraction(&train), ai_fraction(&test)) {
        if (a - b).abs() > 0.05 {
            log::warn!(
                "class proportions differ between splits: train {:.1}% AI, test {:.1}% AI",
                100.0 * a,
                100.0 * b
            );
        }
    }
    Ok((train, test))
}

fn ai_fraction(c: &Corpus) -> Option<f64> {
    if c.is_empty() {
        return None;
    }
    Some(c.class_counts().1 as f64 / c.len() as f64)
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    #[serde(default)]
    id: Option<serde_json::Value>,
    text: Option<String>,
    #[serde(default)]
    domain: Option<String>,
    #[serde(flatten)]
    rest: serde_json::Map<String, serde_json::Value>,
}

/// An unlabeled text to score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextRecord {
    pub id: String,
    pub text: String,
}

pub fn load_corpus(path: &Path, format: CorpusFormat, label: &LabelSource) -> Result<Corpus, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::NotFound(path.to_path_buf()));
    }
    let records = match format {
        CorpusFormat::Jsonl => read_jsonl(path, Some(label))?,
        CorpusFormat::Csv => read_csv(path, Some(label))?,
    };
    if records.is_empty() {
        return Err(CorpusError::Empty);
    }
    let documents = records
        .into_iter()
        .map(|r| LabeledDocument {
            id: r.id,
            text: r.text,
            label: r.label.expect("label source supplied"),
            domain_tag: r.domain,
        })
        .collect();
    let source_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Corpus::new(source_name, documents))
}

/// Infers the format from the extension, then loads.
pub fn load_corpus_auto(path: &Path, label: &LabelSource) -> Result<Corpus, CorpusError> {
    let format = CorpusFormat::from_path(path).ok_or_else(|| CorpusError::UnknownFormat(path.to_path_buf()))?;
    load_corpus(path, format, label)
}

/// Loads texts without labels. Plain `.txt` files hold one text per line.
pub fn load_texts(path: &Path) -> Result<Vec<TextRecord>, CorpusError> {
    if !path.exists() {
        return Err(CorpusError::NotFound(path.to_path_buf()));
    }
    let records = match CorpusFormat::from_path(path) {
        Some(CorpusFormat::Jsonl) => read_jsonl(path, None)?,
        Some(CorpusFormat::Csv) => read_csv(path, None)?,
        None => {
            let reader = BufReader::new(File::open(path)?);
            let mut out = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                out.push(RawRecord {
                    id: out.len().to_string(),
                    text: line,
                    label: None,
                    domain: None,
                    line: i + 1,
                });
            }
            out
        }
    };
    if records.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(records
        .into_iter()
        .map(|r| TextRecord { id: r.id, text: r.text })
        .collect())
}

struct RawRecord {
    id: String,
    text: String,
    label: Option<Label>,
    domain: Option<String>,
    #[allow(dead_code)]
    line: usize,
}

fn parse_label(value: &str, line: usize) -> Result<Label, CorpusError> {
    let malformed = || CorpusError::Malformed {
        line,
        reason: format!("label must be 0 or 1, got {value:?}"),
    };
    let n: f64 = value.trim().parse().map_err(|_| malformed())?;
    if n == 0.0 {
        Ok(Label::Human)
    } else if n == 1.0 {
        Ok(Label::Ai)
    } else {
        Err(malformed())
    }
}

fn json_label(value: Option<&serde_json::Value>, column: &str, line: usize) -> Result<Label, CorpusError> {
    match value {
        Some(serde_json::Value::Number(n)) => parse_label(&n.to_string(), line),
        Some(serde_json::Value::String(s)) => parse_label(s, line),
        Some(serde_json::Value::Bool(b)) => Ok(if *b { Label::Ai } else { Label::Human }),
        _ => Err(CorpusError::Malformed {
            line,
            reason: format!("missing label field {column:?}"),
        }),
    }
}

fn check_text(text: Option<String>, line: usize) -> Result<String, CorpusError> {
    match text {
        Some(t) if !clean_text(&t).is_empty() => Ok(t),
        Some(_) => Err(CorpusError::Malformed {
            line,
            reason: "empty text".to_string(),
        }),
        None => Err(CorpusError::Malformed {
            line,
            reason: "missing text field".to_string(),
        }),
    }
}

fn read_jsonl(path: &Path, label: Option<&LabelSource>) -> Result<Vec<RawRecord>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            reason: e.to_string(),
        })?;
        let text = check_text(rec.text, line_no)?;
        let label = match label {
            None => None,
            Some(LabelSource::Fixed(l)) => Some(*l),
            Some(LabelSource::Column(col)) => {
                let value = if col == "id" || col == "text" || col == "domain" {
                    None
                } else {
                    rec.rest.get(col)
                };
                Some(json_label(value, col, line_no)?)
            }
        };
        let id = match rec.id {
            Some(serde_json::Value::String(s)) => s,
            Some(serde_json::Value::Null) | None => out.len().to_string(),
            Some(other) => other.to_string(),
        };
        out.push(RawRecord {
            id,
            text,
            label,
            domain: rec.domain,
            line: line_no,
        });
    }
    Ok(out)
}

fn read_csv(path: &Path, label: Option<&LabelSource>) -> Result<Vec<RawRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let text_col = column("text").ok_or(CorpusError::Malformed {
        line: 1,
        reason: "header has no \"text\" column".to_string(),
    })?;
    let id_col = column("id");
    let domain_col = column("domain");
    let label_col = match label {
        Some(LabelSource::Column(name)) => Some(column(name).ok_or_else(|| CorpusError::Malformed {
            line: 1,
            reason: format!("header has no {name:?} column"),
        })?),
        _ => None,
    };

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line_no = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let text = check_text(row.get(text_col).map(str::to_string), line_no)?;
        let label = match label {
            None => None,
            Some(LabelSource::Fixed(l)) => Some(*l),
            Some(LabelSource::Column(_)) => {
                let raw = row.get(label_col.expect("checked above")).unwrap_or("");
                Some(parse_label(raw, line_no)?)
            }
        };
        let id = id_col
            .and_then(|c| row.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .unwrap_or_else(|| out.len().to_string());
        let domain = domain_col
            .and_then(|c| row.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        out.push(RawRecord {
            id,
            text,
            label,
            domain,
            line: line_no,
        });
    }
    Ok(out)
}

pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for doc in &corpus.documents {
        serde_json::to_writer(&mut w, doc).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "text", "label", "domain"])?;
    for doc in &corpus.documents {
        let label = doc.label.to_string();
        w.write_record([
            doc.id.as_str(),
            doc.text.as_str(),
            label.as_str(),
            doc.domain_tag.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<(), CorpusError> {
    match format {
        CorpusFormat::Jsonl => write_jsonl(corpus, path),
        CorpusFormat::Csv => write_csv(corpus, path),
    }
}
