//! LIME-style word attributions for a single text.
//!
//! Words are removed bag-of-words style (every occurrence at once), the
//! black box scores each perturbed text, and a kernel-weighted ridge
//! regression on the keep/remove mask gives one signed weight per word.
//! Positive weights push toward the AI class.

use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{batched_predict, PipelineError, TextScorer};
use crate::text::{tokenize, TokenizerConfig};

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("text has no tokens to explain")]
    EmptyInput,
    #[error("invalid explanation config: {0}")]
    InvalidConfig(String),
    #[error("surrogate needs at least two samples with distinct masks")]
    DegenerateSamples,
    #[error("sample {0} has no black-box score")]
    Unscored(usize),
    #[error("surrogate system is not positive definite")]
    Singular,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplanationConfig {
    pub num_samples: usize,
    pub top_k: usize,
    pub kernel_width: f64,
    pub ridge_penalty: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ExplanationConfig {
    fn default() -> Self {
        ExplanationConfig {
            num_samples: 5000,
            top_k: 10,
            kernel_width: 25.0,
            ridge_penalty: 1.0,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl ExplanationConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        let bad = |m: &str| Err(ExplainError::InvalidConfig(m.to_string()));
        if self.num_samples < 2 {
            return bad("num_samples must be >= 2");
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1");
        }
        if !(self.kernel_width > 0.0) {
            return bad("kernel_width must be > 0");
        }
        if !(self.ridge_penalty > 0.0) {
            return bad("ridge_penalty must be > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        Ok(())
    }
}

/// A token sequence indexed by distinct word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpretableInstance {
    pub tokens: Vec<String>,
    /// First-occurrence order.
    pub distinct_words: Vec<String>,
    /// `positions[w]` lists the token indices holding `distinct_words[w]`.
    pub positions: Vec<Vec<usize>>,
}

impl InterpretableInstance {
    pub fn n_words(&self) -> usize {
        self.distinct_words.len()
    }

    /// Surviving tokens joined by single spaces, in original order.
    pub fn reconstruct(&self, mask: &[bool]) -> String {
        let mut keep = vec![false; self.tokens.len()];
        for (w, pos) in self.positions.iter().enumerate() {
            if mask[w] {
                pos.iter().for_each(|&p| keep[p] = true);
            }
        }
        let kept: Vec<&str> = self
            .tokens
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| t.as_str())
            .collect();
        kept.join(" ")
    }
}

pub fn index_words(tokens: &[String]) -> Result<InterpretableInstance, ExplainError> {
    if tokens.is_empty() {
        return Err(ExplainError::EmptyInput);
    }
    let mut distinct_words: Vec<String> = Vec::new();
    let mut positions: Vec<Vec<usize>> = Vec::new();
    let mut lookup = std::collections::HashMap::new();
    for (i, t) in tokens.iter().enumerate() {
        let w = *lookup.entry(t.as_str()).or_insert_with(|| {
            distinct_words.push(t.clone());
            positions.push(Vec::new());
            distinct_words.len() - 1
        });
        positions[w].push(i);
    }
    Ok(InterpretableInstance {
        tokens: tokens.to_vec(),
        distinct_words,
        positions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSample {
    /// `true` = word kept.
    pub mask: Vec<bool>,
    pub text: String,
    pub weight: f64,
    /// Filled in once the black box has scored `text`.
    pub p_ai: Option<f64>,
}

/// `exp(-(100 · d)² / width²)` with `d = 1 - cos(mask, all-ones)`; an
/// all-zero mask has distance 1.
pub fn kernel_weight(mask: &[bool], kernel_width: f64) -> f64 {
    let kept = mask.iter().filter(|&&m| m).count();
    let distance = if kept == 0 {
        1.0
    } else {
        1.0 - (kept as f64 / mask.len() as f64).sqrt()
    };
    (-(100.0 * distance).powi(2) / (kernel_width * kernel_width)).exp()
}

/// Sample 0 is the original text; each later sample removes a uniform
/// `k`-subset of distinct words, `k` uniform in `1..=d`.
pub fn sample_perturbations(inst: &InterpretableInstance, cfg: &ExplanationConfig) -> Vec<PerturbationSample> {
    let d = inst.n_words();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut masks = Vec::with_capacity(cfg.num_samples);
    masks.push(vec![true; d]);
    for _ in 1..cfg.num_samples {
        let k = rng.gen_range(1..=d);
        let mut mask = vec![true; d];
        for w in index::sample(&mut rng, d, k) {
            mask[w] = false;
        }
        masks.push(mask);
    }
    masks
        .into_iter()
        .map(|mask| PerturbationSample {
            text: inst.reconstruct(&mask),
            weight: kernel_weight(&mask, cfg.kernel_width),
            mask,
            p_ai: None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Weighted coefficient of determination on the samples.
    pub r2: f64,
}

/// Weighted ridge regression of `y` on binary features with an unpenalized
/// intercept: solves `(ZᵀWZ + λI')β = ZᵀWy`.
pub fn weighted_ridge(masks: &[Vec<bool>], y: &[f64], weights: &[f64], lambda: f64) -> Result<Surrogate, ExplainError> {
    let n = masks.len();
    let d = masks.first().map_or(0, Vec::len);
    let distinct = masks.iter().any(|m| *m != masks[0]);
    if n < 2 || !distinct {
        return Err(ExplainError::DegenerateSamples);
    }
    // column 0 is the intercept
    let p = d + 1;
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut active = Vec::with_capacity(p);
    for ((mask, &yi), &wi) in masks.iter().zip(y).zip(weights) {
        active.clear();
        active.push(0);
        active.extend(mask.iter().enumerate().filter(|(_, &m)| m).map(|(j, _)| j + 1));
        for &r in &active {
            b[r] += wi * yi;
            for &c in &active {
                a[r * p + c] += wi;
            }
        }
    }
    for j in 1..p {
        a[j * p + j] += lambda;
    }
    let beta = cholesky_solve(&mut a, &b, p).ok_or(ExplainError::Singular)?;

    let predict = |mask: &[bool]| {
        beta[0]
            + mask
                .iter()
                .zip(&beta[1..])
                .filter(|(&m, _)| m)
                .map(|(_, b)| b)
                .sum::<f64>()
    };
    let w_sum: f64 = weights.iter().sum();
    let y_mean = y.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / w_sum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((mask, &yi), &wi) in masks.iter().zip(y).zip(weights) {
        ss_res += wi * (yi - predict(mask)).powi(2);
        ss_tot += wi * (yi - y_mean).powi(2);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Surrogate {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        r2,
    })
}

/// In-place Cholesky of the symmetric `p × p` matrix `a`, then solve.
fn cholesky_solve(a: &mut [f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    for j in 0..p {
        let mut diag = a[j * p + j];
        for k in 0..j {
            diag -= a[j * p + k] * a[j * p + k];
        }
        if !(diag > 0.0) {
            return None;
        }
        let l = diag.sqrt();
        a[j * p + j] = l;
        for i in j + 1..p {
            let mut v = a[i * p + j];
            for k in 0..j {
                v -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = v / l;
        }
    }
    let mut z = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            z[i] -= a[i * p + k] * z[k];
        }
        z[i] /= a[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            z[i] -= a[k * p + i] * z[k];
        }
        z[i] /= a[i * p + i];
    }
    Some(z)
}

/// Fits the surrogate to scored samples.
pub fn fit_surrogate(samples: &[PerturbationSample], ridge_penalty: f64) -> Result<Surrogate, ExplainError> {
    let mut y = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        y.push(s.p_ai.ok_or(ExplainError::Unscored(i))?);
    }
    let masks: Vec<Vec<bool>> = samples.iter().map(|s| s.mask.clone()).collect();
    let weights: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    weighted_ridge(&masks, &y, &weights, ridge_penalty)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub p_human: f64,
    pub p_ai: f64,
    /// Sorted by `|weight|` descending.
    pub attributions: Vec<Attribution>,
    pub intercept: f64,
    pub r2: f64,
    pub config: ExplanationConfig,
}

/// Explains `scorer`'s AI probability for `text`, tokenized with `tokenizer`.
pub fn explain(
    scorer: &dyn TextScorer,
    tokenizer: &TokenizerConfig,
    text: &str,
    cfg: &ExplanationConfig,
) -> Result<Explanation, ExplainError> {
    cfg.validate()?;
    let tokens = tokenize(tokenizer, text);
    let inst = index_words(&tokens)?;
    let mut samples = sample_perturbations(&inst, cfg);
    let texts: Vec<String> = samples.iter().map(|s| s.text.clone()).collect();
    let scores = batched_predict(scorer, &texts, cfg.batch_size)?;
    for (s, p) in samples.iter_mut().zip(&scores) {
        s.p_ai = Some(*p);
    }
    let surrogate = fit_surrogate(&samples, cfg.ridge_penalty)?;

    let mut order: Vec<usize> = (0..inst.n_words()).collect();
    order.sort_by(|&a, &b| {
        surrogate.coefficients[b]
            .abs()
            .total_cmp(&surrogate.coefficients[a].abs())
    });
    let attributions = order
        .into_iter()
        .take(cfg.top_k)
        .map(|w| Attribution {
            word: inst.distinct_words[w].clone(),
            weight: surrogate.coefficients[w],
        })
        .collect();
    let p_ai = scores[0];
    Ok(Explanation {
        p_human: 1.0 - p_ai,
        p_ai,
        attributions,
        intercept: surrogate.intercept,
        r2: surrogate.r2,
        config: cfg.clone(),
    })
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Horizontal bar chart: one `<rect class="bar">` per attribution, AI-ward
/// weights to the right in orange, human-ward to the left in blue.
pub fn render_svg(e: &Explanation) -> String {
    const WIDTH: f64 = 640.0;
    const ROW: f64 = 24.0;
    const TOP: f64 = 48.0;
    const LABEL: f64 = 140.0;
    let half = (WIDTH - LABEL - 20.0) / 2.0;
    let axis = LABEL + half;
    let height = TOP + ROW * e.attributions.len() as f64 + 16.0;
    let max = e.attributions.iter().map(|a| a.weight.abs()).fold(0.0, f64::max);
    let scale = if max > 0.0 { half / max } else { 0.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="20" font-weight="bold">Prediction probabilities: human {:.3}, AI {:.3}</text>"#,
        e.p_human, e.p_ai
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="38" text-anchor="end">human</text><text x="{:.1}" y="38">AI</text>"#,
        axis - 6.0,
        axis + 6.0
    );
    for (i, a) in e.attributions.iter().enumerate() {
        let y = TOP + ROW * i as f64;
        let len = a.weight.abs() * scale;
        let (x, fill) = if a.weight >= 0.0 {
            (axis, "#ff7f0e")
        } else {
            (axis - len, "#1f77b4")
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LABEL - 6.0,
            y + 15.0,
            xml_escape(&a.word)
        );
        let _ = writeln!(
            s,
            r#"<rect class="bar" x="{x:.2}" y="{:.1}" width="{len:.2}" height="{:.1}" fill="{fill}"><title>{:.4}</title></rect>"#,
            y + 3.0,
            ROW - 6.0,
            a.weight
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{axis:.1}" y1="{:.1}" x2="{axis:.1}" y2="{:.1}" stroke="#333"/>"##,
        TOP,
        height - 12.0
    );
    s.push_str("</svg>\n");
    s
}
