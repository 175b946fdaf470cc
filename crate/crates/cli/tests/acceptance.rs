//! Acceptance suite. Runs every criterion and prints one line each:
//! `PASS`, `FAIL` or `SKIP` (for criteria whose datasets are not present).
//!
//! Dataset-backed criteria read their inputs from the environment:
//! - `TEXTSLEUTH_DESK_CORPUS`: labeled corpus (JSONL or CSV, `text` and
//!   `label` fields) mixing OpenGPTText-Final and OpenWebText documents.
//! - `TEXTSLEUTH_FULL_TRAIN` / `TEXTSLEUTH_FULL_TEST`: the full
//!   OpenGPTText-Final train and test partitions in the same format.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use textsleuth::classifiers::boosting::{leaf_weight, split_gain, GradStats};
use textsleuth::classifiers::mlp::MlpModel;
use textsleuth::classifiers::naive_bayes::fit_naive_bayes;
use textsleuth::classifiers::tree::Node;
use textsleuth::classifiers::{
    BoostingParams, ClassifierKind, ClassifierSpec, Hyperparameters, NaiveBayesParams, Registry, TrainedModel,
};
use textsleuth::corpus::{
    clean, deduplicate, load_corpus_auto, split_train_test, Corpus, Label, LabelSource, SplitSpec,
};
use textsleuth::explain::{explain, ExplanationConfig};
use textsleuth::metrics::{confusion, evaluate, roc_curve, scalar_metrics};
use textsleuth::pipeline::{batched_predict, train_pipeline, FnScorer, Pipeline};
use textsleuth::text::{FeatureMatrix, TokenizerConfig};
use textsleuth_cli::commands::{cmd_explain, cmd_train, TrainOptions};
use textsleuth_cli::config::RunConfig;

enum Verdict {
    Pass(String),
    Skip(String),
}

type Check = Result<Verdict, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn label(b: bool) -> Label {
    if b {
        Label::Ai
    } else {
        Label::Human
    }
}

// ---------------------------------------------------------------- 1

fn metric_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.gen_range(2..=200);
        let pred: Vec<Label> = (0..n).map(|_| label(rng.gen_bool(0.5))).collect();
        let truth: Vec<Label> = (0..n).map(|_| label(rng.gen_bool(0.5))).collect();
        let s = scalar_metrics(&confusion(&pred, &truth).map_err(|e| e.to_string())?);

        let count = |p: Label, t: Label| pred.iter().zip(&truth).filter(|(a, b)| **a == p && **b == t).count() as f64;
        let (tp, fp) = (count(Label::Ai, Label::Ai), count(Label::Ai, Label::Human));
        let (tn, fn_) = (count(Label::Human, Label::Human), count(Label::Human, Label::Ai));
        let ratio = |a: f64, b: f64| if b == 0.0 { None } else { Some(a / b) };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        let expect = [
            ("accuracy", Some((tp + tn) / n as f64), s.accuracy),
            ("precision", precision, s.precision),
            ("recall", recall, s.recall),
            ("f1", f1, s.f1),
        ];
        for (name, want, got) in expect {
            match (want, got.value()) {
                (Some(w), Some(g)) => ensure((w - g).abs() <= 1e-12, || format!("case {case}: {name} {g} vs {w}"))?,
                (None, None) => {}
                _ => return Err(format!("case {case}: {name} definedness differs")),
            }
        }
        if let (Some(tpr), Some(fnr)) = (s.recall.value(), s.fnr.value()) {
            ensure(tpr + fnr == 1.0, || format!("case {case}: TPR+FNR = {}", tpr + fnr))?;
        }
        if let (Some(tnr), Some(fpr)) = (s.tnr.value(), s.fpr.value()) {
            ensure(tnr + fpr == 1.0, || format!("case {case}: TNR+FPR = {}", tnr + fpr))?;
        }
    }
    Ok(Verdict::Pass("1000 cases".into()))
}

// ---------------------------------------------------------------- 2

fn mann_whitney(scores: &[f64], truth: &[Label]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, ti) in truth.iter().enumerate() {
        for (j, tj) in truth.iter().enumerate() {
            if ti.is_ai() && !tj.is_ai() {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn auc_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let n = rng.gen_range(2..=12);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 5.0).collect();
        let mut truth: Vec<Label> = (0..n).map(|_| label(rng.gen_bool(0.5))).collect();
        truth[0] = Label::Ai;
        truth[1] = Label::Human;
        truth.shuffle(&mut rng);
        let auc = roc_curve(&scores, &truth).map_err(|e| e.to_string())?.auc;
        let want = mann_whitney(&scores, &truth);
        worst = worst.max((auc - want).abs());
        ensure((auc - want).abs() <= 1e-12, || format!("case {case}: {auc} vs {want}"))?;
    }
    Ok(Verdict::Pass(format!("200 cases, max error {worst:.1e}")))
}

// ---------------------------------------------------------------- 3

fn bayes_oracle(x: &[Vec<f64>], y: &[Label], alpha: f64, q: &[f64]) -> f64 {
    let d = q.len();
    let mut log_joint = [0.0f64; 2];
    for (c, lj) in log_joint.iter_mut().enumerate() {
        let members: Vec<&Vec<f64>> = x
            .iter()
            .zip(y)
            .filter(|(_, l)| l.as_u8() as usize == c)
            .map(|(r, _)| r)
            .collect();
        let totals: Vec<f64> = (0..d).map(|j| members.iter().map(|r| r[j]).sum()).collect();
        let total: f64 = totals.iter().sum();
        *lj = (members.len() as f64 / x.len() as f64).ln();
        for j in 0..d {
            *lj += q[j] * ((totals[j] + alpha) / (total + alpha * d as f64)).ln();
        }
    }
    let m = log_joint[0].max(log_joint[1]);
    let (e0, e1) = ((log_joint[0] - m).exp(), (log_joint[1] - m).exp());
    e1 / (e0 + e1)
}

fn naive_bayes_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = rng.gen_range(2..=5);
        let d = rng.gen_range(1..=6);
        let value = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..3.0)
            }
        };
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| value(&mut rng)).collect()).collect();
        let mut y: Vec<Label> = (0..n).map(|_| label(rng.gen_bool(0.5))).collect();
        y[0] = Label::Human;
        y[1] = Label::Ai;
        let q: Vec<f64> = (0..d).map(|_| value(&mut rng)).collect();
        let alpha = rng.gen_range(0.1..2.0);
        let model = fit_naive_bayes(&FeatureMatrix::from_dense(&x), &y, &NaiveBayesParams { alpha })
            .map_err(|e| e.to_string())?;
        let got = TrainedModel::NaiveBayes(model)
            .predict_proba(&FeatureMatrix::from_dense(std::slice::from_ref(&q)))
            .map_err(|e| e.to_string())?[0]
            .p_ai;
        let want = bayes_oracle(&x, &y, alpha, &q);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-9, || format!("case {case}: {got} vs {want}"))?;
    }
    Ok(Verdict::Pass(format!("50 corpora, max error {worst:.1e}")))
}

// ---------------------------------------------------------------- 4

fn mlp_gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..3).map(|_| rng.gen_range(0.1..1.0)).collect())
        .collect();
    let x = FeatureMatrix::from_dense(&rows);
    let y = [Label::Human, Label::Ai, Label::Ai, Label::Human];
    let mut model = MlpModel::initialized(3, &[5], &mut ChaCha8Rng::seed_from_u64(7));
    let idx = [0, 1, 2, 3];
    let wd = 1e-4;
    let (_, grad) = model.loss_and_gradient(&x, &y, &idx, wd);
    let theta = model.flat_params();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..theta.len() {
        let mut at = |delta: f64| {
            let mut t = theta.clone();
            t[k] += delta;
            model.set_flat_params(&t);
            model.loss_and_gradient(&x, &y, &idx, wd).0
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let scale = grad[k].abs().max(fd.abs());
        let rel = if scale < 1e-10 {
            0.0
        } else {
            (grad[k] - fd).abs() / scale
        };
        worst = worst.max(rel);
        ensure(rel < 1e-4, || {
            format!("parameter {k}: analytic {} vs numeric {fd}", grad[k])
        })?;
    }
    Ok(Verdict::Pass(format!(
        "{} parameters, max relative error {worst:.1e}",
        theta.len()
    )))
}

// ---------------------------------------------------------------- 5

fn gbt_hand_case() -> Check {
    // three AI rows and one human row at p = 0.5: G = -1, H = 1
    let y = [Label::Ai, Label::Ai, Label::Ai, Label::Human];
    let x = FeatureMatrix::from_dense(&vec![vec![0.0]; 4]);
    let spec = ClassifierSpec {
        hyperparameters: Hyperparameters::GradientBoostedTrees(BoostingParams {
            n_rounds: 1,
            learning_rate: 0.3,
            lambda: 1.0,
            ..Default::default()
        }),
        seed: 0,
    };
    let TrainedModel::GradientBoostedTrees(m) = Registry::builtin().fit(&spec, &x, &y).map_err(|e| e.to_string())?
    else {
        return Err("wrong model kind".into());
    };
    let w = *m.trees[0].leaf(x.row(0));
    ensure(leaf_weight(-1.0, 1.0, 1.0) == 0.5 && w == 0.5, || {
        format!("leaf weight {w}")
    })?;
    let logit = m.logit(x.row(0));
    ensure(logit == 0.15, || format!("logit {logit}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..200 {
        let n = rng.gen_range(2..=8);
        let mut values: Vec<f64> = (0..n).map(|i| (i + 1) as f64 / 10.0).collect();
        values.shuffle(&mut rng);
        let cut = rng.gen_range(1..n);
        let ai_high = rng.gen_bool(0.5);
        let labels: Vec<Label> = values
            .iter()
            .map(|&v| label((v > cut as f64 / 10.0 + 0.05) == ai_high))
            .collect();
        let stats = |l: Label| GradStats {
            g: 0.5 - l.as_u8() as f64,
            h: 0.25,
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let total = labels.iter().fold(GradStats::default(), |acc, &l| acc + stats(l));
        let mut left = GradStats::default();
        let (mut separating, mut best_other) = (f64::NAN, f64::NEG_INFINITY);
        for (k, &i) in order[..n - 1].iter().enumerate() {
            left = left + stats(labels[i]);
            let gain = split_gain(left, total - left, 1.0);
            if k + 1 == cut {
                separating = gain;
            } else {
                best_other = best_other.max(gain);
            }
        }
        ensure(separating > best_other, || {
            format!("case {case}: separating {separating} <= {best_other}")
        })?;

        // the fitted tree picks that threshold too
        let spec = ClassifierSpec {
            hyperparameters: Hyperparameters::GradientBoostedTrees(BoostingParams {
                n_rounds: 1,
                max_depth: 1,
                min_child_weight: 0.0,
                ..Default::default()
            }),
            seed: 0,
        };
        let xm = FeatureMatrix::from_dense(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>());
        let TrainedModel::GradientBoostedTrees(m) = Registry::builtin()
            .fit(&spec, &xm, &labels)
            .map_err(|e| e.to_string())?
        else {
            return Err("wrong model kind".into());
        };
        let Node::Split { threshold, .. } = m.trees[0].nodes[0] else {
            return Err(format!("case {case}: no root split"));
        };
        let want = (cut as f64 + 0.5) / 10.0;
        ensure((threshold - want).abs() < 1e-12, || {
            format!("case {case}: threshold {threshold} vs {want}")
        })?;
    }
    Ok(Verdict::Pass("hand case exact; 200 separable sets".into()))
}

// ---------------------------------------------------------------- 6

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut e = k;
            while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[k]] {
                e += 1;
            }
            for &i in &idx[k..=e] {
                r[i] = (k + e) as f64 / 2.0;
            }
            k = e + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn lime_fidelity() -> Check {
    let mut min_rho = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let d = rng.gen_range(4..=10);
        let words: Vec<String> = (0..d).map(|j| format!("w{j}")).collect();
        // Σ|c| ≤ 1 keeps the score inside [0, 1]
        let coef: Vec<f64> = (0..d)
            .map(|_| rng.gen_range(0.0..1.0 / d as f64) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let base = -coef.iter().filter(|c| **c < 0.0).sum::<f64>();
        let (w2, c2) = (words.clone(), coef.clone());
        let scorer = FnScorer(move |t: &str| {
            let present: Vec<&str> = t.split_whitespace().collect();
            base + w2
                .iter()
                .zip(&c2)
                .filter(|(w, _)| present.contains(&w.as_str()))
                .map(|(_, c)| c)
                .sum::<f64>()
        });
        let cfg = ExplanationConfig {
            num_samples: 5000,
            seed,
            ..Default::default()
        };
        let e = explain(&scorer, &TokenizerConfig::default(), &words.join(" "), &cfg).map_err(|e| e.to_string())?;
        let mut beta = vec![0.0; d];
        for a in &e.attributions {
            let j = words.iter().position(|w| *w == a.word).ok_or("unknown word")?;
            beta[j] = a.weight;
        }
        for j in 0..d {
            if coef[j].abs() >= 0.05 {
                ensure(beta[j].signum() == coef[j].signum(), || {
                    format!("seed {seed}: word {j} has c = {} but beta = {}", coef[j], beta[j])
                })?;
            }
        }
        let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
        let rho = spearman(&abs(&beta), &abs(&coef));
        min_rho = min_rho.min(rho);
        ensure(rho >= 0.9, || format!("seed {seed}: spearman {rho}"))?;
    }
    Ok(Verdict::Pass(format!("20 seeds, min spearman {min_rho:.3}")))
}

// ---------------------------------------------------------------- 7

const POOL: [&str; 16] = [
    "the",
    "cat",
    "park",
    "dinner",
    "delve",
    "tapestry",
    "crucial",
    "moreover",
    "honestly",
    "game",
    "intricate",
    "landscape",
    "we",
    "bus",
    "pivotal",
    "zebra",
];

fn random_texts(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..15);
            (0..len)
                .map(|_| *POOL.choose(rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn synthetic_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n)
        .map(|i| {
            let ai = i % 2 == 1;
            // AI documents lean on the second half of the pool
            let len = rng.gen_range(5..20);
            let text: Vec<&str> = (0..len)
                .map(|_| {
                    let lean = rng.gen_bool(0.7) == ai;
                    let half = if lean { 4..11 } else { 0..4 };
                    POOL[rng.gen_range(half)]
                })
                .collect();
            textsleuth::corpus::LabeledDocument {
                id: i.to_string(),
                text: text.join(" "),
                label: label(ai),
                domain_tag: None,
            }
        })
        .collect();
    Corpus::new("synthetic", docs)
}

fn batch_invariance() -> Check {
    let train = synthetic_corpus(60, 7);
    let texts = random_texts(100, &mut ChaCha8Rng::seed_from_u64(77));
    for kind in ClassifierKind::ALL {
        let spec = ClassifierSpec::new(kind, 7);
        let (p, _) = train_pipeline(&train, &TokenizerConfig::default(), &spec, &Registry::builtin())
            .map_err(|e| e.to_string())?;
        let one = batched_predict(&p, &texts, 1).map_err(|e| e.to_string())?;
        for b in [7, 32] {
            let other = batched_predict(&p, &texts, b).map_err(|e| e.to_string())?;
            ensure(other == one, || format!("{kind}: batch size {b} differs from 1"))?;
        }
    }
    Ok(Verdict::Pass("5 kinds x 100 texts".into()))
}

// ---------------------------------------------------------------- 8, 9

fn load_env_corpus(var: &str) -> Option<Result<Corpus, String>> {
    let path = PathBuf::from(std::env::var_os(var)?);
    Some(
        load_corpus_auto(&path, &LabelSource::default())
            .map(|c| deduplicate(&clean(&c)))
            .map_err(|e| format!("{var}: {e}")),
    )
}

fn accuracy_of(p: &Pipeline, test: &Corpus) -> Result<textsleuth::metrics::EvalReport, String> {
    let scores = batched_predict(p, &test.texts(), 32).map_err(|e| e.to_string())?;
    evaluate(&scores, &test.labels()).map_err(|e| e.to_string())
}

fn desk_scale_ordering() -> Check {
    let Some(corpus) = load_env_corpus("TEXTSLEUTH_DESK_CORPUS") else {
        return Ok(Verdict::Skip("dataset not present (set TEXTSLEUTH_DESK_CORPUS)".into()));
    };
    let corpus = corpus?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pick = |l: Label| {
        let mut docs: Vec<_> = corpus.documents.iter().filter(|d| d.label == l).cloned().collect();
        docs.shuffle(&mut rng);
        docs.truncate(1000);
        docs
    };
    let (humans, ais) = (pick(Label::Human), pick(Label::Ai));
    ensure(humans.len() == 1000 && ais.len() == 1000, || {
        "need 1000 documents per class".into()
    })?;
    let subset = Corpus::new("desk", humans.into_iter().chain(ais).collect());
    let (train, test) = split_train_test(&subset, &SplitSpec::default()).map_err(|e| e.to_string())?;
    let mut acc = Vec::new();
    for kind in ClassifierKind::ALL {
        let (p, _) = train_pipeline(
            &train,
            &TokenizerConfig::default(),
            &ClassifierSpec::new(kind, 0),
            &Registry::builtin(),
        )
        .map_err(|e| e.to_string())?;
        let a = accuracy_of(&p, &test)?.scalars.accuracy.value().unwrap_or(0.0);
        acc.push((kind, a));
    }
    let nb = acc[0].1;
    let line: Vec<String> = acc.iter().map(|(k, a)| format!("{k} {a:.3}")).collect();
    for &(kind, a) in &acc[1..] {
        ensure(a > nb, || format!("{kind} not above naive bayes: {}", line.join(", ")))?;
        if matches!(
            kind,
            ClassifierKind::LogisticRegression | ClassifierKind::GradientBoostedTrees | ClassifierKind::Mlp
        ) {
            ensure(a >= nb + 0.05, || {
                format!("{kind} margin below 0.05: {}", line.join(", "))
            })?;
        }
    }
    Ok(Verdict::Pass(line.join(", ")))
}

/// Published scalars: accuracy, F1, FPR, FNR, TNR, TPR.
const PUBLISHED: [(ClassifierKind, [f64; 6]); 5] = [
    (ClassifierKind::NaiveBayes, [0.69, 0.59, 0.06, 0.56, 0.94, 0.44]),
    (ClassifierKind::LogisticRegression, [0.90, 0.91, 0.12, 0.08, 0.88, 0.92]),
    (ClassifierKind::RandomForest, [0.85, 0.86, 0.22, 0.09, 0.78, 0.91]),
    (
        ClassifierKind::GradientBoostedTrees,
        [0.91, 0.92, 0.10, 0.07, 0.90, 0.93],
    ),
    (ClassifierKind::Mlp, [0.89, 0.89, 0.12, 0.11, 0.88, 0.89]),
];

fn full_dataset_reproduction() -> Check {
    let (Some(train), Some(test)) = (
        load_env_corpus("TEXTSLEUTH_FULL_TRAIN"),
        load_env_corpus("TEXTSLEUTH_FULL_TEST"),
    ) else {
        return Ok(Verdict::Skip(
            "dataset not present (set TEXTSLEUTH_FULL_TRAIN and TEXTSLEUTH_FULL_TEST)".into(),
        ));
    };
    let (train, test) = (train?, test?);
    let mut notes = Vec::new();
    for (kind, want) in PUBLISHED {
        let (p, _) = train_pipeline(
            &train,
            &TokenizerConfig::default(),
            &ClassifierSpec::new(kind, 0),
            &Registry::builtin(),
        )
        .map_err(|e| e.to_string())?;
        let h = accuracy_of(&p, &test)?.headline();
        let got = [h.accuracy, h.f1_score, h.fpr, h.fnr, h.tnr, h.tpr].map(|m| m.value().unwrap_or(f64::NAN));
        for (name, (g, w)) in ["accuracy", "f1", "fpr", "fnr", "tnr", "tpr"]
            .iter()
            .zip(got.iter().zip(want))
        {
            ensure((g - w).abs() <= 0.05, || {
                format!("{kind} {name}: {g:.3} vs published {w}")
            })?;
        }
        notes.push(format!("{kind} acc {:.3}", got[0]));
    }
    Ok(Verdict::Pass(notes.join(", ")))
}

// ---------------------------------------------------------------- 10

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("train.jsonl");
    let lines: String = synthetic_corpus(40, 10)
        .documents
        .iter()
        .map(|d| format!("{}\n", json!({"id": d.id, "text": d.text, "label": d.label})))
        .collect();
    std::fs::write(&data, lines).map_err(|e| e.to_string())?;
    let model = dir.path().join("model.json");
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    for kind in ClassifierKind::ALL {
        let mut cfg = RunConfig::default().with_seed(10);
        cfg.classifier = ClassifierSpec::new(kind, 10);
        cfg.paths.train_data = Some(data.clone());
        cfg.paths.model_out = Some(model.clone());
        cmd_train(&cfg, &TrainOptions::default()).map_err(|e| e.to_string())?;
        let first = read(&model)?;
        cmd_train(&cfg, &TrainOptions::default()).map_err(|e| e.to_string())?;
        ensure(first == read(&model)?, || format!("{kind}: artifacts differ"))?;

        let ecfg = ExplanationConfig {
            num_samples: 1000,
            seed: 10,
            ..Default::default()
        };
        let text = "we delve into the intricate park landscape after dinner";
        let (mut a, mut b) = (Vec::new(), Vec::new());
        cmd_explain(&model, text, &ecfg, None, &mut a).map_err(|e| e.to_string())?;
        cmd_explain(&model, text, &ecfg, None, &mut b).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{kind}: explanation JSON differs"))?;
    }
    Ok(Verdict::Pass(
        "5 kinds: artifacts and explanations byte-identical".into(),
    ))
}

/// Number, name, check and optional runtime limit.
type Criterion = (u32, &'static str, fn() -> Check, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "metric identities", metric_identities, Some(Duration::from_secs(5))),
        (2, "AUC equals Mann-Whitney", auc_oracle, Some(Duration::from_secs(5))),
        (3, "naive Bayes closed form", naive_bayes_oracle, None),
        (4, "MLP gradient check", mlp_gradient_check, None),
        (5, "boosted tree hand case and split gain", gbt_hand_case, None),
        (
            6,
            "LIME fidelity on affine black boxes",
            lime_fidelity,
            Some(Duration::from_secs(60)),
        ),
        (7, "batch invariance", batch_invariance, None),
        (
            8,
            "desk-scale accuracy ordering",
            desk_scale_ordering,
            Some(Duration::from_secs(15 * 60)),
        ),
        (9, "full-dataset published metrics", full_dataset_reproduction, None),
        (10, "train and explain determinism", determinism, None),
    ];
    let mut failed = 0;
    for (id, name, check, limit) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(Verdict::Pass(_)), Some(l)) if elapsed > l => Err(format!("took {elapsed:.1?}, limit {l:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match result {
            Ok(Verdict::Pass(d)) => ("PASS", d),
            Ok(Verdict::Skip(d)) => ("SKIP", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {tag} {name} [{elapsed:.2?}]: {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
