use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};
use tempfile::TempDir;

use textsleuth::artifact::ModelArtifact;
use textsleuth::classifiers::{ClassifierKind, ClassifierSpec, Registry};
use textsleuth::corpus::{clean, deduplicate, load_corpus_auto, split_train_test, Label, LabelSource};
use textsleuth::explain::ExplanationConfig;
use textsleuth::pipeline::train_pipeline;
use textsleuth::text::OOV_INDEX;
use textsleuth_cli::commands::{
    cmd_datagen, cmd_evaluate, cmd_explain, cmd_predict, cmd_train, DatagenOptions, PredictInput, TrainOptions,
};
use textsleuth_cli::config::{Paths, RunConfig};
use textsleuth_cli::error::CliError;

const HUMAN: [&str; 5] = [
    "my cat knocked the mug off the table again",
    "we walked the dog to the park after dinner",
    "grandma baked bread and the kitchen smelled great",
    "the bus was late so i missed the first class",
    "honestly the game last night was a total mess",
];
const AI: [&str; 5] = [
    "it is crucial to delve into the intricate tapestry",
    "furthermore this multifaceted landscape underscores innovation",
    "in conclusion leveraging synergy fosters a robust paradigm",
    "moreover the intricate interplay underscores a pivotal shift",
    "delve deeper to harness this transformative and pivotal insight",
];

fn write_toy(dir: &Path) -> PathBuf {
    let path = dir.join("toy.jsonl");
    let mut lines = String::new();
    for (i, t) in HUMAN.iter().enumerate() {
        lines += &format!("{}\n", json!({"id": format!("h{i}"), "text": t, "label": 0}));
    }
    for (i, t) in AI.iter().enumerate() {
        lines += &format!("{}\n", json!({"id": format!("a{i}"), "text": t, "label": 1}));
    }
    fs::write(&path, lines).unwrap();
    path
}

fn config(dir: &Path, kind: ClassifierKind) -> RunConfig {
    RunConfig {
        classifier: ClassifierSpec::new(kind, 1),
        paths: Paths {
            train_data: Some(write_toy(dir)),
            model_out: Some(dir.join("model.json")),
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn train_artifact_round_trips_in_memory_predictions() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), ClassifierKind::NaiveBayes);
    let out = cmd_train(&cfg, &TrainOptions::default()).unwrap();
    assert_eq!(out.summary.n_documents, 8);
    assert_eq!(out.n_held_out, 2);

    // rebuild the same model in memory
    let corpus = deduplicate(&clean(
        &load_corpus_auto(cfg.paths.train_data.as_ref().unwrap(), &LabelSource::default()).unwrap(),
    ));
    let (train, _) = split_train_test(&corpus, &cfg.split).unwrap();
    let (mem, _) = train_pipeline(&train, &cfg.tokenizer, &cfg.classifier, &Registry::builtin()).unwrap();
    let loaded = ModelArtifact::load(&out.model_path).unwrap().pipeline().unwrap();
    let probe = [
        "delve into the park",
        "the cat and the tapestry",
        "",
        "zzz unseen words",
    ];
    assert_eq!(
        loaded.predict_proba(&probe).unwrap(),
        mem.predict_proba(&probe).unwrap()
    );
    assert_eq!(loaded, mem);
}

#[test]
fn tokens_seen_only_in_the_held_out_split_are_oov() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), ClassifierKind::NaiveBayes);
    let split_dir = dir.path().join("split");
    let out = cmd_train(
        &cfg,
        &TrainOptions {
            split_out: Some(split_dir.clone()),
            ..Default::default()
        },
    )
    .unwrap();
    let pipeline = ModelArtifact::load(&out.model_path).unwrap().pipeline().unwrap();
    let train = load_corpus_auto(&split_dir.join("train.jsonl"), &LabelSource::default()).unwrap();
    let test = load_corpus_auto(&split_dir.join("test.jsonl"), &LabelSource::default()).unwrap();
    assert_eq!(train.len() + test.len(), 10);
    let train_tokens: Vec<String> = train
        .documents
        .iter()
        .flat_map(|d| pipeline.vocabulary.tokenize(&d.text))
        .collect();
    let mut checked = 0;
    for d in &test.documents {
        for tok in pipeline.vocabulary.tokenize(&d.text) {
            if !train_tokens.contains(&tok) {
                assert_eq!(pipeline.vocabulary.index_of(&tok), OOV_INDEX, "{tok}");
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn training_twice_gives_identical_bytes() {
    for kind in [
        ClassifierKind::NaiveBayes,
        ClassifierKind::RandomForest,
        ClassifierKind::Mlp,
    ] {
        let dir = TempDir::new().unwrap();
        let cfg = config(dir.path(), kind);
        let a = cmd_train(&cfg, &TrainOptions::default()).unwrap();
        let first = fs::read(&a.model_path).unwrap();
        let b = cmd_train(&cfg, &TrainOptions::default()).unwrap();
        assert_eq!(first, fs::read(&b.model_path).unwrap(), "{kind}");
    }
}

#[test]
fn single_class_training_data_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("one.jsonl");
    let lines: String = HUMAN
        .iter()
        .map(|t| format!("{}\n", json!({"text": t, "label": 0})))
        .collect();
    fs::write(&path, lines).unwrap();
    let mut cfg = config(dir.path(), ClassifierKind::NaiveBayes);
    cfg.paths.train_data = Some(path);
    let err = cmd_train(&cfg, &TrainOptions::default()).unwrap_err();
    assert!(matches!(err, CliError::SingleClass { .. }), "{err}");
}

fn trained_on_everything(dir: &Path, kind: ClassifierKind) -> (RunConfig, PathBuf) {
    let mut cfg = config(dir, kind);
    // a pre-split test file means the whole training file is used
    cfg.paths.test_data = cfg.paths.train_data.clone();
    cfg.paths.report_out = Some(dir.join("report.json"));
    let out = cmd_train(&cfg, &TrainOptions::default()).unwrap();
    assert_eq!(out.n_held_out, 0);
    (cfg, out.model_path)
}

#[test]
fn evaluate_writes_report_and_curves() {
    let dir = TempDir::new().unwrap();
    let (cfg, model) = trained_on_everything(dir.path(), ClassifierKind::NaiveBayes);
    let doc = cmd_evaluate(&cfg, &model, None, None).unwrap();
    assert_eq!(doc.n_samples, 10);

    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let mut keys: Vec<&str> = report["metrics"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    keys.sort();
    assert_eq!(keys, ["accuracy", "auc", "f1_score", "fnr", "fpr", "tnr", "tpr"]);
    // training data is separable for the bag of words, so the model is perfect on it
    assert_eq!(report["metrics"]["accuracy"], 1.0);
    assert_eq!(report["metrics"]["fpr"], 0.0);
    assert_eq!(report["metrics"]["fnr"], 0.0);
    assert_eq!(report["metrics"]["auc"], 1.0);
    assert_eq!(report["positive_class"], "AI (label 1)");

    for key in ["roc_csv", "det_csv"] {
        let name = report["curves"][key].as_str().unwrap();
        let csv = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(csv.starts_with("threshold,x,y\n"));
        assert!(csv.lines().count() > 2);
    }
}

#[test]
fn tampered_vocabulary_fails_before_scoring() {
    let dir = TempDir::new().unwrap();
    let (cfg, model) = trained_on_everything(dir.path(), ClassifierKind::LogisticRegression);
    let mut artifact: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    let idf = artifact["vocabulary"]["idf"][1].as_f64().unwrap();
    artifact["vocabulary"]["idf"][1] = json!(idf + 1.0);
    fs::write(&model, artifact.to_string()).unwrap();
    let err = cmd_evaluate(&cfg, &model, None, None).unwrap_err();
    assert_eq!(err.kind(), "fingerprint_mismatch", "{err}");
    assert!(!dir.path().join("report.json").exists());
}

fn predict_lines(model: &Path, input: &PredictInput) -> Vec<Value> {
    let mut buf = Vec::new();
    let n = cmd_predict(model, input, &mut buf).unwrap();
    let lines: Vec<Value> = String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), n);
    lines
}

#[test]
fn predict_emits_one_line_per_text_in_order() {
    let dir = TempDir::new().unwrap();
    let (_, model) = trained_on_everything(dir.path(), ClassifierKind::GradientBoostedTrees);
    let one = predict_lines(&model, &PredictInput::Text("we should delve into it".into()));
    assert_eq!(one.len(), 1);

    let texts = dir.path().join("texts.txt");
    fs::write(&texts, "first line about the park\nsecond delve tapestry\nthird one\n").unwrap();
    let many = predict_lines(&model, &PredictInput::File(texts));
    assert_eq!(many.len(), 3);
    for (i, line) in many.iter().enumerate() {
        assert_eq!(line["id"], i.to_string());
        let p_ai = line["p_ai"].as_f64().unwrap();
        assert!((p_ai + line["p_human"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(line["label"], if p_ai >= 0.5 { 1 } else { 0 });
    }
}

#[test]
fn explain_is_seeded_and_renders_svg() {
    let dir = TempDir::new().unwrap();
    let (_, model) = trained_on_everything(dir.path(), ClassifierKind::LogisticRegression);
    let text = "honestly it is crucial to delve into the park and the intricate tapestry of dinner";
    let cfg = ExplanationConfig {
        num_samples: 800,
        seed: 4,
        ..Default::default()
    };
    assert_eq!(cfg.top_k, 10);
    let svg = dir.path().join("e.svg");
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let e = cmd_explain(&model, text, &cfg, Some(&svg), &mut a).unwrap();
    cmd_explain(&model, text, &cfg, None, &mut b).unwrap();
    assert_eq!(a, b);
    assert_eq!(e.attributions.len(), 10);

    let svg = fs::read_to_string(svg).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let bars = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("bar"))
        .count();
    assert_eq!(bars, 10);

    let err = cmd_explain(&model, "   ", &cfg, None, &mut Vec::new()).unwrap_err();
    assert_eq!(err.kind(), "explain");
}

fn write_humans(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("humans.jsonl");
    let lines: String = HUMAN[..n]
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{}\n", json!({"id": format!("h{i}"), "text": t})))
        .collect();
    fs::write(&path, lines).unwrap();
    path
}

#[test]
fn stub_datagen_is_deterministic_and_loadable() {
    let dir = TempDir::new().unwrap();
    let input = write_humans(dir.path(), 3);
    let run = |name: &str| {
        let opts = DatagenOptions {
            input: input.clone(),
            output: dir.path().join(name),
            stub: true,
            ..Default::default()
        };
        cmd_datagen(&RunConfig::default().with_seed(5), &opts).unwrap()
    };
    let a = run("a.jsonl");
    let b = run("b.jsonl");
    assert_eq!(a.n_documents, 6);
    assert_eq!(fs::read(&a.output).unwrap(), fs::read(&b.output).unwrap());
    assert!(a.log.exists());

    let corpus = load_corpus_auto(&a.output, &LabelSource::default()).unwrap();
    assert_eq!(corpus.class_counts(), (3, 3));
    assert_eq!(corpus.documents[1].id, "h0-ai");
    assert_eq!(corpus.documents[1].label, Label::Ai);
}

/// Answers every request with a fixed chat reply and keeps the prompts.
fn mock_provider(n: usize) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/chat", listener.local_addr().unwrap());
    let prompts = Arc::new(Mutex::new(Vec::new()));
    let seen = prompts.clone();
    std::thread::spawn(move || {
        for _ in 0..n {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let v: Value = serde_json::from_slice(&body).unwrap();
            seen.lock()
                .unwrap()
                .push(v["messages"][0]["content"].as_str().unwrap().to_string());
            let reply = json!({"choices": [{"message": {"content": "generated words"}}]}).to_string();
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    (url, prompts)
}

#[test]
fn short_mode_switches_the_elaboration_template() {
    for short in [false, true] {
        let dir = TempDir::new().unwrap();
        let input = write_humans(dir.path(), 1);
        let (url, prompts) = mock_provider(2);
        let provider = dir.path().join("provider.json");
        fs::write(
            &provider,
            json!({"endpoint_url": url, "model_name": "m", "api_key_env_var": "", "max_retries": 0}).to_string(),
        )
        .unwrap();
        let opts = DatagenOptions {
            input,
            output: dir.path().join("out.jsonl"),
            short_mode: short,
            provider_config: Some(provider),
            parallelism: Some(1),
            ..Default::default()
        };
        let out = cmd_datagen(&RunConfig::default(), &opts).unwrap();
        assert_eq!(out.n_documents, 2);
        let prompts = prompts.lock().unwrap();
        let words = HUMAN[0].split_whitespace().count();
        let length_matched = prompts[1].contains(&format!("around {words} words"));
        assert_eq!(length_matched, short, "{}", prompts[1]);
        assert_eq!(prompts[1].contains("600 to 750"), !short);
    }
}
