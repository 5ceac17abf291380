//! The `intentgraph` binary: flags, outputs and exit codes.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use intentgraph_llm::{MockStep, Purpose};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_intentgraph"));
    c.env_remove("INTENTGRAPH_CONFIG");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn serve_mock_prints_banner_and_answers() {
    let mut child = bin()
        .args(["serve", "--mock", "--listen", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    assert!(line.starts_with("intentgraph listening on http://127.0.0.1:"), "{line}");
    let base = line.split_whitespace().nth(3).unwrap().to_owned();
    let health: Value = reqwest::blocking::get(format!("{base}/health")).unwrap().json().unwrap();
    assert_eq!(health["status"], "ok");
    child.kill().unwrap();
    child.wait().unwrap();
}

#[test]
fn serve_needs_config_or_mock() {
    let o = run(&["serve", "--listen", "127.0.0.1:0"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn missing_key_names_the_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gateway.toml");
    std::fs::write(
        &cfg,
        "[endpoints.conversational]\nbase_url = \"http://127.0.0.1:9/v1\"\nmodel = \"m\"\napi_key_env = \"IG_TEST_UNSET_KEY\"\n",
    )
    .unwrap();
    let o = bin()
        .env_remove("IG_TEST_UNSET_KEY")
        .args(["serve", "--listen", "127.0.0.1:0", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("IG_TEST_UNSET_KEY"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(code(&run(&["eval", "--bogus"])), 1);
}

#[test]
fn playground_one_seed_writes_transcript_and_dataset() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["playground", "--mock", "--sessions", "1", "--out"])
        .arg(out.path())
        .arg(fixture("seeds.txt"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let transcripts: Vec<_> = std::fs::read_dir(out.path().join("transcripts")).unwrap().collect();
    assert_eq!(transcripts.len(), 1);
    let dataset = std::fs::read_to_string(out.path().join("dataset.jsonl")).unwrap();
    assert!(dataset.lines().count() >= 1);
    for line in dataset.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["input"]["prompt"].is_string() && v["target"].is_string());
    }
    let t: Value = serde_json::from_str(
        &std::fs::read_to_string(out.path().join("transcripts/session-001.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(t["session"]["status"], "COMPLETED");
}

#[test]
fn playground_zero_sessions_is_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["playground", "--mock", "--sessions", "0", "--out"])
        .arg(out.path())
        .arg(fixture("seeds.txt"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn playground_stalled_session_is_marked() {
    let dir = tempfile::tempdir().unwrap();
    let idle = serde_json::json!({
        "predicted_outcomes": "nothing changes",
        "file_changes": [],
        "errors": [],
        "verdicts": {}
    })
    .to_string();
    let script: BTreeMap<Purpose, Vec<MockStep>> =
        BTreeMap::from([(Purpose::AnalyzeExecution, vec![MockStep::reply(idle); 10])]);
    let script_path = dir.path().join("script.json");
    std::fs::write(&script_path, serde_json::to_string(&script).unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["playground", "--mock", "--sessions", "1", "--mock-script"])
        .arg(&script_path)
        .arg("--out")
        .arg(&out)
        .arg(fixture("seeds.txt"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t: Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("transcripts/session-001.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(t["session"]["status"], "STALLED");
    assert_eq!(t["session"]["transcript"].as_array().unwrap().len(), 5);
}

fn eval_report(pairs: &str) -> (Output, Option<Value>) {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pairs.jsonl");
    std::fs::write(&input, pairs).unwrap();
    let out = dir.path().join("report.json");
    let o = bin().arg("eval").arg(&input).arg("--out").arg(&out).output().unwrap();
    let report = std::fs::read_to_string(&out).ok().map(|s| serde_json::from_str(&s).unwrap());
    (o, report)
}

#[test]
fn eval_identical_pairs_scores_one() {
    let triple = std::fs::read_to_string(fixture("simplify_triple.json")).unwrap();
    let doc: Value = serde_json::from_str(&triple).unwrap();
    let line = serde_json::json!({"candidate": doc, "reference": doc}).to_string();
    let text = serde_json::json!({"student": "parse the html page", "teacher": "parse the html page"});
    let (o, report) = eval_report(&format!("{line}\n{text}\n"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = report.unwrap();
    assert_eq!(report["samples"], 2);
    for k in ["rouge1", "rouge2", "rougeL", "bleu"] {
        assert!((report["scores"][k].as_f64().unwrap() - 1.0).abs() < 1e-12, "{k}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("ROUGE-L"));
}

#[test]
fn eval_empty_file_is_empty_corpus() {
    let (o, report) = eval_report("");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("EmptyCorpus"));
    assert!(report.is_none());
}

#[test]
fn eval_bad_line_is_validation_error() {
    let (o, _) = eval_report("{\"candidate\": \"x\"}\n");
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(":1:"));
}

fn simplify(args: &[&str]) -> Value {
    let o = bin()
        .arg("simplify")
        .arg(fixture("simplify_triple.json"))
        .args(args)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn node_ids(view: &Value) -> Vec<String> {
    view["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["id"].as_str().unwrap().to_owned())
        .collect()
}

#[test]
fn simplify_fixtures() {
    let all = simplify(&["--all"]);
    assert_eq!(node_ids(&all), ["g1", "g2", "g3", "g4", "g5"]);
    assert_eq!(all["edges"].as_array().unwrap().len(), 4);

    let a = simplify(&["--focus", "A"]);
    assert_eq!(node_ids(&a), ["g1", "g2", "u:B"]);
    assert_eq!(a["highlight"], serde_json::json!(["g1", "g2"]));

    let none = simplify(&[]);
    assert_eq!(node_ids(&none), ["u:A", "u:B"]);
    assert_eq!(none["edges"].as_array().unwrap().len(), 1);
}

#[test]
fn simplify_unknown_focus_is_validation_error() {
    let o = bin()
        .arg("simplify")
        .arg(fixture("simplify_triple.json"))
        .args(["--focus", "Z"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn eval_fixture_means_match_per_pair_oracle() {
    use intentgraph_testkit::metrics_oracle as oracle;
    let text = std::fs::read_to_string(fixture("pairs40.jsonl")).unwrap();
    let mut sums = [0.0f64; 4];
    let mut n = 0usize;
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let c: Vec<&str> = v["candidate"].as_str().unwrap().split_whitespace().collect();
        let r: Vec<&str> = v["reference"].as_str().unwrap().split_whitespace().collect();
        let per = [
            oracle::rouge_n(&c, &r, 1),
            oracle::rouge_n(&c, &r, 2),
            oracle::rouge_l(&c, &r),
            oracle::bleu(&c, &r),
        ];
        for (s, x) in sums.iter_mut().zip(per) {
            *s += x;
        }
        n += 1;
    }
    assert_eq!(n, 40);
    let (o, report) = eval_report(&text);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = report.unwrap();
    for (k, s) in ["rouge1", "rouge2", "rougeL", "bleu"].iter().zip(sums) {
        let got = report["scores"][k].as_f64().unwrap();
        assert!((got - s / n as f64).abs() < 1e-9, "{k}: {got} vs {}", s / n as f64);
    }
}
