mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use bpa_cli::config::EnvVars;
use bpa_cli::{EXIT_ASSERTION, EXIT_ERROR, EXIT_NO_DIFF, EXIT_OK};
use bpa_core::lang::parse;
use common::{bpa, bpa_env, check_golden, pair_file};
use serde_json::{json, Value};

fn p01(name: &str) -> String {
    pair_file("pair-01", name)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn advise(extra: &[&str]) -> common::Output {
    let (s, f, t) = (p01("student.ml"), p01("fixed.ml"), p01("tests.json"));
    let mut args = vec!["advise", s.as_str(), "--fixed", f.as_str(), "--tests", t.as_str(), "--failed", "sum_3"];
    args.extend_from_slice(extra);
    bpa(&args)
}

#[test]
fn pretty_output_matches_golden() {
    let r = advise(&["--format", "pretty"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.starts_with("task sum, failed test sum_3: 5 breakpoints\n"));
    check_golden("reference_pretty.txt", &r.stdout).unwrap();
}

#[test]
fn annotated_source_matches_golden() {
    let r = advise(&["--format", "annotated-source"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "  fun sum(n) {");
    assert!(lines.iter().any(|l| l.starts_with("● ") && l.contains("while (i < n)")));
    assert_eq!(r.stdout.lines().filter(|l| l.starts_with("○ ")).count(), 4);
    check_golden("reference_annotated.txt", &r.stdout).unwrap();
}

#[test]
fn max_breakpoints_flag_truncates_by_priority() {
    let r = advise(&["--max-breakpoints", "2"]);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    let lines: Vec<u64> = doc["breakpoints"].as_array().unwrap().iter().map(|b| b["line"].as_u64().unwrap()).collect();
    assert_eq!(lines, [4, 5]);
}

#[test]
fn h1_exit_flag_drops_after_construct_tag() {
    let r = advise(&["--h1-include-exit", "false"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(!r.stdout.contains("H1:after-construct"));
    let on = advise(&[]);
    assert!(on.stdout.contains("H1:after-construct"));
}

#[test]
fn emit_graph_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let d = dot.display().to_string();
    let r = advise(&["--emit-graph", &d]);
    assert_eq!(r.code, EXIT_OK);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("L4 -> L5 [style=dashed]"), "{text}");
}

#[test]
fn identical_programs_exit_with_no_diff() {
    let (f, t) = (p01("fixed.ml"), p01("tests.json"));
    let r = bpa(&["advise", &f, "--fixed", &f, "--tests", &t, "--failed", "sum_3"]);
    assert_eq!(r.code, EXIT_NO_DIFF);
    assert_eq!(r.stderr, "no differences between the student and fixed programs\n");
    assert!(r.stdout.is_empty());
}

#[test]
fn error_prefixes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.ml", "fun f( {\n");
    let (s, f, t) = (p01("student.ml"), p01("fixed.ml"), p01("tests.json"));

    let r = bpa(&["advise", &bad, "--fixed", &f, "--tests", &t, "--failed", "sum_3"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.starts_with("E-PARSE: "), "{}", r.stderr);
    assert_eq!(r.stderr.lines().count(), 1);

    let missing = dir.path().join("nope.ml").display().to_string();
    let r = bpa(&["advise", &missing, "--fixed", &f, "--tests", &t, "--failed", "sum_3"]);
    assert!(r.stderr.starts_with("E-IO: "), "{}", r.stderr);

    let r = bpa(&["advise", &s, "--fixed", &f, "--tests", &t, "--failed", "sum_9"]);
    assert!(r.stderr.starts_with("E-TEST: "), "{}", r.stderr);

    // A "fix" that still fails the test.
    let r = bpa(&["advise", &s, "--fixed", &s, "--tests", &t, "--failed", "sum_3"]);
    assert!(r.stderr.starts_with("E-TEST: "), "{}", r.stderr);

    // No fix, no store match, no provider.
    let r = bpa(&["advise", &s, "--tests", &t, "--failed", "sum_3"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.starts_with("E-REPAIR: "), "{}", r.stderr);

    let r = bpa(&["store", "stats"]);
    assert!(r.stderr.starts_with("E-STORE: "), "{}", r.stderr);

    let cfg = write(dir.path(), "c.json", r#"{"colour": "blue"}"#);
    let r = bpa(&["--config", &cfg, "store", "stats"]);
    assert!(r.stderr.starts_with("E-CONFIG: "), "{}", r.stderr);

    let r = bpa(&["advise"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stdout.is_empty());

    let r = bpa(&["--help"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("advise"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"format": "pretty", "max_breakpoints": 1}"#);
    let r = advise(&["--config", &cfg]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.starts_with("task sum, failed test sum_3: 1 breakpoint\n"), "{}", r.stdout);

    let r = advise(&["--config", &cfg, "--format", "json", "--max-breakpoints", "3"]);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(doc["breakpoints"].as_array().unwrap().len(), 3);
}

#[test]
fn store_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s.ndjson").display().to_string();
    let (s, f, t) = (p01("student.ml"), p01("fixed.ml"), p01("tests.json"));

    assert_eq!(bpa(&["--store", &store, "store", "init"]).code, EXIT_OK);
    let r = bpa(&["--store", &store, "store", "stats"]);
    assert_eq!(r.stdout, "0 entries\n");

    let r = bpa(&["--store", &store, "store", "add", &f, "--tests", &t]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.starts_with("added sum-0001 (task sum, validated"), "{}", r.stdout);

    let r = bpa(&["--store", &store, "store", "add", &s, "--tests", &t]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.starts_with("E-STORE: solution rejected"), "{}", r.stderr);

    let r = bpa(&["--store", &store, "store", "add", &f, "--tests", &t, "--id", "sum-0001"]);
    assert!(r.stderr.starts_with("E-STORE: "), "{}", r.stderr);

    let r = bpa(&["--store", &store, "store", "query", &s, "--tests", &t, "--failed", "sum_3"]);
    assert_eq!(r.code, EXIT_OK);
    let (id, sim) = r.stdout.trim().split_once(' ').unwrap();
    assert_eq!(id, "sum-0001");
    assert!(sim.parse::<f64>().unwrap() > 0.9);

    let other = pair_file("pair-02", "student.ml");
    let r = bpa(&["--store", &store, "store", "query", &other, "--tests", &t, "--failed", "sum_3"]);
    assert_eq!(r.stdout, "none\n");

    let r = bpa(&["--store", &store, "store", "stats"]);
    assert_eq!(r.stdout, "1 entry\n  sum: 1 entry, 1 validated\n");

    // A non-empty store is not re-initialized.
    let r = bpa(&["--store", &store, "store", "init"]);
    assert!(r.stderr.starts_with("E-STORE: "), "{}", r.stderr);

    // With the fix stored, advise needs neither --fixed nor a provider.
    let r = bpa(&["--store", &store, "advise", &s, "--tests", &t, "--failed", "sum_3"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(r.stdout, advise(&[]).stdout);
}

#[test]
fn corrupt_store_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let store = write(dir.path(), "s.ndjson", "{not json}\n");
    let r = bpa(&["--store", &store, "store", "stats"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.starts_with("E-STORE: corrupt store record at line 1"), "{}", r.stderr);
}

#[test]
fn eval_assertion_gate() {
    let corpus = common::corpus_dir().display().to_string();
    let r = bpa(&["eval", "breakpoints", "--corpus", &corpus, "--assert-min-f1", "0.99"]);
    assert_eq!(r.code, EXIT_ASSERTION);
    assert!(r.stderr.contains("assertion failed"), "{}", r.stderr);
    assert!(!r.stdout.is_empty());
    let r = bpa(&["eval", "breakpoints", "--corpus", &corpus, "--assert-min-f1", "0.5"]);
    assert_eq!(r.code, EXIT_OK);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = out.display().to_string();
    let r = bpa(&["eval", "breakpoints", "--corpus", &corpus, "--out", &o]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["micro"]["tp"], 59);
}

#[test]
fn eval_classifier_counts() {
    let dir = tempfile::tempdir().unwrap();
    // 3 true positives, 1 false positive, 2 false negatives, 1 true negative.
    let rows = json!([
        {"predicted_pass": true, "actual_pass": true},
        {"predicted_pass": true, "actual_pass": true},
        {"predicted_pass": true, "actual_pass": true},
        {"predicted_pass": true, "actual_pass": false},
        {"predicted_pass": false, "actual_pass": true},
        {"predicted_pass": false, "actual_pass": true},
        {"predicted_pass": false, "actual_pass": false}
    ]);
    let path = write(dir.path(), "v.json", &rows.to_string());
    let r = bpa(&["eval", "classifier", &path]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(doc["rows"], 7);
    assert_eq!((doc["metrics"]["tp"].as_u64(), doc["metrics"]["fp"].as_u64(), doc["metrics"]["fn"].as_u64()), (Some(3), Some(1), Some(2)));
    assert_eq!(doc["metrics"]["precision"], 0.75);
    assert_eq!(doc["metrics"]["recall"], 0.6);
    assert!((doc["metrics"]["f1"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

/// Minimal HTTP provider on localhost: fixes the loop condition and
/// classifies by execution.
fn spawn_provider(fix: String) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            counter.fetch_add(1, Ordering::SeqCst);
            let fix = fix.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = false;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    auth |= lower.starts_with("authorization: bearer sekret");
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let req: Value = serde_json::from_slice(&body).unwrap();
                let resp = if !auth {
                    json!({})
                } else if req["mode"] == "generate" {
                    let n = req["n"].as_u64().unwrap() as usize;
                    let mut c = vec![req["student_source"].as_str().unwrap().to_string(); n];
                    c[n - 1] = fix;
                    json!({"candidates": c})
                } else if req["mode"] == "classify" {
                    let src = req["student_source"].as_str().unwrap();
                    let test = serde_json::from_value(req["failed_test"].clone()).unwrap();
                    json!({"pass": bpa_core::exec::run_test(&parse(src).unwrap(), &test).passed()})
                } else {
                    json!({"text": "Look at this line."})
                };
                let body = resp.to_string();
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            });
        }
    });
    (url, hits)
}

#[test]
fn provider_url_from_environment() {
    let fix = std::fs::read_to_string(p01("fixed.ml")).unwrap();
    let (url, hits) = spawn_provider(fix.clone());
    let env = EnvVars {
        provider_url: Some(url),
        provider_token: Some("sekret".into()),
        embedder_url: None,
    };
    let (s, t) = (p01("student.ml"), p01("tests.json"));
    let r = bpa_env(&["repair", &s, "--tests", &t, "--failed", "sum_3"], &env);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(doc["source"], "generated");
    assert_eq!(doc["fixed_source"], fix.as_str());
    assert_eq!(doc["llm_calls"], 6);
    assert_eq!(hits.load(Ordering::SeqCst), 6);

    // Provider explanations replace the templates when configured.
    let r = bpa_env(&["advise", &s, "--tests", &t, "--failed", "sum_3"], &env);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let doc: Value = serde_json::from_str(&r.stdout).unwrap();
    let bps = doc["breakpoints"].as_array().unwrap();
    assert_eq!(bps.len(), 5);
    assert!(bps.iter().all(|b| b["explanation"] == "Look at this line."));
}

#[test]
fn unreachable_provider_is_a_repair_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let env = EnvVars {
        provider_url: Some(format!("http://127.0.0.1:{port}/v1")),
        ..EnvVars::default()
    };
    let (s, t) = (p01("student.ml"), p01("tests.json"));
    let r = bpa_env(&["repair", &s, "--tests", &t, "--failed", "sum_3"], &env);
    assert_eq!(r.code, EXIT_ERROR);
    assert!(r.stderr.starts_with("E-REPAIR: "), "{}", r.stderr);
}
