//! End-to-end tests of the `numen` binary: flag handling, output formats,
//! manifests, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn numen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_numen"))
}

fn run(args: &[&str]) -> Output {
    numen().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn gensynth(dir: &Path, people: usize, queries: usize) {
    let out = run(&[
        "gensynth",
        "--people",
        &people.to_string(),
        "--attributes",
        "30",
        "--attrs-per-person",
        "3",
        "--attrs-per-query",
        "1",
        "--queries",
        &queries.to_string(),
        "--seed",
        "11",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn encode_prints_json_unit_vector() {
    let out = run(&["encode", "--dim", "8", "--text", "a"]);
    assert!(out.status.success());
    let components: Vec<f32> = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(components.len(), 8);
    let nonzero: Vec<(usize, f32)> = components
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, c)| c != 0.0)
        .collect();
    // Single n-gram "^a$"; its index comes from an independent CRC32.
    let expected_index = (crc32fast::hash(b"^a$") % 8) as usize;
    assert_eq!(nonzero, vec![(expected_index, 1.0)]);
}

#[test]
fn encode_stats_reports_ngram_counts() {
    let out = run(&["encode", "--text", "likes", "--stats"]);
    assert!(out.status.success());
    let diagnostics = stderr(&out);
    assert!(diagnostics.contains("n-grams: 12"), "{diagnostics}");
    assert!(diagnostics.contains("nonzero components: 12"), "{diagnostics}");
}

#[test]
fn encode_empty_text_warns_and_emits_zero_vector() {
    let out = run(&["encode", "--dim", "16", "--text", ""]);
    assert!(out.status.success());
    let components: Vec<f32> = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(components, vec![0.0; 16]);
    assert!(stderr(&out).contains("all-zero vector"), "{}", stderr(&out));
}

#[test]
fn encode_rejects_conflicting_inputs() {
    let out = run(&["encode", "--text", "a", "--file", "b.txt"]);
    assert!(!out.status.success());
    let out = run(&["encode"]);
    assert!(!out.status.success());
    let out = run(&["encode", "--text", "a", "--ngrams", "3,4", "--weights", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("align"), "{}", stderr(&out));
}

#[test]
fn encode_binary_output_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let vec_path = dir.path().join("a.vec");
    let out = run(&[
        "encode",
        "--dim",
        "8",
        "--text",
        "a",
        "--out",
        vec_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let bytes = std::fs::read(&vec_path).unwrap();
    assert_eq!(bytes.len(), 8 * 4);
    let manifest_path = dir.path().join("a.vec.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "encode");
    assert_eq!(manifest["config"]["dimension"], 8);
}

#[test]
fn index_search_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gensynth(&data, 50, 10);

    let index_path = dir.path().join("idx.numen");
    let out = run(&[
        "index",
        "--corpus",
        data.join("corpus.jsonl").to_str().unwrap(),
        "--out",
        index_path.to_str().unwrap(),
        "--dim",
        "1024",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    // Manifest written alongside, with throughput recorded.
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("idx.numen.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "index");
    assert!(manifest["timings"]["index_docs_per_sec"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);
    assert!(manifest["inputs"][0]["sha256"].as_str().unwrap().len() == 64);

    // k larger than the corpus: one row per document per query.
    let out = run(&[
        "search",
        "--index",
        index_path.to_str().unwrap(),
        "--queries",
        data.join("queries.jsonl").to_str().unwrap(),
        "--k",
        "100",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(rows.len(), 50 * 10);
    for row in &rows {
        let fields: Vec<&str> = row.split('\t').collect();
        assert_eq!(fields.len(), 4, "{row}");
        fields[2].parse::<usize>().unwrap();
        fields[3].parse::<f32>().unwrap();
    }

    // Search output is byte-identical across reruns.
    let rerun = run(&[
        "search",
        "--index",
        index_path.to_str().unwrap(),
        "--queries",
        data.join("queries.jsonl").to_str().unwrap(),
        "--k",
        "100",
    ]);
    assert_eq!(out.stdout, rerun.stdout);

    // Self-retrieval through the single-query path.
    let corpus_text = std::fs::read_to_string(data.join("corpus.jsonl")).unwrap();
    let first_doc: serde_json::Value =
        serde_json::from_str(corpus_text.lines().next().unwrap()).unwrap();
    let out = run(&[
        "search",
        "--index",
        index_path.to_str().unwrap(),
        "--query",
        first_doc["text"].as_str().unwrap(),
        "--k",
        "1",
    ]);
    assert!(out.status.success());
    let line = stdout(&out);
    let fields: Vec<&str> = line.trim().split('\t').collect();
    assert_eq!(fields[0], "q0");
    assert_eq!(fields[1], first_doc["_id"].as_str().unwrap());
    let score: f32 = fields[3].parse().unwrap();
    assert!((score - 1.0).abs() < 1e-4);

    // Eval: stdout table plus CSV with the documented schema.
    let csv_path = dir.path().join("recall.csv");
    let out = run(&[
        "eval",
        "--index",
        index_path.to_str().unwrap(),
        "--queries",
        data.join("queries.jsonl").to_str().unwrap(),
        "--qrels",
        data.join("qrels.tsv").to_str().unwrap(),
        "--k",
        "2,10",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("recall@10"), "{}", stdout(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("dimension,k,recall"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "1024");
        fields[1].parse::<usize>().unwrap();
        let recall: f64 = fields[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&recall));
    }
    assert!(dir.path().join("recall.csv.manifest.json").exists());
}

#[test]
fn eval_bm25_baseline_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gensynth(&data, 60, 12);
    let csv_path = dir.path().join("bm25.csv");
    let out = run(&[
        "eval",
        "--bm25-corpus",
        data.join("corpus.jsonl").to_str().unwrap(),
        "--queries",
        data.join("queries.jsonl").to_str().unwrap(),
        "--qrels",
        data.join("qrels.tsv").to_str().unwrap(),
        "--k",
        "10",
        "--k1",
        "1.2",
        "--b",
        "0.6",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("bm25;k1=1.2;b=0.6"), "{table}");
    assert!(table.contains("recall@10"), "{table}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("dimension,k,recall\n"), "{csv}");

    // Exactly one of --index / --bm25-corpus is allowed.
    let out = run(&[
        "eval",
        "--index",
        "x.numen",
        "--bm25-corpus",
        "y.jsonl",
        "--queries",
        "q.jsonl",
        "--qrels",
        "r.tsv",
    ]);
    assert!(!out.status.success());
}

#[test]
fn search_rejects_missing_index() {
    let out = run(&["search", "--index", "/nonexistent.numen", "--query", "x"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("error"), "{}", stderr(&out));
}

#[test]
fn index_reports_corpus_parse_errors_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(&corpus, "{\"_id\":\"d1\",\"text\":\"ok\"}\n{\"_id\":\"d2\"").unwrap();
    let out = run(&[
        "index",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("x.numen").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains(":2:"), "{}", stderr(&out));
}

#[test]
fn sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gensynth(&data, 40, 8);
    let csv_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--corpus",
        data.join("corpus.jsonl").to_str().unwrap(),
        "--queries",
        data.join("queries.jsonl").to_str().unwrap(),
        "--qrels",
        data.join("qrels.tsv").to_str().unwrap(),
        "--dims",
        "64,256",
        "--k",
        "5,10",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dimension,k,recall");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("64,5,"));
    assert!(lines[4].starts_with("256,10,"));
    assert!(dir.path().join("sweep.csv.manifest.json").exists());
}

#[test]
fn collisions_formula_and_empirical() {
    let out = run(&["collisions", "--n", "50", "--dim", "32768"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("p_collision=0.037429"), "{}", stdout(&out));

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    gensynth(&data, 30, 5);
    let out = run(&[
        "collisions",
        "--corpus",
        data.join("corpus.jsonl").to_str().unwrap(),
        "--dim",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    // Every text with two or more distinct n-grams collides at d = 1.
    assert!(stdout(&out).contains("observed_rate=1.000000"), "{}", stdout(&out));

    let out = run(&["collisions"]);
    assert!(!out.status.success());
}

#[test]
fn gensynth_is_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    gensynth(&a, 25, 6);
    gensynth(&b, 25, 6);
    for name in ["corpus.jsonl", "queries.jsonl", "qrels.tsv"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
    assert!(a.join("manifest.json").exists());
}

#[test]
fn threads_flag_is_accepted() {
    let out = numen()
        .args(["encode", "--dim", "8", "--text", "a", "--threads", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = numen()
        .args(["encode", "--dim", "8", "--text", "a"])
        .env("NUMEN_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = numen()
        .args(["encode", "--dim", "8", "--text", "a", "--threads", "0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn hash_variant_flag_changes_the_encoding() {
    let ieee = run(&["encode", "--dim", "4096", "--text", "likes"]);
    let castagnoli = run(&["encode", "--dim", "4096", "--text", "likes", "--hash", "crc32c"]);
    assert!(ieee.status.success() && castagnoli.status.success());
    assert_ne!(ieee.stdout, castagnoli.stdout);
    let bad = run(&["encode", "--text", "x", "--hash", "md5"]);
    assert!(!bad.status.success());
}
