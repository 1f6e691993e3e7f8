use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use tesa_core::fixtures;

fn tesa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tesa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn fix1() -> Workspace {
        let dir = tempfile::tempdir().unwrap();
        fixtures::fix1()
            .write_jsonl(&dir.path().join("pages.jsonl"), &dir.path().join("categories.jsonl"))
            .unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn build(&self, out: &str) -> Output {
        tesa(&[
            "build",
            "--pages",
            s(&self.path("pages.jsonl")),
            "--categories",
            s(&self.path("categories.jsonl")),
            "--root",
            "root",
            "--out",
            s(&self.path(out)),
            "--min-words",
            "0",
            "--min-links-in",
            "0",
            "--min-links-out",
            "0",
        ])
    }
}

#[test]
fn build_prints_summary() {
    let ws = Workspace::fix1();
    let out = ws.build("idx");
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("pages: 4"), "{text}");
    assert!(text.contains("categories: 3"), "{text}");
    assert!(text.contains("removed edges: 0"), "{text}");
    assert!(ws.path("idx/manifest.json").is_file());
}

#[test]
fn sim_matches_standard_relatedness() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let idx = ws.path("idx");
    let out = tesa(&["sim", s(&idx), "alpha", "gamma", "--lambda", ""]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mu: f64 = stdout(&out).trim().parse().unwrap();
    let model = fixtures::fix1_built();
    let expected = model
        .reinforced()
        .unwrap()
        .relatedness("alpha", "gamma", &tesa_core::LambdaSchedule::zero())
        .unwrap();
    assert!((mu - expected).abs() < 5e-7, "{mu} vs {expected}");
}

#[test]
fn sim_normalizes_query_case() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let idx = ws.path("idx");
    let lower = tesa(&["sim", s(&idx), "alpha", "gamma", "--lambda", "0.5"]);
    let upper = tesa(&["sim", s(&idx), "ALPHA", "Gamma", "--lambda", "0.5"]);
    assert!(lower.status.success());
    assert_eq!(stdout(&lower), stdout(&upper));
}

#[test]
fn sim_with_zero_concept_vector_is_a_data_error() {
    // beta occurs on every page, so its standard weights are all zero.
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let out = tesa(&["sim", s(&ws.path("idx")), "alpha", "beta", "--lambda", ""]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!stderr(&out).is_empty());
}

#[test]
fn unknown_word_is_a_data_error() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let out = tesa(&["sim", s(&ws.path("idx")), "alpha", "zeta"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("zeta"), "{}", stderr(&out));
}

#[test]
fn tree_page_prints_ancestor_path() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let out = tesa(&["tree", s(&ws.path("idx")), "--page", "p1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let path: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(path.first().map(String::as_str), Some("c1"));
    assert_eq!(path.last().map(String::as_str), Some("root"));
}

#[test]
fn tree_without_page_lists_every_non_root_node() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let out = tesa(&["tree", s(&ws.path("idx"))]);
    assert!(out.status.success());
    // 4 pages and 2 categories hang below the root.
    assert_eq!(stdout(&out).lines().count(), 6);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(tesa(&["sim"]).status.code(), Some(1));
    assert_eq!(tesa(&["frobnicate"]).status.code(), Some(1));
    let ws = Workspace::fix1();
    let out = tesa(&["build", "--pages", s(&ws.path("pages.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = tesa(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("build"));
}

#[test]
fn missing_root_names_the_failing_stage() {
    let ws = Workspace::fix1();
    let out = tesa(&[
        "build",
        "--pages",
        s(&ws.path("pages.jsonl")),
        "--categories",
        s(&ws.path("categories.jsonl")),
        "--root",
        "nowhere",
        "--out",
        s(&ws.path("idx")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("load stage failed"), "{}", stderr(&out));
}

#[test]
fn corrupt_index_is_rejected() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let tree = ws.path("idx/tree.tsv");
    let mut text = fs::read_to_string(&tree).unwrap();
    text.push_str("extra\tline\t1\n");
    fs::write(&tree, text).unwrap();
    let out = tesa(&["tree", s(&ws.path("idx"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let ws = Workspace::fix1();
    let config = ws.path("tesa.json");
    let body = serde_json::json!({
        "pages": ws.path("pages.jsonl"),
        "categories": ws.path("categories.jsonl"),
        "root": "root",
        "out": ws.path("from-config"),
        "min_words": 0,
        "min_links_in": 0,
        "min_links_out": 0,
    });
    fs::write(&config, body.to_string()).unwrap();
    let out = tesa(&["--config", s(&config), "build"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(ws.path("from-config/manifest.json").is_file());

    let out = tesa(&["--config", s(&config), "build", "--out", s(&ws.path("from-flag"))]);
    assert!(out.status.success());
    assert!(ws.path("from-flag/manifest.json").is_file());
}

#[test]
fn malformed_config_is_a_usage_error() {
    let ws = Workspace::fix1();
    let config = ws.path("bad.json");
    fs::write(&config, r#"{"unknown_key": 1}"#).unwrap();
    let out = tesa(&["--config", s(&config), "tree", s(&ws.path("idx"))]);
    assert_eq!(out.status.code(), Some(1));
}

fn themed_workspace() -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, eval) = fixtures::themed(&fixtures::ThemedSpec::eval_fix());
    corpus
        .write_jsonl(&dir.path().join("pages.jsonl"), &dir.path().join("categories.jsonl"))
        .unwrap();
    eval.write_jsonl(&dir.path().join("docs.jsonl")).unwrap();
    Workspace { dir }
}

#[test]
fn eval_reports_one_entry_per_schedule() {
    let ws = themed_workspace();
    assert!(ws.build("idx").status.success());
    let sweep = ws.path("sweep.txt");
    fs::write(&sweep, "# schedules\n0\n\n0.5,0.25\n").unwrap();
    let out = tesa(&[
        "eval",
        s(&ws.path("idx")),
        "--docs",
        s(&ws.path("docs.jsonl")),
        "--lambda",
        "1",
        "--sweep",
        s(&sweep),
        "--folds",
        "4",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    for r in reports {
        let p = r["precision"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(r["per_fold"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn eval_export_writes_numbered_files() {
    let ws = themed_workspace();
    assert!(ws.build("idx").status.success());
    let target = ws.path("features.txt");
    let out = tesa(&[
        "eval",
        s(&ws.path("idx")),
        "--docs",
        s(&ws.path("docs.jsonl")),
        "--lambda",
        "",
        "--lambda",
        "0.5",
        "--export",
        s(&target),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for k in 1..=2 {
        let text = fs::read_to_string(format!("{}.{k}", target.display())).unwrap();
        // One line per labeled document: 4 classes of 5.
        assert_eq!(text.lines().count(), 20);
    }
}

#[test]
fn stats_reads_a_standalone_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.tsv");
    fs::write(&edges, "p\ta\t1\na\tb\t1\nb\ta\t1\nb\tsink\t1\n").unwrap();
    let out = tesa(&[
        "stats",
        "--edges",
        s(&edges),
        "--sink",
        "sink",
        "--walks",
        "50",
        "--seed",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["census"]["walks"], 50);
    assert_eq!(report["census"]["cycles"], serde_json::json!([["a", "b"]]));
}

#[test]
fn stats_on_an_index_counts_removed_edges() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let out = tesa(&["stats", s(&ws.path("idx"))]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["removed_edges"], 0);
    assert_eq!(report["census"]["walks_with_cycle"], 0);
}

#[test]
fn a_word_is_fully_related_to_itself() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let out = tesa(&[
        "sim",
        s(&ws.path("idx")),
        "alpha",
        "alpha",
        "--lambda",
        "1.5,0,0.5,0.25,0.125",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "1.000000\n");
}

#[test]
fn word_threshold_filters_short_pages() {
    let ws = Workspace::fix1();
    let out = tesa(&[
        "build",
        "--pages",
        s(&ws.path("pages.jsonl")),
        "--categories",
        s(&ws.path("categories.jsonl")),
        "--root",
        "root",
        "--out",
        s(&ws.path("idx")),
        "--min-words",
        "3",
        "--min-links-in",
        "0",
        "--min-links-out",
        "0",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    // p4 has two words
    assert!(stdout(&out).contains("pages: 3"), "{}", stdout(&out));
}

#[test]
fn exclusive_mode_is_accepted() {
    let ws = Workspace::fix1();
    assert!(ws.build("idx").status.success());
    let out = tesa(&[
        "sim",
        s(&ws.path("idx")),
        "alpha",
        "gamma",
        "--lambda",
        "1",
        "--mode",
        "exclusive",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mu: f64 = stdout(&out).trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&mu));
}
