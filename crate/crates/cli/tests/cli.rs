//! End-to-end behaviour of each subcommand.

mod common;

use std::collections::BTreeSet;

use common::{code, ok, read_csv, run, run_env, s, stderr, stdout, synth};
use tempfile::tempdir;

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    for sub in ["validate", "eval", "detect", "zscore", "cluster", "trend", "synth"] {
        let out = run(&[sub, "--help"]);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).contains("--"), "{sub} help lists flags");
    }
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["validate"])), 64);
}

#[test]
fn validate_exit_codes() {
    let dir = tempdir().unwrap();
    let (chars, emb) = synth(dir.path(), &["--detectives", "10", "--others", "20", "--authors", "3"]);
    let clean = run(&["validate", "--characters", s(&chars), "--embeddings", s(&emb)]);
    assert_eq!(code(&clean), 0, "{}", stdout(&clean));
    assert_eq!(stdout(&clean).trim(), "ok: 30 characters");

    // Drop the embedding of one character by writing a corpus with fewer rows.
    let small = dir.path().join("small");
    let (_, small_emb) = synth(&small, &["--detectives", "10", "--others", "19", "--authors", "3"]);
    let missing = run(&["validate", "--characters", s(&chars), "--embeddings", s(&small_emb)]);
    assert_eq!(code(&missing), 1);
    let lines: Vec<String> = stdout(&missing).lines().map(String::from).collect();
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!(lines[0].contains("c00029"), "{lines:?}");

    let mut bytes = std::fs::read(&emb).unwrap();
    bytes.truncate(bytes.len() - 3);
    let corrupt = dir.path().join("corrupt.cemb");
    std::fs::write(&corrupt, &bytes).unwrap();
    let out = run(&["validate", "--characters", s(&chars), "--embeddings", s(&corrupt)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("corrupt.cemb"));

    let absent = dir.path().join("absent.jsonl");
    assert_eq!(code(&run(&["validate", "--characters", s(&absent)])), 2);
    let garbage = dir.path().join("garbage.jsonl");
    std::fs::write(&garbage, "{not json\n").unwrap();
    assert_eq!(code(&run(&["validate", "--characters", s(&garbage)])), 2);
}

#[test]
fn invalid_scheme_is_usage_error() {
    let dir = tempdir().unwrap();
    let (chars, _) = synth(dir.path(), &["--detectives", "10", "--others", "20", "--authors", "3"]);
    for scheme in ["stratified:1", "logo:planet", "kfold", "logo:timebin:0"] {
        let out = run(&["eval", "--characters", s(&chars), "--scheme", scheme, "--out", s(&dir.path().join("e"))]);
        assert_eq!(code(&out), 64, "{scheme}");
    }
}

#[test]
fn threads_variable_is_checked() {
    let dir = tempdir().unwrap();
    let out = run_env(&["synth", "--out", s(dir.path())], &[("ARCHLENS_THREADS", "abc")]);
    assert_eq!(code(&out), 64);
    let out = run_env(&["synth", "--out", s(dir.path())], &[("ARCHLENS_THREADS", "0")]);
    assert_eq!(code(&out), 0);
}

#[test]
fn eval_logo_author_has_one_fold_per_author() {
    let dir = tempdir().unwrap();
    let (chars, emb) = synth(dir.path(), &["--detectives", "30", "--others", "60", "--authors", "3"]);
    let out = dir.path().join("eval");
    let stdout = ok(&[
        "eval", "--characters", s(&chars), "--embeddings", s(&emb), "--scheme", "logo:author", "--out", s(&out), "--svg",
    ]);
    assert!(stdout.starts_with("balanced_accuracy="));
    assert_eq!(read_csv(&out.join("folds.csv")).len(), 3);
    assert_eq!(read_csv(&out.join("predictions.csv")).len(), 90);
    for f in ["report.txt", "error_over_time.csv", "error_over_time.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn eval_reports_planted_signal() {
    let dir = tempdir().unwrap();
    let (chars, emb) = synth(dir.path(), &[]);
    let out = dir.path().join("eval");
    let stdout = ok(&["eval", "--characters", s(&chars), "--embeddings", s(&emb), "--out", s(&out)]);
    let ba: f64 = stdout.trim().trim_start_matches("balanced_accuracy=").parse().unwrap();
    assert!(ba >= 0.95, "{ba}");
    assert!(std::fs::read_to_string(out.join("report.txt")).unwrap().contains("balanced_accuracy"));
}

#[test]
fn detect_keeps_top_k_per_novel() {
    let dir = tempdir().unwrap();
    let (train, train_emb) = synth(&dir.path().join("train"), &["--detectives", "40", "--others", "80", "--authors", "6"]);
    // 5 novels of 12 characters each.
    let (corpus, corpus_emb) = synth(
        &dir.path().join("corpus"),
        &["--detectives", "15", "--others", "45", "--authors", "5", "--novels-per-author", "1", "--unlabeled", "--seed", "9"],
    );
    let out = dir.path().join("detect");
    ok(&[
        "detect", "--train-characters", s(&train), "--train-embeddings", s(&train_emb), "--corpus-characters", s(&corpus),
        "--corpus-embeddings", s(&corpus_emb), "--top-k", "10", "--out", s(&out),
    ]);
    let rows = read_csv(&out.join("predictions.csv"));
    assert_eq!(rows.len(), 50);
    let header: Vec<&str> = rows[0].keys().map(String::as_str).collect();
    assert_eq!(BTreeSet::from_iter(header), BTreeSet::from(["character_id", "novel_id", "year", "score", "label"]));
    let per_novel = rows.iter().fold(std::collections::BTreeMap::<&str, usize>::new(), |mut m, r| {
        *m.entry(r["novel_id"].as_str()).or_default() += 1;
        m
    });
    assert!(per_novel.values().all(|&n| n == 10), "{per_novel:?}");
    for f in ["model.clmd", "ratio.csv", "centrality.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn detect_with_late_detectives_has_zero_early_ratio() {
    let dir = tempdir().unwrap();
    let (train, _) = synth(&dir.path().join("train"), &["--detectives", "60", "--others", "140", "--authors", "10"]);
    let (corpus, _) = synth(
        &dir.path().join("corpus"),
        &["--detectives", "30", "--others", "170", "--authors", "20", "--detectives-from", "1900", "--unlabeled", "--seed", "8"],
    );
    let out = dir.path().join("detect");
    ok(&[
        "detect", "--train-characters", s(&train), "--corpus-characters", s(&corpus), "--features", "bow", "--model", "logreg",
        "--out", s(&out),
    ]);
    let ratio = read_csv(&out.join("ratio.csv"));
    let early: Vec<_> = ratio.iter().filter(|r| r["bin_start"].parse::<i32>().unwrap() < 1900).collect();
    assert!(!early.is_empty());
    assert!(early.iter().all(|r| r["value"].parse::<f64>().unwrap() == 0.0), "{early:?}");
    assert!(ratio.iter().any(|r| r["value"].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn detect_rejects_empty_corpus() {
    let dir = tempdir().unwrap();
    let (train, _) = synth(dir.path(), &["--detectives", "10", "--others", "20", "--authors", "3"]);
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = run(&[
        "detect", "--train-characters", s(&train), "--corpus-characters", s(&empty), "--features", "bow", "--out",
        s(&dir.path().join("d")),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn zscore_scores_are_normalized() {
    let dir = tempdir().unwrap();
    let (chars, _) = synth(dir.path(), &["--detectives", "30", "--others", "60", "--authors", "3"]);
    let out = dir.path().join("z/z.csv");
    ok(&["zscore", "--characters", s(&chars), "--out", s(&out), "--svg"]);
    let rows = read_csv(&out);
    assert!(!rows.is_empty());
    let mut extremes = 0;
    for r in &rows {
        let z: f64 = r["normalized_z"].parse().unwrap();
        assert!((-1.0..=1.0).contains(&z), "{z}");
        extremes += usize::from(z.abs() == 1.0);
    }
    assert!(extremes >= 3, "each category reaches ±1");
    assert!(out.with_extension("top.csv").exists() && out.with_extension("svg").exists());

    // Explicit groups, and a groups file with the wrong schema.
    let groups = dir.path().join("groups.csv");
    std::fs::write(&groups, "character_id,group\nc00000,1\nc00001,2\nc00002,2\n").unwrap();
    ok(&["zscore", "--characters", s(&chars), "--groups", s(&groups), "--out", s(&dir.path().join("g.csv"))]);
    std::fs::write(&groups, "id,group\nc00000,1\n").unwrap();
    let bad = run(&["zscore", "--characters", s(&chars), "--groups", s(&groups), "--out", s(&dir.path().join("g.csv"))]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("character_id"), "{}", stderr(&bad));
}

#[test]
fn cluster_produces_k_labels() {
    let dir = tempdir().unwrap();
    let (chars, emb) = synth(dir.path(), &["--detectives", "60", "--others", "60", "--authors", "6"]);
    let out = dir.path().join("c");
    ok(&["cluster", "--characters", s(&chars), "--embeddings", s(&emb), "--k", "3", "--out", s(&out), "--svg"]);
    let rows = read_csv(&out.join("assignments.csv"));
    assert_eq!(rows.len(), 60, "detectives only by default");
    let labels: BTreeSet<&str> = rows.iter().map(|r| r["cluster"].as_str()).collect();
    assert_eq!(labels, BTreeSet::from(["0", "1", "2"]));
    for f in ["vocabulary.csv", "summary.txt", "clusters.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let all = dir.path().join("all");
    ok(&["cluster", "--characters", s(&chars), "--embeddings", s(&emb), "--all", "--out", s(&all)]);
    assert_eq!(read_csv(&all.join("assignments.csv")).len(), 120);

    let coords = dir.path().join("coords.csv");
    std::fs::write(&coords, "character_id,x\nc00000,1\n").unwrap();
    let bad = run(&["cluster", "--characters", s(&chars), "--embeddings", s(&emb), "--coords", s(&coords), "--out", s(&all)]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn trend_recovers_exact_quadratic() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("s.csv");
    let mut csv = String::from("bin_start,value,support\n");
    for x in (1850..=1990).step_by(5) {
        let xf = f64::from(x);
        csv += &format!("{x},{},3\n", 2.0 * xf * xf + 3.0 * xf + 1.0);
    }
    std::fs::write(&input, csv).unwrap();
    let out = dir.path().join("t.csv");
    ok(&["trend", "--input", s(&input), "--out", s(&out), "--svg"]);
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    let coeffs: Vec<f64> = header
        .trim_start_matches("# fit ")
        .split(',')
        .map(|kv| kv.split_once('=').unwrap().1.parse().unwrap())
        .collect();
    for (got, want) in coeffs.iter().zip([2.0, 3.0, 1.0]) {
        assert!((got - want).abs() < 1e-6, "{header}");
    }
    assert!(out.with_extension("svg").exists());

    std::fs::write(&input, "bin_start,val,support\n1900,1,1\n").unwrap();
    let bad = run(&["trend", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("value"), "{}", stderr(&bad));
}

#[test]
fn every_command_is_byte_identical_on_rerun() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    common::prepare_inputs(&data);
    common::run_every_command(dir.path(), &data, "a", &[]);
    common::run_every_command(dir.path(), &data, "b", &[]);
    common::run_every_command(dir.path(), &data, "one_thread", &[("ARCHLENS_THREADS", "1")]);
    let a = common::snapshot(&dir.path().join("a"));
    assert!(a.len() >= 20, "{:?}", a.keys());
    assert_eq!(a, common::snapshot(&dir.path().join("b")));
    assert_eq!(a, common::snapshot(&dir.path().join("one_thread")));
}

#[test]
fn synth_guards_its_inputs() {
    let dir = tempdir().unwrap();
    assert_eq!(code(&run(&["synth", "--dim", "0", "--out", s(dir.path())])), 64);
    assert_eq!(code(&run(&["synth", "--detectives-from", "2500", "--out", s(dir.path())])), 64);
    let (chars, _) = synth(dir.path(), &["--detectives", "5", "--others", "5", "--authors", "2", "--unlabeled"]);
    assert!(!std::fs::read_to_string(chars).unwrap().contains("\"label\""));
}
