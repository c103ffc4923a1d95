//! Helpers for driving the `archlens` binary.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_archlens");

pub fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("ARCHLENS_THREADS").env("RUST_LOG", "error");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs and asserts success, returning stdout.
pub fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(code(&out), 0, "{args:?} failed: {}", stderr(&out));
    stdout(&out)
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Writes a synthetic corpus into `dir` and returns the characters and
/// embeddings paths.
pub fn synth(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let mut args = vec!["synth", "--out", s(dir)];
    args.extend_from_slice(extra);
    ok(&args);
    (dir.join("characters.jsonl"), dir.join("embeddings.cemb"))
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Parses a CSV with a header row into records keyed by column name.
pub fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).expect("csv opens");
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| headers.iter().zip(r.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

/// Fixture set used by the per-command determinism checks. Each command
/// writes into `root/<tag>/`.
pub fn run_every_command(root: &Path, data: &Path, tag: &str, env: &[(&str, &str)]) {
    let (chars, emb) = (data.join("characters.jsonl"), data.join("embeddings.cemb"));
    let corpus = data.join("corpus");
    let out = root.join(tag);
    let o = |name: &str| out.join(name);
    let series = data.join("series.csv");
    let runs: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--detectives".into(), "30".into(), "--others".into(), "70".into(), "--seed".into(), "5".into(), "--out".into(), s(&o("synth")).into()],
        vec!["validate".into(), "--characters".into(), s(&chars).into(), "--embeddings".into(), s(&emb).into()],
        vec!["eval".into(), "--characters".into(), s(&chars).into(), "--embeddings".into(), s(&emb).into(), "--out".into(), s(&o("eval")).into(), "--svg".into()],
        vec!["eval".into(), "--characters".into(), s(&chars).into(), "--features".into(), "bow".into(), "--model".into(), "logreg".into(), "--scheme".into(), "logo:author".into(), "--out".into(), s(&o("eval_bow")).into()],
        vec![
            "detect".into(), "--train-characters".into(), s(&chars).into(), "--train-embeddings".into(), s(&emb).into(),
            "--corpus-characters".into(), s(&corpus.join("characters.jsonl")).into(), "--corpus-embeddings".into(),
            s(&corpus.join("embeddings.cemb")).into(), "--out".into(), s(&o("detect")).into(), "--svg".into(),
        ],
        vec!["zscore".into(), "--characters".into(), s(&chars).into(), "--out".into(), s(&o("zscore/z.csv")).into(), "--svg".into()],
        vec!["cluster".into(), "--characters".into(), s(&chars).into(), "--embeddings".into(), s(&emb).into(), "--out".into(), s(&o("cluster")).into(), "--svg".into()],
        vec!["trend".into(), "--input".into(), s(&series).into(), "--out".into(), s(&o("trend/t.csv")).into(), "--svg".into()],
    ];
    for args in runs {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let r = run_env(&refs, env);
        assert_eq!(code(&r), 0, "{refs:?}: {}", stderr(&r));
        std::fs::create_dir_all(&out).unwrap();
        let name = format!("{}.stdout", refs[0]);
        let prev = std::fs::read(out.join(&name)).unwrap_or_default();
        std::fs::write(out.join(&name), [prev, r.stdout].concat()).unwrap();
    }
}

/// Prepares the inputs for [`run_every_command`] in `data`.
pub fn prepare_inputs(data: &Path) {
    synth(data, &["--detectives", "40", "--others", "90", "--authors", "6", "--seed", "3"]);
    synth(&data.join("corpus"), &["--detectives", "20", "--others", "100", "--authors", "5", "--novels-per-author", "2", "--unlabeled", "--seed", "4"]);
    let mut csv = String::from("bin_start,value,support\n");
    for x in (1850..=1990).step_by(10) {
        let xf = f64::from(x);
        csv += &format!("{x},{},1\n", 2.0 * xf * xf + 3.0 * xf + 1.0);
    }
    std::fs::write(data.join("series.csv"), csv).unwrap();
}
