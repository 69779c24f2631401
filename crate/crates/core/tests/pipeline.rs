// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn atissue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atissue"))
        .args(args)
        .env_remove("ATISSUE_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = atissue(args);
    assert!(
        out.status.success(),
        "atissue {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scored_run(dir: &Path, backend: &str, extra: &[&str]) -> PathBuf {
    let run = dir.join(backend.replace(':', "-"));
    let mut args = vec!["generate", "--out", s(&run)];
    args.extend_from_slice(extra);
    ok(&args);
    ok(&["score", "--out", s(&run), "--backend", backend]);
    run
}

fn lines(p: &Path) -> Vec<String> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    assert_eq!(atissue(&[]).status.code(), Some(1));
    assert_eq!(
        atissue(&["score", "--out", s(&run), "--backend", "nope:x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        atissue(&["run", "all", "--out", s(&run)]).status.code(),
        Some(2)
    );
    ok(&["generate", "--out", s(&run), "--n-per-pair", "1"]);
    assert_eq!(
        atissue(&["run", "bogus", "--out", s(&run)]).status.code(),
        Some(1)
    );
    // not scored yet
    assert_eq!(
        atissue(&["run", "all", "--out", s(&run)]).status.code(),
        Some(2)
    );
    let out = atissue(&["score", "--out", s(&run), "--backend", "proto:exit 0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn generation_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["generate", "--out", s(&a), "--seed", "7"]);
    ok(&["generate", "--out", s(&b), "--seed", "7"]);
    for f in ["stimuli/suite.jsonl", "stimuli/lexicon.toml"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest = |p: &Path| -> Value {
        serde_json::from_str(&std::fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap()
    };
    let before = manifest(&a);
    ok(&["generate", "--out", s(&a), "--seed", "7"]);
    assert_eq!(manifest(&a)["run_id"], before["run_id"]);
}

#[test]
fn conjunction_mode_has_no_not_at_issue_spans() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    ok(&["generate", "--out", s(&run), "--mode", "conjunction"]);
    let suite = lines(&run.join("stimuli/suite.jsonl"));
    assert!(!suite.is_empty());
    for l in &suite {
        assert!(!l.contains("not_at_issue"), "{l}");
        let v: Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["mode"], "conjunction");
    }
}

#[test]
fn resume_rebuilds_an_identical_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let run = scored_run(tmp.path(), "inproc:frequency", &["--n-per-pair", "2"]);
    let scores = run.join("scores/scores.jsonl");
    let mut full = lines(&scores);
    // drop the tail and leave a torn final line, as after an interrupted write
    let keep = full.len() / 3;
    let mut partial = full[..keep].join("\n");
    partial.push('\n');
    partial.push_str(&full[keep][..10]);
    std::fs::write(&scores, partial).unwrap();

    let out = ok(&[
        "score",
        "--out",
        s(&run),
        "--backend",
        "inproc:frequency",
        "--threads",
        "3",
    ]);
    assert!(out.contains(&format!("{keep} cached")), "{out}");
    let mut resumed = lines(&scores);
    full.sort();
    resumed.sort();
    assert_eq!(full, resumed);
}

#[test]
fn replay_cache_miss_names_the_item() {
    let tmp = tempfile::tempdir().unwrap();
    let run = scored_run(tmp.path(), "inproc:frequency", &["--n-per-pair", "1"]);
    let scores = run.join("scores/scores.jsonl");
    let all = lines(&scores);
    let victim = all
        .iter()
        .position(|l| l.contains("\"variant\":\"masked\"") && l.contains("\"item_id\":\"arc-"))
        .unwrap();
    let id = serde_json::from_str::<Value>(&all[victim]).unwrap()["item_id"]
        .as_str()
        .unwrap()
        .to_string();
    let rest: Vec<&str> = all
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != victim)
        .map(|(_, l)| l.as_str())
        .collect();
    std::fs::write(&scores, rest.join("\n") + "\n").unwrap();

    let out = atissue(&["run", "rejection", "--out", s(&run)]);
    // a replay that cannot answer is a backend failure
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&id));
}

#[test]
fn reports_cover_every_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = scored_run(tmp.path(), "inproc:frequency", &[]);
    ok(&["run", "all", "--out", s(&run)]);
    let fig5 = lines(&run.join("reports/fig5_verbs.csv"));
    assert_eq!(
        fig5.len(),
        25,
        "header plus six verbs by two roles by two headers"
    );
    assert!(fig5[0].starts_with("run_id,schema_version,model_id"));
    let index = std::fs::read_to_string(run.join("reports/index.md")).unwrap();
    for fig in [
        "fig1_header",
        "fig2_rejection",
        "fig3_conjunction",
        "fig4a_top1",
        "fig4b_top2",
    ] {
        assert!(index.contains(fig), "{fig} missing from index");
    }
}

#[test]
fn comparison_has_one_column_per_model() {
    let tmp = tempfile::tempdir().unwrap();
    let a = scored_run(tmp.path(), "inproc:frequency", &["--n-per-pair", "1"]);
    let b = scored_run(tmp.path(), "inproc:prefer-main", &["--n-per-pair", "1"]);
    for r in [&a, &b] {
        ok(&["run", "all", "--out", s(r)]);
    }
    let cmp = tmp.path().join("cmp");
    ok(&["report", s(&a), s(&b), "--out", s(&cmp)]);
    let md = std::fs::read_to_string(cmp.join("comparison.md")).unwrap();
    assert!(
        md.contains("mock-frequency") && md.contains("mock-prefer-main"),
        "{md}"
    );
    let csv = lines(&cmp.join("comparison.csv"));
    assert!(csv.len() > 1);
    assert!(csv.iter().any(|l| l.contains("mock-frequency")));
    assert!(csv.iter().any(|l| l.contains("mock-prefer-main")));
}

#[test]
fn run_dir_is_bound_to_one_model() {
    let tmp = tempfile::tempdir().unwrap();
    let run = scored_run(tmp.path(), "inproc:frequency", &["--n-per-pair", "1"]);
    let out = atissue(&["score", "--out", s(&run), "--backend", "inproc:prefer-main"]);
    assert_eq!(out.status.code(), Some(1));
}
