// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::Command;

use atissue::lexicon::Auxiliary;
use atissue::scoring::{
    masked_candidate_logprobs, ProtoScorer, ScoreCache, ScorerBackend, Variant,
};

fn fixture() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/fake_scorer.py")
        .display()
        .to_string()
}

fn python() -> Option<&'static str> {
    Command::new("python3")
        .arg("--version")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|_| "python3")
}

fn aux(names: &[&str]) -> Vec<Auxiliary> {
    names.iter().map(|n| Auxiliary::new(*n)).collect()
}

#[test]
fn direct_candidates_and_offsets() {
    let Some(py) = python() else { return };
    let scorer = ProtoScorer::spawn(&format!("{py} {}", fixture())).unwrap();
    assert_eq!(scorer.model_id(), "fake-proto");
    let toks = scorer.tokenize("Né, he did.").unwrap();
    let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(texts, ["Né", ",", "he", "did", "."]);
    assert_eq!((toks[1].start, toks[1].end), (2, 3));

    let scores =
        masked_candidate_logprobs(&scorer, "No, he [MASK] not.", &aux(&["did", "would"])).unwrap();
    assert!(!scores.fallback);
    assert_eq!(scores.logprobs[&Auxiliary::new("would")], -5.0);
}

#[test]
fn multi_token_candidates_fall_back_to_sequences() {
    let Some(py) = python() else { return };
    let scorer = ProtoScorer::spawn(&format!("{py} {} --multi-token would", fixture())).unwrap();
    let scores =
        masked_candidate_logprobs(&scorer, "No, he [MASK] not.", &aux(&["did", "would"])).unwrap();
    assert!(scores.fallback);
    let did = scores.logprobs[&Auxiliary::new("did")];
    let would = scores.logprobs[&Auxiliary::new("would")];
    assert!(did > would);
}

#[test]
fn cli_pipeline_over_the_protocol() {
    let Some(py) = python() else { return };
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let bin = env!("CARGO_BIN_EXE_atissue");
    let backend = format!("proto:{py} {} --multi-token would", fixture());
    let sh = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let r = run.to_str().unwrap();
    sh(&["generate", "--out", r, "--n-per-pair", "1", "--mode", "arc"]);
    sh(&["score", "--out", r, "--backend", &backend, "--threads", "2"]);
    sh(&["run", "all", "--out", r]);
    sh(&["probe", "--out", r, "--backend", &backend]);

    let cache = ScoreCache::load(run.join("scores/scores.jsonl")).unwrap();
    let masked: Vec<_> = cache
        .records()
        .filter(|r| r.variant == Variant::Masked)
        .collect();
    assert_eq!(masked.len(), 60);
    assert!(masked
        .iter()
        .all(|r| r.fallback && r.model_id == "fake-proto"));
    assert!(run.join("results/probe.json").exists());
    assert!(run.join("results/rejection.json").exists());
}
