// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks, one line per criterion.
//!
//! Criterion 8 needs a real masked language model. Set `ATISSUE_MLM_BACKEND`
//! to a backend spec, for example
//! `proto:python3 scripts/hf_scorer.py --model bert-base-uncased`,
//! to run it; otherwise it is reported as skipped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use atissue::experiments::{
    run_ellipsis_top1, run_ellipsis_top2, run_rejection_test, EvalConfig, ExperimentResult,
};
use atissue::lexicon::{default_lexicon, Auxiliary};
use atissue::probing::{evaluate_probe, ProbeConfig, TokenRecord};
use atissue::run::{cmd_generate, cmd_probe, cmd_score, BackendSpec, Run, RunConfig, Source};
use atissue::scoring::{
    preset_rules, pseudo_log_likelihood, pseudo_log_likelihood_by_position, LiveScorer, MockRules,
    MockScorer, PositionRule,
};
use atissue::stats::{one_sided_welch_t, wilson_ci};
use atissue::stimgen::{
    build_suite, ordered_pairs, InstanceKind, Label, Mode, SuiteConfig, Target,
};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)*));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Check {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:.2?}, limit {limit:?}");
    Ok(format!("{took:.2?}"))
}

fn generation_counts() -> Check {
    let start = Instant::now();
    let lex = default_lexicon();
    let pairs = ordered_pairs(lex.auxiliaries()).map_err(|e| e.to_string())?;
    ensure!(pairs.len() == 30, "{} ordered pairs", pairs.len());
    let suite = build_suite(
        &lex,
        &SuiteConfig {
            modes: vec![Mode::Arc],
            ..SuiteConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let contexts = suite.context_ids(Mode::Arc);
    ensure!(contexts.len() == 300, "{} contexts", contexts.len());
    let masked = suite.masked(Mode::Arc).count();
    ensure!(masked == 600, "{masked} masked instances");
    let seqs = suite.sequences().count();
    ensure!(seqs == 1200, "{seqs} header-test renderings");
    let mut main: BTreeMap<&Auxiliary, usize> = BTreeMap::new();
    let mut embedded: BTreeMap<&Auxiliary, usize> = BTreeMap::new();
    for item in suite
        .iter()
        .filter(|i| i.kind == InstanceKind::Sequence && i.target == Target::Main)
        .filter(|i| i.header == atissue::stimgen::Header::Reject)
    {
        *main.entry(&item.pair().main).or_default() += 1;
        *embedded.entry(&item.pair().embedded).or_default() += 1;
    }
    for aux in lex.auxiliaries() {
        ensure!(
            main.get(aux) == Some(&50),
            "{aux} main-target in {:?} contexts",
            main.get(aux)
        );
        ensure!(
            embedded.get(aux) == Some(&50),
            "{aux} embedded-target in {:?} contexts",
            embedded.get(aux)
        );
    }
    within(Duration::from_secs(5), start)
}

const WORDS: [&str; 12] = [
    "the", "nurse", "who", "did", "not", "No", "said", "Marco", "adopted", "dog", ",", "\"",
];

fn pll_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rules = MockRules::new("table");
    for w in WORDS {
        rules
            .token_table
            .insert(w.to_string(), -rng.random_range(0.1..9.0));
    }
    for position in 0..6 {
        rules.position_table.push(PositionRule {
            position,
            token: WORDS[position * 2].to_string(),
            logprob: -rng.random_range(0.1..9.0),
        });
    }
    let table = rules.token_table.clone();
    let positions: BTreeMap<(usize, String), f64> = rules
        .position_table
        .iter()
        .map(|r| ((r.position, r.token.clone()), r.logprob))
        .collect();
    let default = rules.token_logprob;
    let mock = MockScorer::new(rules, default_lexicon()).map_err(|e| e.to_string())?;
    let token_re = regex::Regex::new(r"\w+|[^\w\s]").expect("valid regex");
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..25);
        let mut text = String::new();
        for k in 0..n {
            if k > 0 && rng.random_bool(0.8) {
                text.push(' ');
            }
            text.push_str(if rng.random_bool(0.1) {
                "zebra"
            } else {
                WORDS[rng.random_range(0..WORDS.len())]
            });
        }
        let brute: f64 = token_re
            .find_iter(&text)
            .enumerate()
            .map(|(i, m)| {
                positions
                    .get(&(i, m.as_str().to_string()))
                    .or_else(|| table.get(m.as_str()))
                    .copied()
                    .unwrap_or(default)
            })
            .sum();
        let (pll, _) = pseudo_log_likelihood(&mock, &text).map_err(|e| e.to_string())?;
        let (by_pos, _) =
            pseudo_log_likelihood_by_position(&mock, &text).map_err(|e| e.to_string())?;
        worst = worst.max((pll - brute).abs()).max((by_pos - brute).abs());
    }
    ensure!(worst <= 1e-6, "max deviation {worst:e}");
    within(Duration::from_secs(10), start).map(|t| format!("max |Δ| {worst:.1e}, {t}"))
}

fn exact(r: &ExperimentResult, group: &str, num: u64, den: u64) -> Result<(), String> {
    let t = r.groups.get(group).ok_or(format!("no group {group}"))?;
    ensure!(
        t.n == den && t.successes() == num as f64,
        "{} {group}: {}/{} (expected {num}/{den})",
        r.experiment,
        t.successes(),
        t.n
    );
    Ok(())
}

fn scorer(preset: &str) -> LiveScorer<MockScorer> {
    LiveScorer::new(
        MockScorer::new(preset_rules(preset).expect("preset"), default_lexicon()).expect("mock"),
    )
}

fn metric_oracles() -> Check {
    let lex = default_lexicon();
    let suite = build_suite(&lex, &SuiteConfig::default()).map_err(|e| e.to_string())?;
    let cfg = EvalConfig::new(lex.auxiliaries().to_vec());
    let e = |r: atissue::Result<ExperimentResult>| r.map_err(|e| e.to_string());

    let s = scorer("prefer-main");
    let rej = e(run_rejection_test(&suite, &s, &cfg))?;
    let top1 = e(run_ellipsis_top1(&suite, &s, &cfg))?;
    for h in ["reject", "wait"] {
        exact(&rej, h, 300, 300)?;
        exact(&top1, h, 300, 300)?;
    }
    let s = scorer("prefer-embedded");
    let rej = e(run_rejection_test(&suite, &s, &cfg))?;
    let top1 = e(run_ellipsis_top1(&suite, &s, &cfg))?;
    exact(&rej, "reject", 0, 300)?;
    exact(&rej, "wait", 0, 300)?;
    exact(&top1, "reject", 0, 300)?;
    exact(&top1, "wait", 300, 300)?;
    let top2 = e(run_ellipsis_top2(&suite, &scorer("pair-top2"), &cfg))?;
    exact(&top2, "reject", 300, 300)?;
    exact(&top2, "wait", 300, 300)?;
    let top2 = e(run_ellipsis_top2(&suite, &scorer("did-does-top2"), &cfg))?;
    exact(&top2, "reject", 20, 300)?;
    exact(&top2, "wait", 20, 300)?;
    Ok("main 1.0/1.0, embedded 0.0 & top-1 0.0/1.0, pair top-2 1.0, did+does top-2 2/30".into())
}

fn frequency_bias() -> Check {
    let lex = default_lexicon();
    let suite = build_suite(&lex, &SuiteConfig::default()).map_err(|e| e.to_string())?;
    let cfg = EvalConfig::new(lex.auxiliaries().to_vec());
    let r = run_ellipsis_top1(&suite, &scorer("did-top1"), &cfg).map_err(|e| e.to_string())?;
    exact(&r, "reject", 50, 300)?;
    exact(&r, "wait", 100, 300)?;
    Ok("top-1 reject 1/6, wait 1/3".into())
}

/// Wilson bounds as the roots of (p̂ − p)² = z² p (1 − p) / n.
fn wilson_oracle(successes: f64, n: f64, z: f64) -> (f64, f64) {
    let ph = successes / n;
    let a = 1.0 + z * z / n;
    let b = -(2.0 * ph + z * z / n);
    let c = ph * ph;
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    ((-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a))
}

fn welch_oracle(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let p = StudentsT::new(0.0, 1.0, df).expect("valid df").sf(t);
    (t, df, p)
}

fn statistics() -> Check {
    let a = [1.0, 1.0, 0.0, 1.0];
    let b = [0.0, 1.0, 0.0, 0.0];
    let r = one_sided_welch_t(&a, &b).map_err(|e| e.to_string())?;
    ensure!(
        format!("{:.3}", r.t) == "1.414" && format!("{:.3}", r.df) == "6.000",
        "worked example t={} df={}",
        r.t,
        r.df
    );
    let levels = [
        (0.90, 1.644_853_626_951_472_2),
        (0.95, 1.959_963_984_540_054),
        (0.99, 2.575_829_303_548_900_4),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut ci_err, mut p_err, mut t_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..100 {
        let n = rng.random_range(1..500u64);
        let successes = rng.random_range(0..=2 * n) as f64 / 2.0;
        let (level, z) = levels[case % 3];
        let w = wilson_ci(successes, n, level).map_err(|e| e.to_string())?;
        let (lo, hi) = wilson_oracle(successes, n as f64, z);
        ci_err = ci_err
            .max((w.ci_low - lo).abs())
            .max((w.ci_high - hi).abs());

        let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let len = rng.random_range(2..40);
            let shift = rng.random_range(-1.0..1.0);
            let binary = rng.random_bool(0.5);
            (0..len)
                .map(|_| {
                    if binary {
                        f64::from(u8::from(rng.random_bool(0.5)))
                    } else {
                        shift + rng.random_range(-2.0..2.0)
                    }
                })
                .collect()
        };
        let (xa, xb) = loop {
            let xa = sample(&mut rng);
            let xb = sample(&mut rng);
            if welch_oracle(&xa, &xb).0.is_finite() {
                break (xa, xb);
            }
        };
        let got = one_sided_welch_t(&xa, &xb).map_err(|e| e.to_string())?;
        let (t, df, p) = welch_oracle(&xa, &xb);
        t_err = t_err.max((got.t - t).abs()).max((got.df - df).abs());
        p_err = p_err.max((got.p_one_sided - p).abs());
    }
    ensure!(ci_err <= 1e-6, "Wilson deviation {ci_err:e}");
    ensure!(p_err <= 1e-6, "p deviation {p_err:e}");
    ensure!(t_err <= 1e-9, "t/df deviation {t_err:e}");
    Ok(format!(
        "worked example t=1.414 df=6.000; max |Δ| CI {ci_err:.1e}, p {p_err:.1e}, t/df {t_err:.1e}"
    ))
}

fn synthetic_records(
    n_items: usize,
    per_item: usize,
    seed: u64,
    separable: bool,
) -> Vec<TokenRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..n_items {
        for t in 0..per_item {
            let u: f64 = rng.random();
            let c = if u < 0.6 {
                0
            } else if u < 0.85 {
                1
            } else {
                2
            };
            let embedding = (0..16)
                .map(|k| {
                    let centre = if separable && k == c { 4.0 } else { 0.0 };
                    centre + rng.random_range(-1.0..1.0)
                })
                .collect();
            out.push(TokenRecord {
                item_id: format!("synthetic-{i:04}"),
                token_index: t,
                token: format!("t{t}"),
                char_span: (t, t + 1),
                label: Label::ALL[c],
                embedding,
            });
        }
    }
    out
}

fn probe_sanity() -> Check {
    let start = Instant::now();
    let cfg = ProbeConfig::default();
    let sep = evaluate_probe(&synthetic_records(300, 20, 1, true), "synthetic", &cfg)
        .map_err(|e| e.to_string())?;
    ensure!(
        sep.mean_accuracy >= 0.99,
        "separable mean accuracy {:.4}",
        sep.mean_accuracy
    );
    let rnd = evaluate_probe(&synthetic_records(300, 20, 2, false), "random", &cfg)
        .map_err(|e| e.to_string())?;
    let majority = rnd.runs.iter().map(|r| r.majority_share).sum::<f64>() / rnd.runs.len() as f64;
    ensure!(
        (rnd.mean_accuracy - majority).abs() <= 0.05,
        "random-label accuracy {:.4} vs majority share {majority:.4}",
        rnd.mean_accuracy
    );
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "separable {:.4}; random {:.4} vs majority {majority:.4}; {t}",
        sep.mean_accuracy, rnd.mean_accuracy
    ))
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_atissue"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "atissue {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["results", "reports"] {
        for e in std::fs::read_dir(dir.join(sub)).expect("run subdirectory") {
            let p = e.expect("dir entry").path();
            out.insert(p.clone(), std::fs::read(&p).expect("readable"));
        }
    }
    out
}

fn replay_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = tmp.path().join("run");
    let run = run.to_str().expect("utf-8 path");
    cli(&["generate", "--out", run])?;
    cli(&[
        "score",
        "--out",
        run,
        "--backend",
        "inproc:frequency",
        "--threads",
        "4",
    ])?;
    cli(&["run", "all", "--out", run, "--backend", "inproc:frequency"])?;
    cli(&["probe", "--out", run, "--backend", "inproc:frequency"])?;
    cli(&["report", run])?;
    let live = snapshot(Path::new(run));

    let mut replays = Vec::new();
    for _ in 0..2 {
        for sub in ["results", "reports"] {
            let d = Path::new(run).join(sub);
            std::fs::remove_dir_all(&d).map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&d).map_err(|e| e.to_string())?;
        }
        cli(&["run", "all", "--out", run])?;
        cli(&["probe", "--out", run])?;
        cli(&["report", run])?;
        replays.push(snapshot(Path::new(run)));
    }
    ensure!(replays[0] == replays[1], "replay invocations differ");
    ensure!(replays[0] == live, "replay differs from the live run");
    let reports = replays[0]
        .keys()
        .filter(|p| p.starts_with(Path::new(run).join("reports")))
        .count();
    Ok(format!(
        "{} files identical across two replays and the live run ({reports} reports)",
        replays[0].len()
    ))
}

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn model_backed() -> Outcome {
    let Ok(spec) = std::env::var("ATISSUE_MLM_BACKEND") else {
        return Outcome::Skip(
            "no masked-LM backend configured (set ATISSUE_MLM_BACKEND, e.g. \
             `proto:python3 scripts/hf_scorer.py --model bert-base-uncased`)"
                .into(),
        );
    };
    let check = || -> Check {
        let start = Instant::now();
        let spec: BackendSpec = spec.parse().map_err(|e: atissue::Error| e.to_string())?;
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = RunConfig {
            modes: vec![Mode::Arc],
            ..RunConfig::default()
        };
        cmd_generate(&cfg, tmp.path(), vec![]).map_err(|e| e.to_string())?;
        let mut run = Run::open(tmp.path()).map_err(|e| e.to_string())?;
        let source = Source::open(&spec, &run.lexicon).map_err(|e| e.to_string())?;
        let summary = cmd_score(&mut run, &source, 1, None).map_err(|e| e.to_string())?;
        ensure!(
            summary.failures.is_empty(),
            "{} scoring failures",
            summary.failures.len()
        );
        let replay = atissue::run::replay_of(&run).map_err(|e| e.to_string())?;
        let rej = run_rejection_test(&run.suite, replay.records(), &run.eval_config())
            .map_err(|e| e.to_string())?;
        let probe = cmd_probe(&mut run, &source).map_err(|e| e.to_string())?;
        let share = |g: &str| rej.groups[g].successes() / rej.groups[g].n as f64;
        let (r, w) = (share("reject"), share("wait"));
        ensure!(
            r > 0.5 && w > 0.5,
            "rejection preference reject {r:.3}, wait {w:.3}"
        );
        ensure!(
            probe.mean_accuracy >= 0.95,
            "probe accuracy {:.4}",
            probe.mean_accuracy
        );
        Ok(format!(
            "{}: rejection reject {r:.3} / wait {w:.3}, probe {:.4}, {:.1?}",
            source.model_id(),
            probe.mean_accuracy,
            start.elapsed()
        ))
    };
    match check() {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn main() {
    // `cargo test` passes harness flags; honour a name filter if one is given.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let checks: [Criterion; 8] = [
        ("1 generation counts", || wrap(generation_counts())),
        ("2 pseudo-log-likelihood oracle", || wrap(pll_oracle())),
        ("3 metric oracles", || wrap(metric_oracles())),
        ("4 frequency-bias closed form", || wrap(frequency_bias())),
        ("5 statistics", || wrap(statistics())),
        ("6 probe sanity", || wrap(probe_sanity())),
        ("7 replay determinism", || wrap(replay_determinism())),
        ("8 masked-LM directional", model_backed),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        if filter.as_deref().is_some_and(|flt| !name.contains(flt)) {
            continue;
        }
        match f() {
            Outcome::Pass(d) => println!("criterion {name}: PASS ({d})"),
            Outcome::Skip(d) => println!("criterion {name}: SKIPPED ({d})"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {name}: FAIL ({d})");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn wrap(c: Check) -> Outcome {
    match c {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}
