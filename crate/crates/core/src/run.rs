// SPDX-License-Identifier: Apache-2.0

//! Persisted runs: configuration, manifest, directory layout, and the
//! generate / score / run / probe / report commands.
//!
//! ```text
//! <run>/manifest.json
//! <run>/stimuli/{lexicon.toml, suite.jsonl}
//! <run>/scores/{scores.jsonl, probe_dataset.jsonl}
//! <run>/results/{<experiment>.json, probe.json}
//! <run>/reports/{*.csv, *.md}
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{run_experiment, EvalConfig, Experiment, ExperimentResult};
use crate::lexicon::{default_lexicon, load_lexicon, Lexicon};
use crate::probing::{
    build_probe_dataset, evaluate_probe, read_dataset, write_dataset, ProbeConfig, ProbeResult,
};
use crate::report::{render_run, write_files, RunResults};
use crate::scoring::{
    preset_rules, score_items, LiveScorer, MockRules, MockScorer, ProtoScorer, RecordSource,
    ReplayScorer, ScoreCache, ScorerBackend, Variant,
};
use crate::stimgen::{build_suite, Format, Mode, StimulusItem, Suite, SuiteConfig};
use crate::SCHEMA_VERSION;

/// Environment variable naming a shared score-cache root.
pub const CACHE_ENV: &str = "ATISSUE_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n_per_pair: usize,
    pub modes: Vec<Mode>,
    pub format: Format,
    /// Lexicon file; the shipped lexicon when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    pub tie_epsilon: f64,
    pub ci_level: f64,
    pub probe: ProbeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let suite = SuiteConfig::default();
        RunConfig {
            seed: suite.seed,
            n_per_pair: suite.n_per_pair,
            modes: suite.modes,
            format: suite.format,
            lexicon: None,
            tie_epsilon: 0.0,
            ci_level: 0.95,
            probe: ProbeConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(src).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&src).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_pair == 0 {
            return Err(Error::Config("n_per_pair must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("at least one mode required".into()));
        }
        if self.tie_epsilon.is_nan() || self.tie_epsilon < 0.0 {
            return Err(Error::Config("tie_epsilon must be ≥ 0".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(
                "ci_level must lie strictly between 0 and 1".into(),
            ));
        }
        self.probe.validate()
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            n_per_pair: self.n_per_pair,
            modes: self.modes.clone(),
            format: self.format,
        }
    }

    pub fn eval_config(&self, lexicon: &Lexicon) -> EvalConfig {
        EvalConfig {
            candidates: lexicon.auxiliaries().to_vec(),
            tie_epsilon: self.tie_epsilon,
            ci_level: self.ci_level,
        }
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        match &self.lexicon {
            Some(p) => load_lexicon(p),
            None => Ok(default_lexicon()),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub run_id: String,
    pub created_at: String,
    pub seed: u64,
    pub config_digest: String,
    pub lexicon_digest: String,
    pub suite_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub command: Vec<String>,
    pub config: RunConfig,
}

/// Paths inside a run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
    pub fn lexicon(&self) -> PathBuf {
        self.root.join("stimuli/lexicon.toml")
    }
    pub fn suite(&self) -> PathBuf {
        self.root.join("stimuli/suite.jsonl")
    }
    pub fn scores(&self) -> PathBuf {
        self.root.join("scores/scores.jsonl")
    }
    pub fn probe_dataset(&self) -> PathBuf {
        self.root.join("scores/probe_dataset.jsonl")
    }
    pub fn results(&self) -> PathBuf {
        self.root.join("results")
    }
    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    fn create(&self) -> Result<()> {
        for sub in ["stimuli", "scores", "results", "reports"] {
            let p = self.root.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&src).map_err(|e| Error::Record {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn check_digest(what: &'static str, stored: &str, actual: String) -> Result<()> {
    if stored == actual {
        Ok(())
    } else {
        Err(Error::DigestMismatch {
            what,
            stored: stored.to_string(),
            actual,
        })
    }
}

/// A loaded, digest-checked run directory.
#[derive(Debug, Clone)]
pub struct Run {
    pub dir: RunDir,
    pub manifest: RunManifest,
    pub lexicon: Lexicon,
    pub suite: Suite,
}

impl Run {
    pub fn open(root: impl Into<PathBuf>) -> Result<Run> {
        let dir = RunDir::new(root);
        let manifest: RunManifest = read_json(&dir.manifest())?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "{}: schema_version {} (expected {SCHEMA_VERSION})",
                dir.manifest().display(),
                manifest.schema_version
            )));
        }
        check_digest("config", &manifest.config_digest, manifest.config.digest())?;
        let lex_path = dir.lexicon();
        let lex_src = std::fs::read_to_string(&lex_path).map_err(|e| Error::io(&lex_path, e))?;
        let lexicon = Lexicon::from_toml_str(&lex_src, &lex_path.display().to_string())?;
        check_digest("lexicon", &manifest.lexicon_digest, lexicon.digest())?;
        let suite_path = dir.suite();
        let suite_src =
            std::fs::read_to_string(&suite_path).map_err(|e| Error::io(&suite_path, e))?;
        check_digest(
            "suite",
            &manifest.suite_digest,
            sha256_hex(suite_src.as_bytes()),
        )?;
        let suite = Suite::read_jsonl(&suite_path)?;
        Ok(Run {
            dir,
            manifest,
            lexicon,
            suite,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.manifest.run_id
    }

    pub fn eval_config(&self) -> EvalConfig {
        self.manifest.config.eval_config(&self.lexicon)
    }

    fn save_manifest(&self) -> Result<()> {
        write_json(&self.dir.manifest(), &self.manifest)
    }
}

/// Writes the lexicon and suite for `config` into `out`. Regenerating an
/// identical suite keeps the existing manifest untouched.
pub fn cmd_generate(config: &RunConfig, out: &Path, command: Vec<String>) -> Result<RunManifest> {
    config.validate()?;
    let lexicon = config.lexicon()?;
    let suite = build_suite(&lexicon, &config.suite_config())?;
    let suite_src = suite.to_jsonl();
    let lex_src = lexicon.to_toml_string();
    let config_digest = config.digest();
    let lexicon_digest = lexicon.digest();
    let suite_digest = sha256_hex(suite_src.as_bytes());

    let dir = RunDir::new(out);
    if dir.manifest().exists() {
        let old: RunManifest = read_json(&dir.manifest())?;
        if old.suite_digest == suite_digest
            && old.config_digest == config_digest
            && old.lexicon_digest == lexicon_digest
        {
            return Ok(old);
        }
        if dir.scores().exists() {
            return Err(Error::Config(format!(
                "{} already holds scores for a different suite; use a fresh directory",
                out.display()
            )));
        }
    }
    dir.create()?;
    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let run_id = format!(
        "run-{}",
        &sha256_hex(
            format!("{config_digest}{lexicon_digest}{suite_digest}{created_at}").as_bytes()
        )[..12]
    );
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        run_id,
        created_at,
        seed: config.seed,
        config_digest,
        lexicon_digest,
        suite_digest,
        model_id: None,
        command,
        config: config.clone(),
    };
    write_json(&dir.manifest(), &manifest)?;
    let lp = dir.lexicon();
    std::fs::write(&lp, lex_src).map_err(|e| Error::io(&lp, e))?;
    let sp = dir.suite();
    std::fs::write(&sp, suite_src).map_err(|e| Error::io(&sp, e))?;
    Ok(manifest)
}

/// How to obtain scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    /// Built-in mock preset.
    InProc(String),
    /// Mock driven by a rules file.
    Mock(PathBuf),
    /// External scorer process speaking the line protocol.
    Proto(String),
    /// Persisted scores: a cache file or a run directory.
    Replay(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (scheme, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("backend {s:?} lacks a `scheme:` prefix")))?;
        if rest.is_empty() {
            return Err(Error::Config(format!(
                "backend {s:?} has an empty argument"
            )));
        }
        match scheme {
            "inproc" => Ok(BackendSpec::InProc(rest.to_string())),
            "mock" => Ok(BackendSpec::Mock(rest.into())),
            "proto" => Ok(BackendSpec::Proto(rest.to_string())),
            "replay" => Ok(BackendSpec::Replay(rest.into())),
            _ => Err(Error::Config(format!(
                "unknown backend scheme `{scheme}` (inproc, mock, proto, replay)"
            ))),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::InProc(p) => write!(f, "inproc:{p}"),
            BackendSpec::Mock(p) => write!(f, "mock:{}", p.display()),
            BackendSpec::Proto(c) => write!(f, "proto:{c}"),
            BackendSpec::Replay(p) => write!(f, "replay:{}", p.display()),
        }
    }
}

/// An opened backend.
pub enum Source {
    Live(LiveScorer<Box<dyn ScorerBackend>>),
    Replay {
        scorer: ReplayScorer,
        probe_dataset: Option<PathBuf>,
    },
}

impl Source {
    pub fn open(spec: &BackendSpec, lexicon: &Lexicon) -> Result<Source> {
        let live = |b: Box<dyn ScorerBackend>| Ok(Source::Live(LiveScorer::new(b)));
        match spec {
            BackendSpec::InProc(name) => {
                let rules = preset_rules(name).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown in-process model `{name}` (available: {})",
                        crate::scoring::PRESETS.join(", ")
                    ))
                })?;
                live(Box::new(MockScorer::new(rules, lexicon.clone())?))
            }
            BackendSpec::Mock(path) => {
                let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                live(Box::new(MockScorer::new(
                    MockRules::from_toml_str(&src)?,
                    lexicon.clone(),
                )?))
            }
            BackendSpec::Proto(cmd) => live(Box::new(ProtoScorer::spawn(cmd)?)),
            BackendSpec::Replay(path) => {
                let (file, probe_dataset) = if path.is_dir() {
                    let d = RunDir::new(path);
                    (d.scores(), Some(d.probe_dataset()))
                } else {
                    (path.clone(), None)
                };
                Ok(Source::Replay {
                    scorer: ReplayScorer::open(&file, None)?,
                    probe_dataset,
                })
            }
        }
    }

    pub fn records(&self) -> &dyn RecordSource {
        match self {
            Source::Live(l) => l,
            Source::Replay { scorer, .. } => scorer,
        }
    }

    pub fn model_id(&self) -> &str {
        self.records().model_id()
    }

    pub fn backend(&self) -> Option<&dyn ScorerBackend> {
        match self {
            Source::Live(l) => Some(l.backend().as_ref()),
            Source::Replay { .. } => None,
        }
    }
}

/// The run's own score cache as a replay source.
pub fn replay_of(run: &Run) -> Result<Source> {
    let model = run.manifest.model_id.as_deref().ok_or_else(|| {
        Error::MissingScores(format!(
            "{} has not been scored yet",
            run.dir.root.display()
        ))
    })?;
    Ok(Source::Replay {
        scorer: ReplayScorer::open(run.dir.scores(), Some(model))?,
        probe_dataset: Some(run.dir.probe_dataset()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub model_id: String,
    pub total: usize,
    pub already_cached: usize,
    pub from_shared_cache: usize,
    pub scored: usize,
    pub failures: Vec<(String, String)>,
}

fn model_slug(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn bind_model(run: &mut Run, model_id: &str) -> Result<()> {
    match &run.manifest.model_id {
        Some(m) if m != model_id => Err(Error::Config(format!(
            "{} is bound to model `{m}`, not `{model_id}`; use one run directory per model",
            run.dir.root.display()
        ))),
        Some(_) => Ok(()),
        None => {
            run.manifest.model_id = Some(model_id.to_string());
            run.save_manifest()
        }
    }
}

/// Scores every suite instance not yet in the run's cache. Successful records
/// are appended as they complete, so an interrupted run resumes where it
/// stopped; per-item failures are collected rather than aborting the run.
pub fn cmd_score(
    run: &mut Run,
    source: &Source,
    threads: usize,
    shared_root: Option<&Path>,
) -> Result<ScoreSummary> {
    let model_id = source.model_id().to_string();
    bind_model(run, &model_id)?;
    let cache_path = run.dir.scores();
    let mut cache = ScoreCache::load(&cache_path)?;
    let key_of = |item: &StimulusItem| crate::scoring::CacheKey {
        model_id: model_id.clone(),
        schema_version: SCHEMA_VERSION,
        item_id: item.id.clone(),
        variant: Variant::of(item),
    };
    let mut summary = ScoreSummary {
        model_id: model_id.clone(),
        total: run.suite.len(),
        already_cached: run
            .suite
            .iter()
            .filter(|i| cache.contains(&key_of(i)))
            .count(),
        from_shared_cache: 0,
        scored: 0,
        failures: Vec::new(),
    };

    let shared_path = match shared_root {
        Some(root) => {
            let dir = root.join(model_slug(&model_id));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            Some(dir.join(format!("{}.jsonl", &run.manifest.suite_digest[..16])))
        }
        None => None,
    };
    let shared = match &shared_path {
        Some(p) => ScoreCache::load(p)?,
        None => ScoreCache::new(),
    };
    let mut imported = Vec::new();
    for item in run.suite.iter() {
        let key = key_of(item);
        if cache.contains(&key) {
            continue;
        }
        if let Some(rec) = shared.get(&model_id, &item.id, key.variant) {
            imported.push(rec.clone());
        }
    }
    ScoreCache::append(&cache_path, &imported)?;
    summary.from_shared_cache = imported.len();
    imported.into_iter().for_each(|r| cache.insert(r));

    let candidates = run.lexicon.auxiliaries().to_vec();
    let pending: Vec<&StimulusItem> = run
        .suite
        .iter()
        .filter(|i| !cache.contains(&key_of(i)))
        .collect();
    let chunk = 64 * threads.max(1);
    for batch in pending.chunks(chunk) {
        let results = score_items(source.records(), batch, &candidates, threads);
        let mut ok = Vec::new();
        for (item, res) in batch.iter().zip(results) {
            match res {
                Ok(rec) => ok.push(rec),
                Err(e) => summary.failures.push((item.id.clone(), e.to_string())),
            }
        }
        ScoreCache::append(&cache_path, &ok)?;
        if let Some(p) = &shared_path {
            ScoreCache::append(p, &ok)?;
        }
        summary.scored += ok.len();
    }
    Ok(summary)
}

/// Result file wrapper carrying the run id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile<T> {
    pub schema_version: u32,
    pub run_id: String,
    pub result: T,
}

fn result_path(run: &Run, name: &str) -> PathBuf {
    run.dir.results().join(format!("{name}.json"))
}

fn save_result<T: Serialize>(run: &Run, name: &str, result: T) -> Result<()> {
    write_json(
        &result_path(run, name),
        &ResultFile {
            schema_version: SCHEMA_VERSION,
            run_id: run.run_id().to_string(),
            result,
        },
    )
}

fn load_result<T: serde::de::DeserializeOwned>(run: &Run, name: &str) -> Result<Option<T>> {
    let path = result_path(run, name);
    if !path.exists() {
        return Ok(None);
    }
    let file: ResultFile<T> = read_json(&path)?;
    if file.schema_version != SCHEMA_VERSION || file.run_id != run.run_id() {
        return Err(Error::Schema(format!(
            "{} belongs to run {} (schema {}), not {} (schema {SCHEMA_VERSION})",
            path.display(),
            file.run_id,
            file.schema_version,
            run.run_id()
        )));
    }
    Ok(Some(file.result))
}

fn required_mode(e: Experiment) -> Mode {
    match e {
        Experiment::Conjunction => Mode::Conjunction,
        _ => Mode::Arc,
    }
}

/// Runs experiments and refreshes the run's reports. With `skip_missing`,
/// experiments whose mode the suite lacks are skipped instead of failing.
pub fn cmd_run(
    run: &mut Run,
    experiments: &[Experiment],
    source: &Source,
    skip_missing: bool,
) -> Result<Vec<ExperimentResult>> {
    bind_model(run, source.model_id())?;
    let cfg = run.eval_config();
    let mut out = Vec::new();
    for &e in experiments {
        if skip_missing && run.suite.masked(required_mode(e)).next().is_none() {
            continue;
        }
        let result = run_experiment(e, &run.suite, source.records(), &cfg)?;
        save_result(run, e.as_str(), &result)?;
        out.push(result);
    }
    cmd_report_run(run)?;
    Ok(out)
}

/// Builds (or replays) the token dataset, trains and evaluates the probe.
pub fn cmd_probe(run: &mut Run, source: &Source) -> Result<ProbeResult> {
    bind_model(run, source.model_id())?;
    let records = match source {
        Source::Live(l) => {
            let recs = build_probe_dataset(&run.suite, l.backend().as_ref())?;
            write_dataset(run.dir.probe_dataset(), &recs)?;
            recs
        }
        Source::Replay { probe_dataset, .. } => {
            let path = probe_dataset
                .clone()
                .unwrap_or_else(|| run.dir.probe_dataset());
            if !path.exists() {
                return Err(Error::CacheMiss(format!(
                    "probe dataset {} (score the run with an embedding backend first)",
                    path.display()
                )));
            }
            read_dataset(&path)?
        }
    };
    let result = evaluate_probe(&records, source.model_id(), &run.manifest.config.probe)?;
    save_result(run, "probe", &result)?;
    cmd_report_run(run)?;
    Ok(result)
}

/// Loads whatever results the run holds.
pub fn load_results(run: &Run) -> Result<RunResults> {
    let mut experiments = BTreeMap::new();
    for e in Experiment::ALL {
        if let Some(r) = load_result::<ExperimentResult>(run, e.as_str())? {
            experiments.insert(e, r);
        }
    }
    Ok(RunResults {
        run_id: run.run_id().to_string(),
        model_id: run.manifest.model_id.clone().unwrap_or_default(),
        ci_level: run.manifest.config.ci_level,
        experiments,
        probe: load_result(run, "probe")?,
    })
}

/// Regenerates `reports/` from `results/`; returns the files written.
pub fn cmd_report_run(run: &Run) -> Result<Vec<PathBuf>> {
    let results = load_results(run)?;
    write_files(&run.dir.reports(), &render_run(&results)?)
}

/// Side-by-side report over several runs, written to `out`.
pub fn cmd_report_many(runs: &[Run], out: &Path) -> Result<Vec<PathBuf>> {
    let all = runs.iter().map(load_results).collect::<Result<Vec<_>>>()?;
    let files = crate::report::render_comparison(&all)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_files(out, &files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_specs_parse() {
        assert_eq!(
            "inproc:prefer-main".parse::<BackendSpec>().unwrap(),
            BackendSpec::InProc("prefer-main".into())
        );
        assert_eq!(
            "proto:python3 x.py --model a:b"
                .parse::<BackendSpec>()
                .unwrap(),
            BackendSpec::Proto("python3 x.py --model a:b".into())
        );
        assert!("replay:".parse::<BackendSpec>().is_err());
        assert!("http:x".parse::<BackendSpec>().is_err());
        assert!("prefer-main".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn config_round_trip_and_digest() {
        let cfg =
            RunConfig::from_toml_str("seed = 7\nmodes = [\"arc\"]\n[probe]\nrepetitions = 2\n")
                .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.probe.repetitions, 2);
        assert_eq!(cfg.probe.hidden_size, 50);
        assert_ne!(cfg.digest(), RunConfig::default().digest());
        assert!(RunConfig::from_toml_str("sed = 1").is_err());
        assert!(RunConfig::from_toml_str("ci_level = 1.5").is_err());
    }

    #[test]
    fn tampered_suite_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            n_per_pair: 1,
            ..RunConfig::default()
        };
        cmd_generate(&cfg, tmp.path(), vec![]).unwrap();
        Run::open(tmp.path()).unwrap();
        let sp = RunDir::new(tmp.path()).suite();
        let src = std::fs::read_to_string(&sp).unwrap();
        std::fs::write(&sp, src + "\n").unwrap();
        assert!(matches!(
            Run::open(tmp.path()),
            Err(Error::DigestMismatch { what: "suite", .. })
        ));
    }

    #[test]
    fn regenerate_keeps_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            n_per_pair: 1,
            ..RunConfig::default()
        };
        let a = cmd_generate(&cfg, tmp.path(), vec![]).unwrap();
        let b = cmd_generate(&cfg, tmp.path(), vec![]).unwrap();
        assert_eq!(a, b);
    }
}
