// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use atissue::experiments::Experiment;
use atissue::lexicon::load_lexicon;
use atissue::run::{
    cmd_generate, cmd_probe, cmd_report_many, cmd_report_run, cmd_run, cmd_score, replay_of,
    BackendSpec, Run, RunConfig, Source, CACHE_ENV,
};
use atissue::stimgen::{Format, Mode};
use atissue::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(
    name = "atissue",
    version,
    about = "At-issueness and ellipsis diagnostics for language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the stimulus suite into a run directory.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// TOML run configuration; flags below override its keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Repeat to generate several modes.
        #[arg(long, value_parser = parse_serde::<Mode>)]
        mode: Vec<Mode>,
        #[arg(long, value_parser = parse_serde::<Format>)]
        format: Option<Format>,
        #[arg(long)]
        n_per_pair: Option<usize>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Score every instance of a run; resumes from the existing cache.
    Score {
        #[arg(long)]
        out: PathBuf,
        /// inproc:<preset> | mock:<rules.toml> | proto:<command> | replay:<path>
        #[arg(long)]
        backend: BackendSpec,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Run one experiment (or `all`) and refresh the run's reports.
    Run {
        /// header, rejection, conjunction, ellipsis-top1, ellipsis-top2, all
        experiment: String,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to replaying the run's score cache.
        #[arg(long)]
        backend: Option<BackendSpec>,
    },
    /// Train and evaluate the token-level probe.
    Probe {
        #[arg(long)]
        out: PathBuf,
        /// Defaults to replaying the run's persisted probe dataset.
        #[arg(long)]
        backend: Option<BackendSpec>,
    },
    /// Regenerate reports for one run, or compare several side by side.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Output directory for a multi-run comparison.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lexicon utilities.
    Lexicon {
        #[command(subcommand)]
        action: LexiconCommand,
    },
}

#[derive(Subcommand)]
enum LexiconCommand {
    /// Check a lexicon file and print a summary.
    Validate { path: PathBuf },
}

fn parse_serde<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn open_source(run: &Run, spec: Option<&BackendSpec>) -> Result<Source> {
    match spec {
        Some(s) => Source::open(s, &run.lexicon),
        None => replay_of(run),
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn reports_of(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    v.sort();
    v
}

fn execute(cli: Cli) -> Result<()> {
    let argv: Vec<String> = std::env::args().collect();
    match cli.command {
        Command::Generate {
            out,
            config,
            seed,
            mode,
            format,
            n_per_pair,
            lexicon,
        } => {
            let mut cfg = match config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.probe.seed = s;
            }
            if !mode.is_empty() {
                cfg.modes = mode;
            }
            if let Some(f) = format {
                cfg.format = f;
            }
            if let Some(n) = n_per_pair {
                cfg.n_per_pair = n;
            }
            if lexicon.is_some() {
                cfg.lexicon = lexicon;
            }
            let m = cmd_generate(&cfg, &out, argv)?;
            let run = Run::open(&out)?;
            println!(
                "{}: {} instances ({} masked) in {}",
                m.run_id,
                run.suite.len(),
                run.suite.iter().filter(|i| i.masked_text.is_some()).count(),
                out.display()
            );
        }
        Command::Score {
            out,
            backend,
            threads,
        } => {
            let mut run = Run::open(&out)?;
            let source = Source::open(&backend, &run.lexicon)?;
            let shared = std::env::var_os(CACHE_ENV).map(PathBuf::from);
            let s = cmd_score(&mut run, &source, threads, shared.as_deref())?;
            println!(
                "{}: {} instances, {} cached, {} from shared cache, {} scored, {} failed",
                s.model_id,
                s.total,
                s.already_cached,
                s.from_shared_cache,
                s.scored,
                s.failures.len()
            );
            if let Some((id, msg)) = s.failures.first() {
                for (id, msg) in s.failures.iter().take(10) {
                    eprintln!("  {id}: {msg}");
                }
                return Err(Error::Backend(format!(
                    "{} of {} instances failed (first: {id}: {msg}); rerun to resume",
                    s.failures.len(),
                    s.total
                )));
            }
        }
        Command::Run {
            experiment,
            out,
            backend,
        } => {
            let mut run = Run::open(&out)?;
            let (experiments, all) = if experiment == "all" {
                (Experiment::ALL.to_vec(), true)
            } else {
                (vec![experiment.parse::<Experiment>()?], false)
            };
            let source = open_source(&run, backend.as_ref())?;
            for r in cmd_run(&mut run, &experiments, &source, all)? {
                let groups: Vec<String> = r
                    .groups
                    .iter()
                    .map(|(g, t)| format!("{g} {:.3}", t.successes() / t.n as f64))
                    .collect();
                println!("{}: {}", r.experiment, groups.join(", "));
            }
            print_written(&reports_of(&run.dir.reports()));
        }
        Command::Probe { out, backend } => {
            let mut run = Run::open(&out)?;
            let source = open_source(&run, backend.as_ref())?;
            let r = cmd_probe(&mut run, &source)?;
            for x in &r.runs {
                println!(
                    "repetition {}: accuracy {:.4} ({} train / {} test tokens)",
                    x.repetition, x.accuracy, x.train_tokens, x.test_tokens
                );
            }
            println!("mean accuracy {:.4}", r.mean_accuracy);
        }
        Command::Report { runs, out } => {
            let opened = runs.iter().map(Run::open).collect::<Result<Vec<_>>>()?;
            match (opened.as_slice(), out) {
                ([one], None) => print_written(&cmd_report_run(one)?),
                (_, Some(out)) => print_written(&cmd_report_many(&opened, &out)?),
                (_, None) => {
                    return Err(Error::Config(
                        "comparing several runs needs --out <dir>".into(),
                    ))
                }
            }
        }
        Command::Lexicon {
            action: LexiconCommand::Validate { path },
        } => {
            let lex = load_lexicon(&path)?;
            println!(
                "ok: {} auxiliaries, {} verb phrases, {} occupations, {} names, digest {}",
                lex.auxiliaries().len(),
                lex.all_verb_phrases().count(),
                lex.occupations().len(),
                lex.names().len(),
                lex.digest()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Backend => 3,
            })
        }
    }
}
