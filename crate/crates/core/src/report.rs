// SPDX-License-Identifier: Apache-2.0

//! Plot-data CSV and markdown tables rendered from persisted results.
//!
//! Rendering is a pure function of the results, so replaying a score cache
//! reproduces every report byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{
    error_distribution, verb_breakdown, ErrorDistribution, Experiment, ExperimentResult, Tally,
};
use crate::probing::ProbeResult;
use crate::stimgen::Header;
use crate::SCHEMA_VERSION;

/// Everything a run has produced so far.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResults {
    pub run_id: String,
    pub model_id: String,
    pub ci_level: f64,
    pub experiments: BTreeMap<Experiment, ExperimentResult>,
    pub probe: Option<ProbeResult>,
}

/// (file name, contents)
pub type ReportFile = (String, String);

pub fn figure_name(e: Experiment) -> &'static str {
    match e {
        Experiment::Header => "fig1_header",
        Experiment::Rejection => "fig2_rejection",
        Experiment::Conjunction => "fig3_conjunction",
        Experiment::EllipsisTop1 => "fig4a_top1",
        Experiment::EllipsisTop2 => "fig4b_top2",
    }
}

fn title(e: Experiment) -> &'static str {
    match e {
        Experiment::Header => "Header preference: share preferring \"No\" over \"Wait no\"",
        Experiment::Rejection => "Rejection: share preferring the main-clause auxiliary",
        Experiment::Conjunction => "Conjunction: share preferring the recent-conjunct auxiliary",
        Experiment::EllipsisTop1 => "Ellipsis, top-1 accuracy",
        Experiment::EllipsisTop2 => "Ellipsis, top-2 accuracy",
    }
}

fn group_order(e: Experiment) -> Vec<&'static str> {
    match e {
        Experiment::Header => vec!["main", "embedded"],
        _ => Header::ALL.iter().map(|h| h.as_str()).collect(),
    }
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Renders a success count without trailing zeros unless ties made it fractional.
fn count(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(x) if x.fract() == 0.0 => format!("{x:.0}"),
        Ok(x) => format!("{x:.1}"),
        Err(_) => cell.to_string(),
    }
}

fn md_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    s.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    s
}

fn md_preamble(heading: &str, r: &RunResults) -> String {
    format!(
        "# {heading}\n\nrun_id: {}  \nschema_version: {SCHEMA_VERSION}  \nmodel_id: {}\n\n",
        r.run_id, r.model_id
    )
}

fn tally_cells(t: &Tally, level: f64) -> Result<Vec<String>> {
    let p = t.proportion(level)?;
    Ok(vec![
        t.n.to_string(),
        t.wins.to_string(),
        t.ties.to_string(),
        f(t.successes()),
        f(p.estimate),
        f(p.ci_low),
        f(p.ci_high),
    ])
}

const PROPORTION_COLS: [&str; 7] = [
    "n",
    "wins",
    "ties",
    "successes",
    "proportion",
    "ci_low",
    "ci_high",
];

fn experiment_files(r: &RunResults, res: &ExperimentResult) -> Result<Vec<ReportFile>> {
    let e = res.experiment;
    let name = figure_name(e);
    let mut rows = Vec::new();
    for g in group_order(e) {
        let Some(t) = res.groups.get(g) else { continue };
        let mut row = vec![
            r.run_id.clone(),
            SCHEMA_VERSION.to_string(),
            r.model_id.clone(),
            g.to_string(),
        ];
        row.extend(tally_cells(t, r.ci_level)?);
        row.push(
            res.references
                .get(g)
                .map(|x| f(x.value))
                .unwrap_or_default(),
        );
        rows.push(row);
    }
    let mut cols = vec!["run_id", "schema_version", "model_id", "group"];
    cols.extend(PROPORTION_COLS);
    cols.push("reference");
    let csv = csv_string(&cols, &rows)?;

    let mut md = md_preamble(title(e), r);
    let md_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let g = row[3].as_str();
            let reference = match res.references.get(g) {
                Some(x) if x.approximate => format!("≈{:.3} ({})", x.value, x.source),
                Some(x) => format!("{:.3} ({})", x.value, x.source),
                None => String::new(),
            };
            vec![
                g.to_string(),
                row[4].clone(),
                count(&row[7]),
                format!("{:.3}", row[8].parse::<f64>().unwrap_or(f64::NAN)),
                format!(
                    "[{:.3}, {:.3}]",
                    row[9].parse::<f64>().unwrap_or(f64::NAN),
                    row[10].parse::<f64>().unwrap_or(f64::NAN)
                ),
                reference,
            ]
        })
        .collect();
    let ci = format!("{:.0}% CI", r.ci_level * 100.0);
    md.push_str(&md_table(
        &["group", "n", "successes", "proportion", &ci, "reference"],
        &md_rows,
    ));
    if e == Experiment::Rejection {
        md.push('\n');
        match (&res.t_test, &res.t_test_note) {
            (Some(t), _) => md.push_str(&format!(
                "One-sided Welch t-test (reject > wait): t = {:.3}, df = {:.3}, p = {:.4}\n",
                t.t, t.df, t.p_one_sided
            )),
            (None, Some(note)) => md.push_str(&format!("t-test not computed: {note}\n")),
            (None, None) => {}
        }
    }
    Ok(vec![
        (format!("{name}.csv"), csv),
        (format!("{name}.md"), md),
    ])
}

fn verb_files(r: &RunResults, rejection: &ExperimentResult) -> Result<Vec<ReportFile>> {
    let b = verb_breakdown(rejection)?;
    let mut rows = Vec::new();
    for (grouping, map) in [("embedded", &b.by_embedded), ("main", &b.by_main)] {
        for (aux, by_header) in map {
            for h in Header::ALL {
                let Some(t) = by_header.get(&h) else { continue };
                let mut row = vec![
                    r.run_id.clone(),
                    SCHEMA_VERSION.to_string(),
                    r.model_id.clone(),
                    grouping.to_string(),
                    aux.to_string(),
                    h.to_string(),
                ];
                row.extend(tally_cells(t, r.ci_level)?);
                rows.push(row);
            }
        }
    }
    let mut cols = vec![
        "run_id",
        "schema_version",
        "model_id",
        "grouping",
        "aux",
        "header",
    ];
    cols.extend(PROPORTION_COLS);
    let csv = csv_string(&cols, &rows)?;
    let mut md = md_preamble("Rejection by auxiliary", r);
    let md_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            vec![
                row[3].clone(),
                row[4].clone(),
                row[5].clone(),
                row[6].clone(),
                format!("{:.3}", row[10].parse::<f64>().unwrap_or(f64::NAN)),
            ]
        })
        .collect();
    md.push_str(&md_table(
        &["clause", "aux", "header", "n", "proportion"],
        &md_rows,
    ));
    Ok(vec![
        ("fig5_verbs.csv".into(), csv),
        ("fig5_verbs.md".into(), md),
    ])
}

fn error_files(r: &RunResults, d: &ErrorDistribution) -> Result<Vec<ReportFile>> {
    let name = format!("appendix_errors_top{}", d.k);
    let mut rows = Vec::new();
    let mut md_rows = Vec::new();
    for (h, counts) in &d.counts {
        for (aux, c) in counts {
            let share = d.proportions[h][aux];
            rows.push(vec![
                r.run_id.clone(),
                SCHEMA_VERSION.to_string(),
                r.model_id.clone(),
                h.to_string(),
                aux.to_string(),
                c.to_string(),
                f(share),
            ]);
            md_rows.push(vec![
                h.to_string(),
                aux.to_string(),
                c.to_string(),
                format!("{share:.3}"),
            ]);
        }
    }
    let csv = csv_string(
        &[
            "run_id",
            "schema_version",
            "model_id",
            "header",
            "aux",
            "count",
            "proportion",
        ],
        &rows,
    )?;
    let mut md = md_preamble(
        &format!("Top-{} intruding auxiliaries on failed items", d.k),
        r,
    );
    md.push_str(&md_table(&["header", "aux", "count", "share"], &md_rows));
    md.push('\n');
    for h in Header::ALL {
        md.push_str(&format!(
            "{h}: {} failed items",
            d.erroneous.get(&h).copied().unwrap_or(0)
        ));
        if d.k == 1 {
            md.push_str(&format!(
                ", {} won by the embedded-clause auxiliary",
                d.embedded_wins.get(&h).copied().unwrap_or(0)
            ));
        }
        md.push_str("  \n");
    }
    Ok(vec![
        (format!("{name}.csv"), csv),
        (format!("{name}.md"), md),
    ])
}

fn probe_files(r: &RunResults, p: &ProbeResult) -> Result<Vec<ReportFile>> {
    let mut rows: Vec<Vec<String>> = p
        .runs
        .iter()
        .map(|run| {
            vec![
                r.run_id.clone(),
                SCHEMA_VERSION.to_string(),
                r.model_id.clone(),
                run.repetition.to_string(),
                run.seed.to_string(),
                run.train_tokens.to_string(),
                run.test_tokens.to_string(),
                run.epochs.to_string(),
                f(run.accuracy),
                f(run.majority_share),
            ]
        })
        .collect();
    rows.push(vec![
        r.run_id.clone(),
        SCHEMA_VERSION.to_string(),
        r.model_id.clone(),
        "mean".into(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        f(p.mean_accuracy),
        String::new(),
    ]);
    let csv = csv_string(
        &[
            "run_id",
            "schema_version",
            "model_id",
            "repetition",
            "seed",
            "train_tokens",
            "test_tokens",
            "epochs",
            "accuracy",
            "majority_share",
        ],
        &rows,
    )?;
    let mut md = md_preamble("Probe accuracy on token embeddings", r);
    let md_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            vec![
                row[3].clone(),
                row[5].clone(),
                row[6].clone(),
                row[8].clone(),
            ]
        })
        .collect();
    md.push_str(&md_table(
        &["repetition", "train tokens", "test tokens", "accuracy"],
        &md_rows,
    ));
    let c = &p.config;
    md.push_str(&format!(
        "\nconfig: hidden {} (ReLU), train fraction {}, {} repetitions, seed {}, \
         lr {}, batch {}, max epochs {}, patience {}, validation fraction {}\n",
        c.hidden_size,
        c.train_fraction,
        c.repetitions,
        c.seed,
        c.learning_rate,
        c.batch_size,
        c.max_epochs,
        c.patience,
        c.validation_fraction
    ));
    let counts: Vec<String> = p
        .label_counts
        .iter()
        .map(|(l, n)| {
            format!(
                "{} {n}",
                serde_json::to_value(l)
                    .expect("label")
                    .as_str()
                    .unwrap_or("?")
            )
        })
        .collect();
    md.push_str(&format!("labels: {}\n", counts.join(", ")));
    Ok(vec![
        ("tab1_probe.csv".into(), csv),
        ("tab1_probe.md".into(), md),
    ])
}

/// All report files for one run, in a fixed order.
pub fn render_run(r: &RunResults) -> Result<Vec<ReportFile>> {
    let mut files = Vec::new();
    for (e, res) in &r.experiments {
        files.extend(experiment_files(r, res)?);
        match e {
            Experiment::Rejection => files.extend(verb_files(r, res)?),
            Experiment::EllipsisTop1 => files.extend(error_files(r, &error_distribution(res, 1)?)?),
            Experiment::EllipsisTop2 => files.extend(error_files(r, &error_distribution(res, 2)?)?),
            _ => {}
        }
    }
    if let Some(p) = &r.probe {
        files.extend(probe_files(r, p)?);
    }
    let mut index = md_preamble("Reports", r);
    for (name, _) in files.iter().filter(|(n, _)| n.ends_with(".md")) {
        index.push_str(&format!("- [{name}]({name})\n"));
    }
    files.push(("index.md".into(), index));
    Ok(files)
}

fn column(r: &RunResults) -> String {
    format!("{} ({})", r.model_id, r.run_id)
}

/// One table per figure with a column per run.
pub fn render_comparison(runs: &[RunResults]) -> Result<Vec<ReportFile>> {
    if runs.is_empty() {
        return Err(Error::Config("report needs at least one run".into()));
    }
    let mut long = Vec::new();
    let mut md = String::from("# Model comparison\n\n");
    md.push_str(&format!("schema_version: {SCHEMA_VERSION}  \nruns: "));
    md.push_str(
        &runs
            .iter()
            .map(|r| r.run_id.clone())
            .collect::<Vec<_>>()
            .join(", "),
    );
    md.push_str("\n\n");
    let mut header = vec!["group".to_string()];
    header.extend(runs.iter().map(column));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    for e in Experiment::ALL {
        if !runs.iter().any(|r| r.experiments.contains_key(&e)) {
            continue;
        }
        let mut rows = Vec::new();
        for g in group_order(e) {
            let mut row = vec![g.to_string()];
            for r in runs {
                let cell = match r.experiments.get(&e).and_then(|x| x.groups.get(g)) {
                    Some(t) => {
                        let p = t.proportion(r.ci_level)?;
                        long.push(vec![
                            figure_name(e).to_string(),
                            g.to_string(),
                            r.run_id.clone(),
                            SCHEMA_VERSION.to_string(),
                            r.model_id.clone(),
                            f(p.estimate),
                            f(p.ci_low),
                            f(p.ci_high),
                        ]);
                        format!("{:.3}", p.estimate)
                    }
                    None => "n/a".into(),
                };
                row.push(cell);
            }
            rows.push(row);
        }
        md.push_str(&format!("## {}: {}\n\n", figure_name(e), title(e)));
        md.push_str(&md_table(&header_refs, &rows));
        md.push('\n');
    }
    if runs.iter().any(|r| r.probe.is_some()) {
        let mut row = vec!["mean accuracy".to_string()];
        for r in runs {
            row.push(match &r.probe {
                Some(p) => {
                    long.push(vec![
                        "tab1_probe".into(),
                        "mean_accuracy".into(),
                        r.run_id.clone(),
                        SCHEMA_VERSION.to_string(),
                        r.model_id.clone(),
                        f(p.mean_accuracy),
                        String::new(),
                        String::new(),
                    ]);
                    format!("{:.3}", p.mean_accuracy)
                }
                None => "n/a".into(),
            });
        }
        md.push_str("## tab1_probe: probe accuracy\n\n");
        md.push_str(&md_table(&header_refs, &[row]));
    }
    let csv = csv_string(
        &[
            "figure",
            "group",
            "run_id",
            "schema_version",
            "model_id",
            "proportion",
            "ci_low",
            "ci_high",
        ],
        &long,
    )?;
    Ok(vec![
        ("comparison.md".into(), md),
        ("comparison.csv".into(), csv),
    ])
}

pub fn write_files(dir: &Path, files: &[ReportFile]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        out.push(p);
    }
    Ok(out)
}
