// SPDX-License-Identifier: Apache-2.0

//! Evaluation protocols over scored suites.
//!
//! Every protocol is a fold over suite instances and their [`ScoreRecord`]s.
//! Each instance yields one [`ItemOutcome`]: side `a` is the hypothesis the
//! experiment counts as success, `margin` is the log-probability difference
//! in favour of `a`, and an outcome within `tie_epsilon` is a tie worth half
//! a success.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Auxiliary;
use crate::scoring::{rank_candidates, RecordSource, ScoreRecord};
use crate::stats::{one_sided_welch_t, wilson_ci, Proportion, TTestResult};
use crate::stimgen::{Header, InstanceKind, Mode, StimulusItem, Suite, Target};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Header,
    Rejection,
    Conjunction,
    EllipsisTop1,
    EllipsisTop2,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Header,
        Experiment::Rejection,
        Experiment::Conjunction,
        Experiment::EllipsisTop1,
        Experiment::EllipsisTop2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Header => "header",
            Experiment::Rejection => "rejection",
            Experiment::Conjunction => "conjunction",
            Experiment::EllipsisTop1 => "ellipsis_top1",
            Experiment::EllipsisTop2 => "ellipsis_top2",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s || e.as_str().replace('_', "-") == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Candidate auxiliaries scored at the mask.
    pub candidates: Vec<Auxiliary>,
    pub tie_epsilon: f64,
    pub ci_level: f64,
}

impl EvalConfig {
    pub fn new(candidates: Vec<Auxiliary>) -> Self {
        EvalConfig {
            candidates,
            tie_epsilon: 0.0,
            ci_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

/// Per-instance outcome with the metadata needed for breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: String,
    pub context_id: String,
    pub group: String,
    pub header: Header,
    pub embedded_aux: Auxiliary,
    pub main_aux: Auxiliary,
    pub winner: Winner,
    pub margin: f64,
    /// Ranked candidates, for ellipsis experiments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranking: Vec<Auxiliary>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ranking_tie: bool,
}

impl ItemOutcome {
    /// 1, 0, or 0.5 for a tie.
    pub fn indicator(&self) -> f64 {
        match self.winner {
            Winner::A => 1.0,
            Winner::B => 0.0,
            Winner::Tie => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub wins: u64,
    pub ties: u64,
    pub n: u64,
}

impl Tally {
    pub fn add(&mut self, winner: Winner) {
        self.n += 1;
        match winner {
            Winner::A => self.wins += 1,
            Winner::Tie => self.ties += 1,
            Winner::B => {}
        }
    }

    /// Wins plus half of ties.
    pub fn successes(&self) -> f64 {
        self.wins as f64 + 0.5 * self.ties as f64
    }

    pub fn proportion(&self, level: f64) -> Result<Proportion> {
        wilson_ci(self.successes(), self.n, level)
    }
}

/// A human or chance reference line attached to a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    pub source: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub model_id: String,
    pub tie_epsilon: f64,
    pub groups: BTreeMap<String, Tally>,
    pub references: BTreeMap<String, Reference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_test: Option<TTestResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_test_note: Option<String>,
    pub per_item: Vec<ItemOutcome>,
}

impl ExperimentResult {
    fn new(experiment: Experiment, model_id: &str, cfg: &EvalConfig) -> Self {
        ExperimentResult {
            schema_version: SCHEMA_VERSION,
            experiment,
            model_id: model_id.to_string(),
            tie_epsilon: cfg.tie_epsilon,
            groups: BTreeMap::new(),
            references: BTreeMap::new(),
            t_test: None,
            t_test_note: None,
            per_item: Vec::new(),
        }
    }

    fn push(&mut self, outcome: ItemOutcome) {
        self.groups
            .entry(outcome.group.clone())
            .or_default()
            .add(outcome.winner);
        self.per_item.push(outcome);
    }

    fn reference(&mut self, group: &str, value: f64, source: &str, approximate: bool) {
        self.references.insert(
            group.to_string(),
            Reference {
                value,
                source: source.to_string(),
                approximate,
            },
        );
    }

    pub fn proportion(&self, group: &str, level: f64) -> Result<Proportion> {
        self.groups
            .get(group)
            .ok_or_else(|| Error::MissingVariant(format!("group {group}")))?
            .proportion(level)
    }

    pub fn total(&self) -> u64 {
        self.groups.values().map(|t| t.n).sum()
    }
}

fn decide(margin: f64, eps: f64) -> Winner {
    if margin.abs() <= eps {
        Winner::Tie
    } else if margin > 0.0 {
        Winner::A
    } else {
        Winner::B
    }
}

fn outcome(item: &StimulusItem, group: &str, margin: f64, eps: f64) -> ItemOutcome {
    ItemOutcome {
        item_id: item.id.clone(),
        context_id: item.context_id.clone(),
        group: group.to_string(),
        header: item.header,
        embedded_aux: item.pair().embedded.clone(),
        main_aux: item.pair().main.clone(),
        winner: decide(margin, eps),
        margin,
        ranking: Vec::new(),
        ranking_tie: false,
    }
}

fn masked_items(suite: &Suite, mode: Mode) -> Result<Vec<&StimulusItem>> {
    let items: Vec<&StimulusItem> = suite.masked(mode).collect();
    if items.is_empty() {
        return Err(Error::MissingVariant(format!("masked {mode} instances")));
    }
    Ok(items)
}

fn normalized(rec: &ScoreRecord) -> Result<f64> {
    rec.normalized()
        .ok_or_else(|| Error::MissingScores(format!("{} (sequence score)", rec.item_id)))
}

/// Header preference: for the same context and response auxiliary, does the
/// "No" rendering score higher (per token) than the "Wait no" rendering?
/// Groups: `main`, `embedded`.
pub fn run_header_test(
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new(Experiment::Header, source.model_id(), cfg);
    let seqs: Vec<&StimulusItem> = suite
        .iter()
        .filter(|i| i.kind == InstanceKind::Sequence && i.mode() == Mode::Arc)
        .collect();
    if seqs.is_empty() {
        return Err(Error::MissingVariant("header-test sequences".into()));
    }
    let mut wait: BTreeMap<(&str, Target), &StimulusItem> = BTreeMap::new();
    for item in seqs.iter().filter(|i| i.header == Header::Wait) {
        wait.insert((item.context_id.as_str(), item.target), item);
    }
    let mut paired = 0usize;
    for reject in seqs.iter().filter(|i| i.header == Header::Reject) {
        let other = wait
            .get(&(reject.context_id.as_str(), reject.target))
            .ok_or_else(|| Error::MissingVariant(format!("wait counterpart of {}", reject.id)))?;
        paired += 1;
        let a = normalized(&source.score(reject, &cfg.candidates)?)?;
        let b = normalized(&source.score(other, &cfg.candidates)?)?;
        result.push(outcome(
            reject,
            reject.target.as_str(),
            a - b,
            cfg.tie_epsilon,
        ));
    }
    if paired != wait.len() {
        return Err(Error::MissingVariant(
            "reject counterpart of some wait rendering".into(),
        ));
    }
    result.reference("main", 0.50, "human baseline", true);
    result.reference("embedded", 0.23, "human baseline", false);
    Ok(result)
}

fn pairwise_masked(
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
    experiment: Experiment,
    mode: Mode,
) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new(experiment, source.model_id(), cfg);
    for item in masked_items(suite, mode)? {
        let rec = source.score(item, &cfg.candidates)?;
        let margin = rec.candidate(&item.pair().main)? - rec.candidate(&item.pair().embedded)?;
        result.push(outcome(item, item.header.as_str(), margin, cfg.tie_epsilon));
    }
    Ok(result)
}

/// Per-item indicators for `header`, in outcome order.
pub fn indicators(result: &ExperimentResult, header: Header) -> Vec<f64> {
    result
        .per_item
        .iter()
        .filter(|o| o.header == header)
        .map(ItemOutcome::indicator)
        .collect()
}

/// Main-clause auxiliary versus embedded-clause auxiliary at the mask, per
/// header, with a one-sided Welch test of reject > wait over item indicators.
pub fn run_rejection_test(
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
) -> Result<ExperimentResult> {
    let mut result = pairwise_masked(suite, source, cfg, Experiment::Rejection, Mode::Arc)?;
    match one_sided_welch_t(
        &indicators(&result, Header::Reject),
        &indicators(&result, Header::Wait),
    ) {
        Ok(t) => result.t_test = Some(t),
        Err(e) => result.t_test_note = Some(e.to_string()),
    }
    result.reference("reject", 0.789, "human baseline", false);
    Ok(result)
}

/// Recent-conjunct auxiliary versus distant-conjunct auxiliary, per header.
pub fn run_conjunction_test(
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
) -> Result<ExperimentResult> {
    let mut result = pairwise_masked(
        suite,
        source,
        cfg,
        Experiment::Conjunction,
        Mode::Conjunction,
    )?;
    for h in Header::ALL {
        result.reference(h.as_str(), 0.5, "chance", false);
    }
    Ok(result)
}

fn require_all(rec: &ScoreRecord, cfg: &EvalConfig) -> Result<()> {
    for c in &cfg.candidates {
        rec.candidate(c)?;
    }
    Ok(())
}

fn best_of<'a>(rec: &ScoreRecord, set: impl Iterator<Item = &'a Auxiliary>) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for a in set {
        best = best.max(rec.candidate(a)?);
    }
    Ok(best)
}

fn ellipsis(
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
    k: usize,
) -> Result<ExperimentResult> {
    let experiment = if k == 1 {
        Experiment::EllipsisTop1
    } else {
        Experiment::EllipsisTop2
    };
    let mut result = ExperimentResult::new(experiment, source.model_id(), cfg);
    for item in masked_items(suite, Mode::Arc)? {
        let rec = source.score(item, &cfg.candidates)?;
        require_all(&rec, cfg)?;
        let pair = item.pair();
        let correct: Vec<&Auxiliary> = if k == 1 && item.header == Header::Reject {
            vec![&pair.main]
        } else {
            vec![&pair.main, &pair.embedded]
        };
        let others = cfg.candidates.iter().filter(|c| !correct.contains(c));
        let best_other = best_of(&rec, others)?;
        let margin = if k == 1 {
            best_of(&rec, correct.iter().copied())? - best_other
        } else {
            rec.candidate(&pair.main)?
                .min(rec.candidate(&pair.embedded)?)
                - best_other
        };
        let ranking = rank_candidates(&rec, &cfg.candidates)?;
        let mut o = outcome(item, item.header.as_str(), margin, cfg.tie_epsilon);
        o.ranking = ranking.order;
        o.ranking_tie = ranking.tie;
        result.push(o);
    }
    Ok(result)
}

/// Top-1 among all candidates: the main-clause auxiliary under "No"; either
/// context auxiliary under "Wait no".
pub fn run_ellipsis_top1(
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
) -> Result<ExperimentResult> {
    ellipsis(suite, source, cfg, 1)
}

/// Top-2 among all candidates must be exactly the two context auxiliaries.
pub fn run_ellipsis_top2(
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
) -> Result<ExperimentResult> {
    ellipsis(suite, source, cfg, 2)
}

pub fn run_experiment(
    experiment: Experiment,
    suite: &Suite,
    source: &dyn RecordSource,
    cfg: &EvalConfig,
) -> Result<ExperimentResult> {
    match experiment {
        Experiment::Header => run_header_test(suite, source, cfg),
        Experiment::Rejection => run_rejection_test(suite, source, cfg),
        Experiment::Conjunction => run_conjunction_test(suite, source, cfg),
        Experiment::EllipsisTop1 => run_ellipsis_top1(suite, source, cfg),
        Experiment::EllipsisTop2 => run_ellipsis_top2(suite, source, cfg),
    }
}

/// Which auxiliaries models put in their top-k on failed items.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub k: usize,
    /// Share of intruder slots per auxiliary; sums to 1 per header.
    pub proportions: BTreeMap<Header, BTreeMap<Auxiliary, f64>>,
    pub counts: BTreeMap<Header, BTreeMap<Auxiliary, u64>>,
    /// Failed items per header.
    pub erroneous: BTreeMap<Header, u64>,
    /// Top-1 failures where the embedded-clause auxiliary won (not intruders).
    pub embedded_wins: BTreeMap<Header, u64>,
}

impl ErrorDistribution {
    pub fn is_empty(&self) -> bool {
        self.proportions.is_empty()
    }
}

/// Intruders are top-k auxiliaries that elide neither context verb phrase.
pub fn error_distribution(result: &ExperimentResult, k: usize) -> Result<ErrorDistribution> {
    if !(1..=2).contains(&k) {
        return Err(Error::Config(format!(
            "error analysis k must be 1 or 2, got {k}"
        )));
    }
    let mut dist = ErrorDistribution {
        k,
        ..Default::default()
    };
    for o in result.per_item.iter().filter(|o| o.winner == Winner::B) {
        if o.ranking.len() < k {
            return Err(Error::MissingScores(format!("{} ranking", o.item_id)));
        }
        *dist.erroneous.entry(o.header).or_default() += 1;
        for a in &o.ranking[..k] {
            if *a == o.main_aux {
                continue;
            }
            if *a == o.embedded_aux {
                if k == 1 {
                    *dist.embedded_wins.entry(o.header).or_default() += 1;
                }
                continue;
            }
            *dist
                .counts
                .entry(o.header)
                .or_default()
                .entry(a.clone())
                .or_default() += 1;
        }
    }
    for (h, counts) in &dist.counts {
        let total: u64 = counts.values().sum();
        dist.proportions.insert(
            *h,
            counts
                .iter()
                .map(|(a, c)| (a.clone(), *c as f64 / total as f64))
                .collect(),
        );
    }
    Ok(dist)
}

/// Rejection outcomes grouped by the auxiliary targeting each clause.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerbBreakdown {
    pub by_embedded: BTreeMap<Auxiliary, BTreeMap<Header, Tally>>,
    pub by_main: BTreeMap<Auxiliary, BTreeMap<Header, Tally>>,
}

pub fn verb_breakdown(rejection: &ExperimentResult) -> Result<VerbBreakdown> {
    if rejection.experiment != Experiment::Rejection {
        return Err(Error::Config(format!(
            "verb breakdown needs a rejection result, got {}",
            rejection.experiment
        )));
    }
    let mut out = VerbBreakdown::default();
    for o in &rejection.per_item {
        out.by_embedded
            .entry(o.embedded_aux.clone())
            .or_default()
            .entry(o.header)
            .or_default()
            .add(o.winner);
        out.by_main
            .entry(o.main_aux.clone())
            .or_default()
            .entry(o.header)
            .or_default()
            .add(o.winner);
    }
    Ok(out)
}
