// SPDX-License-Identifier: Apache-2.0

//! Backend-neutral scoring.
//!
//! A [`ScorerBackend`] exposes up to three capabilities: per-token conditional
//! log-probabilities (pseudo-log-likelihood for masked models, chain rule for
//! causal ones), log-probabilities of candidate words at a single masked
//! position, and last-layer token embeddings. All values are natural logs.
//!
//! Experiments never talk to a backend directly; they read [`ScoreRecord`]s
//! produced by a [`RecordSource`], which is either a live backend or a replay
//! of a persisted score cache.

mod cache;
mod mock;
mod proto;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Auxiliary;
use crate::stimgen::{InstanceKind, StimulusItem, MASK_MARKER};
use crate::SCHEMA_VERSION;

pub use cache::{CacheKey, ReplayScorer, ScoreCache};
pub use mock::{preset_rules, MockRules, MockScorer, PositionRule, PRESETS};
pub use proto::ProtoScorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelStyle {
    /// Bidirectional masked LM.
    #[default]
    Masked,
    /// Left-to-right LM.
    Causal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    SequenceLogprob,
    MaskedCandidates,
    Embeddings,
}

impl Capability {
    pub fn as_str(self) -> &'static str {
        match self {
            Capability::SequenceLogprob => "sequence_logprob",
            Capability::MaskedCandidates => "masked_candidates",
            Capability::Embeddings => "embeddings",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A content token with its character span in the scored text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbedding {
    pub token: Token,
    pub vector: Vec<f64>,
}

pub trait ScorerBackend: Send + Sync {
    fn model_id(&self) -> &str;

    fn style(&self) -> ModelStyle;

    fn capabilities(&self) -> Vec<Capability>;

    /// Whether calls may be issued from several threads at once.
    fn concurrent_safe(&self) -> bool {
        true
    }

    fn supports(&self, cap: Capability) -> bool {
        self.capabilities().contains(&cap)
    }

    /// Content tokens of `text`; boundary/special markers are excluded.
    fn tokenize(&self, text: &str) -> Result<Vec<Token>>;

    /// Log-probability of content token `position`: given the rest of the
    /// text with that position masked (masked style), or given the preceding
    /// tokens (causal style).
    fn position_logprob(&self, text: &str, position: usize) -> Result<f64>;

    /// Log-probabilities of every content token, batched where the backend can.
    fn token_logprobs(&self, text: &str) -> Result<Vec<f64>> {
        let n = self.tokenize(text)?.len();
        (0..n).map(|i| self.position_logprob(text, i)).collect()
    }

    /// Log-probability of each candidate filling the single mask marker.
    fn masked_candidates(
        &self,
        _masked_text: &str,
        _candidates: &[Auxiliary],
    ) -> Result<BTreeMap<Auxiliary, f64>> {
        Err(self.unsupported(Capability::MaskedCandidates))
    }

    fn embeddings(&self, _text: &str) -> Result<Vec<TokenEmbedding>> {
        Err(self.unsupported(Capability::Embeddings))
    }

    fn unsupported(&self, cap: Capability) -> Error {
        Error::UnsupportedCapability {
            model_id: self.model_id().to_string(),
            capability: cap.as_str(),
        }
    }
}

/// Word/punctuation tokenizer with character offsets; `[MASK]` is one token.
pub fn word_tokenize(text: &str) -> Vec<Token> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\[MASK\]|\w+|[^\w\s]").expect("valid regex"));
    let mut out = Vec::new();
    let mut byte_to_char = 0usize;
    let mut last_byte = 0usize;
    for m in re.find_iter(text) {
        byte_to_char += text[last_byte..m.start()].chars().count();
        let start = byte_to_char;
        let len = m.as_str().chars().count();
        out.push(Token {
            text: m.as_str().to_string(),
            start,
            end: start + len,
        });
        byte_to_char += len;
        last_byte = m.end();
    }
    out
}

/// Sum of masked conditional log-probabilities over content tokens, and the
/// number of content tokens.
pub fn pseudo_log_likelihood(backend: &dyn ScorerBackend, text: &str) -> Result<(f64, usize)> {
    if backend.style() != ModelStyle::Masked {
        return Err(Error::UnsupportedCapability {
            model_id: backend.model_id().to_string(),
            capability: "masked conditional scoring",
        });
    }
    summed_logprobs(backend, text)
}

/// Same as [`pseudo_log_likelihood`], one backend call per position.
pub fn pseudo_log_likelihood_by_position(
    backend: &dyn ScorerBackend,
    text: &str,
) -> Result<(f64, usize)> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let n = backend.tokenize(text)?.len();
    if n == 0 {
        return Err(Error::EmptyText);
    }
    let mut total = 0.0;
    for i in 0..n {
        total += backend.position_logprob(text, i)?;
    }
    Ok((total, n))
}

fn summed_logprobs(backend: &dyn ScorerBackend, text: &str) -> Result<(f64, usize)> {
    if !backend.supports(Capability::SequenceLogprob) {
        return Err(backend.unsupported(Capability::SequenceLogprob));
    }
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let lps = backend.token_logprobs(text)?;
    if lps.is_empty() {
        return Err(Error::EmptyText);
    }
    Ok((lps.iter().sum(), lps.len()))
}

/// Raw sequence log-probability and content-token count: PLL for masked
/// backends, chain rule for causal ones.
pub fn sequence_logprob(backend: &dyn ScorerBackend, text: &str) -> Result<(f64, usize)> {
    summed_logprobs(backend, text)
}

/// Length-normalized sequence score in nats per content token.
pub fn sequence_score(backend: &dyn ScorerBackend, text: &str) -> Result<f64> {
    let (total, n) = sequence_logprob(backend, text)?;
    Ok(total / n as f64)
}

/// Candidate log-probabilities at the mask, plus whether the per-candidate
/// sequence-substitution path was used.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScores {
    pub logprobs: BTreeMap<Auxiliary, f64>,
    pub fallback: bool,
}

pub fn masked_candidate_logprobs(
    backend: &dyn ScorerBackend,
    masked_text: &str,
    candidates: &[Auxiliary],
) -> Result<CandidateScores> {
    let found = masked_text.matches(MASK_MARKER).count();
    if found != 1 {
        return Err(Error::MaskMarkers { found });
    }
    let direct =
        backend.style() == ModelStyle::Masked && backend.supports(Capability::MaskedCandidates);
    if direct {
        match backend.masked_candidates(masked_text, candidates) {
            Ok(logprobs) => {
                for c in candidates {
                    if !logprobs.contains_key(c) {
                        return Err(Error::UnknownCandidate {
                            candidate: c.to_string(),
                        });
                    }
                }
                let logprobs = logprobs
                    .into_iter()
                    .filter(|(a, _)| candidates.contains(a))
                    .collect();
                return Ok(CandidateScores {
                    logprobs,
                    fallback: false,
                });
            }
            Err(Error::MultiTokenCandidate { .. })
                if backend.supports(Capability::SequenceLogprob) => {}
            Err(e) => return Err(e),
        }
    }
    let mut logprobs = BTreeMap::new();
    for c in candidates {
        let text = masked_text.replacen(MASK_MARKER, c.as_str(), 1);
        logprobs.insert(c.clone(), sequence_score(backend, &text)?);
    }
    Ok(CandidateScores {
        logprobs,
        fallback: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Sequence,
    Masked,
}

impl Variant {
    pub fn of(item: &StimulusItem) -> Variant {
        match item.kind {
            InstanceKind::Sequence => Variant::Sequence,
            InstanceKind::Masked => Variant::Masked,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Sequence => "sequence",
            Variant::Masked => "masked",
        }
    }
}

/// Scores for one suite instance from one backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub schema_version: u32,
    pub model_id: String,
    pub item_id: String,
    pub variant: Variant,
    #[serde(default)]
    pub candidate_logprobs: BTreeMap<Auxiliary, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq_logprob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tokens: Option<usize>,
    /// Candidates were scored by substituting them into the full sequence.
    #[serde(default)]
    pub fallback: bool,
}

impl ScoreRecord {
    pub fn key(&self) -> CacheKey {
        CacheKey {
            model_id: self.model_id.clone(),
            schema_version: self.schema_version,
            item_id: self.item_id.clone(),
            variant: self.variant,
        }
    }

    /// Sequence log-probability per content token.
    pub fn normalized(&self) -> Option<f64> {
        match (self.seq_logprob, self.n_tokens) {
            (Some(total), Some(n)) if n > 0 => Some(total / n as f64),
            _ => None,
        }
    }

    pub fn candidate(&self, aux: &Auxiliary) -> Result<f64> {
        self.candidate_logprobs
            .get(aux)
            .copied()
            .ok_or_else(|| Error::MissingCandidate {
                item_id: self.item_id.clone(),
                candidate: aux.to_string(),
            })
    }
}

/// Candidates in descending score order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub order: Vec<Auxiliary>,
    /// Some adjacent pair had equal scores and was ordered lexicographically.
    pub tie: bool,
}

impl Ranking {
    pub fn top(&self, k: usize) -> &[Auxiliary] {
        &self.order[..k.min(self.order.len())]
    }
}

pub fn rank_candidates(record: &ScoreRecord, candidates: &[Auxiliary]) -> Result<Ranking> {
    let mut scored = candidates
        .iter()
        .map(|c| record.candidate(c).map(|s| (c.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(a, x), (b, y)| y.total_cmp(x).then_with(|| a.cmp(b)));
    let tie = scored.windows(2).any(|w| w[0].1 == w[1].1);
    Ok(Ranking {
        order: scored.into_iter().map(|(a, _)| a).collect(),
        tie,
    })
}

/// Something that yields a [`ScoreRecord`] for a suite instance.
pub trait RecordSource: Send + Sync {
    fn model_id(&self) -> &str;

    fn score(&self, item: &StimulusItem, candidates: &[Auxiliary]) -> Result<ScoreRecord>;

    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Scores instances by calling a backend.
pub struct LiveScorer<B> {
    backend: B,
}

impl<B: ScorerBackend> LiveScorer<B> {
    pub fn new(backend: B) -> Self {
        LiveScorer { backend }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }
}

impl<B: ScorerBackend> RecordSource for LiveScorer<B> {
    fn model_id(&self) -> &str {
        self.backend.model_id()
    }

    fn concurrent_safe(&self) -> bool {
        self.backend.concurrent_safe()
    }

    fn score(&self, item: &StimulusItem, candidates: &[Auxiliary]) -> Result<ScoreRecord> {
        let mut record = ScoreRecord {
            schema_version: SCHEMA_VERSION,
            model_id: self.backend.model_id().to_string(),
            item_id: item.id.clone(),
            variant: Variant::of(item),
            candidate_logprobs: BTreeMap::new(),
            seq_logprob: None,
            n_tokens: None,
            fallback: false,
        };
        match item.kind {
            InstanceKind::Sequence => {
                let (total, n) = sequence_logprob(&self.backend, &item.text)?;
                record.seq_logprob = Some(total);
                record.n_tokens = Some(n);
            }
            InstanceKind::Masked => {
                let masked = item
                    .masked_text
                    .as_deref()
                    .ok_or_else(|| Error::MissingVariant(format!("{} masked_text", item.id)))?;
                let scores = masked_candidate_logprobs(&self.backend, masked, candidates)?;
                record.candidate_logprobs = scores.logprobs;
                record.fallback = scores.fallback;
            }
        }
        Ok(record)
    }
}

impl<B: ScorerBackend + ?Sized> ScorerBackend for Box<B> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn style(&self) -> ModelStyle {
        (**self).style()
    }
    fn capabilities(&self) -> Vec<Capability> {
        (**self).capabilities()
    }
    fn concurrent_safe(&self) -> bool {
        (**self).concurrent_safe()
    }
    fn tokenize(&self, text: &str) -> Result<Vec<Token>> {
        (**self).tokenize(text)
    }
    fn position_logprob(&self, text: &str, position: usize) -> Result<f64> {
        (**self).position_logprob(text, position)
    }
    fn token_logprobs(&self, text: &str) -> Result<Vec<f64>> {
        (**self).token_logprobs(text)
    }
    fn masked_candidates(
        &self,
        masked_text: &str,
        candidates: &[Auxiliary],
    ) -> Result<BTreeMap<Auxiliary, f64>> {
        (**self).masked_candidates(masked_text, candidates)
    }
    fn embeddings(&self, text: &str) -> Result<Vec<TokenEmbedding>> {
        (**self).embeddings(text)
    }
}

/// Scores `items` with `source`, in parallel when the source allows it.
///
/// Results come back in item order regardless of thread count.
pub fn score_items(
    source: &dyn RecordSource,
    items: &[&StimulusItem],
    candidates: &[Auxiliary],
    threads: usize,
) -> Vec<Result<ScoreRecord>> {
    let threads = if source.concurrent_safe() {
        threads.max(1)
    } else {
        1
    };
    if threads == 1 || items.len() < 2 {
        return items.iter().map(|i| source.score(i, candidates)).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|i| source.score(i, candidates))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scoring thread panicked"))
            .collect()
    })
}
