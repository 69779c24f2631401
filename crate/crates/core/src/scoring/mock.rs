// SPDX-License-Identifier: Apache-2.0

//! Rule-table backend for tests and dry runs.
//!
//! The mock reads its input the way a model would: it finds the lexicon verb
//! phrases in the text (the earlier one is the first/embedded phrase, the
//! later one the second/main phrase) and the response header, then applies
//! fixed score adjustments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{word_tokenize, Capability, ModelStyle, ScorerBackend, Token, TokenEmbedding};
use crate::error::{Error, Result};
use crate::lexicon::{Auxiliary, Lexicon};
use crate::stimgen::Header;

fn default_token_logprob() -> f64 {
    -1.0
}

fn default_embedding_dim() -> usize {
    16
}

fn default_embedding_noise() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingRule {
    /// Position-in-dialogue features plus hashed token identity.
    #[default]
    Structural,
    /// Hashed token identity only.
    Random,
}

/// Log-probability override for one token at one content position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionRule {
    pub position: usize,
    pub token: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRules {
    pub model_id: String,
    #[serde(default)]
    pub style: ModelStyle,
    /// Candidate vocabulary; candidate log-probabilities are normalized over it.
    /// Empty means the lexicon's auxiliaries.
    #[serde(default)]
    pub vocabulary: Vec<Auxiliary>,
    /// Context-free score per auxiliary (missing entries score 0).
    #[serde(default)]
    pub aux_bias: BTreeMap<Auxiliary, f64>,
    /// Added to the auxiliary eliding the first (embedded / distant) phrase.
    #[serde(default)]
    pub first_boost: f64,
    /// Added to the auxiliary eliding the second (main / recent) phrase.
    #[serde(default)]
    pub second_boost: f64,
    /// Extra second-phrase boost keyed by response header.
    #[serde(default)]
    pub header_second_boost: BTreeMap<Header, f64>,
    /// Amplitude of deterministic per-(text, auxiliary) noise in [0, jitter).
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub jitter_seed: u64,
    /// Candidates treated as multi-token (forces the sequence fallback).
    #[serde(default)]
    pub split_candidates: Vec<Auxiliary>,
    #[serde(default = "default_token_logprob")]
    pub token_logprob: f64,
    #[serde(default)]
    pub token_table: BTreeMap<String, f64>,
    #[serde(default)]
    pub position_table: Vec<PositionRule>,
    /// Added to every token log-probability of a text whose response has this header.
    #[serde(default)]
    pub header_shift: BTreeMap<Header, f64>,
    #[serde(default)]
    pub embedding: EmbeddingRule,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_embedding_noise")]
    pub embedding_noise: f64,
    #[serde(default)]
    pub capabilities: Option<Vec<Capability>>,
}

impl MockRules {
    pub fn new(model_id: impl Into<String>) -> Self {
        MockRules {
            model_id: model_id.into(),
            style: ModelStyle::Masked,
            vocabulary: Vec::new(),
            aux_bias: BTreeMap::new(),
            first_boost: 0.0,
            second_boost: 0.0,
            header_second_boost: BTreeMap::new(),
            jitter: 0.0,
            jitter_seed: 0,
            split_candidates: Vec::new(),
            token_logprob: default_token_logprob(),
            token_table: BTreeMap::new(),
            position_table: Vec::new(),
            header_shift: BTreeMap::new(),
            embedding: EmbeddingRule::Structural,
            embedding_dim: default_embedding_dim(),
            embedding_noise: default_embedding_noise(),
            capabilities: None,
        }
    }

    pub fn from_toml_str(src: &str) -> Result<Self> {
        let rules: MockRules = toml::from_str(src).map_err(|e| Error::MockRules(e.to_string()))?;
        rules.validate()?;
        Ok(rules)
    }

    fn validate(&self) -> Result<()> {
        if self.model_id.trim().is_empty() {
            return Err(Error::MockRules("model_id must be non-empty".into()));
        }
        if self.token_logprob > 0.0 || !self.token_logprob.is_finite() {
            return Err(Error::MockRules(
                "token_logprob must be finite and ≤ 0".into(),
            ));
        }
        if self.jitter < 0.0 || !self.jitter.is_finite() {
            return Err(Error::MockRules("jitter must be finite and ≥ 0".into()));
        }
        if self.embedding_dim < 4 {
            return Err(Error::MockRules("embedding_dim must be ≥ 4".into()));
        }
        let all = self
            .aux_bias
            .values()
            .chain(self.token_table.values())
            .chain(self.header_shift.values())
            .chain(self.header_second_boost.values())
            .chain(self.position_table.iter().map(|r| &r.logprob))
            .chain([&self.first_boost, &self.second_boost]);
        for v in all {
            if !v.is_finite() {
                return Err(Error::MockRules(format!("non-finite value {v}")));
            }
        }
        Ok(())
    }
}

/// Names accepted by [`preset_rules`].
pub const PRESETS: [&str; 11] = [
    "prefer-main",
    "prefer-embedded",
    "pair-top2",
    "did-top1",
    "did-does-top2",
    "did-does-bias",
    "main-jitter",
    "uniform",
    "reject-header",
    "frequency",
    "causal-main",
];

/// Built-in rule tables.
pub fn preset_rules(name: &str) -> Option<MockRules> {
    let mut r = MockRules::new(format!("mock-{name}"));
    let bias = |pairs: &[(&str, f64)]| -> BTreeMap<Auxiliary, f64> {
        pairs
            .iter()
            .map(|(a, v)| (Auxiliary::from(*a), *v))
            .collect()
    };
    match name {
        "prefer-main" => r.second_boost = 3.0,
        "prefer-embedded" => r.first_boost = 3.0,
        "pair-top2" => {
            r.second_boost = 4.0;
            r.first_boost = 3.0;
        }
        "did-top1" => r.aux_bias = bias(&[("did", 5.0)]),
        "did-does-top2" => r.aux_bias = bias(&[("did", 5.0), ("does", 4.0)]),
        "did-does-bias" => r.aux_bias = bias(&[("did", 3.0), ("does", 2.9)]),
        "main-jitter" => {
            r.second_boost = 10.0;
            r.jitter = 1.0;
            r.jitter_seed = 17;
        }
        "uniform" => {}
        "reject-header" => {
            r.header_shift = [(Header::Reject, 0.1)].into_iter().collect();
            r.second_boost = 2.0;
            r.header_second_boost = [(Header::Wait, -1.5)].into_iter().collect();
            r.jitter = 1.0;
            r.jitter_seed = 5;
        }
        "frequency" => {
            r.aux_bias = bias(&[
                ("did", 2.5),
                ("does", 2.0),
                ("is", 1.5),
                ("has", 1.0),
                ("was", 0.5),
                ("would", 0.0),
            ]);
            r.second_boost = 1.0;
        }
        "causal-main" => {
            r.style = ModelStyle::Causal;
            r.second_boost = 3.0;
        }
        _ => return None,
    }
    Some(r)
}

pub struct MockScorer {
    rules: MockRules,
    lexicon: Lexicon,
    vocabulary: Vec<Auxiliary>,
    positions: BTreeMap<(usize, String), f64>,
}

impl MockScorer {
    pub fn new(rules: MockRules, lexicon: Lexicon) -> Result<Self> {
        rules.validate()?;
        let vocabulary = if rules.vocabulary.is_empty() {
            lexicon.auxiliaries().to_vec()
        } else {
            rules.vocabulary.clone()
        };
        let mut positions = BTreeMap::new();
        for p in &rules.position_table {
            if positions
                .insert((p.position, p.token.clone()), p.logprob)
                .is_some()
            {
                return Err(Error::MockRules(format!(
                    "duplicate position rule ({}, {:?})",
                    p.position, p.token
                )));
            }
        }
        Ok(MockScorer {
            rules,
            lexicon,
            vocabulary,
            positions,
        })
    }

    pub fn rules(&self) -> &MockRules {
        &self.rules
    }

    /// Auxiliaries of the first and second lexicon verb phrases found in `text`.
    fn context_auxes(&self, text: &str) -> (Option<&Auxiliary>, Option<&Auxiliary>) {
        let mut found: Vec<(usize, &Auxiliary)> = self
            .lexicon
            .all_verb_phrases()
            .filter_map(|vp| text.find(vp.text.as_str()).map(|pos| (pos, &vp.aux)))
            .collect();
        found.sort_by_key(|(pos, _)| *pos);
        (found.first().map(|f| f.1), found.get(1).map(|f| f.1))
    }

    fn token_score(&self, token: &Token, position: usize, shift: f64) -> f64 {
        let base = self
            .positions
            .get(&(position, token.text.clone()))
            .or_else(|| self.rules.token_table.get(&token.text))
            .copied()
            .unwrap_or(self.rules.token_logprob);
        base + shift
    }
}

/// Header of the final quoted turn, if the text ends with one.
pub(crate) fn response_header(text: &str) -> Option<Header> {
    let body = text.strip_suffix('"')?;
    let open = body.rfind('"')?;
    let response = &body[open + 1..];
    if response.starts_with("Wait no") {
        Some(Header::Wait)
    } else if response.starts_with("No") {
        Some(Header::Reject)
    } else {
        None
    }
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in *part {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

impl ScorerBackend for MockScorer {
    fn model_id(&self) -> &str {
        &self.rules.model_id
    }

    fn style(&self) -> ModelStyle {
        self.rules.style
    }

    fn capabilities(&self) -> Vec<Capability> {
        self.rules.capabilities.clone().unwrap_or_else(|| {
            vec![
                Capability::SequenceLogprob,
                Capability::MaskedCandidates,
                Capability::Embeddings,
            ]
        })
    }

    fn tokenize(&self, text: &str) -> Result<Vec<Token>> {
        Ok(word_tokenize(text))
    }

    fn position_logprob(&self, text: &str, position: usize) -> Result<f64> {
        if !self.supports(Capability::SequenceLogprob) {
            return Err(self.unsupported(Capability::SequenceLogprob));
        }
        let tokens = word_tokenize(text);
        let token = tokens.get(position).ok_or_else(|| {
            Error::Backend(format!(
                "position {position} out of range for {} tokens",
                tokens.len()
            ))
        })?;
        let shift = response_header(text)
            .and_then(|h| self.rules.header_shift.get(&h))
            .copied()
            .unwrap_or(0.0);
        Ok(self.token_score(token, position, shift))
    }

    fn token_logprobs(&self, text: &str) -> Result<Vec<f64>> {
        if !self.supports(Capability::SequenceLogprob) {
            return Err(self.unsupported(Capability::SequenceLogprob));
        }
        let shift = response_header(text)
            .and_then(|h| self.rules.header_shift.get(&h))
            .copied()
            .unwrap_or(0.0);
        Ok(word_tokenize(text)
            .iter()
            .enumerate()
            .map(|(i, t)| self.token_score(t, i, shift))
            .collect())
    }

    fn masked_candidates(
        &self,
        masked_text: &str,
        candidates: &[Auxiliary],
    ) -> Result<BTreeMap<Auxiliary, f64>> {
        if !self.supports(Capability::MaskedCandidates) {
            return Err(self.unsupported(Capability::MaskedCandidates));
        }
        for c in candidates {
            if self.rules.split_candidates.contains(c) || c.as_str().contains(' ') {
                return Err(Error::MultiTokenCandidate {
                    candidate: c.to_string(),
                });
            }
            if !self.vocabulary.contains(c) {
                return Err(Error::UnknownCandidate {
                    candidate: c.to_string(),
                });
            }
        }
        let (first, second) = self.context_auxes(masked_text);
        let header = response_header(masked_text);
        let second_boost = self.rules.second_boost
            + header
                .and_then(|h| self.rules.header_second_boost.get(&h))
                .copied()
                .unwrap_or(0.0);
        let raw: Vec<(Auxiliary, f64)> = self
            .vocabulary
            .iter()
            .map(|a| {
                let mut s = self.rules.aux_bias.get(a).copied().unwrap_or(0.0);
                if Some(a) == first {
                    s += self.rules.first_boost;
                }
                if Some(a) == second {
                    s += second_boost;
                }
                if self.rules.jitter > 0.0 {
                    let h = fnv1a(&[
                        &self.rules.jitter_seed.to_le_bytes(),
                        masked_text.as_bytes(),
                        a.as_str().as_bytes(),
                    ]);
                    s += self.rules.jitter * unit(h);
                }
                (a.clone(), s)
            })
            .collect();
        let max = raw
            .iter()
            .map(|(_, s)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max + raw.iter().map(|(_, s)| (s - max).exp()).sum::<f64>().ln();
        Ok(raw
            .into_iter()
            .filter(|(a, _)| candidates.contains(a))
            .map(|(a, s)| (a, s - lse))
            .collect())
    }

    fn embeddings(&self, text: &str) -> Result<Vec<TokenEmbedding>> {
        if !self.supports(Capability::Embeddings) {
            return Err(self.unsupported(Capability::Embeddings));
        }
        let dim = self.rules.embedding_dim;
        let noise = self.rules.embedding_noise;
        let mut quotes = 0usize;
        let mut in_quote = false;
        let mut in_clause = false;
        let mut prev_comma = false;
        let mut out = Vec::new();
        for token in word_tokenize(text) {
            let punct = !token.text.chars().any(char::is_alphanumeric);
            if token.text == "\"" {
                in_quote = !in_quote;
                if in_quote {
                    quotes += 1;
                }
                in_clause = false;
            } else if in_quote && token.text == "who" && prev_comma {
                in_clause = true;
            } else if in_clause && token.text == "," {
                in_clause = false;
            }
            let context_quote = in_quote && quotes == 1 && token.text != "\"";
            let h = fnv1a(&[token.text.to_lowercase().as_bytes()]);
            let mut v: Vec<f64> = (0..dim)
                .map(|k| noise * (2.0 * unit(fnv1a(&[&h.to_le_bytes(), &[k as u8]])) - 1.0))
                .collect();
            if self.rules.embedding == EmbeddingRule::Structural {
                v[0] += if context_quote { 1.0 } else { -1.0 };
                v[1] += if in_clause && !punct { 1.0 } else { -1.0 };
                v[2] += if punct { 1.0 } else { -1.0 };
                v[3] += if token.text == "and" { 1.0 } else { -1.0 };
            }
            prev_comma = token.text == ",";
            out.push(TokenEmbedding { token, vector: v });
        }
        Ok(out)
    }
}
