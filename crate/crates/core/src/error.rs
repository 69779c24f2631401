// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Backend,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("lexicon parse error in {origin}: {message}")]
    LexiconParse { origin: String, message: String },
    #[error("ambiguous verb phrase {text:?}: listed under both {first} and {second}")]
    AmbiguousVerbPhrase {
        text: String,
        first: String,
        second: String,
    },
    #[error("unknown auxiliary key `verb_phrases.{key}` (not listed in `auxiliaries`)")]
    UnknownAuxiliary { key: String },
    #[error("need ≥ 2 auxiliaries, found {found}")]
    TooFewAuxiliaries { found: usize },
    #[error("insufficient verb phrases for `{aux}`: {found} listed, need at least {need}")]
    TooFewVerbPhrases {
        aux: String,
        found: usize,
        need: usize,
    },
    #[error("invalid lexicon entry at `{key}`: {detail}")]
    InvalidEntry { key: String, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("verb-phrase inventory for `{aux}` has {have} entries, {need} required")]
    InsufficientInventory {
        aux: String,
        have: usize,
        need: usize,
    },

    #[error("backend `{model_id}` does not support {capability}")]
    UnsupportedCapability {
        model_id: String,
        capability: &'static str,
    },
    #[error("masked text must contain exactly one mask marker, found {found}")]
    MaskMarkers { found: usize },
    #[error("candidate `{candidate}` is not a single token for this backend")]
    MultiTokenCandidate { candidate: String },
    #[error("candidate `{candidate}` is unknown to the backend")]
    UnknownCandidate { candidate: String },
    #[error("cannot score empty text")]
    EmptyText,
    #[error("backend error: {0}")]
    Backend(String),
    #[error("score cache miss for {0}")]
    CacheMiss(String),
    #[error("score record {item_id} has no value for candidate `{candidate}`")]
    MissingCandidate { item_id: String, candidate: String },
    #[error("malformed mock rules: {0}")]
    MockRules(String),

    #[error("suite is missing variant {0}")]
    MissingVariant(String),
    #[error("no scores for item {0}")]
    MissingScores(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("digest mismatch for {what}: stored {stored}, recomputed {actual}")]
    DigestMismatch {
        what: &'static str,
        stored: String,
        actual: String,
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("probe: {0}")]
    Probe(String),
    #[error("statistics: {0}")]
    Stats(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnsupportedCapability { .. }
            | Error::MultiTokenCandidate { .. }
            | Error::UnknownCandidate { .. }
            | Error::Backend(_)
            | Error::CacheMiss(_) => ErrorKind::Backend,
            Error::Config(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
