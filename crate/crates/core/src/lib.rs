// SPDX-License-Identifier: Apache-2.0

//! Dialogue-response diagnostics for language models.
//!
//! The crate generates controlled two-turn dialogues ("Marco said, "The nurse,
//! who …, adopted a rescue dog," and Ellie replied, "No, he did not.""),
//! scores them through a backend-neutral interface, and evaluates
//! at-issueness, ellipsis and probing protocols over the scores.

pub mod error;
pub mod experiments;
pub mod lexicon;
pub mod probing;
pub mod report;
pub mod run;
pub mod scoring;
pub mod stats;
pub mod stimgen;

pub use error::{Error, ErrorKind, Result};

/// Version stamped into every persisted record.
pub const SCHEMA_VERSION: u32 = 1;
