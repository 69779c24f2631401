// SPDX-License-Identifier: Apache-2.0

//! Controlled vocabulary for stimulus generation.
//!
//! A lexicon file is TOML with five top-level keys:
//!
//! ```toml
//! auxiliaries = ["did", "does", "has", "is", "was", "would"]
//! pronouns = ["he", "she"]
//! occupations = ["nurse", "reporter"]
//! names = ["Marco", "Ellie"]
//!
//! [verb_phrases]
//! did = ["adopted a rescue dog", "..."]
//! does = ["has interest in French cuisine", "..."]
//! ```
//!
//! Each verb phrase is listed under the one auxiliary that elides it
//! ("adopted a rescue dog" → "he did not"). A phrase may not appear under
//! two auxiliaries, so a response auxiliary always picks out a single clause.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Minimum number of verb phrases per auxiliary.
pub const MIN_VERB_PHRASES: usize = 10;

/// Pronouns that agree with every auxiliary in the default set.
pub const ALLOWED_PRONOUNS: [&str; 2] = ["he", "she"];

const DEFAULT_LEXICON: &str = include_str!("../data/default_lexicon.toml");

/// A stranded auxiliary verb form, e.g. `did`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Auxiliary(String);

impl Auxiliary {
    pub fn new(surface: impl Into<String>) -> Self {
        Auxiliary(surface.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Auxiliary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Auxiliary {
    fn from(s: &str) -> Self {
        Auxiliary::new(s)
    }
}

/// A subject-less verb phrase and the auxiliary that elides it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VerbPhraseEntry {
    pub text: String,
    pub aux: Auxiliary,
}

/// On-disk layout. Field order here is the serialization order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    auxiliaries: Vec<String>,
    pronouns: Vec<String>,
    occupations: Vec<String>,
    names: Vec<String>,
    verb_phrases: BTreeMap<String, Vec<String>>,
}

/// Validated, immutable vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    auxiliaries: Vec<Auxiliary>,
    verb_phrases: BTreeMap<Auxiliary, Vec<VerbPhraseEntry>>,
    occupations: Vec<String>,
    names: Vec<String>,
    pronouns: Vec<String>,
    index: HashMap<String, Auxiliary>,
}

impl Lexicon {
    /// Parses and validates lexicon TOML. `origin` names the source in errors.
    pub fn from_toml_str(src: &str, origin: &str) -> Result<Self> {
        let raw: LexiconFile = toml::from_str(src).map_err(|e| Error::LexiconParse {
            origin: origin.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: LexiconFile) -> Result<Self> {
        let mut auxiliaries = Vec::with_capacity(raw.auxiliaries.len());
        for (i, a) in raw.auxiliaries.iter().enumerate() {
            check_word(&format!("auxiliaries[{i}]"), a)?;
            let aux = Auxiliary::new(a.as_str());
            if auxiliaries.contains(&aux) {
                return Err(Error::InvalidEntry {
                    key: format!("auxiliaries[{i}]"),
                    detail: format!("duplicate auxiliary {a:?}"),
                });
            }
            auxiliaries.push(aux);
        }
        if auxiliaries.len() < 2 {
            return Err(Error::TooFewAuxiliaries {
                found: auxiliaries.len(),
            });
        }
        auxiliaries.sort();

        for key in raw.verb_phrases.keys() {
            if !auxiliaries.iter().any(|a| a.as_str() == key) {
                return Err(Error::UnknownAuxiliary { key: key.clone() });
            }
        }

        let mut index: HashMap<String, Auxiliary> = HashMap::new();
        let mut verb_phrases = BTreeMap::new();
        for aux in &auxiliaries {
            let listed = raw
                .verb_phrases
                .get(aux.as_str())
                .map(Vec::as_slice)
                .unwrap_or_default();
            if listed.len() < MIN_VERB_PHRASES {
                return Err(Error::TooFewVerbPhrases {
                    aux: aux.to_string(),
                    found: listed.len(),
                    need: MIN_VERB_PHRASES,
                });
            }
            let mut entries = Vec::with_capacity(listed.len());
            for (i, text) in listed.iter().enumerate() {
                let key = format!("verb_phrases.{aux}[{i}]");
                check_verb_phrase(&key, text)?;
                if let Some(prev) = index.get(text) {
                    if prev == aux {
                        return Err(Error::InvalidEntry {
                            key,
                            detail: format!("duplicate verb phrase {text:?}"),
                        });
                    }
                    return Err(Error::AmbiguousVerbPhrase {
                        text: text.clone(),
                        first: prev.to_string(),
                        second: aux.to_string(),
                    });
                }
                index.insert(text.clone(), aux.clone());
                entries.push(VerbPhraseEntry {
                    text: text.clone(),
                    aux: aux.clone(),
                });
            }
            verb_phrases.insert(aux.clone(), entries);
        }

        if raw.occupations.is_empty() {
            return Err(Error::InvalidEntry {
                key: "occupations".into(),
                detail: "at least one occupation required".into(),
            });
        }
        for (i, o) in raw.occupations.iter().enumerate() {
            check_phrase(&format!("occupations[{i}]"), o)?;
        }

        for (i, n) in raw.names.iter().enumerate() {
            check_word(&format!("names[{i}]"), n)?;
            if raw.names[..i].contains(n) {
                return Err(Error::InvalidEntry {
                    key: format!("names[{i}]"),
                    detail: format!("duplicate name {n:?}"),
                });
            }
        }
        if raw.names.len() < 2 {
            return Err(Error::InvalidEntry {
                key: "names".into(),
                detail: format!("need ≥ 2 distinct names, found {}", raw.names.len()),
            });
        }

        if raw.pronouns.is_empty() {
            return Err(Error::InvalidEntry {
                key: "pronouns".into(),
                detail: "at least one pronoun required".into(),
            });
        }
        for (i, p) in raw.pronouns.iter().enumerate() {
            if !ALLOWED_PRONOUNS.contains(&p.as_str()) {
                return Err(Error::InvalidEntry {
                    key: format!("pronouns[{i}]"),
                    detail: format!("pronoun {p:?} not in {{he, she}}"),
                });
            }
            if raw.pronouns[..i].contains(p) {
                return Err(Error::InvalidEntry {
                    key: format!("pronouns[{i}]"),
                    detail: format!("duplicate pronoun {p:?}"),
                });
            }
        }

        Ok(Lexicon {
            auxiliaries,
            verb_phrases,
            occupations: raw.occupations,
            names: raw.names,
            pronouns: raw.pronouns,
            index,
        })
    }

    pub fn auxiliaries(&self) -> &[Auxiliary] {
        &self.auxiliaries
    }

    pub fn verb_phrases(&self, aux: &Auxiliary) -> &[VerbPhraseEntry] {
        self.verb_phrases
            .get(aux)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    pub fn all_verb_phrases(&self) -> impl Iterator<Item = &VerbPhraseEntry> {
        self.verb_phrases.values().flatten()
    }

    pub fn occupations(&self) -> &[String] {
        &self.occupations
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn pronouns(&self) -> &[String] {
        &self.pronouns
    }

    /// The auxiliary that elides `verb_phrase`, if it is in the lexicon.
    pub fn lookup(&self, verb_phrase: &str) -> Option<&Auxiliary> {
        self.index.get(verb_phrase)
    }

    pub fn is_auxiliary(&self, word: &str) -> bool {
        self.auxiliaries.iter().any(|a| a.as_str() == word)
    }

    /// Canonical TOML rendering; reloading it yields an equal lexicon.
    pub fn to_toml_string(&self) -> String {
        let raw = LexiconFile {
            auxiliaries: self.auxiliaries.iter().map(|a| a.to_string()).collect(),
            pronouns: self.pronouns.clone(),
            occupations: self.occupations.clone(),
            names: self.names.clone(),
            verb_phrases: self
                .verb_phrases
                .iter()
                .map(|(a, vs)| (a.to_string(), vs.iter().map(|v| v.text.clone()).collect()))
                .collect(),
        };
        toml::to_string(&raw).expect("lexicon serializes")
    }

    /// Hex SHA-256 over the canonical rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}

/// Reads and validates a lexicon file.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::from_toml_str(&src, &path.display().to_string())
}

/// The shipped vocabulary.
pub fn default_lexicon() -> Lexicon {
    Lexicon::from_toml_str(DEFAULT_LEXICON, "<default lexicon>").expect("shipped lexicon is valid")
}

/// Raw text of the shipped lexicon file.
pub fn default_lexicon_source() -> &'static str {
    DEFAULT_LEXICON
}

fn check_word(key: &str, s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace()) {
        return Err(Error::InvalidEntry {
            key: key.into(),
            detail: format!("expected a single non-empty word, got {s:?}"),
        });
    }
    Ok(())
}

fn check_phrase(key: &str, s: &str) -> Result<()> {
    if s.trim().is_empty() || s.trim() != s || s.contains("  ") {
        return Err(Error::InvalidEntry {
            key: key.into(),
            detail: format!("empty or badly spaced text {s:?}"),
        });
    }
    Ok(())
}

fn check_verb_phrase(key: &str, s: &str) -> Result<()> {
    check_phrase(key, s)?;
    if s.ends_with(['.', '!', '?']) {
        return Err(Error::InvalidEntry {
            key: key.into(),
            detail: format!("verb phrase {s:?} ends with sentence-final punctuation"),
        });
    }
    if s.contains(['"', ',']) {
        return Err(Error::InvalidEntry {
            key: key.into(),
            detail: format!("verb phrase {s:?} contains a comma or quote"),
        });
    }
    Ok(())
}
