// SPDX-License-Identifier: Apache-2.0

//! Line-delimited score cache and the replay source built on it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{RecordSource, ScoreRecord, Variant};
use crate::error::{Error, Result};
use crate::lexicon::Auxiliary;
use crate::stimgen::StimulusItem;
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub model_id: String,
    pub schema_version: u32,
    pub item_id: String,
    pub variant: Variant,
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/v{}/{}/{}",
            self.model_id,
            self.schema_version,
            self.item_id,
            self.variant.as_str()
        )
    }
}

/// Score records in file order, indexed by [`CacheKey`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreCache {
    order: Vec<CacheKey>,
    records: BTreeMap<CacheKey, ScoreRecord>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a cache file. A missing file is an empty cache. A final line cut
    /// short by an interrupted writer is dropped and truncated away so later
    /// appends continue cleanly.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = match std::fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut cache = Self::new();
        let mut good_len = 0usize;
        let mut offset = 0usize;
        for (i, line) in src.split_inclusive('\n').enumerate() {
            offset += line.len();
            let complete = line.ends_with('\n');
            let body = line.trim_end_matches('\n');
            if body.trim().is_empty() {
                good_len = offset;
                continue;
            }
            match serde_json::from_str::<ScoreRecord>(body) {
                Ok(rec) => {
                    if !complete {
                        break;
                    }
                    if rec.schema_version != SCHEMA_VERSION {
                        return Err(Error::Schema(format!(
                            "{}:{}: schema_version {} (expected {SCHEMA_VERSION})",
                            path.display(),
                            i + 1,
                            rec.schema_version
                        )));
                    }
                    cache.insert(rec);
                    good_len = offset;
                }
                Err(_) if !complete => break,
                Err(e) => {
                    return Err(Error::Record {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        if good_len < src.len() {
            let f = OpenOptions::new()
                .write(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            f.set_len(good_len as u64).map_err(|e| Error::io(path, e))?;
        }
        Ok(cache)
    }

    /// Inserts or replaces; a replaced record keeps its original position.
    pub fn insert(&mut self, rec: ScoreRecord) {
        let key = rec.key();
        if self.records.insert(key.clone(), rec).is_none() {
            self.order.push(key);
        }
    }

    pub fn get(&self, model_id: &str, item_id: &str, variant: Variant) -> Option<&ScoreRecord> {
        self.records.get(&CacheKey {
            model_id: model_id.to_string(),
            schema_version: SCHEMA_VERSION,
            item_id: item_id.to_string(),
            variant,
        })
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.records.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &ScoreRecord> {
        self.order.iter().map(move |k| &self.records[k])
    }

    /// Distinct model ids present.
    pub fn model_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.order.iter().map(|k| k.model_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn to_jsonl(&self) -> String {
        self.records()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    /// Appends records to a cache file, one line each, flushing after every line.
    pub fn append(path: impl AsRef<Path>, records: &[ScoreRecord]) -> Result<()> {
        let path = path.as_ref();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        for r in records {
            let line = serde_json::to_string(r).expect("record serializes") + "\n";
            f.write_all(line.as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        f.flush().map_err(|e| Error::io(path, e))
    }
}

/// Serves previously persisted records; never computes anything.
pub struct ReplayScorer {
    model_id: String,
    cache: ScoreCache,
    source: PathBuf,
}

impl ReplayScorer {
    /// Opens a cache holding records for exactly one model, or for `model_id`
    /// when given.
    pub fn open(path: impl AsRef<Path>, model_id: Option<&str>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "score cache not found"),
            ));
        }
        let cache = ScoreCache::load(path)?;
        let model_id = match model_id {
            Some(m) => m.to_string(),
            None => match cache.model_ids().as_slice() {
                [one] => one.to_string(),
                [] => return Err(Error::CacheMiss(format!("{} is empty", path.display()))),
                many => {
                    return Err(Error::Schema(format!(
                        "{} holds several models ({}); name one",
                        path.display(),
                        many.join(", ")
                    )))
                }
            },
        };
        Ok(ReplayScorer {
            model_id,
            cache,
            source: path.to_path_buf(),
        })
    }

    pub fn from_cache(model_id: impl Into<String>, cache: ScoreCache) -> Self {
        ReplayScorer {
            model_id: model_id.into(),
            cache,
            source: PathBuf::from("<memory>"),
        }
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }
}

impl RecordSource for ReplayScorer {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn score(&self, item: &StimulusItem, _candidates: &[Auxiliary]) -> Result<ScoreRecord> {
        let variant = Variant::of(item);
        self.cache
            .get(&self.model_id, &item.id, variant)
            .cloned()
            .ok_or_else(|| {
                Error::CacheMiss(format!(
                    "item {} ({}) in {}",
                    item.id,
                    CacheKey {
                        model_id: self.model_id.clone(),
                        schema_version: SCHEMA_VERSION,
                        item_id: item.id.clone(),
                        variant,
                    },
                    self.source.display()
                ))
            })
    }
}
