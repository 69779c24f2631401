// SPDX-License-Identifier: Apache-2.0

//! Token-level at-issueness probe.
//!
//! Tokens from the context region of each masked ARC instance are labelled
//! from the stimulus spans (midpoint rule) and fed, as frozen backend
//! embeddings, to a one-hidden-layer perceptron.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{Capability, ScorerBackend};
use crate::stimgen::{InstanceKind, Label, Mode, StimulusItem, Suite};
use crate::SCHEMA_VERSION;

const CLASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub item_id: String,
    pub token_index: usize,
    pub token: String,
    pub char_span: (usize, usize),
    pub label: Label,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub hidden_size: usize,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Share of training items held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            hidden_size: 50,
            train_fraction: 0.7,
            repetitions: 3,
            seed: 2022,
            max_epochs: 50,
            patience: 5,
            learning_rate: 1e-3,
            batch_size: 32,
            validation_fraction: 0.1,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("probe: {m}")));
        if self.hidden_size == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return bad("hidden_size, batch_size and max_epochs must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be positive");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie strictly between 0 and 1");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }
}

/// End of the context region: just past the quotation mark closing the first
/// turn, which follows the last at-issue or not-at-issue span.
fn region_end(item: &StimulusItem) -> usize {
    let labelled = item
        .spans
        .iter()
        .filter(|s| s.label != Label::Neither)
        .map(|s| s.end)
        .max()
        .unwrap_or(0);
    item.text
        .chars()
        .skip(labelled)
        .position(|c| c == '"')
        .map_or(labelled, |k| labelled + k + 1)
}

/// Records for one instance from an already computed embedding sequence.
pub fn label_tokens(
    item: &StimulusItem,
    embedded: Vec<crate::scoring::TokenEmbedding>,
) -> Result<Vec<TokenRecord>> {
    let len = item.text.chars().count();
    let end = region_end(item);
    let mut out = Vec::new();
    let mut last_start = 0;
    for (i, e) in embedded.into_iter().enumerate() {
        let (s, t) = (e.token.start, e.token.end);
        if t > len || s > t || s < last_start {
            return Err(Error::Backend(format!(
                "{}: token {i} {:?} has offsets {s}..{t} misaligned with a {len}-character text",
                item.id, e.token.text
            )));
        }
        last_start = s;
        if s == t {
            continue;
        }
        let mid = (s + t - 1) / 2;
        if mid >= end {
            break;
        }
        let label = item.label_at(mid).ok_or_else(|| {
            Error::Backend(format!("{}: token {i} falls outside every span", item.id))
        })?;
        out.push(TokenRecord {
            item_id: item.id.clone(),
            token_index: i,
            token: e.token.text,
            char_span: (s, t),
            label,
            embedding: e.vector,
        });
    }
    Ok(out)
}

/// One record per context-region token of every masked ARC instance.
pub fn build_probe_dataset(suite: &Suite, backend: &dyn ScorerBackend) -> Result<Vec<TokenRecord>> {
    if !backend.supports(Capability::Embeddings) {
        return Err(backend.unsupported(Capability::Embeddings));
    }
    let items: Vec<&StimulusItem> = suite
        .iter()
        .filter(|i| i.kind == InstanceKind::Masked && i.mode() == Mode::Arc)
        .collect();
    if items.is_empty() {
        return Err(Error::MissingVariant(
            "masked arc instances for probing".into(),
        ));
    }
    let mut out = Vec::new();
    let mut dim = None;
    for item in items {
        let recs = label_tokens(item, backend.embeddings(&item.text)?)?;
        for r in &recs {
            if *dim.get_or_insert(r.embedding.len()) != r.embedding.len() {
                return Err(Error::Backend(format!(
                    "{}: embedding dimension {} differs from {}",
                    r.item_id,
                    r.embedding.len(),
                    dim.unwrap_or_default()
                )));
            }
        }
        out.extend(recs);
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, records: &[TokenRecord]) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    for r in records {
        serde_json::to_writer(&mut w, r).expect("record serializes");
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<TokenRecord>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn item_ids(records: &[TokenRecord]) -> Vec<&str> {
    let set: BTreeSet<&str> = records.iter().map(|r| r.item_id.as_str()).collect();
    set.into_iter().collect()
}

fn partition(
    records: &[TokenRecord],
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<TokenRecord>, Vec<TokenRecord>)> {
    let mut ids = item_ids(records);
    if ids.len() < 2 {
        return Err(Error::Probe(format!(
            "need ≥ 2 items to split, have {}",
            ids.len()
        )));
    }
    ids.shuffle(rng);
    let n_train = ((ids.len() as f64 * fraction).round() as usize).clamp(1, ids.len() - 1);
    let train_ids: BTreeSet<&str> = ids[..n_train].iter().copied().collect();
    let (train, test) = records
        .iter()
        .cloned()
        .partition(|r| train_ids.contains(r.item_id.as_str()));
    Ok((train, test))
}

/// Item-level split: all tokens of an item land on the same side.
pub fn split_by_item(
    records: &[TokenRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<TokenRecord>, Vec<TokenRecord>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    partition(
        records,
        train_fraction,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

/// Trained classifier: standardize → dense(hidden, ReLU) → dense(3) → softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// hidden × input, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// 3 × hidden, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub epochs: usize,
}

impl Probe {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    fn hidden(&self) -> usize {
        self.b1.len()
    }

    fn forward(&self, x: &[f64], z: &mut [f64], p: &mut [f64; CLASSES]) {
        let d = self.input_dim();
        for (j, zj) in z.iter_mut().enumerate() {
            let row = &self.w1[j * d..(j + 1) * d];
            *zj = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        let h = self.hidden();
        for (c, pc) in p.iter_mut().enumerate() {
            let row = &self.w2[c * h..(c + 1) * h];
            *pc = self.b2[c]
                + row
                    .iter()
                    .zip(z.iter())
                    .map(|(w, v)| w * v.max(0.0))
                    .sum::<f64>();
        }
        let m = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for pc in p.iter_mut() {
            *pc = (*pc - m).exp();
            s += *pc;
        }
        for pc in p.iter_mut() {
            *pc /= s;
        }
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn predict_proba(&self, embedding: &[f64]) -> Result<[f64; CLASSES]> {
        if embedding.len() != self.input_dim() {
            return Err(Error::Probe(format!(
                "embedding dimension {} but probe expects {}",
                embedding.len(),
                self.input_dim()
            )));
        }
        let mut z = vec![0.0; self.hidden()];
        let mut p = [0.0; CLASSES];
        self.forward(&self.standardize(embedding), &mut z, &mut p);
        Ok(p)
    }

    pub fn predict(&self, embedding: &[f64]) -> Result<Label> {
        let p = self.predict_proba(embedding)?;
        let best = (0..CLASSES)
            .max_by(|&a, &b| p[a].total_cmp(&p[b]).then(b.cmp(&a)))
            .expect("three classes");
        Ok(Label::ALL[best])
    }

    pub fn accuracy(&self, records: &[TokenRecord]) -> Result<f64> {
        if records.is_empty() {
            return Err(Error::Probe("cannot evaluate on an empty set".into()));
        }
        let mut hits = 0usize;
        for r in records {
            if self.predict(&r.embedding)? == r.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / records.len() as f64)
    }

    fn mean_loss(&self, data: &[(Vec<f64>, usize)]) -> f64 {
        let mut z = vec![0.0; self.hidden()];
        let mut p = [0.0; CLASSES];
        data.iter()
            .map(|(x, y)| {
                self.forward(x, &mut z, &mut p);
                -p[*y].max(1e-300).ln()
            })
            .sum::<f64>()
            / data.len() as f64
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [&mut Vec<f64>], grads: &[Vec<f64>], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        let mut k = 0;
        for (p, g) in params.iter_mut().zip(grads) {
            for (w, gi) in p.iter_mut().zip(g) {
                self.m[k] = B1 * self.m[k] + (1.0 - B1) * gi;
                self.v[k] = B2 * self.v[k] + (1.0 - B2) * gi * gi;
                *w -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + EPS);
                k += 1;
            }
        }
    }
}

/// Trains a probe. Input order does not matter: records are put in a
/// canonical order before any seeded shuffling.
pub fn train_probe(train: &[TokenRecord], config: &ProbeConfig) -> Result<Probe> {
    config.validate()?;
    let Some(first) = train.first() else {
        return Err(Error::Probe("empty training set".into()));
    };
    let d = first.embedding.len();
    if d == 0 {
        return Err(Error::Probe("zero-dimensional embeddings".into()));
    }
    if let Some(r) = train.iter().find(|r| r.embedding.len() != d) {
        return Err(Error::Probe(format!(
            "dimension mismatch: {} has {} values, expected {d}",
            r.item_id,
            r.embedding.len()
        )));
    }
    let classes: BTreeSet<Label> = train.iter().map(|r| r.label).collect();
    if classes.len() < 2 {
        return Err(Error::Probe(format!(
            "training set has a single class ({:?})",
            first.label
        )));
    }

    let mut sorted: Vec<&TokenRecord> = train.iter().collect();
    sorted.sort_by(|a, b| {
        (a.item_id.as_str(), a.token_index).cmp(&(b.item_id.as_str(), b.token_index))
    });
    let owned: Vec<TokenRecord> = sorted.into_iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (fit, val) = if config.validation_fraction > 0.0 && item_ids(&owned).len() >= 10 {
        partition(&owned, 1.0 - config.validation_fraction, &mut rng)?
    } else {
        (owned, Vec::new())
    };

    let n = fit.len() as f64;
    let mut mean = vec![0.0; d];
    for r in &fit {
        for (m, v) in mean.iter_mut().zip(&r.embedding) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; d];
    for r in &fit {
        for ((s, v), m) in scale.iter_mut().zip(&r.embedding).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in scale.iter_mut() {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }

    let h = config.hidden_size;
    let lim1 = (6.0 / d as f64).sqrt();
    let lim2 = (6.0 / (h + CLASSES) as f64).sqrt();
    let mut probe = Probe {
        w1: (0..h * d).map(|_| rng.random_range(-lim1..lim1)).collect(),
        b1: vec![0.0; h],
        w2: (0..CLASSES * h)
            .map(|_| rng.random_range(-lim2..lim2))
            .collect(),
        b2: vec![0.0; CLASSES],
        mean,
        scale,
        epochs: 0,
    };
    let prep = |rs: &[TokenRecord]| -> Vec<(Vec<f64>, usize)> {
        rs.iter()
            .map(|r| (probe.standardize(&r.embedding), r.label.index()))
            .collect()
    };
    let fit = prep(&fit);
    let val = prep(&val);

    let mut adam = Adam::new(h * d + h + CLASSES * h + CLASSES);
    let mut order: Vec<usize> = (0..fit.len()).collect();
    let mut best = (f64::INFINITY, probe.clone());
    let mut stale = 0;
    let mut z = vec![0.0; h];
    let mut p = [0.0; CLASSES];
    let mut g = [
        vec![0.0; h * d],
        vec![0.0; h],
        vec![0.0; CLASSES * h],
        vec![0.0; CLASSES],
    ];
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            g.iter_mut().for_each(|v| v.fill(0.0));
            let inv = 1.0 / batch.len() as f64;
            for &i in batch {
                let (x, y) = &fit[i];
                probe.forward(x, &mut z, &mut p);
                let mut dout = p;
                dout[*y] -= 1.0;
                for c in 0..CLASSES {
                    let dc = dout[c] * inv;
                    g[3][c] += dc;
                    for j in 0..h {
                        g[2][c * h + j] += dc * z[j].max(0.0);
                    }
                }
                for j in 0..h {
                    if z[j] <= 0.0 {
                        continue;
                    }
                    let dz: f64 = (0..CLASSES)
                        .map(|c| probe.w2[c * h + j] * dout[c])
                        .sum::<f64>()
                        * inv;
                    g[1][j] += dz;
                    for (gw, xv) in g[0][j * d..(j + 1) * d].iter_mut().zip(x) {
                        *gw += dz * xv;
                    }
                }
            }
            let Probe { w1, b1, w2, b2, .. } = &mut probe;
            adam.step(&mut [w1, b1, w2, b2], &g, config.learning_rate);
        }
        probe.epochs = epoch;
        if val.is_empty() {
            continue;
        }
        let loss = probe.mean_loss(&val);
        if loss < best.0 {
            best = (loss, probe.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    if val.is_empty() {
        Ok(probe)
    } else {
        Ok(best.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub repetition: usize,
    pub seed: u64,
    pub train_items: usize,
    pub test_items: usize,
    pub train_tokens: usize,
    pub test_tokens: usize,
    pub epochs: usize,
    pub accuracy: f64,
    /// Share of the most frequent label in the test split.
    pub majority_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub schema_version: u32,
    pub model_id: String,
    pub config: ProbeConfig,
    pub label_counts: BTreeMap<Label, usize>,
    pub runs: Vec<ProbeRun>,
    pub mean_accuracy: f64,
}

fn majority_share(records: &[TokenRecord]) -> f64 {
    let mut counts = [0usize; CLASSES];
    for r in records {
        counts[r.label.index()] += 1;
    }
    counts.iter().copied().max().unwrap_or(0) as f64 / records.len().max(1) as f64
}

/// Repeated split / train / evaluate over an existing dataset.
pub fn evaluate_probe(
    records: &[TokenRecord],
    model_id: &str,
    config: &ProbeConfig,
) -> Result<ProbeResult> {
    config.validate()?;
    let mut label_counts = BTreeMap::new();
    for r in records {
        *label_counts.entry(r.label).or_insert(0) += 1;
    }
    let runs: Vec<Result<ProbeRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.repetitions)
            .map(|rep| {
                scope.spawn(move || {
                    let seed = config.seed.wrapping_add(rep as u64);
                    let (train, test) = split_by_item(records, config.train_fraction, seed)?;
                    let probe = train_probe(
                        &train,
                        &ProbeConfig {
                            seed,
                            ..config.clone()
                        },
                    )?;
                    Ok(ProbeRun {
                        repetition: rep,
                        seed,
                        train_items: item_ids(&train).len(),
                        test_items: item_ids(&test).len(),
                        train_tokens: train.len(),
                        test_tokens: test.len(),
                        epochs: probe.epochs,
                        accuracy: probe.accuracy(&test)?,
                        majority_share: majority_share(&test),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("probe thread panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mean_accuracy = runs.iter().map(|r| r.accuracy).sum::<f64>() / runs.len() as f64;
    Ok(ProbeResult {
        schema_version: SCHEMA_VERSION,
        model_id: model_id.to_string(),
        config: config.clone(),
        label_counts,
        runs,
        mean_accuracy,
    })
}

pub fn run_probe_protocol(
    suite: &Suite,
    backend: &dyn ScorerBackend,
    config: &ProbeConfig,
) -> Result<ProbeResult> {
    let records = build_probe_dataset(suite, backend)?;
    evaluate_probe(&records, backend.model_id(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::default_lexicon;
    use crate::scoring::{preset_rules, MockScorer};
    use crate::stimgen::{build_suite, SuiteConfig};

    fn synthetic(n_items: usize, per_item: usize, sigma: f64, seed: u64) -> Vec<TokenRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..n_items {
            for t in 0..per_item {
                let c = rng.random_range(0..CLASSES);
                let embedding = (0..8)
                    .map(|k| if k == c { 3.0 } else { 0.0 } + sigma * rng.random_range(-1.0..1.0))
                    .collect();
                out.push(TokenRecord {
                    item_id: format!("item-{i:03}"),
                    token_index: t,
                    token: "x".into(),
                    char_span: (t, t + 1),
                    label: Label::ALL[c],
                    embedding,
                });
            }
        }
        out
    }

    #[test]
    fn split_is_item_level() {
        let recs = synthetic(10, 4, 0.1, 1);
        let (train, test) = split_by_item(&recs, 0.7, 9).unwrap();
        let a: BTreeSet<_> = item_ids(&train).into_iter().collect();
        let b: BTreeSet<_> = item_ids(&test).into_iter().collect();
        assert_eq!((a.len(), b.len()), (7, 3));
        assert!(a.is_disjoint(&b));
        assert_eq!(split_by_item(&recs, 0.7, 9).unwrap().0, train);
        assert!(split_by_item(&recs, 1.0, 9).is_err());
        assert!(split_by_item(&recs[..4], 0.5, 9).is_err());
    }

    #[test]
    fn separable_clusters_are_learned() {
        let recs = synthetic(60, 20, 0.3, 2);
        let r = evaluate_probe(&recs, "synthetic", &ProbeConfig::default()).unwrap();
        assert_eq!(r.runs.len(), 3);
        assert!(r.mean_accuracy >= 0.99, "{r:?}");
        let mean = r.runs.iter().map(|x| x.accuracy).sum::<f64>() / 3.0;
        assert!((mean - r.mean_accuracy).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let recs = synthetic(20, 10, 0.5, 3);
        let cfg = ProbeConfig {
            max_epochs: 5,
            ..ProbeConfig::default()
        };
        let a = train_probe(&recs, &cfg).unwrap();
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(a, train_probe(&rev, &cfg).unwrap());
    }

    #[test]
    fn degenerate_inputs_fail() {
        let mut recs = synthetic(5, 5, 0.1, 4);
        for r in recs.iter_mut() {
            r.label = Label::Neither;
        }
        assert!(matches!(
            train_probe(&recs, &ProbeConfig::default()),
            Err(Error::Probe(_))
        ));
        let mut recs = synthetic(5, 5, 0.1, 4);
        recs[3].embedding.pop();
        assert!(train_probe(&recs, &ProbeConfig::default()).is_err());
        assert!(train_probe(&[], &ProbeConfig::default()).is_err());
    }

    #[test]
    fn labels_follow_spans() {
        let lex = default_lexicon();
        let suite = build_suite(&lex, &SuiteConfig::default()).unwrap();
        let mock = MockScorer::new(preset_rules("uniform").unwrap(), lex).unwrap();
        let item = suite
            .masked(Mode::Arc)
            .find(|i| i.context.vp1.text == "has interest in French cuisine")
            .unwrap();
        let recs = label_tokens(item, mock.embeddings(&item.text).unwrap()).unwrap();
        let label = |w: &str| recs.iter().find(|r| r.token == w).unwrap().label;
        assert_eq!(label("said"), Label::Neither);
        assert_eq!(label("French"), Label::NotAtIssue);
        assert_eq!(label(&item.context.noun), Label::AtIssue);
        assert!(recs.iter().all(|r| r.char_span.1 <= region_end(item)));
        assert!(!recs.iter().any(|r| r.token == "replied"));
    }

    #[test]
    fn default_suite_token_counts() {
        let lex = default_lexicon();
        let suite = build_suite(&lex, &SuiteConfig::default()).unwrap();
        let mock = MockScorer::new(preset_rules("uniform").unwrap(), lex).unwrap();
        let recs = build_probe_dataset(&suite, &mock).unwrap();
        let (train, test) = split_by_item(&recs, 0.7, 2022).unwrap();
        assert!(
            (7650..=9350).contains(&train.len()),
            "train {}",
            train.len()
        );
        assert!((3600..=4400).contains(&test.len()), "test {}", test.len());
    }

    #[test]
    fn embeddings_capability_required() {
        let lex = default_lexicon();
        let suite = build_suite(
            &lex,
            &SuiteConfig {
                n_per_pair: 1,
                ..SuiteConfig::default()
            },
        )
        .unwrap();
        let mut rules = preset_rules("uniform").unwrap();
        rules.capabilities = Some(vec![Capability::MaskedCandidates]);
        let mock = MockScorer::new(rules, lex).unwrap();
        assert!(matches!(
            build_probe_dataset(&suite, &mock),
            Err(Error::UnsupportedCapability { .. })
        ));
    }
}
