// SPDX-License-Identifier: Apache-2.0

//! Deterministic generation of two-turn dialogue stimuli.
//!
//! A context sentence joins two verb phrases whose auxiliaries differ, either
//! as an appositive relative clause plus main clause (`arc`) or as two
//! conjuncts (`conjunction`). Responses strand one auxiliary after a header:
//! "No, he did not." / "Wait no, he does not.".
//!
//! Every item carries character spans (Unicode scalar offsets) covering the
//! text that precedes the response content, labelled at-issue, not-at-issue
//! or neither.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::{index, IndexedRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Auxiliary, Lexicon, VerbPhraseEntry};
use crate::SCHEMA_VERSION;

/// Placeholder occupying the response auxiliary slot in masked renderings.
pub const MASK_MARKER: &str = "[MASK]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Arc,
    Conjunction,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Arc => "arc",
            Mode::Conjunction => "conjunction",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Response opening: "No" rejects, "Wait no" interrupts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Header {
    Reject,
    Wait,
}

impl Header {
    pub const ALL: [Header; 2] = [Header::Reject, Header::Wait];

    pub fn as_str(self) -> &'static str {
        match self {
            Header::Reject => "reject",
            Header::Wait => "wait",
        }
    }

    pub fn surface(self) -> &'static str {
        match self {
            Header::Reject => "No",
            Header::Wait => "Wait no",
        }
    }
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which context verb phrase the response auxiliary picks out.
///
/// Arc items use `main`/`embedded`; conjunction items use `recent` (second
/// conjunct) and `distant` (first conjunct).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Main,
    Embedded,
    Recent,
    Distant,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Main => "main",
            Target::Embedded => "embedded",
            Target::Recent => "recent",
            Target::Distant => "distant",
        }
    }

    /// The target naming the second verb phrase in `mode`.
    pub fn second(mode: Mode) -> Target {
        match mode {
            Mode::Arc => Target::Main,
            Mode::Conjunction => Target::Recent,
        }
    }

    /// The target naming the first verb phrase in `mode`.
    pub fn first(mode: Mode) -> Target {
        match mode {
            Mode::Arc => Target::Embedded,
            Mode::Conjunction => Target::Distant,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// `Marco said, "…," and Ellie replied, "…"`
    Novel,
    /// `A: "…" B: "…"`
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    AtIssue,
    NotAtIssue,
    Neither,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::AtIssue, Label::NotAtIssue, Label::Neither];

    pub fn index(self) -> usize {
        match self {
            Label::AtIssue => 0,
            Label::NotAtIssue => 1,
            Label::Neither => 2,
        }
    }
}

/// Half-open character range `[start, end)` with a content label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VerbPair {
    /// Elides the first verb phrase (inside the ARC / first conjunct).
    pub embedded: Auxiliary,
    /// Elides the second verb phrase (main clause / second conjunct).
    pub main: Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub mode: Mode,
    pub noun: String,
    pub vp1: VerbPhraseEntry,
    pub vp2: VerbPhraseEntry,
    pub pair: VerbPair,
}

impl ContextSpec {
    /// The auxiliary targeting `target`'s verb phrase.
    pub fn aux_for(&self, target: Target) -> &Auxiliary {
        match target {
            Target::Main | Target::Recent => &self.pair.main,
            Target::Embedded | Target::Distant => &self.pair.embedded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    /// Fully rendered sequence, scored as a whole.
    Sequence,
    /// Response auxiliary replaced by [`MASK_MARKER`] in `masked_text`.
    Masked,
}

/// One scoring instance. Serialized as one line of a suite file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusItem {
    pub schema_version: u32,
    pub id: String,
    pub context_id: String,
    pub kind: InstanceKind,
    #[serde(flatten)]
    pub context: ContextSpec,
    pub header: Header,
    pub pronoun: String,
    pub response_aux: Auxiliary,
    pub target: Target,
    pub speaker_a: String,
    pub speaker_b: String,
    pub format: Format,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_text: Option<String>,
    pub spans: Vec<Span>,
}

impl StimulusItem {
    pub fn mode(&self) -> Mode {
        self.context.mode
    }

    pub fn pair(&self) -> &VerbPair {
        &self.context.pair
    }

    /// Character offset where the response content starts (end of the labelled region).
    pub fn response_start(&self) -> usize {
        self.spans.last().map_or(0, |s| s.end)
    }

    /// Label of the span containing character offset `pos`, if any.
    pub fn label_at(&self, pos: usize) -> Option<Label> {
        self.spans
            .iter()
            .find(|s| s.start <= pos && pos < s.end)
            .map(|s| s.label)
    }
}

/// All ordered pairs of distinct auxiliaries, lexicographic by (embedded, main).
pub fn ordered_pairs(auxes: &[Auxiliary]) -> Result<Vec<VerbPair>> {
    let mut sorted = auxes.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(Error::TooFewAuxiliaries {
            found: sorted.len(),
        });
    }
    let mut pairs = Vec::with_capacity(sorted.len() * (sorted.len() - 1));
    for a in &sorted {
        for b in &sorted {
            if a != b {
                pairs.push(VerbPair {
                    embedded: a.clone(),
                    main: b.clone(),
                });
            }
        }
    }
    Ok(pairs)
}

/// `n_per_pair` contexts for every ordered pair, in pair order.
///
/// Verb phrases are drawn without replacement within a pair. The draws do not
/// depend on `mode`, so an arc suite and a conjunction suite built from the
/// same seed share nouns and verb phrases.
pub fn generate_contexts(
    lexicon: &Lexicon,
    n_per_pair: usize,
    seed: u64,
    mode: Mode,
) -> Result<Vec<ContextSpec>> {
    if n_per_pair == 0 {
        return Err(Error::Config("n_per_pair must be ≥ 1".into()));
    }
    let pairs = ordered_pairs(lexicon.auxiliaries())?;
    for aux in lexicon.auxiliaries() {
        let have = lexicon.verb_phrases(aux).len();
        if have < n_per_pair {
            return Err(Error::InsufficientInventory {
                aux: aux.to_string(),
                have,
                need: n_per_pair,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(pairs.len() * n_per_pair);
    for pair in pairs {
        let firsts = lexicon.verb_phrases(&pair.embedded);
        let seconds = lexicon.verb_phrases(&pair.main);
        let i1 = index::sample(&mut rng, firsts.len(), n_per_pair).into_vec();
        let i2 = index::sample(&mut rng, seconds.len(), n_per_pair).into_vec();
        for (a, b) in i1.into_iter().zip(i2) {
            let noun = lexicon
                .occupations()
                .choose(&mut rng)
                .expect("lexicon has occupations")
                .clone();
            out.push(ContextSpec {
                mode,
                noun,
                vp1: firsts[a].clone(),
                vp2: seconds[b].clone(),
                pair: pair.clone(),
            });
        }
    }
    Ok(out)
}

/// The context sentence as a standalone sentence with final period.
pub fn render_context(spec: &ContextSpec) -> String {
    match spec.mode {
        Mode::Arc => format!(
            "The {}, who {}, {}.",
            spec.noun, spec.vp1.text, spec.vp2.text
        ),
        Mode::Conjunction => format!("The {} {} and {}.", spec.noun, spec.vp1.text, spec.vp2.text),
    }
}

pub fn render_response(header: Header, pronoun: &str, aux: &Auxiliary) -> String {
    format!("{}, {pronoun} {aux} not.", header.surface())
}

pub fn render_masked_response(header: Header, pronoun: &str) -> String {
    format!("{}, {pronoun} {MASK_MARKER} not.", header.surface())
}

/// Appends text segments while recording labelled spans in character offsets.
struct SpanWriter {
    text: String,
    chars: usize,
    spans: Vec<Span>,
}

impl SpanWriter {
    fn new() -> Self {
        SpanWriter {
            text: String::new(),
            chars: 0,
            spans: Vec::new(),
        }
    }

    fn push(&mut self, seg: &str, label: Label) {
        let n = seg.chars().count();
        if n == 0 {
            return;
        }
        match self.spans.last_mut() {
            Some(last) if last.label == label && last.end == self.chars => last.end += n,
            _ => self.spans.push(Span {
                start: self.chars,
                end: self.chars + n,
                label,
            }),
        }
        self.text.push_str(seg);
        self.chars += n;
    }

    fn push_unlabelled(&mut self, seg: &str) {
        self.text.push_str(seg);
        self.chars += seg.chars().count();
    }
}

fn write_context(w: &mut SpanWriter, spec: &ContextSpec) {
    w.push(&format!("The {}", spec.noun), Label::AtIssue);
    match spec.mode {
        Mode::Arc => {
            w.push(", ", Label::Neither);
            w.push(&format!("who {}", spec.vp1.text), Label::NotAtIssue);
            w.push(", ", Label::Neither);
            w.push(&spec.vp2.text, Label::AtIssue);
        }
        Mode::Conjunction => {
            w.push(" ", Label::Neither);
            w.push(&spec.vp1.text, Label::AtIssue);
            w.push(" and ", Label::Neither);
            w.push(&spec.vp2.text, Label::AtIssue);
        }
    }
}

fn render_dialogue(
    spec: &ContextSpec,
    names: (&str, &str),
    format: Format,
    response: &str,
) -> (String, Vec<Span>) {
    let mut w = SpanWriter::new();
    match format {
        Format::Novel => {
            w.push(&format!("{} said, \"", names.0), Label::Neither);
            write_context(&mut w, spec);
            w.push(&format!(",\" and {} replied, \"", names.1), Label::Neither);
        }
        Format::Simple => {
            w.push("A: \"", Label::Neither);
            write_context(&mut w, spec);
            w.push(".\" B: \"", Label::Neither);
        }
    }
    w.push_unlabelled(response);
    w.push_unlabelled("\"");
    (w.text, w.spans)
}

/// Renders one fully specified dialogue with its span labels.
///
/// Returns `Config` error when the two speaker names coincide.
#[allow(clippy::too_many_arguments)]
pub fn render_item(
    id: impl Into<String>,
    context_id: impl Into<String>,
    spec: &ContextSpec,
    header: Header,
    pronoun: &str,
    aux: &Auxiliary,
    names: (&str, &str),
    format: Format,
    kind: InstanceKind,
) -> Result<StimulusItem> {
    if names.0 == names.1 {
        return Err(Error::Config(format!(
            "speaker names must differ, got {:?} twice",
            names.0
        )));
    }
    let target = if aux == &spec.pair.main {
        Target::second(spec.mode)
    } else if aux == &spec.pair.embedded {
        Target::first(spec.mode)
    } else {
        return Err(Error::Config(format!(
            "response auxiliary `{aux}` targets neither verb phrase"
        )));
    };
    let (text, spans) =
        render_dialogue(spec, names, format, &render_response(header, pronoun, aux));
    let masked_text = match kind {
        InstanceKind::Masked => Some(
            render_dialogue(
                spec,
                names,
                format,
                &render_masked_response(header, pronoun),
            )
            .0,
        ),
        InstanceKind::Sequence => None,
    };
    Ok(StimulusItem {
        schema_version: SCHEMA_VERSION,
        id: id.into(),
        context_id: context_id.into(),
        kind,
        context: spec.clone(),
        header,
        pronoun: pronoun.to_string(),
        response_aux: aux.clone(),
        target,
        speaker_a: names.0.to_string(),
        speaker_b: names.1.to_string(),
        format,
        text,
        masked_text,
        spans,
    })
}

/// Generation settings for a full suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub n_per_pair: usize,
    pub modes: Vec<Mode>,
    pub format: Format,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 2022,
            n_per_pair: 10,
            modes: vec![Mode::Arc, Mode::Conjunction],
            format: Format::Novel,
        }
    }
}

/// Generated instances for one or more modes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Suite {
    pub items: Vec<StimulusItem>,
}

struct Presentation {
    speaker_a: String,
    speaker_b: String,
    pronoun: String,
}

/// Builds every scoring instance the experiments need.
///
/// Per arc context: four fully rendered sequences ({reject, wait} × {main,
/// embedded}) for the header test and two masked instances ({reject, wait}).
/// Per conjunction context: two masked instances. Speakers and pronoun are
/// drawn once per context and shared by all its instances and modes.
pub fn build_suite(lexicon: &Lexicon, config: &SuiteConfig) -> Result<Suite> {
    if config.modes.is_empty() {
        return Err(Error::Config("at least one mode required".into()));
    }
    let mut modes = config.modes.clone();
    modes.sort();
    modes.dedup();

    let base = generate_contexts(lexicon, config.n_per_pair, config.seed, Mode::Arc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let presentations: Vec<Presentation> = base
        .iter()
        .map(|_| {
            let picks = index::sample(&mut rng, lexicon.names().len(), 2).into_vec();
            Presentation {
                speaker_a: lexicon.names()[picks[0]].clone(),
                speaker_b: lexicon.names()[picks[1]].clone(),
                pronoun: lexicon
                    .pronouns()
                    .choose(&mut rng)
                    .expect("lexicon has pronouns")
                    .clone(),
            }
        })
        .collect();

    let mut items = Vec::new();
    for mode in modes {
        for (i, (ctx, pres)) in base.iter().zip(&presentations).enumerate() {
            let spec = ContextSpec {
                mode,
                ..ctx.clone()
            };
            let context_id = format!(
                "{mode}-{}-{}-{}",
                spec.pair.embedded,
                spec.pair.main,
                i % config.n_per_pair
            );
            let names = (pres.speaker_a.as_str(), pres.speaker_b.as_str());
            if mode == Mode::Arc {
                for header in Header::ALL {
                    for target in [Target::Main, Target::Embedded] {
                        items.push(render_item(
                            format!("{context_id}-{header}-{target}"),
                            &context_id,
                            &spec,
                            header,
                            &pres.pronoun,
                            spec.aux_for(target),
                            names,
                            config.format,
                            InstanceKind::Sequence,
                        )?);
                    }
                }
            }
            for header in Header::ALL {
                items.push(render_item(
                    format!("{context_id}-{header}-masked"),
                    &context_id,
                    &spec,
                    header,
                    &pres.pronoun,
                    &spec.pair.main,
                    names,
                    config.format,
                    InstanceKind::Masked,
                )?);
            }
        }
    }
    Ok(Suite { items })
}

impl Suite {
    pub fn iter(&self) -> impl Iterator<Item = &StimulusItem> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn masked(&self, mode: Mode) -> impl Iterator<Item = &StimulusItem> {
        self.items
            .iter()
            .filter(move |i| i.kind == InstanceKind::Masked && i.mode() == mode)
    }

    pub fn sequences(&self) -> impl Iterator<Item = &StimulusItem> {
        self.items
            .iter()
            .filter(|i| i.kind == InstanceKind::Sequence)
    }

    /// Distinct context ids in first-seen order.
    pub fn context_ids(&self, mode: Mode) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.items
            .iter()
            .filter(|i| i.mode() == mode && seen.insert(i.context_id.as_str()))
            .map(|i| i.context_id.as_str())
            .collect()
    }

    /// Splits into one suite per mode present.
    pub fn by_mode(&self) -> Vec<(Mode, Suite)> {
        let mut out: Vec<(Mode, Suite)> = Vec::new();
        for item in &self.items {
            match out.iter_mut().find(|(m, _)| *m == item.mode()) {
                Some((_, s)) => s.items.push(item.clone()),
                None => out.push((
                    item.mode(),
                    Suite {
                        items: vec![item.clone()],
                    },
                )),
            }
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&serde_json::to_string(item).expect("item serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Suite> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut items = Vec::new();
        for (i, line) in src.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let item: StimulusItem = serde_json::from_str(line).map_err(|e| Error::Record {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if item.schema_version != SCHEMA_VERSION {
                return Err(Error::Schema(format!(
                    "{}:{}: schema_version {} (expected {SCHEMA_VERSION})",
                    path.display(),
                    i + 1,
                    item.schema_version
                )));
            }
            items.push(item);
        }
        Ok(Suite { items })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::default_lexicon;

    fn aux(s: &str) -> Auxiliary {
        Auxiliary::new(s)
    }

    fn nurse(mode: Mode) -> ContextSpec {
        ContextSpec {
            mode,
            noun: "nurse".into(),
            vp1: VerbPhraseEntry {
                text: "has interest in French cuisine".into(),
                aux: aux("does"),
            },
            vp2: VerbPhraseEntry {
                text: "adopted a rescue dog".into(),
                aux: aux("did"),
            },
            pair: VerbPair {
                embedded: aux("does"),
                main: aux("did"),
            },
        }
    }

    fn slice(text: &str, s: &Span) -> String {
        text.chars().skip(s.start).take(s.end - s.start).collect()
    }

    #[test]
    fn pairs_for_two() {
        let p = ordered_pairs(&[aux("does"), aux("did")]).unwrap();
        assert_eq!(
            p,
            vec![
                VerbPair {
                    embedded: aux("did"),
                    main: aux("does")
                },
                VerbPair {
                    embedded: aux("does"),
                    main: aux("did")
                },
            ]
        );
        assert!(ordered_pairs(&[aux("did")]).is_err());
    }

    #[test]
    fn pairs_for_six_are_balanced() {
        let lex = default_lexicon();
        let pairs = ordered_pairs(lex.auxiliaries()).unwrap();
        assert_eq!(pairs.len(), 30);
        // brute force over all 36 (a, b) combinations
        for a in lex.auxiliaries() {
            let first = pairs.iter().filter(|p| &p.embedded == a).count();
            let second = pairs.iter().filter(|p| &p.main == a).count();
            assert_eq!((first, second), (5, 5));
        }
        let mut sorted = pairs.clone();
        sorted.sort();
        assert_eq!(sorted, pairs);
    }

    #[test]
    fn context_rendering() {
        assert_eq!(
            render_context(&nurse(Mode::Arc)),
            "The nurse, who has interest in French cuisine, adopted a rescue dog."
        );
        assert_eq!(
            render_context(&nurse(Mode::Conjunction)),
            "The nurse has interest in French cuisine and adopted a rescue dog."
        );
    }

    #[test]
    fn response_rendering() {
        assert_eq!(
            render_response(Header::Reject, "he", &aux("did")),
            "No, he did not."
        );
        assert_eq!(
            render_response(Header::Wait, "he", &aux("does")),
            "Wait no, he does not."
        );
        assert_eq!(
            render_response(Header::Reject, "she", &aux("does")),
            "No, she does not."
        );
        assert_eq!(
            render_masked_response(Header::Wait, "she"),
            "Wait no, she [MASK] not."
        );
    }

    #[test]
    fn running_example_item() {
        let item = render_item(
            "x",
            "c",
            &nurse(Mode::Arc),
            Header::Reject,
            "he",
            &aux("did"),
            ("Marco", "Ellie"),
            Format::Novel,
            InstanceKind::Masked,
        )
        .unwrap();
        assert_eq!(
            item.text,
            "Marco said, \"The nurse, who has interest in French cuisine, adopted a rescue dog,\" and Ellie replied, \"No, he did not.\""
        );
        assert_eq!(
            item.masked_text.as_deref(),
            Some("Marco said, \"The nurse, who has interest in French cuisine, adopted a rescue dog,\" and Ellie replied, \"No, he [MASK] not.\"")
        );
        assert_eq!(item.target, Target::Main);

        let not_at_issue: Vec<String> = item
            .spans
            .iter()
            .filter(|s| s.label == Label::NotAtIssue)
            .map(|s| slice(&item.text, s))
            .collect();
        assert_eq!(not_at_issue, ["who has interest in French cuisine"]);
        let at_issue: Vec<String> = item
            .spans
            .iter()
            .filter(|s| s.label == Label::AtIssue)
            .map(|s| slice(&item.text, s))
            .collect();
        assert_eq!(at_issue, ["The nurse", "adopted a rescue dog"]);
        assert_eq!(
            slice(
                &item.text,
                &Span {
                    start: item.response_start(),
                    end: item.response_start() + 2,
                    label: Label::Neither
                }
            ),
            "No"
        );
    }

    #[test]
    fn simple_format_and_conjunction_spans() {
        let item = render_item(
            "x",
            "c",
            &nurse(Mode::Conjunction),
            Header::Wait,
            "she",
            &aux("does"),
            ("Marco", "Ellie"),
            Format::Simple,
            InstanceKind::Sequence,
        )
        .unwrap();
        assert_eq!(
            item.text,
            "A: \"The nurse has interest in French cuisine and adopted a rescue dog.\" B: \"Wait no, she does not.\""
        );
        assert_eq!(item.target, Target::Distant);
        assert!(item.spans.iter().all(|s| s.label != Label::NotAtIssue));
        let vp_spans: Vec<String> = item
            .spans
            .iter()
            .filter(|s| s.label == Label::AtIssue)
            .map(|s| slice(&item.text, s))
            .collect();
        assert_eq!(
            vp_spans,
            [
                "The nurse",
                "has interest in French cuisine",
                "adopted a rescue dog"
            ]
        );
    }

    #[test]
    fn same_speaker_rejected() {
        let err = render_item(
            "x",
            "c",
            &nurse(Mode::Arc),
            Header::Reject,
            "he",
            &aux("did"),
            ("Marco", "Marco"),
            Format::Novel,
            InstanceKind::Sequence,
        );
        assert!(err.is_err());
    }

    #[test]
    fn contexts_counts_and_determinism() {
        let lex = default_lexicon();
        let a = generate_contexts(&lex, 10, 7, Mode::Arc).unwrap();
        assert_eq!(a.len(), 300);
        let b = generate_contexts(&lex, 10, 7, Mode::Arc).unwrap();
        assert_eq!(a, b);
        assert_eq!(generate_contexts(&lex, 1, 7, Mode::Arc).unwrap().len(), 30);
        let err = generate_contexts(&lex, 15, 7, Mode::Arc).unwrap_err();
        assert!(matches!(err, Error::InsufficientInventory { need: 15, .. }));
        for c in &a {
            assert_eq!(c.vp1.aux, c.pair.embedded);
            assert_eq!(c.vp2.aux, c.pair.main);
        }
        // no repeated vp within a pair's block
        for block in a.chunks(10) {
            let mut v1: Vec<_> = block.iter().map(|c| &c.vp1.text).collect();
            v1.sort();
            v1.dedup();
            assert_eq!(v1.len(), 10);
        }
    }

    #[test]
    fn arc_has_two_more_commas_than_conjunction() {
        let lex = default_lexicon();
        for c in generate_contexts(&lex, 10, 3, Mode::Arc).unwrap() {
            let conj = ContextSpec {
                mode: Mode::Conjunction,
                ..c.clone()
            };
            let count = |s: String| s.matches(',').count();
            assert_eq!(count(render_context(&c)), count(render_context(&conj)) + 2);
        }
    }
}
