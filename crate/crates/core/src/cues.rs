//! The linguistic experts: lexicon matching, morphology, anaphora and domain titles.
//!
//! Every function here writes to an open stage of the [`FactStore`]; the facilitator in
//! [`crate::pipeline`] decides which stage is open.

use std::ops::Range;

use crate::document::{Document, SentencePosition};
use crate::error::{PipelineError, StageError};
use crate::facts::{Annotation, CueClass, FactStore};
use crate::lexicon::{longest_matches, Analysis, LexMatch, LexiconEntry, LexiconPack, Mood, Tense};
use crate::sidecar::Sidecar;
use crate::stage::Stage;
use crate::text::{tokenize, Token};

/// How far back (in tokens) a participle looks for its auxiliary.
const AUX_WINDOW: usize = 4;

fn fail(stage: Stage, clause: usize) -> impl Fn(StageError) -> PipelineError {
    move |source| PipelineError {
        stage,
        clause: Some(clause),
        source,
    }
}

/// Index of the first token that is not a skippable lead word (`et`, `notamment`, ...).
pub fn lead_position(tokens: &[Token], pack: &LexiconPack) -> usize {
    tokens
        .iter()
        .position(|t| !pack.function_words.is_skippable_lead(&t.norm))
        .unwrap_or(tokens.len())
}

fn byte_span(tokens: &[Token], tok: Range<usize>) -> Range<usize> {
    tokens[tok.start].span.start..tokens[tok.end - 1].span.end
}

fn base_annotation(
    doc: &Document,
    clause: usize,
    tokens: &[Token],
    lead: usize,
    m: &LexMatch,
    entry: &LexiconEntry,
    stage: Stage,
) -> Annotation {
    let clause_initial = m.m.start == lead;
    let detached = clause_initial && doc.clauses[clause].position_in_sentence == SentencePosition::Initial;
    let mut ann = Annotation::new(clause, byte_span(tokens, m.m.start..m.m.end), m.cue_class, stage)
        .with_feature("position", if detached { "detached" } else { "included" })
        .with_feature("clause_initial", clause_initial.to_string());
    for (k, v) in &entry.attrs {
        ann.features.insert(k.clone(), v.clone());
    }
    ann
}

/// Posts one annotation per (longest, per-class) lexicon match in every clause.
/// Verb cues get a `head` feature locating the inflected token for morphology.
pub fn match_cues(store: &mut FactStore, doc: &Document, pack: &LexiconPack) -> Result<(), PipelineError> {
    let ctx = pack.match_context();
    for clause in &doc.clauses {
        let tokens = tokenize(&clause.text);
        let lead = lead_position(&tokens, pack);
        let matches = longest_matches(pack.cues.find_matches(&tokens, ctx, |c| c != CueClass::DomainTerm));
        for m in matches {
            let entry = &pack.cues.entries[m.entry];
            let mut ann = base_annotation(doc, clause.index, &tokens, lead, &m, entry, Stage::Cues);
            if m.cue_class.is_verb_cue() {
                let head = m
                    .m
                    .inflected
                    .first()
                    .copied()
                    .or_else(|| (m.m.start..m.m.end).find(|&i| !pack.inflections.analyses(&tokens[i].norm).is_empty()));
                if let Some(h) = head {
                    let span = &tokens[h].span;
                    ann = ann.with_feature("head", format!("{}..{}", span.start, span.end));
                }
            }
            store.post(ann).map_err(fail(Stage::Cues, clause.index))?;
        }
    }
    Ok(())
}

/// Posts AnaphoricExpr facts with `referent_count` = an integer or `all`.
pub fn detect_anaphora(store: &mut FactStore, doc: &Document, pack: &LexiconPack) -> Result<(), PipelineError> {
    let ctx = pack.match_context();
    for clause in &doc.clauses {
        let tokens = tokenize(&clause.text);
        let lead = lead_position(&tokens, pack);
        for m in longest_matches(pack.anaphora.find_matches(&tokens, ctx, |c| c == CueClass::AnaphoricExpr)) {
            let entry = &pack.anaphora.entries[m.entry];
            let count = match entry.attrs.get("referents").map(String::as_str) {
                Some("num") => match m.m.number {
                    Some(n) => n.to_string(),
                    None => continue,
                },
                Some("all") => "all".to_string(),
                Some(n) => n.to_string(),
                None => "1".to_string(),
            };
            let mut ann = base_annotation(doc, clause.index, &tokens, lead, &m, entry, Stage::Cues);
            ann.features.remove("referents");
            ann = ann.with_feature("referent_count", count);
            store.post(ann).map_err(fail(Stage::Cues, clause.index))?;
        }
    }
    Ok(())
}

/// Posts a DomainTerm fact on every heading whose text matches the domain lexicon.
pub fn tag_domain_titles(store: &mut FactStore, doc: &Document, pack: &LexiconPack) -> Result<(), PipelineError> {
    let ctx = pack.match_context();
    for (b, _) in doc.blocks.iter().enumerate().filter(|(_, b)| b.kind.is_heading()) {
        let (first, last) = doc.block_clauses(b);
        for idx in first..=last {
            let tokens = tokenize(&doc.clauses[idx].text);
            let lead = lead_position(&tokens, pack);
            for m in longest_matches(pack.domain.find_matches(&tokens, ctx, |c| c == CueClass::DomainTerm)) {
                let entry = &pack.domain.entries[m.entry];
                let ann = base_annotation(doc, idx, &tokens, lead, &m, entry, Stage::MaterialStructure);
                store.post(ann).map_err(fail(Stage::MaterialStructure, idx))?;
            }
        }
    }
    Ok(())
}

fn parse_span(s: &str) -> Option<Range<usize>> {
    let (a, b) = s.split_once("..")?;
    Some(a.parse().ok()?..b.parse().ok()?)
}

enum Reading {
    Verb { tense: Tense, mood: Mood },
    NotAVerb(String),
}

/// Tense and mood of a participle from the nearest finite auxiliary to its left.
/// `avoir` forms a past (present or past auxiliary) or a future perfect; `être` keeps
/// its own tense (passive).
fn participle_reading(tokens: &[Token], head: usize, pack: &LexiconPack) -> Option<(Tense, Mood)> {
    let from = head.saturating_sub(AUX_WINDOW);
    let mut found = None;
    for i in (from..head).rev() {
        let t = &tokens[i];
        if t.kind == crate::text::TokenKind::Punct {
            break;
        }
        let aux = pack
            .inflections
            .analyses(&t.norm)
            .iter()
            .find(|a| pack.function_words.auxiliaries.contains(&a.lemma) && a.mood.is_finite());
        if let Some(a) = aux {
            found = Some(a.clone());
        }
    }
    let a: Analysis = found?;
    let tense = match (a.lemma.as_str(), a.tense) {
        ("avoir", Tense::Future) => Tense::Future,
        ("avoir", _) => Tense::Past,
        (_, t) => t,
    };
    Some((tense, a.mood))
}

fn table_reading(tokens: &[Token], head: usize, clause_initial: bool, pack: &LexiconPack) -> Reading {
    let analyses = pack.inflections.analyses(&tokens[head].norm);
    let pick = |mood: Mood| analyses.iter().find(|a| a.mood == mood);
    if clause_initial {
        if let Some(a) = pick(Mood::Imperative) {
            return Reading::Verb { tense: a.tense, mood: a.mood };
        }
    }
    for mood in [Mood::Indicative, Mood::Conditional, Mood::Imperative, Mood::Infinitive] {
        if let Some(a) = pick(mood) {
            return Reading::Verb { tense: a.tense, mood: a.mood };
        }
    }
    if pick(Mood::Participle).is_some() {
        return match participle_reading(tokens, head, pack) {
            Some((tense, mood)) => Reading::Verb { tense, mood },
            None => Reading::NotAVerb("participle without auxiliary".into()),
        };
    }
    Reading::NotAVerb("form absent from inflection table".into())
}

/// Adds tense, mood and suppression to every verb cue. A sidecar, when given, decides
/// part of speech and morphology; otherwise the inflection table plus local context do.
pub fn apply_morphology(
    store: &mut FactStore,
    doc: &Document,
    pack: &LexiconPack,
    sidecar: Option<&Sidecar>,
) -> Result<(), PipelineError> {
    let verb_cues: Vec<Annotation> = store
        .query(0..doc.clauses.len(), None)
        .into_iter()
        .filter(|a| a.cue_class.is_verb_cue())
        .cloned()
        .collect();
    for ann in verb_cues {
        let clause = &doc.clauses[ann.clause_index];
        let err = fail(Stage::Morphology, clause.index);
        let tokens = tokenize(&clause.text);
        let head_span = ann.feature("head").and_then(parse_span);
        let head = head_span
            .as_ref()
            .and_then(|s| tokens.iter().position(|t| t.span.start == s.start));
        let lead = lead_position(&tokens, pack);

        let from_sidecar = head_span
            .as_ref()
            .and_then(|s| sidecar.and_then(|sc| sc.token_at(clause.span.start + s.start)));
        let reading = match (from_sidecar, head) {
            (Some(tok), _) if !tok.is_verb() => Reading::NotAVerb(format!("sidecar tags it {}", tok.pos)),
            (Some(tok), Some(h)) => {
                let fallback = match table_reading(&tokens, h, h == lead, pack) {
                    Reading::Verb { mood, .. } => mood,
                    Reading::NotAVerb(_) => Mood::Indicative,
                };
                Reading::Verb {
                    tense: tok.tense,
                    mood: tok.mood.unwrap_or(fallback),
                }
            }
            (Some(tok), None) => Reading::Verb {
                tense: tok.tense,
                mood: tok.mood.unwrap_or(Mood::Indicative),
            },
            (None, Some(h)) => table_reading(&tokens, h, h == lead, pack),
            (None, None) => Reading::Verb {
                tense: Tense::None,
                mood: Mood::Indicative,
            },
        };
        match reading {
            Reading::NotAVerb(reason) => store.retract(ann.id, &reason, Stage::Morphology).map_err(err)?,
            Reading::Verb { tense, mood } => {
                let suppressed = tense == Tense::Past
                    && matches!(ann.cue_class, CueClass::InjunctiveVerb | CueClass::RecommendVerb);
                let mut updated = ann.clone();
                updated.producer = Stage::Morphology;
                updated = updated
                    .with_feature("tense", tense.as_str())
                    .with_feature("mood", mood.as_str())
                    .with_feature("suppressed", suppressed.to_string());
                store.post(updated).map_err(err)?;
            }
        }
    }
    Ok(())
}
