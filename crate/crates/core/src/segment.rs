//! Typed basic segments: clause runs classified as condition, action or explanation.

use std::collections::{BTreeMap, BTreeSet};

use crate::document::{BlockKind, Document, ParagraphPosition, SentencePosition};
use crate::error::FormatError;
use crate::facts::{Annotation, AnnotationId, CueClass, FactStore};
use crate::rules::{RuleTable, SegmentKind};
use crate::text::clean_segment_text;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSegment {
    pub kind: SegmentKind,
    pub first: usize,
    pub last: usize,
    pub trigger: Vec<AnnotationId>,
    pub detached: bool,
}

impl BasicSegment {
    pub fn clauses(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn text(&self, doc: &Document) -> String {
        clean_segment_text(doc.span_text(self.first, self.last))
    }
}

fn is_lead(a: &Annotation) -> bool {
    a.flag("clause_initial")
}

fn counts_as_verb(a: &Annotation) -> bool {
    a.cue_class.is_verb_cue() && !a.is_suppressed()
}

/// Feature set of one clause, shared by the classifier and the trainer.
///
/// `cue:X` for every live cue (suppressed verb cues excluded), `lead:X` for cues at the
/// clause's lead position, `tense:`/`mood:` from unsuppressed verb cues, sentence and
/// paragraph position, and the block kind.
pub fn clause_features(doc: &Document, store: &FactStore, clause: usize) -> BTreeSet<String> {
    let c = &doc.clauses[clause];
    let mut f = BTreeSet::new();
    for a in store.query_clause(clause) {
        if a.cue_class.is_verb_cue() && a.is_suppressed() {
            continue;
        }
        f.insert(format!("cue:{}", a.cue_class));
        if is_lead(a) {
            f.insert(format!("lead:{}", a.cue_class));
        }
        if a.cue_class.is_verb_cue() {
            if let Some(t) = a.feature("tense") {
                f.insert(format!("tense:{t}"));
            }
            if let Some(m) = a.feature("mood") {
                f.insert(format!("mood:{m}"));
            }
        }
    }
    if c.position_in_sentence == SentencePosition::Initial {
        f.insert("sent:initial".into());
    }
    if c.position_in_paragraph == ParagraphPosition::Initial {
        f.insert("para:initial".into());
    }
    let block = match doc.blocks[c.block].kind {
        BlockKind::Heading { .. } => "heading",
        BlockKind::Paragraph => "paragraph",
        BlockKind::EnumHeader => "enum-header",
        BlockKind::EnumItem { .. } => "enum-item",
    };
    f.insert(format!("block:{block}"));
    f
}

fn required(kind: SegmentKind) -> fn(&Annotation) -> bool {
    match kind {
        SegmentKind::Condition => |a| a.cue_class.is_condition_opener(),
        SegmentKind::Action => counts_as_verb,
        SegmentKind::Explanation => |a| a.cue_class == CueClass::JustificationMarker,
        SegmentKind::Untyped => |_| false,
    }
}

/// Scores one clause against the rule table and returns its kind and triggers.
fn type_clause(doc: &Document, store: &FactStore, table: &RuleTable, clause: usize) -> (SegmentKind, Vec<AnnotationId>) {
    let feats = clause_features(doc, store, clause);
    let mut scores: BTreeMap<SegmentKind, f64> = BTreeMap::new();
    for r in table.active().filter(|r| r.fires_on(&feats)) {
        *scores.entry(r.kind).or_default() += r.score;
    }
    let anns = store.query_clause(clause);
    let cond = scores.get(&SegmentKind::Condition).copied().unwrap_or(0.0);
    let act = scores.get(&SegmentKind::Action).copied().unwrap_or(0.0);
    let kind = if cond > 0.0 && act > 0.0 {
        let lead_connector = anns.iter().any(|a| a.cue_class.is_condition_opener() && is_lead(a));
        if lead_connector {
            SegmentKind::Condition
        } else {
            SegmentKind::Action
        }
    } else {
        let mut best = (SegmentKind::Untyped, 0.0);
        for (k, s) in &scores {
            if *s > best.1 {
                best = (*k, *s);
            }
        }
        best.0
    };
    let need = required(kind);
    let trigger: Vec<AnnotationId> = anns.iter().filter(|a| need(a)).map(|a| a.id).collect();
    if trigger.is_empty() {
        (SegmentKind::Untyped, Vec::new())
    } else {
        (kind, trigger)
    }
}

/// Partitions every clause into segments, sentence by sentence.
pub fn classify_segments(doc: &Document, store: &FactStore, table: &RuleTable) -> Vec<BasicSegment> {
    let mut out = Vec::new();
    for s in &doc.sentences {
        let first = s.first_clause;
        // Headings are material structure: they may frame what follows but never act.
        let heading = doc.blocks[s.block].kind.is_heading();
        let lead_anns: Vec<&Annotation> = store.query_clause(first).into_iter().filter(|a| is_lead(a)).collect();

        let justification = lead_anns.iter().find(|a| a.cue_class == CueClass::JustificationMarker);
        let infinitive_order = lead_anns.iter().find(|a| {
            matches!(a.cue_class, CueClass::InjunctiveVerb | CueClass::RecommendVerb)
                && a.feature("mood") == Some("infinitive")
                && !a.is_suppressed()
        });
        if let Some(a) = justification.or(infinitive_order).filter(|_| !heading) {
            out.push(BasicSegment {
                kind: if a.cue_class == CueClass::JustificationMarker {
                    SegmentKind::Explanation
                } else {
                    SegmentKind::Action
                },
                first,
                last: s.last_clause,
                trigger: vec![a.id],
                detached: true,
            });
            continue;
        }

        let start = out.len();
        for clause in s.clauses() {
            let (mut kind, mut trigger) = type_clause(doc, store, table, clause);
            if heading && kind != SegmentKind::Condition {
                (kind, trigger) = (SegmentKind::Untyped, Vec::new());
            }
            let opens_discourse = store
                .query_clause(clause)
                .iter()
                .any(|a| is_lead(a) && a.cue_class.is_discourse_connector());
            let detached = clause == first;
            if let Some(prev) = out[start..].last_mut() {
                let absorbs = kind == SegmentKind::Untyped
                    && matches!(prev.kind, SegmentKind::Condition | SegmentKind::Action)
                    && !opens_discourse;
                let extends_untyped = kind == SegmentKind::Untyped && prev.kind == SegmentKind::Untyped;
                if absorbs || extends_untyped {
                    prev.last = clause;
                    continue;
                }
            }
            out.push(BasicSegment {
                kind,
                first: clause,
                last: clause,
                trigger,
                detached,
            });
        }
    }
    out
}

/// Debug dump: `first<TAB>last<TAB>kind<TAB>detached<TAB>trigger ids<TAB>text`.
pub fn dump_segments(doc: &Document, segments: &[BasicSegment]) -> String {
    let mut out = String::new();
    for s in segments {
        let ids: Vec<String> = s.trigger.iter().map(usize::to_string).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            s.first,
            s.last,
            s.kind,
            s.detached,
            ids.join(","),
            s.text(doc)
        ));
    }
    out
}

/// Reads a segment dump back (text column is ignored).
pub fn parse_segment_dump(text: &str) -> Result<Vec<BasicSegment>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| FormatError::new("segment dump", n + 1, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(err("expected 6 columns"));
        }
        let trigger = cols[4]
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| err("bad trigger id")))
            .collect::<Result<_, _>>()?;
        out.push(BasicSegment {
            first: cols[0].parse().map_err(|_| err("bad first clause"))?,
            last: cols[1].parse().map_err(|_| err("bad last clause"))?,
            kind: cols[2].parse().map_err(|m: String| err(&m))?,
            detached: cols[3].parse().map_err(|_| err("bad detached flag"))?,
            trigger,
        });
    }
    Ok(out)
}
