//! The blackboard: a clause-indexed store of cue annotations written by expert stages.
//!
//! Stages never delete each other's facts. A later stage overrides an earlier one by
//! posting on the same clause span (later stage wins in the resolved view) or by
//! posting a retraction. Revision notes record boundary moves so the default analysis
//! stays inspectable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{FormatError, StageError};
use crate::stage::Stage;

/// Closed set of cue classes a linguistic expert can post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CueClass {
    ConditionConnector,
    LocationConnector,
    TemporalConnector,
    InjunctiveVerb,
    DeonticModal,
    RecommendVerb,
    AnaphoricExpr,
    ContrastMarker,
    JustificationMarker,
    DomainTerm,
    NegationMarker,
}

impl CueClass {
    pub const ALL: [CueClass; 11] = [
        CueClass::ConditionConnector,
        CueClass::LocationConnector,
        CueClass::TemporalConnector,
        CueClass::InjunctiveVerb,
        CueClass::DeonticModal,
        CueClass::RecommendVerb,
        CueClass::AnaphoricExpr,
        CueClass::ContrastMarker,
        CueClass::JustificationMarker,
        CueClass::DomainTerm,
        CueClass::NegationMarker,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CueClass::ConditionConnector => "ConditionConnector",
            CueClass::LocationConnector => "LocationConnector",
            CueClass::TemporalConnector => "TemporalConnector",
            CueClass::InjunctiveVerb => "InjunctiveVerb",
            CueClass::DeonticModal => "DeonticModal",
            CueClass::RecommendVerb => "RecommendVerb",
            CueClass::AnaphoricExpr => "AnaphoricExpr",
            CueClass::ContrastMarker => "ContrastMarker",
            CueClass::JustificationMarker => "JustificationMarker",
            CueClass::DomainTerm => "DomainTerm",
            CueClass::NegationMarker => "NegationMarker",
        }
    }

    /// Connectors that open a condition frame.
    pub fn is_condition_opener(self) -> bool {
        matches!(
            self,
            CueClass::ConditionConnector
                | CueClass::LocationConnector
                | CueClass::TemporalConnector
                | CueClass::DomainTerm
        )
    }

    /// Verb cues that can make a clause a recommendation.
    pub fn is_verb_cue(self) -> bool {
        matches!(
            self,
            CueClass::InjunctiveVerb | CueClass::DeonticModal | CueClass::RecommendVerb
        )
    }

    /// Discourse connectors that delimit clauses.
    pub fn is_discourse_connector(self) -> bool {
        matches!(
            self,
            CueClass::ConditionConnector
                | CueClass::LocationConnector
                | CueClass::TemporalConnector
                | CueClass::AnaphoricExpr
                | CueClass::ContrastMarker
                | CueClass::JustificationMarker
        )
    }
}

impl fmt::Display for CueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CueClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CueClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown cue class `{s}`"))
    }
}

pub type AnnotationId = usize;

/// A cue fact anchored to a byte span inside one clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub id: AnnotationId,
    pub clause_index: usize,
    /// Byte offsets relative to the clause start.
    pub span: Range<usize>,
    pub cue_class: CueClass,
    pub features: BTreeMap<String, String>,
    pub producer: Stage,
}

impl Annotation {
    pub fn new(clause_index: usize, span: Range<usize>, cue_class: CueClass, producer: Stage) -> Self {
        Annotation {
            id: 0,
            clause_index,
            span,
            cue_class,
            features: BTreeMap::new(),
            producer,
        }
    }

    pub fn with_feature(mut self, key: &str, value: impl Into<String>) -> Self {
        self.features.insert(key.to_string(), value.into());
        self
    }

    pub fn feature(&self, key: &str) -> Option<&str> {
        self.features.get(key).map(String::as_str)
    }

    pub fn flag(&self, key: &str) -> bool {
        self.feature(key) == Some("true")
    }

    /// True when morphology marked this verb cue as having lost its injunctive force.
    pub fn is_suppressed(&self) -> bool {
        self.flag("suppressed")
    }

    fn identity(&self) -> (usize, usize, usize, CueClass, Stage) {
        (self.clause_index, self.span.start, self.span.end, self.cue_class, self.producer)
    }
}

/// Non-cue facts: retractions, revision boundary moves and warnings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Note {
    Retract {
        target: AnnotationId,
        reason: String,
        producer: Stage,
    },
    FrameBoundary {
        frame: usize,
        cue: AnnotationId,
        action: String,
        from: (usize, usize),
        to: String,
        producer: Stage,
    },
    Warning {
        clause_index: Option<usize>,
        message: String,
        producer: Stage,
    },
}

impl Note {
    pub fn producer(&self) -> Stage {
        match self {
            Note::Retract { producer, .. }
            | Note::FrameBoundary { producer, .. }
            | Note::Warning { producer, .. } => *producer,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FactStore {
    annotations: Vec<Annotation>,
    by_clause: BTreeMap<usize, Vec<usize>>,
    by_class: BTreeMap<CueClass, Vec<usize>>,
    notes: Vec<Note>,
    retracted: BTreeSet<AnnotationId>,
    stage_log: Vec<Stage>,
    current: Option<Stage>,
}

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens `stage` for writing. A stage may run at most once per store.
    pub fn begin_stage(&mut self, stage: Stage) -> Result<(), StageError> {
        if let Some(open) = self.current {
            return Err(StageError::StillOpen(open));
        }
        if self.stage_log.contains(&stage) {
            return Err(StageError::AlreadyRun(stage));
        }
        self.current = Some(stage);
        Ok(())
    }

    pub fn end_stage(&mut self) -> Result<Stage, StageError> {
        let stage = self.current.take().ok_or(StageError::NotScheduled(None))?;
        self.stage_log.push(stage);
        Ok(stage)
    }

    pub fn current_stage(&self) -> Option<Stage> {
        self.current
    }

    pub fn stage_log(&self) -> &[Stage] {
        &self.stage_log
    }

    fn check_producer(&self, producer: Stage) -> Result<(), StageError> {
        if self.current != Some(producer) {
            return Err(StageError::NotScheduled(Some(producer)));
        }
        Ok(())
    }

    /// Adds a cue fact. Posting the same (clause, span, class, producer) twice is a
    /// no-op that returns the existing id.
    pub fn post(&mut self, mut ann: Annotation) -> Result<AnnotationId, StageError> {
        self.check_producer(ann.producer)?;
        if let Some(existing) = self.by_clause.get(&ann.clause_index).and_then(|ids| {
            ids.iter()
                .map(|&i| &self.annotations[i])
                .find(|a| a.identity() == ann.identity())
        }) {
            return Ok(existing.id);
        }
        let id = self.annotations.len();
        ann.id = id;
        self.by_clause.entry(ann.clause_index).or_default().push(id);
        self.by_class.entry(ann.cue_class).or_default().push(id);
        self.annotations.push(ann);
        Ok(id)
    }

    /// Hides `target` from the resolved view without deleting it.
    pub fn retract(&mut self, target: AnnotationId, reason: &str, producer: Stage) -> Result<(), StageError> {
        self.check_producer(producer)?;
        if target >= self.annotations.len() {
            return Err(StageError::UnknownAnnotation(target));
        }
        if self.retracted.insert(target) {
            self.notes.push(Note::Retract {
                target,
                reason: reason.to_string(),
                producer,
            });
        }
        Ok(())
    }

    pub fn note(&mut self, note: Note) -> Result<(), StageError> {
        self.check_producer(note.producer())?;
        self.notes.push(note);
        Ok(())
    }

    pub fn notes(&self) -> &[Note] {
        &self.notes
    }

    pub fn get(&self, id: AnnotationId) -> Option<&Annotation> {
        self.annotations.get(id)
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    /// Every posted annotation, including overridden and retracted ones.
    pub fn all(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn is_retracted(&self, id: AnnotationId) -> bool {
        self.retracted.contains(&id)
    }

    /// Whether `ann` is visible in the resolved view: not retracted, and no later
    /// stage posted on exactly the same clause span.
    pub fn is_live(&self, ann: &Annotation) -> bool {
        if self.retracted.contains(&ann.id) {
            return false;
        }
        let Some(ids) = self.by_clause.get(&ann.clause_index) else {
            return true;
        };
        !ids.iter().map(|&i| &self.annotations[i]).any(|other| {
            other.span == ann.span && other.producer > ann.producer && !self.retracted.contains(&other.id)
        })
    }

    /// Resolved annotations on clauses in `clauses`, optionally filtered by class,
    /// sorted by (clause, span start, id).
    pub fn query(&self, clauses: Range<usize>, class: Option<CueClass>) -> Vec<&Annotation> {
        let mut out: Vec<&Annotation> = match class {
            Some(c) => self
                .by_class
                .get(&c)
                .into_iter()
                .flatten()
                .map(|&i| &self.annotations[i])
                .filter(|a| clauses.contains(&a.clause_index))
                .collect(),
            None => self
                .by_clause
                .range(clauses)
                .flat_map(|(_, ids)| ids.iter().map(|&i| &self.annotations[i]))
                .collect(),
        };
        out.retain(|a| self.is_live(a));
        out.sort_by_key(|a| (a.clause_index, a.span.start, a.id));
        out
    }

    pub fn query_clause(&self, clause: usize) -> Vec<&Annotation> {
        self.query(clause..clause + 1, None)
    }

    /// Store contents with ids erased, in canonical order. Two stores that received the
    /// same facts in different orders compare equal here.
    pub fn canonical(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .annotations
            .iter()
            .filter(|a| self.is_live(a))
            .map(dump_line)
            .collect();
        lines.sort();
        lines
    }

    /// Debug dump: one line per live annotation,
    /// `clause_idx<TAB>start..end<TAB>cue_class<TAB>k=v;k=v<TAB>producer`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for a in self.query(0..usize::MAX, None) {
            out.push_str(&dump_line(a));
            out.push('\n');
        }
        out
    }
}

fn dump_line(a: &Annotation) -> String {
    let feats = a
        .features
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";");
    format!(
        "{}\t{}..{}\t{}\t{}\t{}",
        a.clause_index, a.span.start, a.span.end, a.cue_class, feats, a.producer
    )
}

/// Reads a debug dump back into annotations (ids assigned in file order).
pub fn parse_dump(text: &str) -> Result<Vec<Annotation>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| FormatError::new("cue dump", lineno, msg);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(err("expected 5 tab-separated columns"));
        }
        let clause_index = cols[0].parse().map_err(|_| err("bad clause index"))?;
        let (s, e) = cols[1].split_once("..").ok_or_else(|| err("bad span"))?;
        let span = s.parse().map_err(|_| err("bad span start"))?..e.parse().map_err(|_| err("bad span end"))?;
        let cue_class = cols[2].parse().map_err(|m: String| err(&m))?;
        let mut features = BTreeMap::new();
        for kv in cols[3].split(';').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| err("bad feature"))?;
            features.insert(k.to_string(), v.to_string());
        }
        let producer = cols[4].parse().map_err(|m: String| err(&m))?;
        out.push(Annotation {
            id: out.len(),
            clause_index,
            span,
            cue_class,
            features,
            producer,
        });
    }
    Ok(out)
}
