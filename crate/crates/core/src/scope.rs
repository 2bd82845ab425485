//! Condition scopes: default frames from material structure and cue position, then
//! revision by cohesion (anaphoric extension) and rupture (justification/contrast closure).
//!
//! Frame scopes are clause ranges. A frame starts at the first clause of the sentence
//! holding its conditions, so an included condition governs the main clause it follows.
//! Primary scopes form a laminar family. Anaphoric extension adds separate
//! ranges on top of the primary scope: the same sentence may then belong to several
//! sibling frames, which is how one action ends up under several condition chains.

use std::cmp::Reverse;
use std::fmt::Write as _;

use crate::document::{BlockKind, Document};
use crate::error::FormatError;
use crate::facts::{Annotation, AnnotationId, CueClass, FactStore};
use crate::rules::SegmentKind;
use crate::segment::BasicSegment;
use crate::text::normalize_word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameOrigin {
    HeadingRule,
    EnumRule,
    DetachedRule,
    IncludedRule,
}

impl FrameOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameOrigin::HeadingRule => "HeadingRule",
            FrameOrigin::EnumRule => "EnumRule",
            FrameOrigin::DetachedRule => "DetachedRule",
            FrameOrigin::IncludedRule => "IncludedRule",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            FrameOrigin::HeadingRule,
            FrameOrigin::EnumRule,
            FrameOrigin::DetachedRule,
            FrameOrigin::IncludedRule,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RevisionAction {
    Extended,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionEntry {
    pub cue: AnnotationId,
    pub action: RevisionAction,
    /// New scope for a closure, added range for an extension.
    pub range: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub id: usize,
    /// Indices into the segment list, in text order.
    pub conditions: Vec<usize>,
    pub condition_texts: Vec<String>,
    pub open: usize,
    pub close: usize,
    pub default_close: usize,
    pub origin: FrameOrigin,
    pub parent: Option<usize>,
    pub extensions: Vec<(usize, usize)>,
    pub revision_log: Vec<RevisionEntry>,
    pub block: usize,
    lead_word: String,
}

impl Frame {
    pub fn contains(&self, clause: usize) -> bool {
        self.open <= clause && clause <= self.close
    }

    pub fn covers(&self, clause: usize) -> bool {
        self.contains(clause) || self.extensions.iter().any(|&(a, b)| a <= clause && clause <= b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub segment: usize,
    pub kind: SegmentKind,
    pub text: String,
    /// Frames the segment hangs under; empty means the root.
    pub frames: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Couple {
    pub chain: Vec<String>,
    pub action: String,
    /// Segment index of the action, for grouping.
    pub segment: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScopeTree {
    pub clause_count: usize,
    pub frames: Vec<Frame>,
    pub attachments: Vec<Attachment>,
    pub warnings: Vec<(Option<usize>, String)>,
}

impl ScopeTree {
    pub fn depth(&self, frame: usize) -> usize {
        let mut d = 1;
        let mut cur = self.frames[frame].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.frames[p].parent;
        }
        d
    }

    fn is_ancestor(&self, anc: usize, mut f: usize) -> bool {
        while let Some(p) = self.frames[f].parent {
            if p == anc {
                return true;
            }
            f = p;
        }
        false
    }

    /// Condition texts from the outermost frame down to `frame`.
    pub fn chain(&self, frame: Option<usize>) -> Vec<String> {
        let mut path = Vec::new();
        let mut cur = frame;
        while let Some(f) = cur {
            path.push(f);
            cur = self.frames[f].parent;
        }
        path.iter()
            .rev()
            .flat_map(|&f| self.frames[f].condition_texts.iter().cloned())
            .collect()
    }

    /// Any two primary scopes are disjoint or nested.
    pub fn is_laminar(&self) -> bool {
        self.frames.iter().all(|a| {
            self.frames.iter().all(|b| {
                a.close < b.open || b.close < a.open || (a.open <= b.open && b.close <= a.close)
                    || (b.open <= a.open && a.close <= b.close)
            })
        })
    }

    /// Share of frames settled by the detached/included default rules with no revision.
    pub fn default_rule_share(&self) -> Option<f64> {
        if self.frames.is_empty() {
            return None;
        }
        let n = self
            .frames
            .iter()
            .filter(|f| {
                matches!(f.origin, FrameOrigin::DetachedRule | FrameOrigin::IncludedRule) && f.revision_log.is_empty()
            })
            .count();
        Some(n as f64 / self.frames.len() as f64)
    }

    fn innermost(&self, clause: usize, with_extensions: bool) -> Vec<usize> {
        let hits: Vec<usize> = self
            .frames
            .iter()
            .filter(|f| if with_extensions { f.covers(clause) } else { f.contains(clause) })
            .map(|f| f.id)
            .collect();
        hits.iter()
            .copied()
            .filter(|&f| !hits.iter().any(|&g| g != f && self.is_ancestor(f, g)))
            .collect()
    }

    /// Recomputes parents from primary scopes, clipping any child that overruns its parent.
    fn normalize(&mut self) {
        let mut order: Vec<usize> = (0..self.frames.len()).collect();
        order.sort_by_key(|&i| (self.frames[i].open, Reverse(self.frames[i].close), i));
        let mut stack: Vec<usize> = Vec::new();
        for i in order {
            while stack.last().is_some_and(|&t| self.frames[t].close < self.frames[i].open) {
                stack.pop();
            }
            let parent = stack.last().copied();
            if let Some(p) = parent {
                let pc = self.frames[p].close;
                if self.frames[i].close > pc {
                    self.frames[i].close = pc;
                }
            }
            self.frames[i].parent = parent;
            stack.push(i);
        }
    }

    /// Truncates `frame` to end at `close`, clipping every descendant that overruns.
    fn close_frame(&mut self, frame: usize, close: usize, cue: AnnotationId) {
        let affected: Vec<usize> = (0..self.frames.len())
            .filter(|&i| i == frame || (self.is_ancestor(frame, i) && self.frames[i].open <= close))
            .collect();
        for i in affected {
            let f = &mut self.frames[i];
            if f.close > close {
                f.close = close;
                f.revision_log.push(RevisionEntry {
                    cue,
                    action: RevisionAction::Closed,
                    range: (f.open, close),
                });
            }
        }
        self.normalize();
    }

    fn attach(&mut self, doc: &Document, segments: &[BasicSegment]) {
        let mut out = Vec::new();
        for (idx, seg) in segments.iter().enumerate() {
            let frames = match seg.kind {
                SegmentKind::Action => self.innermost(seg.first, true),
                SegmentKind::Explanation => {
                    let covering = self.innermost(seg.first, true);
                    let start = doc.sentence_of(seg.first).first_clause;
                    let deepest_cover = covering.iter().map(|&f| self.depth(f)).max().unwrap_or(0);
                    let ended = self
                        .frames
                        .iter()
                        .filter(|f| start > 0 && f.close == start - 1)
                        .max_by_key(|f| (self.depth(f.id), Reverse(f.id)));
                    match ended {
                        Some(f) if self.depth(f.id) > deepest_cover => vec![f.id],
                        _ => covering,
                    }
                }
                _ => continue,
            };
            out.push(Attachment {
                segment: idx,
                kind: seg.kind,
                text: seg.text(doc),
                frames,
            });
        }
        self.attachments = out;
    }

    /// One couple per (action, attached frame), in document order.
    pub fn couples(&self) -> Vec<Couple> {
        self.leaves(SegmentKind::Action)
    }

    /// Explanations with the chain of the frame they attach to.
    pub fn explanations(&self) -> Vec<Couple> {
        self.leaves(SegmentKind::Explanation)
    }

    fn leaves(&self, kind: SegmentKind) -> Vec<Couple> {
        let mut out = Vec::new();
        for a in self.attachments.iter().filter(|a| a.kind == kind) {
            let targets: Vec<Option<usize>> = if a.frames.is_empty() {
                vec![None]
            } else {
                a.frames.iter().map(|&f| Some(f)).collect()
            };
            for t in targets {
                out.push(Couple {
                    chain: self.chain(t),
                    action: a.text.clone(),
                    segment: a.segment,
                });
            }
        }
        out
    }
}

fn lead_word(text: &str) -> String {
    normalize_word(text.split_whitespace().next().unwrap_or(""))
}

/// Last clause of the "paragraph" a block belongs to: an enumeration header reaches to
/// the end of its items.
fn paragraph_end(doc: &Document, block: usize) -> usize {
    let mut end = block;
    if doc.blocks[block].kind == BlockKind::EnumHeader {
        while end + 1 < doc.blocks.len() && matches!(doc.blocks[end + 1].kind, BlockKind::EnumItem { .. }) {
            end += 1;
        }
    }
    doc.block_clauses(end).1
}

struct Builder<'a> {
    doc: &'a Document,
    segments: &'a [BasicSegment],
    frames: Vec<Frame>,
}

impl Builder<'_> {
    fn push(&mut self, conds: Vec<usize>, open: usize, close: usize, origin: FrameOrigin) -> usize {
        let texts: Vec<String> = conds.iter().map(|&s| self.segments[s].text(self.doc)).collect();
        let id = self.frames.len();
        self.frames.push(Frame {
            id,
            lead_word: lead_word(texts.first().map_or("", String::as_str)),
            condition_texts: texts,
            conditions: conds,
            open,
            close,
            default_close: close,
            origin,
            parent: None,
            extensions: Vec::new(),
            revision_log: Vec::new(),
            block: self.doc.clauses[open].block,
        });
        id
    }
}

/// Default rules: heading frames run to the next heading of the same or higher level,
/// enumeration headers cover their items, detached condition runs cover the rest of the
/// paragraph, included conditions cover their sentence.
pub fn apply_default_scopes(doc: &Document, segments: &[BasicSegment]) -> ScopeTree {
    let mut b = Builder {
        doc,
        segments,
        frames: Vec::new(),
    };
    let conditions_in = |first: usize, last: usize| -> Vec<usize> {
        segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == SegmentKind::Condition && s.first >= first && s.last <= last)
            .map(|(i, _)| i)
            .collect()
    };
    for (bi, block) in doc.blocks.iter().enumerate() {
        let (bfirst, blast) = doc.block_clauses(bi);
        if let BlockKind::Heading { level } = block.kind {
            let conds = conditions_in(bfirst, blast);
            if !conds.is_empty() {
                let close = doc.blocks[bi + 1..]
                    .iter()
                    .enumerate()
                    .find(|(_, nb)| matches!(nb.kind, BlockKind::Heading { level: l } if l <= level))
                    .map_or(doc.clauses.len() - 1, |(k, _)| doc.block_clauses(bi + 1 + k).0 - 1);
                b.push(conds, bfirst, close, FrameOrigin::HeadingRule);
            }
            continue;
        }
        let para_end = paragraph_end(doc, bi);
        let last_sentence = block.sentences.end - 1;
        for si in block.sentences.clone() {
            let s = &doc.sentences[si];
            let conds = conditions_in(s.first_clause, s.last_clause);
            if conds.is_empty() {
                continue;
            }
            if block.kind == BlockKind::EnumHeader && si == last_sentence {
                b.push(conds, s.first_clause, para_end, FrameOrigin::EnumRule);
                continue;
            }
            let mut run = Vec::new();
            let mut next = s.first_clause;
            for &c in &conds {
                if segments[c].first == next {
                    run.push(c);
                    next = segments[c].last + 1;
                } else {
                    break;
                }
            }
            let included: Vec<usize> = conds[run.len()..].to_vec();
            if !run.is_empty() {
                let word = lead_word(&segments[run[0]].text(doc));
                // A new detached condition led by the same word as an open one in this
                // paragraph ("Chez A ... Chez B") is parallel to it, not nested in it.
                let parallel = b
                    .frames
                    .iter()
                    .filter(|f| {
                        f.origin == FrameOrigin::DetachedRule
                            && f.block == doc.clauses[s.first_clause].block
                            && f.open < s.first_clause
                            && f.contains(s.first_clause)
                            && f.lead_word == word
                    })
                    .max_by_key(|f| f.open)
                    .map(|f| f.id);
                if let Some(p) = parallel {
                    let cut = s.first_clause - 1;
                    let open = b.frames[p].open;
                    for f in b.frames.iter_mut() {
                        if f.open >= open && f.close > cut {
                            f.close = cut;
                            f.default_close = cut;
                        }
                    }
                }
                b.push(run, s.first_clause, para_end, FrameOrigin::DetachedRule);
            }
            if !included.is_empty() {
                b.push(included, s.first_clause, s.last_clause, FrameOrigin::IncludedRule);
            }
        }
    }
    let mut tree = ScopeTree {
        clause_count: doc.clauses.len(),
        frames: b.frames,
        attachments: Vec::new(),
        warnings: Vec::new(),
    };
    tree.normalize();
    for f in &mut tree.frames {
        f.default_close = f.close;
    }
    assert!(tree.is_laminar(), "default scopes are not laminar");
    tree.attach(doc, segments);
    tree
}

fn sentence_lead(store: &FactStore, clause: usize, pick: impl Fn(&Annotation) -> bool) -> Option<&Annotation> {
    store
        .query_clause(clause)
        .into_iter()
        .find(|a| a.flag("clause_initial") && pick(a))
}

/// Revises default scopes to a fixpoint (closures, then extensions, per pass).
pub fn revise_scopes(tree: &ScopeTree, doc: &Document, store: &FactStore, segments: &[BasicSegment]) -> ScopeTree {
    revise_scopes_with(tree, doc, store, segments, |_| {})
}

/// Like [`revise_scopes`], calling `on_step` after every individual boundary change.
/// Laminarity is asserted at every step.
pub fn revise_scopes_with(
    tree: &ScopeTree,
    doc: &Document,
    store: &FactStore,
    segments: &[BasicSegment],
    mut on_step: impl FnMut(&ScopeTree),
) -> ScopeTree {
    let mut t = tree.clone();
    loop {
        let mut changed = false;

        for s in &doc.sentences {
            let Some(marker) = sentence_lead(store, s.first_clause, |a| {
                matches!(a.cue_class, CueClass::JustificationMarker | CueClass::ContrastMarker)
            }) else {
                continue;
            };
            let targets: Vec<usize> = t
                .frames
                .iter()
                .filter(|f| f.origin == FrameOrigin::DetachedRule && f.open < s.first_clause && f.contains(s.first_clause))
                .map(|f| f.id)
                .collect();
            for f in targets {
                if t.frames[f].contains(s.first_clause) {
                    t.close_frame(f, s.first_clause - 1, marker.id);
                    changed = true;
                    assert!(t.is_laminar(), "closure broke laminarity");
                    on_step(&t);
                }
            }
        }

        for s in &doc.sentences {
            let Some(ana) = sentence_lead(store, s.first_clause, |a| {
                a.cue_class == CueClass::AnaphoricExpr && a.feature("position") == Some("detached")
            }) else {
                continue;
            };
            let parent = t
                .frames
                .iter()
                .filter(|f| f.contains(s.first_clause))
                .max_by_key(|f| (t.depth(f.id), f.id))
                .map(|f| f.id);
            let mut siblings: Vec<&Frame> = t
                .frames
                .iter()
                .filter(|f| f.parent == parent && f.close < s.first_clause && f.block == doc.sentences[s.index].block)
                .collect();
            siblings.sort_by_key(|f| (Reverse(f.close), Reverse(f.id)));
            if siblings.first().is_none_or(|f| f.close + 1 != s.first_clause) {
                continue;
            }
            let wanted = match ana.feature("referent_count") {
                Some("all") | None => siblings.len(),
                Some(n) => n.parse().unwrap_or(1),
            };
            let range = (s.first_clause, s.last_clause);
            let chosen: Vec<usize> = siblings.iter().take(wanted).map(|f| f.id).collect();
            let fresh: Vec<usize> = chosen
                .iter()
                .copied()
                .filter(|&f| !t.frames[f].extensions.contains(&range))
                .collect();
            if fresh.is_empty() {
                continue;
            }
            if wanted > siblings.len() {
                t.warnings.push((
                    Some(s.first_clause),
                    format!("anaphora refers to {wanted} cases but only {} frames precede it", siblings.len()),
                ));
            }
            for f in fresh {
                let frame = &mut t.frames[f];
                frame.extensions.push(range);
                frame.revision_log.push(RevisionEntry {
                    cue: ana.id,
                    action: RevisionAction::Extended,
                    range,
                });
                changed = true;
                assert!(t.is_laminar(), "extension broke laminarity");
                on_step(&t);
            }
        }

        if !changed {
            break;
        }
    }
    t.attach(doc, segments);
    t
}

/// Indented tree: `origin | conditions (" && "-joined) | [open..close]` per frame, with
/// `+[a..b]` for extension ranges, and `action:` / `explanation:` leaves.
pub fn dump_tree(tree: &ScopeTree) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "root | * | [0..{}]", tree.clause_count.saturating_sub(1));
    dump_children(tree, None, 1, &mut out);
    out
}

fn dump_children(tree: &ScopeTree, parent: Option<usize>, depth: usize, out: &mut String) {
    enum Item<'a> {
        Leaf(&'a Attachment),
        Frame(&'a Frame),
    }
    let mut items: Vec<(usize, u8, usize, Item)> = Vec::new();
    for a in &tree.attachments {
        let here = if a.frames.is_empty() {
            parent.is_none()
        } else {
            parent.is_some_and(|p| a.frames.contains(&p))
        };
        if here {
            items.push((a.segment, 0, a.segment, Item::Leaf(a)));
        }
    }
    for f in tree.frames.iter().filter(|f| f.parent == parent) {
        items.push((f.open, 1, f.id, Item::Frame(f)));
    }
    items.sort_by_key(|(pos, rank, id, _)| (*pos, *rank, *id));
    let indent = "  ".repeat(depth);
    for (_, _, _, item) in items {
        match item {
            Item::Leaf(a) => {
                let label = if a.kind == SegmentKind::Action { "action" } else { "explanation" };
                let _ = writeln!(out, "{indent}{label}: {}", a.text);
            }
            Item::Frame(f) => {
                let ext: String = f.extensions.iter().map(|(a, b)| format!(" +[{a}..{b}]")).collect();
                let _ = writeln!(
                    out,
                    "{indent}{} | {} | [{}..{}]{ext}",
                    f.origin.as_str(),
                    f.condition_texts.join(" && "),
                    f.open,
                    f.close
                );
                dump_children(tree, Some(f.id), depth + 1, out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeLine {
    Root { close: usize },
    Frame {
        origin: FrameOrigin,
        conditions: Vec<String>,
        open: usize,
        close: usize,
        extensions: Vec<(usize, usize)>,
    },
    Action(String),
    Explanation(String),
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    let inner = s.strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = inner.split_once("..")?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// Reads a tree dump into `(depth, line)` pairs.
pub fn parse_tree_dump(text: &str) -> Result<Vec<(usize, TreeLine)>, FormatError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let err = |m: &str| FormatError::new("tree dump", n + 1, m);
        let body = raw.trim_start_matches(' ');
        let spaces = raw.len() - body.len();
        if spaces % 2 != 0 {
            return Err(err("odd indentation"));
        }
        let depth = spaces / 2;
        let line = if let Some(t) = body.strip_prefix("action: ") {
            TreeLine::Action(t.to_string())
        } else if let Some(t) = body.strip_prefix("explanation: ") {
            TreeLine::Explanation(t.to_string())
        } else {
            let (head, rest) = body.split_once(" | ").ok_or_else(|| err("expected `origin | conditions | range`"))?;
            let (conds, ranges) = rest.rsplit_once(" | ").ok_or_else(|| err("missing range column"))?;
            let mut parts = ranges.split_whitespace();
            let (open, close) = parts.next().and_then(parse_range).ok_or_else(|| err("bad range"))?;
            let extensions = parts
                .map(|p| p.strip_prefix('+').and_then(parse_range).ok_or_else(|| err("bad extension")))
                .collect::<Result<Vec<_>, _>>()?;
            if head == "root" {
                TreeLine::Root { close }
            } else {
                let origin = FrameOrigin::parse(head).ok_or_else(|| err("unknown origin"))?;
                TreeLine::Frame {
                    origin,
                    conditions: conds.split(" && ").map(str::to_string).collect(),
                    open,
                    close,
                    extensions,
                }
            }
        };
        out.push((depth, line));
    }
    Ok(out)
}

/// Couple TSV: `condition chain (" || "-joined)<TAB>action`.
pub fn dump_couples(couples: &[Couple]) -> String {
    couples
        .iter()
        .map(|c| format!("{}\t{}\n", c.chain.join(" || "), c.action))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cues;
    use crate::document::{parse_document, DocumentConfig};
    use crate::lexicon::LexiconPack;
    use crate::rules::RuleTable;
    use crate::segment::classify_segments;
    use crate::stage::Stage;

    struct Run {
        doc: Document,
        store: FactStore,
        segs: Vec<BasicSegment>,
    }

    fn prepare(text: &str) -> Run {
        let pack = LexiconPack::builtin();
        let doc = parse_document("t", text, &pack, &DocumentConfig::default());
        let mut store = FactStore::new();
        store.begin_stage(Stage::MaterialStructure).unwrap();
        cues::tag_domain_titles(&mut store, &doc, &pack).unwrap();
        store.end_stage().unwrap();
        store.begin_stage(Stage::Cues).unwrap();
        cues::match_cues(&mut store, &doc, &pack).unwrap();
        cues::detect_anaphora(&mut store, &doc, &pack).unwrap();
        store.end_stage().unwrap();
        store.begin_stage(Stage::Morphology).unwrap();
        cues::apply_morphology(&mut store, &doc, &pack, None).unwrap();
        store.end_stage().unwrap();
        let segs = classify_segments(&doc, &store, &RuleTable::default());
        Run { doc, store, segs }
    }

    fn couples_of(tree: &ScopeTree) -> Vec<(Vec<String>, String)> {
        tree.couples().into_iter().map(|c| (c.chain, c.action)).collect()
    }

    const BIOPSIES: &str = "Chez le sujet non immunodéprimé, en cas d'aspect macroscopique normal de la muqueuse colique, des biopsies coliques nombreuses et étagées sont recommandées (...). Les biopsies isolées sont insuffisantes (...).\nL'exploration de l'iléon terminal est également recommandée (grade C). En cas d'aspect normal de la muqueuse iléale (...), la réalisation de biopsies n'est pas systématique (accord professionnel).\n\nChez le sujet immunodéprimé, il est nécessaire de réaliser des biopsies systématiques (...).\n";

    #[test]
    fn biopsies_frames_nest() {
        let r = prepare(BIOPSIES);
        let tree = apply_default_scopes(&r.doc, &r.segs);
        assert_eq!(tree.frames.len(), 3);
        let outer = &tree.frames[0];
        assert_eq!(outer.condition_texts.len(), 2);
        assert_eq!(tree.frames[1].parent, Some(0));
        assert_eq!(tree.frames[2].parent, None);
        let chains: Vec<usize> = tree.couples().iter().map(|c| c.chain.len()).collect();
        assert_eq!(chains, [2, 2, 2, 3, 1]);
        assert_eq!(revise_scopes(&tree, &r.doc, &r.store, &r.segs), tree);
    }

    #[test]
    fn included_condition_covers_its_sentence_only() {
        let r = prepare("L'indication d'une insulinothérapie est recommandée lorsque l'HbA1c est > 8%. Il faut surveiller le poids.");
        let tree = apply_default_scopes(&r.doc, &r.segs);
        assert_eq!(tree.frames.len(), 1);
        assert_eq!(tree.frames[0].origin, FrameOrigin::IncludedRule);
        assert_eq!((tree.frames[0].open, tree.frames[0].close), (0, 1));
        let c = couples_of(&tree);
        assert_eq!(c[0].0.len(), 1);
        assert!(c[1].0.is_empty());
    }

    #[test]
    fn anaphora_extends_both_previous_frames() {
        let r = prepare("Un traitement est recommandé lorsque l'HbA1c est > 8%. Il est laissé à l'appréciation du clinicien lorsque l'HbA1c est comprise entre 6,6% et 8%. Dans les deux cas, la diététique aura été réévaluée.");
        let tree = apply_default_scopes(&r.doc, &r.segs);
        let last = couples_of(&tree).last().unwrap().clone();
        assert!(last.0.is_empty());
        let mut steps = 0;
        let revised = revise_scopes_with(&tree, &r.doc, &r.store, &r.segs, |t| {
            steps += 1;
            assert!(t.is_laminar());
        });
        assert_eq!(steps, 2);
        let c = couples_of(&revised);
        let tail: Vec<_> = c.iter().filter(|(_, a)| a.starts_with("la diététique")).collect();
        assert_eq!(tail.len(), 2);
        assert_ne!(tail[0].0, tail[1].0);
        assert_eq!(revise_scopes(&revised, &r.doc, &r.store, &r.segs), revised);
    }

    #[test]
    fn justification_closes_detached_frame() {
        let r = prepare("Chez les patients à haut risque, le prescripteur doit garder la mesure. En effet, les fortes doses n'ont pas fait l'objet d'une évaluation.");
        let tree = apply_default_scopes(&r.doc, &r.segs);
        let revised = revise_scopes(&tree, &r.doc, &r.store, &r.segs);
        let f = &revised.frames[0];
        assert_eq!(f.close, r.doc.sentences[0].last_clause);
        assert_eq!(f.revision_log[0].action, RevisionAction::Closed);
        let expl = revised.explanations();
        assert_eq!(expl.len(), 1);
        assert_eq!(expl[0].chain, ["Chez les patients à haut risque"]);
    }

    #[test]
    fn parallel_condition_closes_sibling() {
        let r = prepare("Chez l'adulte, il faut surveiller la pression. Chez l'enfant, il faut surveiller le poids.");
        let tree = apply_default_scopes(&r.doc, &r.segs);
        assert_eq!(tree.frames.len(), 2);
        assert_eq!(tree.frames[1].parent, None);
        let chains: Vec<Vec<String>> = tree.couples().into_iter().map(|c| c.chain).collect();
        assert_eq!(chains, [vec!["Chez l'adulte".to_string()], vec!["Chez l'enfant".to_string()]]);
    }

    #[test]
    fn no_conditions_means_root_only() {
        let r = prepare("Il faut surveiller la pression. Il faut mesurer le poids.");
        let tree = apply_default_scopes(&r.doc, &r.segs);
        assert!(tree.frames.is_empty());
        assert!(tree.couples().iter().all(|c| c.chain.is_empty()));
        assert_eq!(tree.default_rule_share(), None);
    }

    #[test]
    fn heading_frame_runs_to_next_heading() {
        let r = prepare("Hypertension artérielle\n\nIl faut mesurer la pression.\n\nIntroduction générale\n\nIl faut lire le texte.\n");
        let tree = apply_default_scopes(&r.doc, &r.segs);
        assert_eq!(tree.frames.len(), 1);
        assert_eq!(tree.frames[0].origin, FrameOrigin::HeadingRule);
        assert_eq!((tree.frames[0].open, tree.frames[0].close), (0, 1));
    }

    #[test]
    fn enumeration_header_covers_items() {
        let r = prepare("Chez le sujet âgé, il est recommandé de :\n- mesurer la pression ;\n- surveiller la fonction rénale.\n\nIl faut lire le texte.\n");
        let tree = apply_default_scopes(&r.doc, &r.segs);
        assert_eq!(tree.frames[0].origin, FrameOrigin::EnumRule);
        assert_eq!(tree.frames[0].close, 3);
    }

    #[test]
    fn dumps_parse_back() {
        let r = prepare(BIOPSIES);
        let tree = apply_default_scopes(&r.doc, &r.segs);
        let lines = parse_tree_dump(&dump_tree(&tree)).unwrap();
        let frames = lines.iter().filter(|(_, l)| matches!(l, TreeLine::Frame { .. })).count();
        assert_eq!(frames, 3);
        let actions = lines.iter().filter(|(_, l)| matches!(l, TreeLine::Action(_))).count();
        assert_eq!(actions, 5);
        assert_eq!(lines[0], (0, TreeLine::Root { close: r.doc.clauses.len() - 1 }));
    }
}
