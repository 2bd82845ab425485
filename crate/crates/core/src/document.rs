//! Hierarchical text model: blocks, sentences and clauses with stable global indices.
//!
//! Clause segmentation is a stand-in for a real parser. A sentence is cut
//!
//! * at a comma that precedes a discourse connector, or that closes a phrase opened
//!   by a connector at sentence start or after another such comma;
//! * before a condition connector found in the middle of a clause (included conditions);
//! * before a coordinator (`et`, `ou`) when both sides contain a finite verb.
//!
//! Everything else stays one clause.

use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::IngestError;
use crate::facts::CueClass;
use crate::lexicon::LexiconPack;
use crate::text::{is_terminal, normalize_word, tokenize, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Heading { level: u32 },
    Paragraph,
    EnumHeader,
    EnumItem { depth: u32 },
}

impl BlockKind {
    pub fn is_heading(self) -> bool {
        matches!(self, BlockKind::Heading { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    /// Byte span of the block, enumeration marker included.
    pub span: Range<usize>,
    /// Global indices of the block's sentences.
    pub sentences: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub block: usize,
    pub span: Range<usize>,
    pub first_clause: usize,
    pub last_clause: usize,
    pub terminal: Option<char>,
}

impl Sentence {
    pub fn clauses(&self) -> std::ops::RangeInclusive<usize> {
        self.first_clause..=self.last_clause
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SentencePosition {
    Initial,
    Medial,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParagraphPosition {
    Initial,
    NonInitial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub index: usize,
    pub sentence: usize,
    pub block: usize,
    pub text: String,
    pub span: Range<usize>,
    pub position_in_sentence: SentencePosition,
    pub position_in_paragraph: ParagraphPosition,
    /// Source text between this clause and the next one (or the end of input).
    pub separator: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub source_id: String,
    pub text: String,
    pub blocks: Vec<Block>,
    pub sentences: Vec<Sentence>,
    pub clauses: Vec<Clause>,
    /// Source text before the first clause.
    pub prefix: String,
}

impl Document {
    pub fn clause(&self, idx: usize) -> &Clause {
        &self.clauses[idx]
    }

    pub fn sentence_of(&self, clause: usize) -> &Sentence {
        &self.sentences[self.clauses[clause].sentence]
    }

    pub fn block_of(&self, clause: usize) -> &Block {
        &self.blocks[self.clauses[clause].block]
    }

    /// Clause index range of a block (inclusive bounds).
    pub fn block_clauses(&self, block: usize) -> (usize, usize) {
        let b = &self.blocks[block];
        (
            self.sentences[b.sentences.start].first_clause,
            self.sentences[b.sentences.end - 1].last_clause,
        )
    }

    /// Rebuilds the input from clauses and recorded separators.
    pub fn reconstruct(&self) -> String {
        let mut out = self.prefix.clone();
        for c in &self.clauses {
            out.push_str(&c.text);
            out.push_str(&c.separator);
        }
        out
    }

    /// Source text covering clauses `first..=last`.
    pub fn span_text(&self, first: usize, last: usize) -> &str {
        &self.text[self.clauses[first].span.start..self.clauses[last].span.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentConfig {
    /// Added to the lexicon pack's abbreviation list.
    pub abbreviations: Vec<String>,
    pub heading_max_len: usize,
    /// Leading item markers; `N)` and `N.` stand for any digit sequence.
    pub enum_markers: Vec<String>,
}

impl Default for DocumentConfig {
    fn default() -> Self {
        DocumentConfig {
            abbreviations: Vec::new(),
            heading_max_len: 120,
            enum_markers: ["-", "\u{2013}", "\u{2022}", "*", "N)", "N."]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Validates encoding before parsing raw bytes.
pub fn decode(bytes: &[u8]) -> Result<&str, IngestError> {
    std::str::from_utf8(bytes).map_err(|e| IngestError::Encoding {
        offset: e.valid_up_to(),
    })
}

struct Line {
    start: usize,
    end: usize,
}

struct RawBlock {
    kind: BlockKind,
    start: usize,
    content_start: usize,
    end: usize,
}

fn numbering_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:(\d+(?:\.\d+)*)\.?|[IVXLCDM]+[.)])\s+\p{L}").unwrap())
}

fn enum_marker_len(line: &str, markers: &[String]) -> Option<usize> {
    for m in markers {
        let len = if let Some(sep) = m.strip_prefix('N') {
            let digits = line.bytes().take_while(u8::is_ascii_digit).count();
            (digits > 0 && line[digits..].starts_with(sep)).then(|| digits + sep.len())
        } else {
            line.starts_with(m.as_str()).then_some(m.len())
        };
        if let Some(len) = len {
            let rest = &line[len..];
            let ws = rest.len() - rest.trim_start().len();
            if ws > 0 && !rest.trim().is_empty() {
                return Some(len + ws);
            }
        }
    }
    None
}

fn indent_width(line: &str) -> usize {
    line.chars()
        .take_while(|c| c.is_whitespace())
        .map(|c| if c == '\t' { 4 } else { 1 })
        .sum()
}

/// Parses guideline text into blocks, sentences and clauses.
pub fn parse_document(source_id: &str, text: &str, pack: &LexiconPack, config: &DocumentConfig) -> Document {
    let lines: Vec<Line> = {
        let mut out = Vec::new();
        let mut start = 0;
        for piece in text.split_inclusive('\n') {
            let body = piece.trim_end_matches('\n').trim_end_matches('\r');
            out.push(Line {
                start,
                end: start + body.len(),
            });
            start += piece.len();
        }
        out
    };
    let line_text = |l: &Line| &text[l.start..l.end];
    let is_blank = |i: usize| lines.get(i).is_none_or(|l| line_text(l).trim().is_empty());

    let mut raw: Vec<RawBlock> = Vec::new();
    let mut blank_before = true;
    for (i, line) in lines.iter().enumerate() {
        let full = line_text(line);
        if full.trim().is_empty() {
            blank_before = true;
            continue;
        }
        let lead_ws = full.len() - full.trim_start().len();
        let content = full.trim();
        let start = line.start + lead_ws;
        let end = start + content.len();
        let last_kind = raw.last().map(|b| b.kind);
        let marker = enum_marker_len(content, &config.enum_markers);
        let prev_is_heading = !blank_before && matches!(last_kind, Some(BlockKind::Heading { .. }));
        let heading_level = if blank_before || prev_is_heading {
            heading_level(content, is_blank(i + 1), config.heading_max_len)
        } else {
            None
        };

        let in_enum = matches!(last_kind, Some(BlockKind::EnumItem { .. } | BlockKind::EnumHeader));
        let header_candidate = matches!(last_kind, Some(BlockKind::Paragraph))
            && raw
                .last()
                .is_some_and(|b| text[b.content_start..b.end].trim_end().ends_with(':'));

        if let (Some(mlen), true) = (marker, in_enum || header_candidate) {
            let prev_depth = match last_kind {
                Some(BlockKind::EnumItem { depth }) => depth,
                _ => 0,
            };
            if header_candidate {
                raw.last_mut().unwrap().kind = BlockKind::EnumHeader;
            }
            let depth = ((indent_width(full) / 2) as u32 + 1).min(prev_depth + 1);
            raw.push(RawBlock {
                kind: BlockKind::EnumItem { depth },
                start,
                content_start: start + mlen,
                end,
            });
        } else if let Some(level) = heading_level {
            raw.push(RawBlock {
                kind: BlockKind::Heading { level },
                start,
                content_start: start,
                end,
            });
        } else if !blank_before
            && matches!(last_kind, Some(BlockKind::Paragraph | BlockKind::EnumItem { .. }))
        {
            raw.last_mut().unwrap().end = end;
        } else {
            raw.push(RawBlock {
                kind: BlockKind::Paragraph,
                start,
                content_start: start,
                end,
            });
        }
        blank_before = false;
    }

    let mut abbreviations: Vec<String> = pack.abbreviations.clone();
    abbreviations.extend(config.abbreviations.iter().map(|a| normalize_word(a)));

    let mut doc = Document {
        source_id: source_id.to_string(),
        text: text.to_string(),
        ..Document::default()
    };
    let mut spans: Vec<Range<usize>> = Vec::new();
    for (bidx, rb) in raw.iter().enumerate() {
        let first_sentence = doc.sentences.len();
        let sentence_spans = if rb.kind.is_heading() {
            vec![(rb.content_start..rb.end, None)]
        } else {
            split_sentences(text, rb.content_start..rb.end, &abbreviations)
        };
        for (sidx, (sspan, terminal)) in sentence_spans.into_iter().enumerate() {
            let clause_spans = if rb.kind.is_heading() {
                vec![sspan.clone()]
            } else {
                split_clauses(text, sspan.clone(), pack)
            };
            let first_clause = spans.len();
            let n = clause_spans.len();
            for (k, cspan) in clause_spans.into_iter().enumerate() {
                let pos = if k == 0 {
                    SentencePosition::Initial
                } else if k + 1 == n {
                    SentencePosition::Final
                } else {
                    SentencePosition::Medial
                };
                let para_initial = sidx == 0
                    && k == 0
                    && matches!(rb.kind, BlockKind::Paragraph | BlockKind::EnumHeader);
                doc.clauses.push(Clause {
                    index: spans.len(),
                    sentence: doc.sentences.len(),
                    block: bidx,
                    text: text[cspan.clone()].to_string(),
                    span: cspan.clone(),
                    position_in_sentence: pos,
                    position_in_paragraph: if para_initial {
                        ParagraphPosition::Initial
                    } else {
                        ParagraphPosition::NonInitial
                    },
                    separator: String::new(),
                });
                spans.push(cspan);
            }
            doc.sentences.push(Sentence {
                index: doc.sentences.len(),
                block: bidx,
                span: sspan,
                first_clause,
                last_clause: spans.len() - 1,
                terminal,
            });
        }
        doc.blocks.push(Block {
            kind: rb.kind,
            span: rb.start..rb.end,
            sentences: first_sentence..doc.sentences.len(),
        });
    }

    let first_start = spans.first().map_or(text.len(), |s| s.start);
    doc.prefix = text[..first_start].to_string();
    for i in 0..spans.len() {
        let next = spans.get(i + 1).map_or(text.len(), |s| s.start);
        doc.clauses[i].separator = text[spans[i].end..next].to_string();
    }
    doc
}

fn heading_level(content: &str, followed_by_blank: bool, max_len: usize) -> Option<u32> {
    if content.chars().count() > max_len {
        return None;
    }
    let last = content.chars().last()?;
    if is_terminal(last) || matches!(last, ':' | ';' | ',') {
        return None;
    }
    let numbered = numbering_re().captures(content);
    if !followed_by_blank && numbered.is_none() {
        return None;
    }
    Some(match numbered.and_then(|c| c.get(1)) {
        Some(digits) => digits.as_str().split('.').count() as u32,
        None => 1,
    })
}

/// Splits `range` of `text` into sentences at terminal punctuation outside brackets,
/// skipping periods that end a listed abbreviation. Returns trimmed spans and the
/// terminal character of each sentence.
pub fn split_sentences(text: &str, range: Range<usize>, abbreviations: &[String]) -> Vec<(Range<usize>, Option<char>)> {
    let slice = &text[range.clone()];
    let chars: Vec<(usize, char)> = slice.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut depth = 0usize;
    let mut i = 0;
    let push = |out: &mut Vec<_>, s: usize, e: usize, term: Option<char>| {
        let piece = &slice[s..e];
        let lead = piece.len() - piece.trim_start().len();
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            let a = range.start + s + lead;
            out.push((a..a + trimmed.len(), term));
        }
    };
    while i < chars.len() {
        let (b, c) = chars[i];
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if depth == 0 && is_terminal(c) {
            let mut j = i + 1;
            while j < chars.len() && is_terminal(chars[j].1) {
                j += 1;
            }
            while j < chars.len() && matches!(chars[j].1, '"' | '\u{201d}' | '\u{bb}' | '\'') {
                j += 1;
            }
            let end = chars.get(j).map_or(slice.len(), |&(bb, _)| bb);
            let at_break = j == chars.len() || chars[j].1.is_whitespace();
            let abbreviated = c == '.' && j == i + 1 && {
                let word_start = slice[..b].rfind(char::is_whitespace).map_or(0, |p| p + 1);
                let word = normalize_word(&slice[word_start..b + 1]);
                abbreviations.contains(&word)
            };
            if at_break && !abbreviated {
                push(&mut out, start, end, Some(c));
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push(&mut out, start, slice.len(), None);
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Opened {
    Start,
    Comma,
    Connector,
    Coordinator,
}

/// Splits one sentence into clause spans (see module docs for the rules).
pub fn split_clauses(text: &str, sentence: Range<usize>, pack: &LexiconPack) -> Vec<Range<usize>> {
    let tokens: Vec<Token> = tokenize(&text[sentence.clone()])
        .into_iter()
        .map(|mut t| {
            t.span = t.span.start + sentence.start..t.span.end + sentence.start;
            t
        })
        .collect();
    if tokens.is_empty() {
        return vec![sentence];
    }
    let n = tokens.len();
    let mut conn_start = vec![false; n + 1];
    let mut cond_start = vec![false; n + 1];
    for m in pack.connector_matches(&tokens) {
        conn_start[m.m.start] = true;
        if m.cue_class.is_condition_opener() || m.cue_class == CueClass::DomainTerm {
            cond_start[m.m.start] = true;
        }
    }
    let fw = &pack.function_words;
    let skippable = |i: usize| tokens.get(i).is_some_and(|t| fw.is_skippable_lead(&t.norm));
    let lead_end = |mut i: usize| {
        while i < n && skippable(i) {
            i += 1;
        }
        i
    };
    let mut depth_at = Vec::with_capacity(n);
    let mut depth = 0usize;
    for t in &tokens {
        if t.is_punct(')') || t.is_punct(']') {
            depth = depth.saturating_sub(1);
        }
        depth_at.push(depth);
        if t.is_punct('(') || t.is_punct('[') {
            depth += 1;
        }
    }
    let is_comma = |i: usize| tokens[i].is_punct(',') && depth_at[i] == 0;
    let finite = |r: Range<usize>| r.into_iter().any(|k| pack.inflections.is_finite_form(&tokens[k].norm));

    let mut starts = vec![0usize];
    let mut seg_start = 0usize;
    let mut opened = Opened::Start;
    let mut i = 0;
    while i < n {
        let tok = &tokens[i];
        if is_comma(i) {
            let next = i + 1;
            if next < n && next > seg_start + 1 {
                let led = conn_start[lead_end(seg_start)] && matches!(opened, Opened::Start | Opened::Comma);
                let next_conn = conn_start[lead_end(next)];
                if led || next_conn {
                    starts.push(next);
                    seg_start = next;
                    opened = Opened::Comma;
                }
            }
        } else if depth_at[i] == 0 && cond_start[i] && i > lead_end(seg_start) {
            let mut b = i;
            while b > seg_start && skippable(b - 1) {
                b -= 1;
            }
            if b > seg_start && !is_comma(b - 1) {
                starts.push(b);
                seg_start = b;
                opened = Opened::Connector;
            }
        } else if depth_at[i] == 0 && i > seg_start && fw.coordinators.contains(&tok.norm) {
            let stop = (i + 1..n)
                .find(|&k| is_comma(k) || fw.coordinators.contains(&tokens[k].norm))
                .unwrap_or(n);
            if finite(seg_start..i) && finite(i + 1..stop) {
                starts.push(i);
                seg_start = i;
                opened = Opened::Coordinator;
            }
        }
        i += 1;
    }

    let mut out = Vec::with_capacity(starts.len());
    for (k, &s) in starts.iter().enumerate() {
        let next = starts.get(k + 1).copied().unwrap_or(n);
        let mut last = next - 1;
        if next < n && last > s && is_comma(last) {
            last -= 1;
        }
        out.push(tokens[s].span.start..tokens[last].span.end);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Document {
        parse_document("t", text, &LexiconPack::builtin(), &DocumentConfig::default())
    }

    fn clause_texts(text: &str) -> Vec<String> {
        parse(text).clauses.into_iter().map(|c| c.text).collect()
    }

    const INSULIN: &str = "L'indication d'une insulinothérapie est recommandée lorsque l'HbA1c est > 8%, sur deux contrôles successifs sous l'association de sulfamides/metformine à posologie optimale. Elle est laissée à l'appréciation par le clinicien du rapport bénéfices/inconvénients de l'insulinothérapie lorsque l'HbA1c est comprise entre 6,6% et 8% sous la même association. Dans les deux cas, la diététique aura au préalable été réévaluée et un facteur intercurrent de décompensation aura été recherchée (accord professionnel).";

    const STATINS: &str = "Chez les patients ayant initialement une concentration très élevée de LDL-cholestérol, et notamment chez les patients à haut risque dont la cible thérapeutique est basse (<1g/l), le prescripteur doit garder à l'esprit que la prescription de statine à fortes doses ou en association nécessite une prise en compte au cas par cas du rapport bénéfice/risque et ne doit jamais être systématique. En effet, les fortes doses de statines et les bithérapies n'ont pas fait l'objet à ce jour d'une évaluation suffisante dans ces situations.";

    #[test]
    fn empty_input_gives_empty_document() {
        let d = parse("");
        assert!(d.blocks.is_empty() && d.clauses.is_empty());
        assert_eq!(d.reconstruct(), "");
        let d = parse("  \n\n ");
        assert!(d.clauses.is_empty());
        assert_eq!(d.reconstruct(), "  \n\n ");
    }

    #[test]
    fn insulin_excerpt_is_one_paragraph_of_three_sentences() {
        let d = parse(INSULIN);
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].kind, BlockKind::Paragraph);
        assert_eq!(d.sentences.len(), 3);
        assert_eq!(d.reconstruct(), INSULIN);
    }

    #[test]
    fn title_line_then_paragraph() {
        let d = parse("Hypertension artérielle\n\nIl est recommandé de mesurer la pression.\n");
        assert_eq!(d.blocks.len(), 2);
        assert_eq!(d.blocks[0].kind, BlockKind::Heading { level: 1 });
        assert_eq!(d.blocks[1].kind, BlockKind::Paragraph);
    }

    #[test]
    fn numbered_headings_take_their_depth() {
        let d = parse("2.1 Traitement initial\nIl est recommandé de traiter.\n");
        assert_eq!(d.blocks[0].kind, BlockKind::Heading { level: 2 });
        assert_eq!(d.blocks[1].kind, BlockKind::Paragraph);
    }

    #[test]
    fn colon_paragraph_heads_an_enumeration() {
        let d = parse("Chez le sujet âgé, il est recommandé de :\n- mesurer la pression ;\n- surveiller la fonction rénale.\n\nFin.");
        let kinds: Vec<_> = d.blocks.iter().map(|b| b.kind).collect();
        assert_eq!(
            kinds,
            [
                BlockKind::EnumHeader,
                BlockKind::EnumItem { depth: 1 },
                BlockKind::EnumItem { depth: 1 },
                BlockKind::Paragraph
            ]
        );
        assert_eq!(d.clauses[2].text, "mesurer la pression ;");
    }

    #[test]
    fn dash_line_without_header_is_plain_text() {
        let d = parse("- une ligne isolée.");
        assert_eq!(d.blocks[0].kind, BlockKind::Paragraph);
    }

    #[test]
    fn abbreviation_guard() {
        let s = split_sentences("A. B.", 0..5, &["a.".to_string()]);
        assert_eq!(s.len(), 1);
        let s = split_sentences("A. B.", 0..5, &[]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn parenthesised_material_is_never_split() {
        let t = "X (grade C). Y.";
        let s = split_sentences(t, 0..t.len(), &[]);
        assert_eq!(s.iter().map(|(r, _)| &t[r.clone()]).collect::<Vec<_>>(), ["X (grade C).", "Y."]);
        let t = "Des biopsies sont recommandées (...). Les biopsies isolées (cf. supra. ici) sont insuffisantes.";
        assert_eq!(split_sentences(t, 0..t.len(), &[]).len(), 2);
    }

    #[test]
    fn statins_has_recommendation_then_justification_sentence() {
        let d = parse(STATINS);
        assert_eq!(d.sentences.len(), 2);
        assert!(d.clause(d.sentences[1].first_clause).text.starts_with("En effet"));
    }

    #[test]
    fn biopsies_first_sentence_has_three_clauses() {
        let texts = clause_texts(
            "Chez le sujet non immunodéprimé, en cas d'aspect macroscopique normal de la muqueuse colique, des biopsies coliques nombreuses et étagées sont recommandées (...).",
        );
        assert_eq!(
            texts,
            [
                "Chez le sujet non immunodéprimé",
                "en cas d'aspect macroscopique normal de la muqueuse colique",
                "des biopsies coliques nombreuses et étagées sont recommandées (...)."
            ]
        );
    }

    #[test]
    fn sentence_without_connectors_is_one_clause() {
        assert_eq!(clause_texts("Les biopsies isolées sont insuffisantes.").len(), 1);
    }

    #[test]
    fn coordinated_finite_verb_groups_split() {
        let texts = clause_texts(
            "la diététique aura au préalable été réévaluée et un facteur intercurrent de décompensation aura été recherchée.",
        );
        assert_eq!(
            texts,
            [
                "la diététique aura au préalable été réévaluée",
                "et un facteur intercurrent de décompensation aura été recherchée."
            ]
        );
    }

    #[test]
    fn mid_clause_condition_connector_opens_a_clause() {
        let d = parse(INSULIN);
        let s0: Vec<&str> = d.sentences[0].clauses().map(|c| d.clauses[c].text.as_str()).collect();
        assert_eq!(s0.len(), 2);
        assert_eq!(s0[0], "L'indication d'une insulinothérapie est recommandée");
        assert!(s0[1].starts_with("lorsque l'HbA1c est > 8%, sur deux"));
        let s2: Vec<&str> = d.sentences[2].clauses().map(|c| d.clauses[c].text.as_str()).collect();
        assert_eq!(s2[0], "Dans les deux cas");
        assert_eq!(s2.len(), 3);
    }

    #[test]
    fn positions_follow_sentence_and_paragraph() {
        let d = parse(STATINS);
        assert_eq!(d.clauses[0].position_in_sentence, SentencePosition::Initial);
        assert_eq!(d.clauses[0].position_in_paragraph, ParagraphPosition::Initial);
        assert_eq!(d.clauses[1].position_in_sentence, SentencePosition::Medial);
        let second = d.sentences[1].first_clause;
        assert_eq!(d.clauses[second].position_in_sentence, SentencePosition::Initial);
        assert_eq!(d.clauses[second].position_in_paragraph, ParagraphPosition::NonInitial);
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        assert_eq!(decode(b"ab\xffc"), Err(IngestError::Encoding { offset: 2 }));
    }
}
