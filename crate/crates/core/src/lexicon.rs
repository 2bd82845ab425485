//! Cue lexicons and the word-pattern language they are written in.
//!
//! A lexicon file is TSV: `pattern<TAB>cue_class<TAB>attr=val;attr=val`, `#` starts a
//! comment line. A pattern is a space-separated sequence of slots:
//!
//! * `word` or `a|b|c`: literal alternatives, compared case-insensitively
//! * `<lemma>`: any form of `lemma` listed in the inflection table
//! * `<lemma:feature>`: forms whose tense or mood equals `feature` (`<avoir:future>`)
//! * `#num`: a number word from the number table, or digits
//! * `_`: any single word
//!
//! A trailing `?` makes a slot optional.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::LexiconError;
use crate::facts::CueClass;
use crate::text::{normalize_word, Token, TokenKind};

/// Attribute keys a lexicon entry may carry.
pub const ATTR_KEYS: [&str; 4] = ["polarity", "injunctive", "referents", "domain"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tense {
    Present,
    Future,
    Past,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mood {
    Indicative,
    Imperative,
    Conditional,
    Infinitive,
    Participle,
}

impl Tense {
    pub fn as_str(self) -> &'static str {
        match self {
            Tense::Present => "present",
            Tense::Future => "future",
            Tense::Past => "past",
            Tense::None => "none",
        }
    }
}

impl Mood {
    pub fn as_str(self) -> &'static str {
        match self {
            Mood::Indicative => "indicative",
            Mood::Imperative => "imperative",
            Mood::Conditional => "conditional",
            Mood::Infinitive => "infinitive",
            Mood::Participle => "participle",
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Mood::Indicative | Mood::Imperative | Mood::Conditional)
    }
}

impl FromStr for Tense {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "present" => Ok(Tense::Present),
            "future" => Ok(Tense::Future),
            "past" => Ok(Tense::Past),
            "none" | "" | "-" | "_" => Ok(Tense::None),
            _ => Err(format!("unknown tense `{s}`")),
        }
    }
}

impl FromStr for Mood {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "indicative" => Ok(Mood::Indicative),
            "imperative" => Ok(Mood::Imperative),
            "conditional" => Ok(Mood::Conditional),
            "infinitive" => Ok(Mood::Infinitive),
            "participle" => Ok(Mood::Participle),
            _ => Err(format!("unknown mood `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub lemma: String,
    pub tense: Tense,
    pub mood: Mood,
}

/// Per-verb form tables for the lexicon verbs and auxiliaries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InflectionTable {
    forms: HashMap<String, Vec<Analysis>>,
    lemmas: HashSet<String>,
}

impl InflectionTable {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, LexiconError> {
        let mut table = InflectionTable::default();
        for (lineno, cols) in data_lines(text) {
            let err = |m: String| LexiconError::parse(source_name, lineno, m);
            if cols.len() != 4 {
                return Err(err("expected form, lemma, tense, mood".into()));
            }
            let analysis = Analysis {
                lemma: normalize_word(cols[1]),
                tense: cols[2].parse().map_err(err)?,
                mood: cols[3].parse().map_err(err)?,
            };
            table.lemmas.insert(analysis.lemma.clone());
            let entry = table.forms.entry(normalize_word(cols[0])).or_default();
            if !entry.contains(&analysis) {
                entry.push(analysis);
            }
        }
        Ok(table)
    }

    pub fn analyses(&self, form: &str) -> &[Analysis] {
        self.forms.get(form).map_or(&[], Vec::as_slice)
    }

    pub fn has_lemma(&self, lemma: &str) -> bool {
        self.lemmas.contains(lemma)
    }

    pub fn is_finite_form(&self, form: &str) -> bool {
        self.analyses(form).iter().any(|a| a.mood.is_finite())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FunctionWords {
    pub coordinators: HashSet<String>,
    pub leads: HashSet<String>,
    pub auxiliaries: HashSet<String>,
}

impl FunctionWords {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, LexiconError> {
        let mut fw = FunctionWords::default();
        for (lineno, cols) in data_lines(text) {
            if cols.len() != 2 {
                return Err(LexiconError::parse(source_name, lineno, "expected word, role"));
            }
            let word = normalize_word(cols[0]);
            match cols[1] {
                "coordinator" => fw.coordinators.insert(word),
                "lead" => fw.leads.insert(word),
                "auxiliary" => fw.auxiliaries.insert(word),
                other => {
                    return Err(LexiconError::parse(source_name, lineno, format!("unknown role `{other}`")))
                }
            };
        }
        Ok(fw)
    }

    /// Words that may precede a clause-initial cue without making it non-initial.
    pub fn is_skippable_lead(&self, norm: &str) -> bool {
        self.coordinators.contains(norm) || self.leads.contains(norm)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NumberWords(HashMap<String, u32>);

impl NumberWords {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, LexiconError> {
        let mut map = HashMap::new();
        for (lineno, cols) in data_lines(text) {
            let value = cols
                .get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| LexiconError::parse(source_name, lineno, "expected word, integer"))?;
            map.insert(normalize_word(cols[0]), value);
        }
        Ok(NumberWords(map))
    }

    pub fn value(&self, token: &Token) -> Option<u32> {
        match token.kind {
            TokenKind::Number => token.norm.parse().ok(),
            _ => self.0.get(&token.norm).copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Words(Vec<String>),
    Inflected { lemma: String, filter: Option<String> },
    Number,
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PatternSlot {
    slot: Slot,
    optional: bool,
}

/// A compiled word-sequence pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    source: String,
    slots: Vec<PatternSlot>,
}

/// Tables a pattern consults while matching.
#[derive(Debug, Clone, Copy)]
pub struct MatchContext<'a> {
    pub inflections: &'a InflectionTable,
    pub numbers: &'a NumberWords,
}

/// One way a pattern matched: token range plus captured slot values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatch {
    pub start: usize,
    pub end: usize,
    pub number: Option<u32>,
    /// Token indices matched by `<lemma>` slots.
    pub inflected: Vec<usize>,
}

impl Pattern {
    pub fn parse(source: &str) -> Result<Self, String> {
        let mut slots = Vec::new();
        for raw in source.split_whitespace() {
            let (body, optional) = match raw.strip_suffix('?') {
                Some(b) if !b.is_empty() => (b, true),
                _ => (raw, false),
            };
            let slot = if let Some(inner) = body.strip_prefix('<').and_then(|b| b.strip_suffix('>')) {
                let (lemma, filter) = match inner.split_once(':') {
                    Some((l, f)) => (l, Some(f.to_string())),
                    None => (inner, None),
                };
                if lemma.is_empty() {
                    return Err(format!("empty lemma in `{raw}`"));
                }
                if let Some(f) = &filter {
                    if f.parse::<Tense>().is_err() && f.parse::<Mood>().is_err() {
                        return Err(format!("unknown inflection filter `{f}`"));
                    }
                }
                Slot::Inflected {
                    lemma: normalize_word(lemma),
                    filter,
                }
            } else if body == "#num" {
                Slot::Number
            } else if body == "_" {
                Slot::Any
            } else {
                let alts: Vec<String> = body.split('|').map(normalize_word).collect();
                if alts.iter().any(|a| a.is_empty()) {
                    return Err(format!("empty alternative in `{raw}`"));
                }
                Slot::Words(alts)
            };
            slots.push(PatternSlot { slot, optional });
        }
        if slots.iter().all(|s| s.optional) {
            return Err("pattern has no required slot".into());
        }
        Ok(Pattern {
            source: source.split_whitespace().collect::<Vec<_>>().join(" "),
            slots,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().filter_map(|s| match &s.slot {
            Slot::Inflected { lemma, .. } => Some(lemma.as_str()),
            _ => None,
        })
    }

    /// All matches starting at token `start`.
    pub fn match_at(&self, tokens: &[Token], start: usize, ctx: MatchContext<'_>) -> Vec<PatternMatch> {
        let mut out = Vec::new();
        let mut acc = PatternMatch {
            start,
            end: start,
            number: None,
            inflected: Vec::new(),
        };
        self.step(tokens, 0, start, ctx, &mut acc, &mut out);
        out.retain(|m| m.end > m.start);
        out
    }

    fn step(
        &self,
        tokens: &[Token],
        slot: usize,
        pos: usize,
        ctx: MatchContext<'_>,
        acc: &mut PatternMatch,
        out: &mut Vec<PatternMatch>,
    ) {
        if slot == self.slots.len() {
            let mut m = acc.clone();
            m.end = pos;
            out.push(m);
            return;
        }
        let ps = &self.slots[slot];
        if ps.optional {
            self.step(tokens, slot + 1, pos, ctx, acc, out);
        }
        let Some(tok) = tokens.get(pos) else { return };
        let saved = (acc.number, acc.inflected.len());
        let ok = match &ps.slot {
            Slot::Words(alts) => alts.contains(&tok.norm),
            Slot::Any => tok.kind != TokenKind::Punct,
            Slot::Number => match ctx.numbers.value(tok) {
                Some(v) => {
                    acc.number = Some(v);
                    true
                }
                None => false,
            },
            Slot::Inflected { lemma, filter } => {
                let hit = ctx.inflections.analyses(&tok.norm).iter().any(|a| {
                    a.lemma == *lemma
                        && filter
                            .as_deref()
                            .is_none_or(|f| a.tense.as_str() == f || a.mood.as_str() == f)
                });
                if hit {
                    acc.inflected.push(pos);
                }
                hit
            }
        };
        if ok {
            self.step(tokens, slot + 1, pos + 1, ctx, acc, out);
        }
        acc.number = saved.0;
        acc.inflected.truncate(saved.1);
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub pattern: Pattern,
    pub cue_class: CueClass,
    pub attrs: BTreeMap<String, String>,
}

/// A lexicon match: which entry, and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexMatch {
    pub entry: usize,
    pub cue_class: CueClass,
    pub m: PatternMatch,
}

impl LexMatch {
    pub fn len(&self) -> usize {
        self.m.end - self.m.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn overlaps(&self, other: &LexMatch) -> bool {
        self.m.start < other.m.end && other.m.start < self.m.end
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub language: String,
    pub entries: Vec<LexiconEntry>,
}

impl Lexicon {
    pub fn new(language: &str) -> Self {
        Lexicon {
            language: language.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn parse(text: &str, language: &str, source_name: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new(language);
        lex.extend_from_tsv(text, source_name)?;
        Ok(lex)
    }

    pub fn extend_from_tsv(&mut self, text: &str, source_name: &str) -> Result<(), LexiconError> {
        for (lineno, cols) in data_lines(text) {
            let err = |m: String| LexiconError::parse(source_name, lineno, m);
            if cols.len() < 2 || cols.len() > 3 {
                return Err(err("expected pattern, cue_class[, attributes]".into()));
            }
            let pattern = Pattern::parse(cols[0]).map_err(err)?;
            let cue_class: CueClass = cols[1].parse().map_err(err)?;
            let mut attrs = BTreeMap::new();
            for kv in cols.get(2).copied().unwrap_or("").split(';').filter(|s| !s.trim().is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| err(format!("attribute `{kv}` is not key=value")))?;
                let k = k.trim();
                if !ATTR_KEYS.contains(&k) {
                    return Err(err(format!("unknown attribute key `{k}`")));
                }
                attrs.insert(k.to_string(), v.trim().to_string());
            }
            if self
                .entries
                .iter()
                .any(|e| e.pattern.source == pattern.source && e.cue_class == cue_class)
            {
                return Err(err(format!("duplicate entry `{}` {}", pattern.source, cue_class)));
            }
            self.entries.push(LexiconEntry {
                pattern,
                cue_class,
                attrs,
            });
        }
        Ok(())
    }

    pub fn merge(&mut self, other: Lexicon) {
        for e in other.entries {
            if !self
                .entries
                .iter()
                .any(|x| x.pattern.source == e.pattern.source && x.cue_class == e.cue_class)
            {
                self.entries.push(e);
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every match of every entry whose class passes `keep`, at every start position.
    pub fn find_matches(
        &self,
        tokens: &[Token],
        ctx: MatchContext<'_>,
        keep: impl Fn(CueClass) -> bool,
    ) -> Vec<LexMatch> {
        let mut out = Vec::new();
        for (idx, entry) in self.entries.iter().enumerate() {
            if !keep(entry.cue_class) {
                continue;
            }
            for start in 0..tokens.len() {
                for m in entry.pattern.match_at(tokens, start, ctx) {
                    out.push(LexMatch {
                        entry: idx,
                        cue_class: entry.cue_class,
                        m,
                    });
                }
            }
        }
        out
    }

    fn check_lemmas(&self, inflections: &InflectionTable) -> Result<(), String> {
        for e in &self.entries {
            for lemma in e.pattern.lemmas() {
                if !inflections.has_lemma(lemma) {
                    return Err(format!("pattern `{}` uses lemma `{lemma}` absent from the inflection table", e.pattern));
                }
            }
        }
        Ok(())
    }
}

/// Keeps, per cue class, the longest non-overlapping matches (earlier start breaks ties).
pub fn longest_matches(mut matches: Vec<LexMatch>) -> Vec<LexMatch> {
    matches.sort_by(|a, b| {
        a.cue_class
            .cmp(&b.cue_class)
            .then(b.len().cmp(&a.len()))
            .then(a.m.start.cmp(&b.m.start))
            .then(a.entry.cmp(&b.entry))
    });
    let mut kept: Vec<LexMatch> = Vec::new();
    for m in matches {
        if !kept.iter().any(|k| k.cue_class == m.cue_class && k.overlaps(&m)) {
            kept.push(m);
        }
    }
    kept.sort_by_key(|m| (m.m.start, m.cue_class, m.entry));
    kept
}

/// Iterates `(line number, tab-separated columns)` skipping blanks and `#` comments.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let t = line.trim_end_matches('\r');
        if t.trim().is_empty() || t.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, t.split('\t').map(str::trim).collect()))
        }
    })
}

/// Every table the pipeline needs for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconPack {
    /// Connectors, verbs and discourse markers.
    pub cues: Lexicon,
    pub anaphora: Lexicon,
    /// Pathology and other domain terms, used to frame headings.
    pub domain: Lexicon,
    pub inflections: InflectionTable,
    pub numbers: NumberWords,
    pub function_words: FunctionWords,
    pub abbreviations: Vec<String>,
}

const CUE_FILES: [&str; 3] = ["connectors.tsv", "verbs.tsv", "markers.tsv"];

macro_rules! builtin_file {
    ($name:literal) => {
        ($name, include_str!(concat!("../data/lexicons/fr/", $name)))
    };
}

const BUILTIN_FR: [(&str, &str); 9] = [
    builtin_file!("connectors.tsv"),
    builtin_file!("verbs.tsv"),
    builtin_file!("markers.tsv"),
    builtin_file!("anaphora.tsv"),
    builtin_file!("domain.tsv"),
    builtin_file!("inflections.tsv"),
    builtin_file!("numbers.tsv"),
    builtin_file!("function_words.tsv"),
    builtin_file!("abbreviations.txt"),
];

impl LexiconPack {
    /// The French pack compiled into the binary.
    pub fn builtin() -> Self {
        Self::from_sources(|name| {
            BUILTIN_FR
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| Ok(t.to_string()))
                .unwrap_or_else(|| Ok(String::new()))
        })
        .expect("builtin lexicon pack is valid")
    }

    /// Loads a pack directory laid out like `data/lexicons/fr`.
    pub fn load(dir: &Path) -> Result<Self, LexiconError> {
        Self::from_sources(|name| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| LexiconError::Io { path, source })
        })
    }

    fn from_sources(read: impl Fn(&str) -> Result<String, LexiconError>) -> Result<Self, LexiconError> {
        let inflections = InflectionTable::parse(&read("inflections.tsv")?, "inflections.tsv")?;
        let mut cues = Lexicon::new("fr");
        for name in CUE_FILES {
            cues.extend_from_tsv(&read(name)?, name)?;
        }
        let anaphora = Lexicon::parse(&read("anaphora.tsv")?, "fr", "anaphora.tsv")?;
        let domain = Lexicon::parse(&read("domain.tsv")?, "fr", "domain.tsv")?;
        for (name, lex) in [("cue files", &cues), ("anaphora.tsv", &anaphora), ("domain.tsv", &domain)] {
            lex.check_lemmas(&inflections)
                .map_err(|m| LexiconError::parse(name, 0, m))?;
        }
        let abbreviations = read("abbreviations.txt")?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(normalize_word)
            .collect();
        Ok(LexiconPack {
            cues,
            anaphora,
            domain,
            inflections,
            numbers: NumberWords::parse(&read("numbers.tsv")?, "numbers.tsv")?,
            function_words: FunctionWords::parse(&read("function_words.tsv")?, "function_words.tsv")?,
            abbreviations,
        })
    }

    /// An empty pack: no cues, no clause splitting beyond sentences.
    pub fn empty() -> Self {
        LexiconPack {
            cues: Lexicon::new("none"),
            anaphora: Lexicon::new("none"),
            domain: Lexicon::new("none"),
            inflections: InflectionTable::default(),
            numbers: NumberWords::default(),
            function_words: FunctionWords::default(),
            abbreviations: Vec::new(),
        }
    }

    pub fn without_domain(mut self) -> Self {
        self.domain = Lexicon::new(&self.domain.language);
        self
    }

    pub fn match_context(&self) -> MatchContext<'_> {
        MatchContext {
            inflections: &self.inflections,
            numbers: &self.numbers,
        }
    }

    /// Matches of discourse connectors (cue and anaphora lexicons), used for clause splitting.
    pub fn connector_matches(&self, tokens: &[Token]) -> Vec<LexMatch> {
        let ctx = self.match_context();
        let mut all = self.cues.find_matches(tokens, ctx, CueClass::is_discourse_connector);
        let offset = self.cues.entries.len();
        all.extend(
            self.anaphora
                .find_matches(tokens, ctx, CueClass::is_discourse_connector)
                .into_iter()
                .map(|mut m| {
                    m.entry += offset;
                    m
                }),
        );
        all
    }
}
