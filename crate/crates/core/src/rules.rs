//! Cue-bundle rule tables: `feature&feature=>Kind<TAB>score`, plus a `#threshold` line.

use std::fmt;
use std::str::FromStr;

use crate::error::FormatError;

pub const DEFAULT_THRESHOLD: f64 = 3.841;

const DEFAULT_RULES: &str = include_str!("../data/rules/default.rules");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegmentKind {
    Condition,
    Action,
    Explanation,
    Untyped,
}

impl SegmentKind {
    pub const TYPED: [SegmentKind; 3] = [SegmentKind::Condition, SegmentKind::Action, SegmentKind::Explanation];

    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Condition => "Condition",
            SegmentKind::Action => "Action",
            SegmentKind::Explanation => "Explanation",
            SegmentKind::Untyped => "Untyped",
        }
    }
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegmentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [SegmentKind::Condition, SegmentKind::Action, SegmentKind::Explanation, SegmentKind::Untyped]
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown segment kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    /// Sorted, deduplicated feature conjunction.
    pub features: Vec<String>,
    pub kind: SegmentKind,
    pub score: f64,
}

impl Rule {
    pub fn new(mut features: Vec<String>, kind: SegmentKind, score: f64) -> Self {
        features.sort();
        features.dedup();
        Rule { features, kind, score }
    }

    pub fn conjunction(&self) -> String {
        self.features.join("&")
    }

    pub fn fires_on(&self, clause_features: &std::collections::BTreeSet<String>) -> bool {
        self.features.iter().all(|f| clause_features.contains(f))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleTable {
    pub rules: Vec<Rule>,
    pub threshold: f64,
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::parse(DEFAULT_RULES).expect("bundled rule table is valid")
    }
}

impl RuleTable {
    pub fn empty(threshold: f64) -> Self {
        RuleTable {
            rules: Vec::new(),
            threshold,
        }
    }

    /// Rules whose score reaches the threshold.
    pub fn active(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(|r| r.score >= self.threshold)
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut table = RuleTable::empty(DEFAULT_THRESHOLD);
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            let err = |m: &str| FormatError::new("rule table", lineno, m);
            let line = line.trim_end_matches('\r');
            if let Some(t) = line.strip_prefix("#threshold") {
                table.threshold = t.trim().parse().map_err(|_| err("bad threshold"))?;
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, score) = line.split_once('\t').ok_or_else(|| err("expected rule<TAB>score"))?;
            let score: f64 = score.trim().parse().map_err(|_| err("bad score"))?;
            if score.is_nan() || score < 0.0 {
                return Err(err("score must be non-negative"));
            }
            let (conj, kind) = lhs.split_once("=>").ok_or_else(|| err("missing `=>`"))?;
            let kind: SegmentKind = kind.trim().parse().map_err(|m: String| err(&m))?;
            if kind == SegmentKind::Untyped {
                return Err(err("rules cannot produce Untyped"));
            }
            let features: Vec<String> = conj.split('&').map(|f| f.trim().to_string()).collect();
            if features.iter().any(String::is_empty) {
                return Err(err("empty feature"));
            }
            table.rules.push(Rule::new(features, kind, score));
        }
        Ok(table)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("#threshold {}\n", self.threshold);
        for r in &self.rules {
            out.push_str(&format!("{}=>{}\t{}\n", r.conjunction(), r.kind, r.score));
        }
        out
    }
}
