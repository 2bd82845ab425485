//! Scoring against gold annotations: lenient segment matching, precision/recall with
//! their harmonic mean, couple-based scope accuracy and inter-annotator agreement.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{EvalError, FormatError};
use crate::text::collapse_whitespace;

/// How segment texts are compared.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Matcher {
    /// Minimum normalized Levenshtein similarity accepted in addition to exact matches.
    pub fuzzy: Option<f64>,
}

impl Matcher {
    pub fn exact() -> Self {
        Matcher { fuzzy: None }
    }

    pub fn matches(&self, pred: &str, gold: &str) -> bool {
        let (p, g) = (normalize_for_match(pred), normalize_for_match(gold));
        p == g || self.fuzzy.is_some_and(|min| strsim::normalized_levenshtein(&p, &g) >= min)
    }
}

/// Collapses whitespace, then repeatedly drops trailing punctuation and a trailing
/// parenthesized group, so "X (accord professionnel)." and "X" compare equal.
pub fn normalize_for_match(s: &str) -> String {
    let mut t = collapse_whitespace(s);
    loop {
        let trimmed = t
            .trim_end_matches(|c: char| c.is_whitespace() || matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '\u{2026}'))
            .to_string();
        let stripped = strip_trailing_group(&trimmed).unwrap_or_else(|| trimmed.clone());
        if stripped == t {
            return t;
        }
        t = stripped;
    }
}

fn strip_trailing_group(s: &str) -> Option<String> {
    if !s.ends_with(')') {
        return None;
    }
    let mut depth = 0i32;
    for (i, c) in s.char_indices().rev() {
        match c {
            ')' => depth += 1,
            '(' => {
                depth -= 1;
                if depth == 0 {
                    return Some(s[..i].trim_end().to_string());
                }
            }
            _ => {}
        }
    }
    None
}

/// Exact (parenthetical-lenient) comparison.
pub fn match_segment(pred: &str, gold: &str) -> bool {
    Matcher::exact().matches(pred, gold)
}

pub fn p_and_r(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentScore {
    pub precision: f64,
    pub recall: f64,
    pub p_and_r: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Set when a denominator was zero and the affected ratio was reported as 0.
    pub undefined: bool,
}

impl SegmentScore {
    pub fn from_ratios(precision: f64, recall: f64) -> Self {
        SegmentScore {
            precision,
            recall,
            p_and_r: p_and_r(precision, recall),
            ..Default::default()
        }
    }

    pub fn from_counts(tp: usize, n_pred: usize, n_gold: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let (p, r) = (ratio(tp, n_pred), ratio(tp, n_gold));
        SegmentScore {
            precision: p,
            recall: r,
            p_and_r: p_and_r(p, r),
            tp,
            fp: n_pred - tp,
            fn_: n_gold - tp,
            undefined: n_pred == 0 || n_gold == 0,
        }
    }
}

/// One-to-one greedy matching; returns the number of matched pairs.
fn matched_pairs<T>(pred: &[T], gold: &[T], eq: impl Fn(&T, &T) -> bool) -> usize {
    let mut used = vec![false; gold.len()];
    let mut n = 0;
    for p in pred {
        if let Some(j) = (0..gold.len()).find(|&j| !used[j] && eq(p, &gold[j])) {
            used[j] = true;
            n += 1;
        }
    }
    n
}

pub fn score_segments(pred: &[String], gold: &[String], matcher: Matcher) -> SegmentScore {
    let tp = matched_pairs(pred, gold, |p, g| matcher.matches(p, g));
    SegmentScore::from_counts(tp, pred.len(), gold.len())
}

/// A `(condition chain, action)` pair as read from a couple file.
pub type CoupleText = (Vec<String>, String);

fn couple_eq(matcher: Matcher) -> impl Fn(&CoupleText, &CoupleText) -> bool {
    move |a, b| {
        matcher.matches(&a.1, &b.1)
            && a.0.len() == b.0.len()
            && a.0.iter().zip(&b.0).all(|(x, y)| matcher.matches(x, y))
    }
}

pub fn common_couples(a: &[CoupleText], b: &[CoupleText], matcher: Matcher) -> usize {
    matched_pairs(a, b, couple_eq(matcher))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScopeScore {
    pub common: usize,
    pub gold: usize,
    pub predicted: usize,
    pub accuracy: f64,
}

/// Accuracy = common couples / gold couples.
pub fn score_scope(pred: &[CoupleText], gold: &[CoupleText], matcher: Matcher) -> Result<ScopeScore, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let common = common_couples(pred, gold, matcher);
    Ok(ScopeScore {
        common,
        gold: gold.len(),
        predicted: pred.len(),
        accuracy: common as f64 / gold.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub common: usize,
    /// common / |b|: `a` judged against `b`.
    pub a_against_b: f64,
    /// common / |a|.
    pub b_against_a: f64,
    pub mean: f64,
}

/// Couple agreement in both directions; neither annotator is privileged.
pub fn agreement(a: &[CoupleText], b: &[CoupleText], matcher: Matcher) -> Agreement {
    if a.is_empty() && b.is_empty() {
        return Agreement {
            common: 0,
            a_against_b: 1.0,
            b_against_a: 1.0,
            mean: 1.0,
        };
    }
    let common = common_couples(a, b, matcher);
    let ratio = |d: usize| if d == 0 { 0.0 } else { common as f64 / d as f64 };
    let (ab, ba) = (ratio(b.len()), ratio(a.len()));
    Agreement {
        common,
        a_against_b: ab,
        b_against_a: ba,
        mean: (ab + ba) / 2.0,
    }
}

/// Reads the couple TSV written by the scope engine.
pub fn parse_couples(text: &str) -> Result<Vec<CoupleText>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (chain, action) = line
            .split_once('\t')
            .ok_or_else(|| FormatError::new("couple file", n + 1, "expected chain<TAB>action"))?;
        let chain = if chain.trim().is_empty() {
            Vec::new()
        } else {
            chain.split(" || ").map(|c| c.trim().to_string()).collect()
        };
        out.push((chain, action.trim().to_string()));
    }
    Ok(out)
}

/// Distinct condition texts and distinct action texts named in a couple set.
pub fn segments_of(couples: &[CoupleText]) -> (Vec<String>, Vec<String>) {
    let mut conds: Vec<String> = Vec::new();
    let mut actions: Vec<String> = Vec::new();
    for (chain, action) in couples {
        for c in chain {
            if !conds.contains(c) {
                conds.push(c.clone());
            }
        }
        if !actions.contains(action) {
            actions.push(action.clone());
        }
    }
    (conds, actions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub per_kind: BTreeMap<String, SegmentScore>,
    pub overall: SegmentScore,
    pub scope: ScopeScore,
    pub agreement: Agreement,
}

impl ScoreReport {
    /// Scores predicted couples against gold couples (segments derived from couple texts).
    pub fn from_couples(pred: &[CoupleText], gold: &[CoupleText], matcher: Matcher) -> Result<Self, EvalError> {
        let scope = score_scope(pred, gold, matcher)?;
        let (pc, pa) = segments_of(pred);
        let (gc, ga) = segments_of(gold);
        let cond = score_segments(&pc, &gc, matcher);
        let act = score_segments(&pa, &ga, matcher);
        let overall = SegmentScore::from_counts(cond.tp + act.tp, pc.len() + pa.len(), gc.len() + ga.len());
        let mut per_kind = BTreeMap::new();
        per_kind.insert("condition".to_string(), cond);
        per_kind.insert("action".to_string(), act);
        Ok(ScoreReport {
            per_kind,
            overall,
            scope,
            agreement: agreement(pred, gold, matcher),
        })
    }

    /// Aligned plain-text table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>6} {:>6} {:>6} {:>5} {:>5} {:>5}", "kind", "P", "R", "P&R", "tp", "fp", "fn");
        let rows = self.per_kind.iter().map(|(k, s)| (k.as_str(), s)).chain([("overall", &self.overall)]);
        for (k, s) in rows {
            let _ = writeln!(
                out,
                "{:<12} {:>6.3} {:>6.3} {:>6.3} {:>5} {:>5} {:>5}",
                k, s.precision, s.recall, s.p_and_r, s.tp, s.fp, s.fn_
            );
        }
        let _ = writeln!(
            out,
            "scope accuracy {:.4} ({} common of {} gold, {} predicted)",
            self.scope.accuracy, self.scope.common, self.scope.gold, self.scope.predicted
        );
        let _ = writeln!(
            out,
            "agreement      {:.4} pred-vs-gold, {:.4} gold-vs-pred, mean {:.4}",
            self.agreement.a_against_b, self.agreement.b_against_a, self.agreement.mean
        );
        out
    }

    /// Machine-readable `key=value` lines.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        let rows = self.per_kind.iter().map(|(k, s)| (k.as_str(), s)).chain([("overall", &self.overall)]);
        for (k, s) in rows {
            let _ = writeln!(out, "{k}.precision={:.6}", s.precision);
            let _ = writeln!(out, "{k}.recall={:.6}", s.recall);
            let _ = writeln!(out, "{k}.p_and_r={:.6}", s.p_and_r);
            let _ = writeln!(out, "{k}.tp={}\n{k}.fp={}\n{k}.fn={}", s.tp, s.fp, s.fn_);
            if s.undefined {
                let _ = writeln!(out, "{k}.undefined=true");
            }
        }
        let _ = writeln!(out, "scope.common={}", self.scope.common);
        let _ = writeln!(out, "scope.gold={}", self.scope.gold);
        let _ = writeln!(out, "scope.accuracy={:.6}", self.scope.accuracy);
        let _ = writeln!(out, "agreement.pred_vs_gold={:.6}", self.agreement.a_against_b);
        let _ = writeln!(out, "agreement.gold_vs_pred={:.6}", self.agreement.b_against_a);
        let _ = writeln!(out, "agreement.mean={:.6}", self.agreement.mean);
        out
    }
}
