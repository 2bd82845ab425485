//! Cue-bundle derivation: every conjunction of up to three clause features is scored by
//! χ² against each segment kind over a gold-annotated corpus.
//!
//! A conjunction becomes a rule for a kind when it is positively associated with the
//! kind (ad > bc), scores at least the threshold, and scores strictly higher than every
//! proper sub-conjunction. Conjunctions selecting exactly the same clauses are
//! redundant; only the shortest, then lexicographically first, is kept.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use bitvec::prelude::*;

use crate::error::{FormatError, TrainError};
use crate::lexicon::LexiconPack;
use crate::par::{self, ExecMode};
use crate::pipeline::{analyze_text, PipelineConfig};
use crate::rules::{Rule, RuleTable, SegmentKind};
use crate::segment::clause_features;
use crate::stage::Stage;

pub const MAX_CONJUNCTION: usize = 3;

/// Name of the standoff gold file inside a corpus directory.
pub const GOLD_FILE: &str = "segments.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSegment {
    pub doc_id: String,
    pub first: usize,
    pub last: usize,
    pub kind: SegmentKind,
}

/// Standoff TSV: `doc_id<TAB>first_clause<TAB>last_clause<TAB>kind`.
pub fn parse_gold(text: &str) -> Result<Vec<GoldSegment>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: &str| FormatError::new("gold segments", n + 1, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err("expected doc_id, first, last, kind"));
        }
        let first: usize = cols[1].trim().parse().map_err(|_| err("bad first clause"))?;
        let last: usize = cols[2].trim().parse().map_err(|_| err("bad last clause"))?;
        if last < first {
            return Err(err("last clause precedes first"));
        }
        let kind: SegmentKind = cols[3].trim().parse().map_err(|m: String| err(&m))?;
        if kind == SegmentKind::Untyped {
            return Err(err("gold kind must be Condition, Action or Explanation"));
        }
        out.push(GoldSegment {
            doc_id: cols[0].trim().to_string(),
            first,
            last,
            kind,
        });
    }
    Ok(out)
}

/// One clause: its features and its gold kind, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub features: BTreeSet<String>,
    pub label: Option<SegmentKind>,
}

/// χ² of a 2×2 table, `a` = feature & kind, `b` = feature & ¬kind, `c` = ¬feature & kind,
/// `d` = ¬feature & ¬kind. Any empty margin gives 0.
pub fn chi_square(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let n = (a + b + c + d) as f64;
    let margins = [(a + b) as f64, (c + d) as f64, (a + c) as f64, (b + d) as f64];
    if margins.contains(&0.0) {
        return 0.0;
    }
    let diff = a as f64 * d as f64 - b as f64 * c as f64;
    n * diff * diff / margins.iter().product::<f64>()
}

type Bits = BitVec<u64, Lsb0>;

fn and(x: &Bits, y: &Bits) -> Bits {
    x.clone() & y
}

fn count(x: &Bits) -> u64 {
    x.count_ones() as u64
}

fn subsets_upto(items: &[usize], k: usize, out: &mut BTreeSet<Vec<usize>>) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        if !cur.is_empty() {
            out.insert(cur.clone());
        }
        if cur.len() == k {
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), out);
}

/// Scored candidate before filtering.
struct Scored {
    conj: Vec<usize>,
    name: String,
    kind: SegmentKind,
    score: f64,
    positive: bool,
}

/// Derives a rule table from labelled clause samples.
pub fn train_from_features(samples: &[Sample], threshold: f64, mode: ExecMode) -> RuleTable {
    let names: Vec<&String> = samples
        .iter()
        .flat_map(|s| &s.features)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&String, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let n = samples.len();

    let mut feature_bits: Vec<Bits> = vec![bitvec![u64, Lsb0; 0; n]; names.len()];
    let mut label_bits: BTreeMap<SegmentKind, Bits> = BTreeMap::new();
    let mut candidates = BTreeSet::new();
    for (i, s) in samples.iter().enumerate() {
        let ids: Vec<usize> = s.features.iter().map(|f| index[f]).collect();
        for &f in &ids {
            feature_bits[f].set(i, true);
        }
        if let Some(k) = s.label {
            label_bits.entry(k).or_insert_with(|| bitvec![u64, Lsb0; 0; n]).set(i, true);
        }
        subsets_upto(&ids, MAX_CONJUNCTION, &mut candidates);
    }
    let candidates: Vec<Vec<usize>> = candidates.into_iter().collect();

    // Support per candidate, then one representative per distinct support.
    let supports: Vec<Bits> = par::map(mode, &candidates, |conj| {
        conj[1..].iter().fold(feature_bits[conj[0]].clone(), |acc, &f| and(&acc, &feature_bits[f]))
    });
    let conj_name = |conj: &[usize]| conj.iter().map(|&f| names[f].as_str()).collect::<Vec<_>>().join("&");
    let mut representative: HashMap<&Bits, usize> = HashMap::new();
    for (i, sup) in supports.iter().enumerate() {
        representative
            .entry(sup)
            .and_modify(|r| {
                let key = |j: usize| (candidates[j].len(), conj_name(&candidates[j]));
                if key(i) < key(*r) {
                    *r = i;
                }
            })
            .or_insert(i);
    }

    let jobs: Vec<(usize, SegmentKind)> = (0..candidates.len())
        .flat_map(|i| label_bits.keys().map(move |&k| (i, k)))
        .collect();
    let scored: Vec<Scored> = par::map(mode, &jobs, |&(i, kind)| {
        let sup = &supports[i];
        let label = &label_bits[&kind];
        let a = count(&and(sup, label));
        let b = count(sup) - a;
        let c = count(label) - a;
        let d = n as u64 - a - b - c;
        Scored {
            conj: candidates[i].clone(),
            name: conj_name(&candidates[i]),
            kind,
            score: chi_square(a, b, c, d),
            positive: a * d > b * c,
        }
    });
    let score_of: HashMap<(&[usize], SegmentKind), f64> =
        scored.iter().map(|s| ((s.conj.as_slice(), s.kind), s.score)).collect();

    let improves = |s: &Scored| {
        let mut subs = BTreeSet::new();
        subsets_upto(&s.conj, s.conj.len() - 1, &mut subs);
        subs.iter().all(|sub| score_of.get(&(sub.as_slice(), s.kind)).is_none_or(|&x| s.score > x))
    };
    let mut rules: Vec<Rule> = scored
        .iter()
        .enumerate()
        .filter(|(j, s)| {
            let i = jobs[*j].0;
            s.positive && s.score >= threshold && representative[&supports[i]] == i && improves(s)
        })
        .map(|(_, s)| Rule::new(s.name.split('&').map(String::from).collect(), s.kind, s.score))
        .collect();
    rules.sort_by(|x, y| {
        y.score
            .total_cmp(&x.score)
            .then_with(|| x.conjunction().cmp(&y.conjunction()))
            .then_with(|| x.kind.cmp(&y.kind))
    });
    RuleTable { rules, threshold }
}

/// One training document: raw text plus its gold segments.
#[derive(Debug, Clone)]
pub struct TrainingDoc {
    pub id: String,
    pub text: String,
    pub gold: Vec<GoldSegment>,
}

/// Loads `<id>.txt` files and the standoff gold file from a corpus directory. Only
/// documents named in the gold file take part.
pub fn load_corpus(dir: &Path) -> Result<Vec<TrainingDoc>, TrainError> {
    let read = |path: &Path| {
        fs::read_to_string(path).map_err(|source| TrainError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    let gold = parse_gold(&read(&dir.join(GOLD_FILE))?)?;
    let mut by_doc: BTreeMap<String, Vec<GoldSegment>> = BTreeMap::new();
    for g in gold {
        by_doc.entry(g.doc_id.clone()).or_default().push(g);
    }
    let mut out = Vec::new();
    for (id, gold) in by_doc {
        let path = dir.join(format!("{id}.txt"));
        if !path.is_file() {
            return Err(TrainError::UnknownDocument(id));
        }
        out.push(TrainingDoc {
            text: read(&path)?,
            id,
            gold,
        });
    }
    Ok(out)
}

/// Turns a corpus into clause samples by running the cue stages on every document.
pub fn corpus_samples(corpus: &[TrainingDoc], pack: &LexiconPack, config: &PipelineConfig) -> Result<Vec<Sample>, TrainError> {
    let config = PipelineConfig {
        stages: vec![Stage::MaterialStructure, Stage::Cues, Stage::Morphology],
        ..config.clone()
    };
    let mut samples = Vec::new();
    for d in corpus {
        let a = analyze_text(&d.id, &d.text, pack, None, &config)?;
        let n = a.document.clauses.len();
        let mut labels = vec![None; n];
        for g in &d.gold {
            if g.last >= n {
                return Err(TrainError::OutOfRange {
                    doc_id: d.id.clone(),
                    first: g.first,
                    last: g.last,
                });
            }
            for l in &mut labels[g.first..=g.last] {
                *l = Some(g.kind);
            }
        }
        for (c, label) in labels.into_iter().enumerate() {
            samples.push(Sample {
                features: clause_features(&a.document, &a.store, c),
                label,
            });
        }
    }
    Ok(samples)
}

pub fn train_bundles(
    corpus: &[TrainingDoc],
    pack: &LexiconPack,
    config: &PipelineConfig,
    threshold: f64,
    mode: ExecMode,
) -> Result<RuleTable, TrainError> {
    if corpus.len() < 2 {
        return Err(TrainError::TooFewDocuments(corpus.len()));
    }
    let samples = corpus_samples(corpus, pack, config)?;
    Ok(train_from_features(&samples, threshold, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::DEFAULT_THRESHOLD;

    fn sample(features: &[&str], label: Option<SegmentKind>) -> Sample {
        Sample {
            features: features.iter().map(|f| f.to_string()).collect(),
            label,
        }
    }

    #[test]
    fn chi_square_reference_values() {
        assert!((chi_square(30, 10, 5, 55) - 46.89).abs() < 0.01);
        assert_eq!(chi_square(50, 0, 0, 50), 100.0);
        assert_eq!(chi_square(10, 20, 30, 60), 0.0);
        assert_eq!(chi_square(0, 0, 5, 5), 0.0);
    }

    #[test]
    fn perfect_association_gives_one_rule_scoring_n() {
        let mut samples = Vec::new();
        for i in 0..20 {
            samples.push(sample(&["cue:X", "block:paragraph"], Some(SegmentKind::Condition)));
            samples.push(sample(&["block:paragraph", if i % 2 == 0 { "noise:a" } else { "noise:b" }], None));
        }
        let t = train_from_features(&samples, DEFAULT_THRESHOLD, ExecMode::Sequential);
        assert_eq!(t.rules.len(), 1);
        assert_eq!(t.rules[0].conjunction(), "cue:X");
        assert_eq!(t.rules[0].score, 40.0);
    }

    #[test]
    fn independent_features_give_an_empty_table() {
        let mut samples = Vec::new();
        for f in ["a", "b"] {
            for label in [Some(SegmentKind::Action), None] {
                samples.push(sample(&[f], label));
            }
        }
        let t = train_from_features(&samples, DEFAULT_THRESHOLD, ExecMode::Sequential);
        assert!(t.rules.is_empty());
    }

    #[test]
    fn identical_supports_keep_one_representative() {
        let mut samples = Vec::new();
        for _ in 0..10 {
            samples.push(sample(&["lead:X", "cue:X"], Some(SegmentKind::Condition)));
            samples.push(sample(&["other"], None));
        }
        let t = train_from_features(&samples, DEFAULT_THRESHOLD, ExecMode::Sequential);
        let names: Vec<String> = t.rules.iter().map(Rule::conjunction).collect();
        assert_eq!(names, ["cue:X"]);
    }

    #[test]
    fn modes_agree() {
        let mut samples = Vec::new();
        for i in 0..60usize {
            let mut f = vec![format!("f{}", i % 3), format!("g{}", i % 5)];
            if i % 4 == 0 {
                f.push("h".into());
            }
            let label = match i % 6 {
                0 | 3 => Some(SegmentKind::Action),
                1 => Some(SegmentKind::Condition),
                _ => None,
            };
            samples.push(Sample {
                features: f.into_iter().collect(),
                label,
            });
        }
        assert_eq!(
            train_from_features(&samples, 1.0, ExecMode::Sequential),
            train_from_features(&samples, 1.0, ExecMode::Parallel)
        );
    }

    #[test]
    fn gold_parsing() {
        let g = parse_gold("d1\t0\t1\tCondition\nd1\t2\t2\taction\n").unwrap();
        assert_eq!(g[1].kind, SegmentKind::Action);
        assert_eq!(parse_gold("d1\t0\tx\tAction\n").unwrap_err().line, 1);
        assert!(parse_gold("d1\t0\t0\tUntyped\n").is_err());
        assert!(parse_gold("d1\t3\t1\tAction\n").is_err());
    }

    #[test]
    fn too_few_documents() {
        let err = train_bundles(&[], &LexiconPack::builtin(), &PipelineConfig::default(), 3.841, ExecMode::Sequential);
        assert!(matches!(err, Err(TrainError::TooFewDocuments(0))));
    }
}
