//! Generators and property checks shared by the integration tests and the acceptance
//! harness.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::OnceLock;

use gemscope::facts::CueClass;
use gemscope::gem::{emit_xml, parse_gem, GemDocument, GemNames, GemRecommendation};
use gemscope::lexicon::LexiconPack;
use gemscope::pipeline::{analyze_text, Analysis, PipelineConfig};
use gemscope::rules::{RuleTable, SegmentKind};
use gemscope::scope::{dump_couples, dump_tree, revise_scopes, revise_scopes_with, RevisionAction};
use gemscope::segment::dump_segments;
use gemscope::stage::Stage;
use gemscope::train::Sample;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn pack() -> &'static LexiconPack {
    static PACK: OnceLock<LexiconPack> = OnceLock::new();
    PACK.get_or_init(LexiconPack::builtin)
}

pub fn analyze(text: &str, config: &PipelineConfig) -> Analysis {
    analyze_with(text, pack(), config)
}

pub fn analyze_with(text: &str, pack: &LexiconPack, config: &PipelineConfig) -> Analysis {
    analyze_text("t", text, pack, None, config).expect("pipeline runs")
}

pub fn default_only() -> PipelineConfig {
    PipelineConfig::default().without_stage(Stage::Revision)
}

/// Couples as `(chain, action)` pairs for set comparison.
pub fn couple_set(a: &Analysis) -> BTreeSet<(Vec<String>, String)> {
    a.couples.iter().map(|c| (c.chain.clone(), c.action.clone())).collect()
}

// ---- random guideline text ----

const CONDITIONS: &[&str] = &[
    "chez le sujet âgé",
    "chez le patient diabétique",
    "en cas de fièvre persistante",
    "si la glycémie reste élevée",
    "lorsque l'HbA1c est > 8%",
    "en présence de signes cliniques",
    "avant toute intervention chirurgicale",
    "dans le cas où le traitement échoue",
];

const ACTIONS: &[&str] = &[
    "un dosage de la créatinine est recommandé",
    "le traitement doit être poursuivi",
    "il est nécessaire de réaliser une biopsie",
    "la surveillance sera renforcée",
    "une consultation spécialisée est recommandée",
    "la posologie doit être réduite",
    "il est recommandé de prescrire un régime adapté",
];

const STATEMENTS: &[&str] = &[
    "les données disponibles sont limitées",
    "ce traitement a été évalué dans plusieurs essais",
    "le risque de complication est faible",
    "les effets indésirables sont fréquents",
];

const ANAPHORA: &[&str] = &["dans les deux cas", "dans ce cas", "dans les trois cas", "dans tous les cas"];

const TITLES: &[&str] = &[
    "Diabète de type 2",
    "Hypertension artérielle",
    "Suivi du patient",
    "Asthme de l'enfant",
    "Modalités pratiques",
];

fn cap(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn pick(items: &'static [&'static str]) -> impl Strategy<Value = &'static str> {
    prop::sample::select(items)
}

fn sentence() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => (prop::collection::vec(pick(CONDITIONS), 1..3), pick(ACTIONS))
            .prop_map(|(cs, a)| format!("{}, {a}.", cap(&cs.join(", ")))),
        3 => (pick(ACTIONS), pick(CONDITIONS)).prop_map(|(a, c)| format!("{} {c}.", cap(a))),
        2 => (pick(ANAPHORA), pick(ACTIONS)).prop_map(|(n, a)| format!("{}, {a}.", cap(n))),
        1 => pick(STATEMENTS).prop_map(|s| format!("En effet, {s}.")),
        1 => pick(ACTIONS).prop_map(|a| format!("Cependant, {a}.")),
        1 => pick(STATEMENTS).prop_map(|s| format!("{}.", cap(s))),
        1 => pick(ACTIONS).prop_map(|a| format!("{}.", cap(a))),
        1 => Just("Réaliser une échographie en cas de douleur.".to_string()),
    ]
}

fn block() -> impl Strategy<Value = String> {
    prop_oneof![
        5 => prop::collection::vec(sentence(), 1..5).prop_map(|s| s.join(" ")),
        1 => (1u8..4, pick(TITLES)).prop_map(|(n, t)| format!("{n}. {t}")),
        1 => (pick(CONDITIONS), prop::collection::vec(pick(ACTIONS), 1..4)).prop_map(|(c, items)| {
            let mut s = format!("{} :", cap(c));
            for i in items {
                s.push_str(&format!("\n- {i} ;"));
            }
            s
        }),
    ]
}

/// Random guideline-like documents mixing headings, paragraphs and enumerations.
pub fn guideline_text() -> impl Strategy<Value = String> {
    prop::collection::vec(block(), 1..7).prop_map(|b| b.join("\n\n") + "\n")
}

/// Arbitrary text, including odd whitespace and punctuation.
pub fn any_text() -> impl Strategy<Value = String> {
    prop_oneof![
        guideline_text(),
        "[a-zA-Zéè ,.;:!?()\\-\n\t']{0,200}",
        any::<String>(),
    ]
}

fn gem_text() -> impl Strategy<Value = String> {
    "[a-zA-Zéàç0-9<>&'\"(/)%]{1,12}( [a-zA-Zéàç0-9<>&'\"(/)%.,]{1,12}){0,6}"
}

pub fn gem_document() -> impl Strategy<Value = GemDocument> {
    let rec = (
        prop::collection::vec(gem_text(), 0..4),
        prop::collection::vec(gem_text(), 1..4),
        prop::collection::vec(gem_text(), 0..3),
    )
        .prop_map(|(decision_variables, actions, explanations)| GemRecommendation {
            decision_variables,
            actions,
            explanations,
        });
    prop::collection::vec(rec, 0..5).prop_map(|recommendations| GemDocument {
        source_id: String::new(),
        recommendations,
    })
}

// ---- property checks ----

/// Laminarity of the default tree and after every individual revision step.
pub fn check_laminar_steps(text: &str) -> Result<(), TestCaseError> {
    let a = analyze(text, &default_only());
    prop_assert!(a.default_tree.is_laminar());
    let mut steps = 0;
    let mut broken = false;
    let revised = revise_scopes_with(&a.default_tree, &a.document, &a.store, &a.segments, |t| {
        steps += 1;
        broken |= !t.is_laminar();
    });
    prop_assert!(!broken, "a revision step broke laminarity");
    prop_assert!(revised.is_laminar());
    Ok(())
}

/// Running revision again on a revised tree changes nothing.
pub fn check_fixpoint(text: &str) -> Result<(), TestCaseError> {
    let a = analyze(text, &PipelineConfig::default());
    let again = revise_scopes(&a.tree, &a.document, &a.store, &a.segments);
    prop_assert_eq!(&again.frames, &a.tree.frames);
    prop_assert_eq!(&again.attachments, &a.tree.attachments);
    Ok(())
}

/// Every boundary revision is anchored on a live cue of the right class, sitting on the
/// clause where the boundary moved; frames without a log keep their default scope.
pub fn check_boundary_discipline(text: &str) -> Result<(), TestCaseError> {
    let a = analyze(text, &PipelineConfig::default());
    for (f, d) in a.tree.frames.iter().zip(&a.default_tree.frames) {
        if f.revision_log.is_empty() {
            prop_assert_eq!((f.open, f.close), (d.open, d.close));
            prop_assert!(f.extensions.is_empty());
            continue;
        }
        for e in &f.revision_log {
            let cue = a.store.get(e.cue).expect("revision cue exists");
            prop_assert!(a.store.is_live(cue));
            match e.action {
                RevisionAction::Closed => {
                    prop_assert!(matches!(cue.cue_class, CueClass::JustificationMarker | CueClass::ContrastMarker));
                    prop_assert_eq!(cue.clause_index, e.range.1 + 1);
                }
                RevisionAction::Extended => {
                    prop_assert_eq!(cue.cue_class, CueClass::AnaphoricExpr);
                    prop_assert_eq!(cue.clause_index, e.range.0);
                }
            }
        }
        prop_assert!(f.close <= d.close);
    }
    Ok(())
}

pub fn check_reconstruction(text: &str) -> Result<(), TestCaseError> {
    let doc = gemscope::document::parse_document(
        "t",
        text,
        pack(),
        &gemscope::document::DocumentConfig::default(),
    );
    prop_assert_eq!(doc.reconstruct(), text);
    Ok(())
}

pub fn check_gem_round_trip(doc: &GemDocument) -> Result<(), TestCaseError> {
    for names in [GemNames::French, GemNames::English] {
        let xml = emit_xml(doc, names);
        let back = parse_gem(&xml).map_err(|e| TestCaseError::fail(format!("{e}\n{xml}")))?;
        prop_assert_eq!(&back, doc);
    }
    Ok(())
}

/// Emitted XML of real analyses also survives a parse.
pub fn check_pipeline_gem_round_trip(text: &str) -> Result<(), TestCaseError> {
    let a = analyze(text, &PipelineConfig::default());
    let xml = a.xml.clone().unwrap();
    let back = parse_gem(&xml).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back.recommendations, a.gem.recommendations);
    Ok(())
}

fn products(a: &Analysis) -> String {
    format!(
        "{}\n{}\n{}\n{}\n{}",
        a.xml.as_deref().unwrap_or(""),
        a.store.dump(),
        dump_segments(&a.document, &a.segments),
        dump_tree(&a.tree),
        dump_couples(&a.couples)
    )
}

pub fn check_determinism(text: &str) -> Result<(), TestCaseError> {
    let config = PipelineConfig::default();
    prop_assert_eq!(products(&analyze(text, &config)), products(&analyze(text, &config)));
    Ok(())
}

// ---- trainer oracle ----

/// χ² from observed and expected counts, Σ (O − E)² / E over the four cells.
pub fn oracle_chi_square(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = a + b + c + d;
    let rows = [a + b, c + d];
    let cols = [a + c, b + d];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return 0.0;
    }
    let obs = [[a, b], [c, d]];
    let mut x = 0.0;
    for (i, row) in obs.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            x += (o - e) * (o - e) / e;
        }
    }
    x
}

/// Recounts every emitted rule's contingency table directly from the samples.
pub fn check_trainer_oracle(samples: &[Sample], table: &RuleTable) -> Result<(), TestCaseError> {
    for r in &table.rules {
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        for s in samples {
            let has = r.fires_on(&s.features);
            let is = s.label == Some(r.kind);
            match (has, is) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
        let expected = oracle_chi_square(a, b, c, d);
        prop_assert!(
            (r.score - expected).abs() <= 1e-9,
            "{}=>{}: trainer {} vs recount {}",
            r.conjunction(),
            r.kind,
            r.score,
            expected
        );
        prop_assert!(r.score >= table.threshold);
    }
    Ok(())
}

const FEATURES: &[&str] = &[
    "cue:ConditionConnector",
    "lead:ConditionConnector",
    "cue:RecommendVerb",
    "tense:present",
    "mood:infinitive",
    "sent:initial",
    "para:initial",
    "block:paragraph",
    "cue:JustificationMarker",
];

/// Random labelled clause samples, at most 200.
pub fn samples() -> impl Strategy<Value = Vec<Sample>> {
    let label = prop_oneof![
        2 => Just(None),
        1 => Just(Some(SegmentKind::Condition)),
        1 => Just(Some(SegmentKind::Action)),
        1 => Just(Some(SegmentKind::Explanation)),
    ];
    let sample = (prop::sample::subsequence(FEATURES, 0..=FEATURES.len()), label).prop_map(|(f, label)| Sample {
        features: f.into_iter().map(String::from).collect(),
        label,
    });
    prop::collection::vec(sample, 2..=200)
}
