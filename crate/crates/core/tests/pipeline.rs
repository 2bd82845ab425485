mod common;

use std::collections::BTreeSet;

use common::{analyze, analyze_with, couple_set, default_only, pack, read_fixture};
use gemscope::facts::{CueClass, Note};
use gemscope::gem::{parse_gem, GemNames};
use gemscope::pipeline::{analyze_text, PipelineConfig};
use gemscope::rules::SegmentKind;
use gemscope::scope::FrameOrigin;
use gemscope::sidecar::Sidecar;
use gemscope::stage::Stage;

#[test]
fn biopsies_matches_golden_xml() {
    let a = analyze(&read_fixture("biopsies.txt"), &PipelineConfig::default());
    assert_eq!(a.xml.as_deref(), Some(read_fixture("biopsies.gem.xml").as_str()));
    let dv: Vec<usize> = a.gem.recommendations.iter().map(|r| r.decision_variables.len()).collect();
    assert_eq!(dv, [2, 3, 1]);
}

#[test]
fn biopsies_first_paragraph_cues() {
    let a = analyze(&read_fixture("biopsies.txt"), &PipelineConfig::default());
    let (_, last) = a.document.block_clauses(0);
    let of = |class| a.store.query(0..last + 1, Some(class)).len();
    assert!(of(CueClass::ConditionConnector) + of(CueClass::LocationConnector) >= 3);
    assert!(of(CueClass::RecommendVerb) + of(CueClass::DeonticModal) + of(CueClass::InjunctiveVerb) >= 3);
}

#[test]
fn biopsies_english_names() {
    let config = PipelineConfig {
        gem_names: GemNames::English,
        ..PipelineConfig::default()
    };
    let a = analyze(&read_fixture("biopsies.txt"), &config);
    let xml = a.xml.unwrap();
    assert!(xml.contains("<recommendation>") && !xml.contains("<recommandation>"));
    assert_eq!(parse_gem(&xml).unwrap().recommendations, a.gem.recommendations);
}

#[test]
fn insulin_anaphora_sentence_counts_two_cases() {
    let a = analyze(&read_fixture("insulin.txt"), &PipelineConfig::default());
    let last = a.document.sentences.last().unwrap();
    let ana = a.store.query(last.first_clause..last.last_clause + 1, Some(CueClass::AnaphoricExpr));
    assert_eq!(ana.len(), 1);
    assert_eq!(ana[0].feature("referent_count"), Some("2"));
}

#[test]
fn insulin_revision_adds_both_chains() {
    let text = read_fixture("insulin.txt");
    let gold: BTreeSet<_> = gemscope::eval::parse_couples(&read_fixture("insulin.gold.tsv")).unwrap().into_iter().collect();
    assert_eq!(couple_set(&analyze(&text, &PipelineConfig::default())), gold);

    let plain = analyze(&text, &default_only());
    let lorsque: Vec<_> = plain.tree.frames.iter().map(|f| f.condition_texts.clone()).collect();
    assert_eq!(lorsque.len(), 2);
    for c in plain.couples.iter().filter(|c| c.action.starts_with("la diététique")) {
        assert!(c.chain.is_empty(), "default-only run attached {:?}", c.chain);
    }
}

#[test]
fn insulin_scope_accuracy_drops_without_revision() {
    use gemscope::eval::{parse_couples, score_scope, Matcher};
    let text = read_fixture("insulin.txt");
    let gold = parse_couples(&read_fixture("insulin.gold.tsv")).unwrap();
    let texts = |a: &gemscope::pipeline::Analysis| -> Vec<_> {
        a.couples.iter().map(|c| (c.chain.clone(), c.action.clone())).collect()
    };
    let full = score_scope(&texts(&analyze(&text, &PipelineConfig::default())), &gold, Matcher::exact()).unwrap();
    let plain = score_scope(&texts(&analyze(&text, &default_only())), &gold, Matcher::exact()).unwrap();
    assert_eq!(full.accuracy, 1.0);
    assert!(plain.accuracy < 1.0);
}

#[test]
fn statins_justification_closes_the_frame() {
    let a = analyze(&read_fixture("statins.txt"), &PipelineConfig::default());
    let last = a.document.sentences.last().unwrap();
    assert_eq!(a.tree.frames.len(), 1);
    let f = &a.tree.frames[0];
    assert!(f.close < last.first_clause);
    assert!(a.default_tree.frames[0].close >= last.first_clause);
    assert!(a.segments.iter().any(|s| s.kind == SegmentKind::Explanation && s.first == last.first_clause));
    let rec = &a.gem.recommendations[0];
    assert_eq!(rec.explanations.len(), 1);
    assert!(rec.explanations[0].starts_with("En effet"));
    assert!(a.gem.recommendations.iter().flat_map(|r| &r.actions).all(|x| !x.contains("En effet")));
    assert!(a.store.notes().iter().any(|n| matches!(n, Note::FrameBoundary { action, .. } if action == "closed")));
}

#[test]
fn domain_toggle_only_touches_heading_couples() {
    let text = read_fixture("headings.txt");
    let with = analyze(&text, &PipelineConfig::default());
    let without = analyze_with(&text, &pack().clone().without_domain(), &PipelineConfig::default());
    let headings: Vec<&String> = with
        .tree
        .frames
        .iter()
        .filter(|f| f.origin == FrameOrigin::HeadingRule)
        .flat_map(|f| &f.condition_texts)
        .collect();
    assert_eq!(headings.len(), 2);
    assert!(without.tree.frames.iter().all(|f| f.origin != FrameOrigin::HeadingRule));

    let strip = |chain: &[String]| -> Vec<String> { chain.iter().filter(|c| !headings.contains(c)).cloned().collect() };
    assert_eq!(with.couples.len(), without.couples.len());
    for (w, wo) in with.couples.iter().zip(&without.couples) {
        assert_eq!(w.action, wo.action);
        assert_eq!(strip(&w.chain), wo.chain);
    }
    assert!(with.couples.iter().zip(&without.couples).any(|(w, wo)| w.chain != wo.chain));
}

#[test]
fn stage_log_follows_the_schedule() {
    let config = PipelineConfig {
        stages: vec![Stage::Cues, Stage::Morphology, Stage::Segmentation],
        ..PipelineConfig::default()
    };
    let a = analyze(&read_fixture("biopsies.txt"), &config);
    assert_eq!(a.store.stage_log(), [Stage::Cues, Stage::Morphology, Stage::Segmentation]);
    assert!(a.tree.frames.is_empty() && a.xml.is_none());
    assert!(!a.segments.is_empty());
}

#[test]
fn sidecar_can_veto_a_verb_reading() {
    let text = "Chez le sujet âgé, un dosage est recommandé.";
    let tags = "Chez\tchez\tPRP\nle\tle\tDET:ART\nsujet\tsujet\tNOM\nâgé\tâgé\tADJ\n,\t,\tPUN\nun\tun\tDET:ART\ndosage\tdosage\tNOM\nest\têtre\tVER\tpresent\tindicative\nrecommandé\trecommandé\tADJ\n.\t.\tSENT\n";
    let sidecar = Sidecar::parse(tags).unwrap().align(text).unwrap();
    let config = PipelineConfig::default();
    let tagged = analyze_text("t", text, pack(), Some(&sidecar), &config).unwrap();
    let plain = analyze(text, &config);
    assert_eq!(plain.couples.len(), 1);
    assert!(tagged.couples.is_empty());
    assert!(tagged.store.notes().iter().any(|n| matches!(n, Note::Retract { .. })));
}

#[test]
fn empty_input_gives_empty_component() {
    let a = analyze("", &PipelineConfig::default());
    assert_eq!(a.xml.as_deref(), Some("<knowledge.component/>\n"));
    assert_eq!(a.store.stage_log(), Stage::ALL);
}
