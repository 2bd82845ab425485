//! The facilitator: runs the scheduled stages in order over one document and collects
//! every intermediate product.

use crate::cues;
use crate::document::{parse_document, Document, DocumentConfig};
use crate::error::{PipelineError, StageError};
use crate::facts::{FactStore, Note};
use crate::gem::{emit_xml, group_couples, GemDocument, GemNames};
use crate::lexicon::LexiconPack;
use crate::par::{self, ExecMode};
use crate::rules::RuleTable;
use crate::scope::{apply_default_scopes, revise_scopes, Couple, RevisionAction, ScopeTree};
use crate::segment::{classify_segments, BasicSegment};
use crate::sidecar::Sidecar;
use crate::stage::Stage;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub stages: Vec<Stage>,
    pub rules: RuleTable,
    pub gem_names: GemNames,
    pub document: DocumentConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: Stage::ALL.to_vec(),
            rules: RuleTable::default(),
            gem_names: GemNames::default(),
            document: DocumentConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn without_stage(mut self, stage: Stage) -> Self {
        self.stages.retain(|s| *s != stage);
        self
    }
}

/// Everything a run produces. Products of stages that were not scheduled stay empty.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub document: Document,
    pub store: FactStore,
    pub segments: Vec<BasicSegment>,
    /// Scopes straight from the default rules.
    pub default_tree: ScopeTree,
    /// Final scopes: the revised tree when revision ran, else the default one.
    pub tree: ScopeTree,
    pub couples: Vec<Couple>,
    pub explanations: Vec<Couple>,
    pub gem: GemDocument,
    /// `None` when emission was not scheduled.
    pub xml: Option<String>,
}

/// Stages must appear in facilitator order, each at most once. Any subsequence is fine.
pub fn validate_stages(stages: &[Stage]) -> Result<(), PipelineError> {
    for w in stages.windows(2) {
        if w[1] <= w[0] {
            return Err(PipelineError {
                stage: w[1],
                clause: None,
                source: StageError::Order(w[1], w[0]),
            });
        }
    }
    Ok(())
}

fn wrap(stage: Stage) -> impl Fn(StageError) -> PipelineError {
    move |source| PipelineError {
        stage,
        clause: None,
        source,
    }
}

fn run_stage(
    store: &mut FactStore,
    stage: Stage,
    body: impl FnOnce(&mut FactStore) -> Result<(), PipelineError>,
) -> Result<(), PipelineError> {
    store.begin_stage(stage).map_err(wrap(stage))?;
    body(store)?;
    store.end_stage().map_err(wrap(stage))?;
    Ok(())
}

/// Runs `config.stages` over an already parsed document.
pub fn run_pipeline(
    document: Document,
    pack: &LexiconPack,
    sidecar: Option<&Sidecar>,
    config: &PipelineConfig,
) -> Result<Analysis, PipelineError> {
    validate_stages(&config.stages)?;
    let has = |s: Stage| config.stages.contains(&s);
    let doc = &document;
    let mut store = FactStore::new();

    if has(Stage::MaterialStructure) {
        run_stage(&mut store, Stage::MaterialStructure, |st| cues::tag_domain_titles(st, doc, pack))?;
    }
    if has(Stage::Cues) {
        run_stage(&mut store, Stage::Cues, |st| {
            cues::match_cues(st, doc, pack)?;
            cues::detect_anaphora(st, doc, pack)
        })?;
    }
    if has(Stage::Morphology) {
        run_stage(&mut store, Stage::Morphology, |st| cues::apply_morphology(st, doc, pack, sidecar))?;
    }

    let mut segments = Vec::new();
    if has(Stage::Segmentation) {
        // Typing reads the store but posts nothing; the stage is still logged.
        segments = classify_segments(doc, &store, &config.rules);
        run_stage(&mut store, Stage::Segmentation, |_| Ok(()))?;
    }

    let empty = ScopeTree {
        clause_count: doc.clauses.len(),
        ..ScopeTree::default()
    };
    let mut default_tree = empty.clone();
    if has(Stage::DefaultScopes) {
        default_tree = apply_default_scopes(doc, &segments);
        let warnings = default_tree.warnings.clone();
        run_stage(&mut store, Stage::DefaultScopes, |st| post_warnings(st, Stage::DefaultScopes, &warnings))?;
    }

    let mut tree = default_tree.clone();
    if has(Stage::Revision) {
        tree = revise_scopes(&default_tree, doc, &store, &segments);
        let revised = tree.clone();
        let before = default_tree.warnings.len();
        run_stage(&mut store, Stage::Revision, |st| {
            for f in &revised.frames {
                for e in &f.revision_log {
                    let to = match e.action {
                        RevisionAction::Closed => format!("[{}..{}]", f.open, e.range.1),
                        RevisionAction::Extended => format!("+[{}..{}]", e.range.0, e.range.1),
                    };
                    st.note(Note::FrameBoundary {
                        frame: f.id,
                        cue: e.cue,
                        action: match e.action {
                            RevisionAction::Closed => "closed".into(),
                            RevisionAction::Extended => "extended".into(),
                        },
                        from: (f.open, f.default_close),
                        to,
                        producer: Stage::Revision,
                    })
                    .map_err(wrap(Stage::Revision))?;
                }
            }
            post_warnings(st, Stage::Revision, &revised.warnings[before.min(revised.warnings.len())..])
        })?;
    }

    let couples = tree.couples();
    let explanations = tree.explanations();
    let mut gem = GemDocument {
        source_id: doc.source_id.clone(),
        recommendations: Vec::new(),
    };
    let mut xml = None;
    if has(Stage::Emission) {
        let (recs, orphans) = group_couples(&couples, &explanations);
        gem.recommendations = recs;
        run_stage(&mut store, Stage::Emission, |st| {
            let msgs: Vec<(Option<usize>, String)> = orphans
                .iter()
                .map(|o| (None, format!("explanation without a recommendation dropped: {o}")))
                .collect();
            post_warnings(st, Stage::Emission, &msgs)
        })?;
        xml = Some(emit_xml(&gem, config.gem_names));
    }

    Ok(Analysis {
        document,
        store,
        segments,
        default_tree,
        tree,
        couples,
        explanations,
        gem,
        xml,
    })
}

fn post_warnings(store: &mut FactStore, stage: Stage, warnings: &[(Option<usize>, String)]) -> Result<(), PipelineError> {
    for (clause, message) in warnings {
        store
            .note(Note::Warning {
                clause_index: *clause,
                message: message.clone(),
                producer: stage,
            })
            .map_err(|source| PipelineError {
                stage,
                clause: *clause,
                source,
            })?;
    }
    Ok(())
}

/// Parses and analyzes one text.
pub fn analyze_text(
    source_id: &str,
    text: &str,
    pack: &LexiconPack,
    sidecar: Option<&Sidecar>,
    config: &PipelineConfig,
) -> Result<Analysis, PipelineError> {
    let doc = parse_document(source_id, text, pack, &config.document);
    run_pipeline(doc, pack, sidecar, config)
}

/// Analyzes `(source_id, text)` pairs independently; results keep input order.
pub fn analyze_batch(
    inputs: &[(String, String)],
    pack: &LexiconPack,
    config: &PipelineConfig,
    mode: ExecMode,
) -> Vec<Result<Analysis, PipelineError>> {
    par::map(mode, inputs, |(id, text)| analyze_text(id, text, pack, None, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_runs_every_stage() {
        let a = analyze_text("e", "", &LexiconPack::builtin(), None, &PipelineConfig::default()).unwrap();
        assert_eq!(a.store.stage_log(), Stage::ALL);
        assert!(a.segments.is_empty() && a.couples.is_empty());
        assert_eq!(a.xml.as_deref(), Some("<knowledge.component/>\n"));
    }

    #[test]
    fn out_of_order_stages_are_rejected() {
        let config = PipelineConfig {
            stages: vec![Stage::Cues, Stage::MaterialStructure],
            ..PipelineConfig::default()
        };
        let err = analyze_text("e", "x", &LexiconPack::builtin(), None, &config).unwrap_err();
        assert_eq!(err.stage, Stage::MaterialStructure);
        assert!(validate_stages(&[Stage::Cues, Stage::Cues]).is_err());
        assert!(validate_stages(&[Stage::Cues, Stage::Emission]).is_ok());
    }

    #[test]
    fn revision_leaves_boundary_notes() {
        let text = "Un traitement est recommandé lorsque l'HbA1c est > 8%. Il est laissé à l'appréciation du clinicien lorsque l'HbA1c est comprise entre 6,6% et 8%. Dans les deux cas, la diététique aura été réévaluée.";
        let a = analyze_text("f2", text, &LexiconPack::builtin(), None, &PipelineConfig::default()).unwrap();
        let moves = a
            .store
            .notes()
            .iter()
            .filter(|n| matches!(n, Note::FrameBoundary { action, .. } if action == "extended"))
            .count();
        assert_eq!(moves, 2);
        let last = a.couples.iter().filter(|c| c.action.starts_with("la diététique")).count();
        assert_eq!(last, 2);
    }

    #[test]
    fn batch_modes_agree() {
        let inputs: Vec<(String, String)> = (0..8)
            .map(|i| (format!("d{i}"), format!("Chez le sujet de {i} ans, une biopsie est recommandée.")))
            .collect();
        let pack = LexiconPack::builtin();
        let config = PipelineConfig::default();
        let xml = |mode| -> Vec<Option<String>> {
            analyze_batch(&inputs, &pack, &config, mode)
                .into_iter()
                .map(|r| r.unwrap().xml)
                .collect()
        };
        assert_eq!(xml(ExecMode::Sequential), xml(ExecMode::Parallel));
    }
}
