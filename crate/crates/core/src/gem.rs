//! GEM XML subset: `knowledge.component` holding recommendations made of decision
//! variables (outermost condition first), actions and explanations.

use std::str::FromStr;

use crate::error::GemParseError;
use crate::scope::Couple;

/// The bundled DTD describing the emitted subset.
pub const GEM_DTD: &str = include_str!("../data/gem-subset.dtd");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GemNames {
    /// `recommandation`, as in French GEM instances.
    #[default]
    French,
    English,
}

impl GemNames {
    fn recommendation(self) -> &'static str {
        match self {
            GemNames::French => "recommandation",
            GemNames::English => "recommendation",
        }
    }
}

impl FromStr for GemNames {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fr" => Ok(GemNames::French),
            "en" => Ok(GemNames::English),
            _ => Err(format!("unknown element-name locale `{s}` (expected fr or en)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GemRecommendation {
    pub decision_variables: Vec<String>,
    pub actions: Vec<String>,
    pub explanations: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GemDocument {
    pub source_id: String,
    pub recommendations: Vec<GemRecommendation>,
}

/// Groups couples (in document order) into recommendations.
///
/// Consecutive actions attached to the same set of condition chains form one group; a
/// group becomes one recommendation per chain. Each explanation joins the closest
/// preceding recommendation with its chain, else the closest preceding one, else the
/// first. Returns the recommendations and the explanations that found no home.
pub fn group_couples(couples: &[Couple], explanations: &[Couple]) -> (Vec<GemRecommendation>, Vec<String>) {
    // (first segment, chain set, actions)
    let mut groups: Vec<(usize, Vec<Vec<String>>, Vec<String>)> = Vec::new();
    let mut i = 0;
    while i < couples.len() {
        let seg = couples[i].segment;
        let mut chains = Vec::new();
        while i < couples.len() && couples[i].segment == seg {
            chains.push(couples[i].chain.clone());
            i += 1;
        }
        let action = couples[i - 1].action.clone();
        match groups.last_mut() {
            Some((_, set, actions)) if *set == chains => actions.push(action),
            _ => groups.push((seg, chains, vec![action])),
        }
    }
    let mut recs: Vec<(usize, GemRecommendation)> = Vec::new();
    for (seg, chains, actions) in groups {
        for chain in chains {
            recs.push((
                seg,
                GemRecommendation {
                    decision_variables: chain,
                    actions: actions.clone(),
                    explanations: Vec::new(),
                },
            ));
        }
    }
    let mut orphans = Vec::new();
    for e in explanations {
        let before = |r: &&(usize, GemRecommendation)| r.0 < e.segment;
        let target = recs
            .iter()
            .rposition(|r| before(&r) && r.1.decision_variables == e.chain)
            .or_else(|| recs.iter().rposition(|r| before(&r)))
            .or(if recs.is_empty() { None } else { Some(0) });
        match target {
            Some(t) => recs[t].1.explanations.push(e.action.clone()),
            None => orphans.push(e.action.clone()),
        }
    }
    (recs.into_iter().map(|(_, r)| r).collect(), orphans)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serializes with 2-space indentation and a single trailing newline.
pub fn emit_xml(doc: &GemDocument, names: GemNames) -> String {
    if doc.recommendations.is_empty() {
        return "<knowledge.component/>\n".to_string();
    }
    let rec = names.recommendation();
    let mut out = String::from("<knowledge.component>\n");
    for r in &doc.recommendations {
        out.push_str(&format!("  <{rec}>\n"));
        for (tag, items) in [
            ("decision.variable", &r.decision_variables),
            ("action", &r.actions),
            ("explanation", &r.explanations),
        ] {
            for text in items {
                out.push_str(&format!("    <{tag}>{}</{tag}>\n", escape(text)));
            }
        }
        out.push_str(&format!("  </{rec}>\n"));
    }
    out.push_str("</knowledge.component>\n");
    out
}

/// Parses and validates a document against the subset. `source_id` is left empty since
/// the XML does not carry it.
pub fn parse_gem(xml: &str) -> Result<GemDocument, GemParseError> {
    let tree = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        GemParseError {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let fail = |node: roxmltree::Node, message: String| {
        let pos = tree.text_pos_at(node.range().start);
        GemParseError {
            line: pos.row,
            column: pos.col,
            message,
        }
    };
    let root = tree.root_element();
    if root.tag_name().name() != "knowledge.component" {
        return Err(fail(root, format!("root element is `{}`, expected `knowledge.component`", root.tag_name().name())));
    }
    let mut out = GemDocument::default();
    for node in root.children() {
        if node.is_text() {
            if !node.text().unwrap_or("").trim().is_empty() {
                return Err(fail(node, "text directly inside knowledge.component".into()));
            }
            continue;
        }
        if !node.is_element() {
            continue;
        }
        let name = node.tag_name().name();
        if name != "recommandation" && name != "recommendation" {
            return Err(fail(node, format!("unexpected element `{name}`")));
        }
        let mut rec = GemRecommendation::default();
        // 0 = decision variables, 1 = actions, 2 = explanations
        let mut phase = 0;
        for child in node.children() {
            if child.is_text() {
                if !child.text().unwrap_or("").trim().is_empty() {
                    return Err(fail(child, format!("text directly inside {name}")));
                }
                continue;
            }
            if !child.is_element() {
                continue;
            }
            let cname = child.tag_name().name();
            let rank = match cname {
                "decision.variable" => 0,
                "action" => 1,
                "explanation" => 2,
                other => return Err(fail(child, format!("unexpected element `{other}`"))),
            };
            if rank < phase {
                return Err(fail(child, format!("`{cname}` out of order")));
            }
            phase = rank;
            if child.children().any(|n| n.is_element()) {
                return Err(fail(child, format!("`{cname}` must contain text only")));
            }
            let text: String = child.children().filter_map(|n| n.text()).collect();
            match rank {
                0 => rec.decision_variables.push(text),
                1 => rec.actions.push(text),
                _ => rec.explanations.push(text),
            }
        }
        if rec.actions.is_empty() {
            return Err(fail(node, format!("{name} without action")));
        }
        out.recommendations.push(rec);
    }
    Ok(out)
}
