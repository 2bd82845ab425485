//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! lexicons = data/lexicons/fr
//! domain_lexicon = off
//! rules = trained.rules
//! gem_names = en
//! abbreviations = extra-abbrev.txt
//! heading_max_len = 100
//! enum_markers = - • N)
//! stages = material-structure, cues, morphology, segmentation, default-scopes, emission
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::document::DocumentConfig;
use crate::error::ConfigError;
use crate::gem::GemNames;
use crate::lexicon::LexiconPack;
use crate::pipeline::{validate_stages, PipelineConfig};
use crate::rules::RuleTable;
use crate::stage::Stage;
use crate::text::normalize_word;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` selects the built-in French pack.
    pub lexicon_dir: Option<PathBuf>,
    pub domain_lexicon: bool,
    /// `None` selects the built-in rule table.
    pub rules: Option<PathBuf>,
    pub gem_names: GemNames,
    pub abbreviations: Option<PathBuf>,
    pub heading_max_len: usize,
    pub enum_markers: Vec<String>,
    pub stages: Vec<Stage>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let doc = DocumentConfig::default();
        RunConfig {
            lexicon_dir: None,
            domain_lexicon: true,
            rules: None,
            gem_names: GemNames::default(),
            abbreviations: None,
            heading_max_len: doc.heading_max_len,
            enum_markers: doc.enum_markers,
            stages: Stage::ALL.to_vec(),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.into(),
            message: format!("expected on/off, got `{v}`"),
        }),
    }
}

/// Parses a comma- or space-separated stage list.
pub fn parse_stages(v: &str) -> Result<Vec<Stage>, ConfigError> {
    let bad = |message: String| ConfigError::Value {
        key: "stages".into(),
        message,
    };
    let stages = v
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Stage>().map_err(bad))
        .collect::<Result<Vec<_>, _>>()?;
    validate_stages(&stages).map_err(|e| bad(e.source.to_string()))?;
    Ok(stages)
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |message: String| ConfigError::Value {
                key: key.into(),
                message,
            };
            match key {
                "lexicons" => cfg.lexicon_dir = Some(path(value)),
                "domain_lexicon" => cfg.domain_lexicon = parse_bool(key, value)?,
                "rules" => cfg.rules = (value != "builtin").then(|| path(value)),
                "gem_names" => cfg.gem_names = value.parse().map_err(bad)?,
                "abbreviations" => cfg.abbreviations = Some(path(value)),
                "heading_max_len" => {
                    cfg.heading_max_len = value.parse().map_err(|_| bad(format!("not a length: `{value}`")))?
                }
                "enum_markers" => cfg.enum_markers = value.split_whitespace().map(String::from).collect(),
                "stages" => cfg.stages = parse_stages(value)?,
                _ => return Err(ConfigError::UnknownKey(key.into())),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Value {
            key: "config".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Loads every referenced file, failing on the first that is missing or malformed.
    pub fn resolve(&self) -> Result<(LexiconPack, PipelineConfig), ConfigError> {
        let fail = |key: &str, message: String| ConfigError::Value {
            key: key.into(),
            message,
        };
        let mut pack = match &self.lexicon_dir {
            Some(dir) => LexiconPack::load(dir).map_err(|e| fail("lexicons", e.to_string()))?,
            None => LexiconPack::builtin(),
        };
        if !self.domain_lexicon {
            pack = pack.without_domain();
        }
        let rules = match &self.rules {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| fail("rules", format!("{}: {e}", p.display())))?;
                RuleTable::parse(&text).map_err(|e| fail("rules", e.to_string()))?
            }
            None => RuleTable::default(),
        };
        let mut abbreviations = Vec::new();
        if let Some(p) = &self.abbreviations {
            let text = fs::read_to_string(p).map_err(|e| fail("abbreviations", format!("{}: {e}", p.display())))?;
            abbreviations = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(normalize_word)
                .collect();
        }
        let config = PipelineConfig {
            stages: self.stages.clone(),
            rules,
            gem_names: self.gem_names,
            document: DocumentConfig {
                abbreviations,
                heading_max_len: self.heading_max_len,
                enum_markers: self.enum_markers.clone(),
            },
        };
        Ok((pack, config))
    }
}
