//! Optional token annotations from an external tagger.
//!
//! TSV, one token per line: `surface<TAB>lemma<TAB>pos<TAB>tense<TAB>mood`. Tense and
//! mood may be empty or `-` for non-verbs. A blank line marks a sentence break and is
//! otherwise ignored. Tokens are aligned to the text by searching for each surface form
//! in order; only whitespace and punctuation may be skipped between two tokens.

use std::ops::Range;

use crate::error::IngestError;
use crate::lexicon::{Mood, Tense};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidecarToken {
    pub line: usize,
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    pub tense: Tense,
    pub mood: Option<Mood>,
    /// Byte span in the document text, filled by [`Sidecar::align`].
    pub span: Range<usize>,
}

impl SidecarToken {
    /// Tag sets in the wild spell verbs `VER:pres`, `VERB`, `V` or `AUX`.
    pub fn is_verb(&self) -> bool {
        let pos = self.pos.to_ascii_uppercase();
        pos.starts_with("VER") || pos == "V" || pos == "AUX"
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sidecar {
    pub tokens: Vec<SidecarToken>,
}

impl Sidecar {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut tokens = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() {
                continue;
            }
            let err = |message: String| IngestError::SidecarFormat { line, message };
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() < 3 || cols.len() > 5 {
                return Err(err(format!("expected 3 to 5 columns, found {}", cols.len())));
            }
            let col = |i: usize| cols.get(i).map_or("", |c| c.trim());
            let mood = match col(4) {
                "" | "-" | "_" => None,
                m => Some(m.parse().map_err(err)?),
            };
            tokens.push(SidecarToken {
                line,
                surface: cols[0].to_string(),
                lemma: col(1).to_string(),
                pos: col(2).to_string(),
                tense: col(3).parse().map_err(err)?,
                mood,
                span: 0..0,
            });
        }
        Ok(Sidecar { tokens })
    }

    /// Anchors every token to its byte span in `text`.
    pub fn align(mut self, text: &str) -> Result<Self, IngestError> {
        let mut cursor = 0;
        for tok in &mut self.tokens {
            let not_found = || IngestError::SidecarAlignment {
                line: tok.line,
                surface: tok.surface.clone(),
                offset: cursor,
            };
            let rel = text[cursor..].find(tok.surface.as_str()).ok_or_else(not_found)?;
            if text[cursor..cursor + rel].chars().any(char::is_alphanumeric) {
                return Err(not_found());
            }
            let start = cursor + rel;
            tok.span = start..start + tok.surface.len();
            cursor = tok.span.end;
        }
        Ok(self)
    }

    /// The token covering byte `offset`, if any.
    pub fn token_at(&self, offset: usize) -> Option<&SidecarToken> {
        let idx = self.tokens.partition_point(|t| t.span.end <= offset);
        self.tokens.get(idx).filter(|t| t.span.start <= offset)
    }
}
