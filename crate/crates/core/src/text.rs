//! Tokenization and text normalization shared by every stage.

use std::ops::Range;

/// A word or punctuation token with byte offsets into the text it was cut from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub span: Range<usize>,
    /// Lowercased surface with typographic apostrophes folded to `'`.
    pub norm: String,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Number,
    Punct,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokenKind::Punct && self.norm.starts_with(c) && self.norm.chars().count() == 1
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Folds case and apostrophe variants so lexicon patterns and text compare equal.
pub fn normalize_word(s: &str) -> String {
    s.chars()
        .map(|c| if is_apostrophe(c) { '\'' } else { c })
        .flat_map(char::to_lowercase)
        .collect()
}

/// Splits `text` into tokens. Elided articles keep their apostrophe ("d'aspect" gives
/// `d'` and `aspect`), hyphens stay inside words, and digit groups joined by `,` or `.`
/// form a single number token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i + 1;
            let mut all_digits = c.is_ascii_digit();
            while j < chars.len() {
                let cj = chars[j].1;
                if cj.is_alphanumeric() {
                    all_digits &= cj.is_ascii_digit();
                    j += 1;
                } else if cj == '-'
                    && chars.get(j + 1).is_some_and(|&(_, n)| n.is_alphanumeric())
                {
                    all_digits = false;
                    j += 1;
                } else if (cj == ',' || cj == '.')
                    && all_digits
                    && chars.get(j + 1).is_some_and(|&(_, n)| n.is_ascii_digit())
                {
                    j += 1;
                } else {
                    break;
                }
            }
            let mut end = j;
            if j < chars.len() && is_apostrophe(chars[j].1) {
                end = j + 1;
            }
            let span = start..end_of(end);
            tokens.push(Token {
                norm: normalize_word(&text[span.clone()]),
                span,
                kind: if all_digits { TokenKind::Number } else { TokenKind::Word },
            });
            i = end;
        } else {
            let span = start..end_of(i + 1);
            tokens.push(Token {
                norm: normalize_word(&text[span.clone()]),
                span,
                kind: TokenKind::Punct,
            });
            i += 1;
        }
    }
    tokens
}

/// Characters that end a sentence.
pub fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{2026}')
}

/// Collapses whitespace runs to one space and trims.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn trim_trailing_punct(s: &str) -> &str {
    s.trim_end_matches(|c: char| is_terminal(c) || matches!(c, ',' | ';' | ':') || c.is_whitespace())
}

/// Evidence levels guidelines append to statements: `(grade B)`, `(accord professionnel)`.
fn is_evidence_note(inner: &str) -> bool {
    let inner = inner.trim().to_lowercase();
    inner == "accord professionnel"
        || inner.strip_prefix("grade ").is_some_and(|g| !g.is_empty() && g.chars().all(|c| c.is_ascii_alphanumeric()))
        || inner.strip_prefix("niveau de preuve ").is_some_and(|g| !g.is_empty())
}

/// Display form of a segment: whitespace collapsed, trailing sentence punctuation,
/// commas and semicolons removed, and a trailing evidence-level note dropped. Elision
/// marks such as `(...)` are content and stay.
pub fn clean_segment_text(s: &str) -> String {
    let collapsed = collapse_whitespace(s);
    let mut t = trim_trailing_punct(&collapsed);
    if let Some(open) = t.strip_suffix(')').and_then(|body| body.rfind('(')) {
        if is_evidence_note(&t[open + 1..t.len() - 1]) {
            t = trim_trailing_punct(&t[..open]);
        }
    }
    t.to_string()
}
