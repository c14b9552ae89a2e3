//! Offset-bearing tokenizers.

use serde::{Deserialize, Serialize};

/// A token with char offsets into the message it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    Whitespace,
    BanglaCustom,
}

impl TokenizerKind {
    pub fn tokenize(self, text: &str) -> Vec<Token> {
        match self {
            TokenizerKind::Whitespace => whitespace_tokenize(text),
            TokenizerKind::BanglaCustom => bangla_tokenize(text),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TokenizerKind::Whitespace => "whitespace",
            TokenizerKind::BanglaCustom => "bangla_custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "whitespace" => Some(TokenizerKind::Whitespace),
            "bangla_custom" => Some(TokenizerKind::BanglaCustom),
            _ => None,
        }
    }
}

/// Maximal runs of non-whitespace.
pub fn whitespace_tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token {
                    text: std::mem::take(&mut current),
                    start,
                    end: i,
                });
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(c);
        }
    }
    if !current.is_empty() {
        let end = start + current.chars().count();
        tokens.push(Token {
            text: current,
            start,
            end,
        });
    }
    tokens
}

const DANDA: char = '\u{0964}';
const DOUBLE_DANDA: char = '\u{0965}';
const ZWNJ: char = '\u{200C}';
const ZWJ: char = '\u{200D}';

fn is_detached_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || c == DANDA || c == DOUBLE_DANDA
}

/// Whitespace splitting plus: ASCII punctuation and the danda / double danda
/// become single-character tokens, and ZWJ/ZWNJ are dropped from token text
/// (offsets still cover them).
pub fn bangla_tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    // Offset one past the last char that belongs to the open token.
    let mut end = 0;
    let mut open = false;

    fn flush(tokens: &mut Vec<Token>, current: &mut String, start: usize, end: usize, open: &mut bool) {
        if *open && !current.is_empty() {
            tokens.push(Token {
                text: std::mem::take(current),
                start,
                end,
            });
        }
        current.clear();
        *open = false;
    }

    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            flush(&mut tokens, &mut current, start, end, &mut open);
        } else if is_detached_punctuation(c) {
            flush(&mut tokens, &mut current, start, end, &mut open);
            tokens.push(Token {
                text: c.to_string(),
                start: i,
                end: i + 1,
            });
        } else if c == ZWJ || c == ZWNJ {
            // Joiners never start a token, so its first offset is visible.
            if open {
                end = i + 1;
            }
        } else {
            if !open {
                open = true;
                start = i;
            }
            current.push(c);
            end = i + 1;
        }
    }
    flush(&mut tokens, &mut current, start, end, &mut open);
    tokens
}
