//! Lexical-syntactic features over a window of the previous, current and next
//! token.

use super::{fnv1a, SparseVector};
use crate::tokenize::Token;

pub const AFFIX_BUCKETS: usize = 64;
const FLAGS: usize = 5;
pub const BLOCK_DIM: usize = FLAGS + 2 * AFFIX_BUCKETS;
pub const LEXICAL_DIM: usize = 3 * BLOCK_DIM;

const BOS: usize = 0;
const EOS: usize = 1;
const DIGIT: usize = 2;
const TITLE: usize = 3;
const BANGLA: usize = 4;

const PREFIX_SEED: u64 = 0x70;
const SUFFIX_SEED: u64 = 0x73;

pub(crate) fn is_bangla_char(c: char) -> bool {
    ('\u{0980}'..='\u{09FF}').contains(&c)
}

fn is_digit_token(text: &str) -> bool {
    !text.is_empty() && text.chars().all(|c| c.is_ascii_digit() || ('০'..='৯').contains(&c))
}

fn is_title_or_upper(text: &str) -> bool {
    text.chars().next().is_some_and(char::is_uppercase)
}

fn affix_bucket(chars: &[char], seed: u64) -> usize {
    let s: String = chars.iter().collect();
    (fnv1a(seed, s.as_bytes()) % AFFIX_BUCKETS as u64) as usize
}

fn block(tokens: &[Token], j: usize, offset: usize, pairs: &mut Vec<(usize, f64)>) {
    let text = &tokens[j].text;
    let chars: Vec<char> = text.chars().collect();
    let mut set = |i: usize| pairs.push((offset + i, 1.0));
    if j == 0 {
        set(BOS);
    }
    if j + 1 == tokens.len() {
        set(EOS);
    }
    if is_digit_token(text) {
        set(DIGIT);
    }
    if is_title_or_upper(text) {
        set(TITLE);
    }
    if chars.iter().copied().any(is_bangla_char) {
        set(BANGLA);
    }
    let k = chars.len().min(2);
    set(FLAGS + affix_bucket(&chars[..k], PREFIX_SEED));
    set(FLAGS + AFFIX_BUCKETS + affix_bucket(&chars[chars.len() - k..], SUFFIX_SEED));
}

/// One `LEXICAL_DIM` vector per token: blocks for positions -1, 0, +1, each
/// empty when the neighbour does not exist.
pub fn lexical_syntactic_featurize(tokens: &[Token]) -> Vec<SparseVector> {
    (0..tokens.len())
        .map(|i| {
            let mut pairs = Vec::new();
            for (slot, rel) in [-1isize, 0, 1].into_iter().enumerate() {
                let j = i as isize + rel;
                if j >= 0 && (j as usize) < tokens.len() {
                    block(tokens, j as usize, slot * BLOCK_DIM, &mut pairs);
                }
            }
            SparseVector::from_pairs(LEXICAL_DIM, pairs)
        })
        .collect()
}
