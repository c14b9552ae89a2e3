use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{FeaturizeError, SparseVector};
use crate::tokenize::Token;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedPattern {
    pub name: String,
    pub pattern: String,
}

/// Compiled patterns with unique names; serialized as the source patterns.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<NamedPattern>", into = "Vec<NamedPattern>")]
pub struct RegexPatternSet {
    patterns: Vec<NamedPattern>,
    compiled: Vec<Regex>,
}

impl PartialEq for RegexPatternSet {
    fn eq(&self, other: &Self) -> bool {
        self.patterns == other.patterns
    }
}

impl RegexPatternSet {
    pub fn new(patterns: Vec<NamedPattern>) -> Result<Self, FeaturizeError> {
        let mut compiled = Vec::with_capacity(patterns.len());
        for (i, p) in patterns.iter().enumerate() {
            if patterns[..i].iter().any(|q| q.name == p.name) {
                return Err(FeaturizeError::DuplicatePatternName(p.name.clone()));
            }
            let re = Regex::new(&p.pattern).map_err(|e| FeaturizeError::InvalidPattern {
                name: p.name.clone(),
                message: e.to_string(),
            })?;
            compiled.push(re);
        }
        Ok(RegexPatternSet { patterns, compiled })
    }

    /// Parses `name<TAB>pattern` lines; blank lines and `#` comments skipped.
    pub fn parse_tsv(contents: &str) -> Result<Self, FeaturizeError> {
        let mut patterns = Vec::new();
        for (i, line) in contents.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (name, pattern) = line
                .split_once('\t')
                .ok_or(FeaturizeError::MalformedPatternLine { line: i + 1 })?;
            patterns.push(NamedPattern {
                name: name.trim().to_string(),
                pattern: pattern.to_string(),
            });
        }
        Self::new(patterns)
    }

    /// Numbers in either script plus a few currency words.
    pub fn builtin() -> Self {
        let raw = [
            ("number", "[0-9০-৯]+"),
            ("currency", "(?i)(taka|tk|৳|টাকা)"),
            ("phone", "(\\+?88)?01[3-9][0-9]{8}"),
        ];
        Self::new(
            raw.iter()
                .map(|(n, p)| NamedPattern {
                    name: n.to_string(),
                    pattern: p.to_string(),
                })
                .collect(),
        )
        .expect("built-in patterns compile")
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[NamedPattern] {
        &self.patterns
    }
}

impl TryFrom<Vec<NamedPattern>> for RegexPatternSet {
    type Error = FeaturizeError;
    fn try_from(patterns: Vec<NamedPattern>) -> Result<Self, Self::Error> {
        Self::new(patterns)
    }
}

impl From<RegexPatternSet> for Vec<NamedPattern> {
    fn from(set: RegexPatternSet) -> Self {
        set.patterns
    }
}

/// Token feature `p` is 1 when the token's char span overlaps a match of
/// pattern `p`; sentence feature `p` is 1 when `p` matches anywhere.
pub fn regex_featurize(
    text: &str,
    tokens: &[Token],
    patterns: &RegexPatternSet,
) -> (Vec<SparseVector>, SparseVector) {
    let dim = patterns.len();
    // Byte offset -> char offset, with one extra slot for the end.
    let mut char_at = vec![0usize; text.len() + 1];
    let mut n_chars = 0;
    for (b, _) in text.char_indices() {
        char_at[b] = n_chars;
        n_chars += 1;
    }
    char_at[text.len()] = n_chars;

    let mut token_pairs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); tokens.len()];
    let mut sentence_pairs = Vec::new();
    for (p, re) in patterns.compiled.iter().enumerate() {
        let mut any = false;
        let mut hit = vec![false; tokens.len()];
        for m in re.find_iter(text) {
            any = true;
            let (ms, me) = (char_at[m.start()], char_at[m.end()]);
            for (k, t) in tokens.iter().enumerate() {
                // Empty matches touch the token they sit inside.
                let overlaps = if ms == me {
                    t.start <= ms && ms < t.end
                } else {
                    t.start < me && ms < t.end
                };
                hit[k] |= overlaps;
            }
        }
        if any {
            sentence_pairs.push((p, 1.0));
        }
        for (k, h) in hit.into_iter().enumerate() {
            if h {
                token_pairs[k].push((p, 1.0));
            }
        }
    }
    let per_token = token_pairs
        .into_iter()
        .map(|pairs| SparseVector::from_pairs(dim, pairs))
        .collect();
    (per_token, SparseVector::from_pairs(dim, sentence_pairs))
}
