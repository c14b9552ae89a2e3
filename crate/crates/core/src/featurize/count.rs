//! Count-vector featurizer over character n-grams within word boundaries
//! (`char_wb`) or over whole tokens (`word`).

use serde::{Deserialize, Serialize};

use super::{FeaturizeError, SparseVector};
use crate::tokenize::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analyzer {
    CharWb,
    Word,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountVectorParams {
    pub analyzer: Analyzer,
    pub min_ngram: usize,
    pub max_ngram: usize,
    pub lowercase: bool,
}

impl Default for CountVectorParams {
    fn default() -> Self {
        CountVectorParams {
            analyzer: Analyzer::CharWb,
            min_ngram: 1,
            max_ngram: 4,
            lowercase: true,
        }
    }
}

/// Fitted vocabulary; `terms` is sorted and a term's index is its position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountVectorVocab {
    pub params: CountVectorParams,
    pub terms: Vec<String>,
}

impl CountVectorVocab {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    /// The terms one token contributes, with repetition.
    pub fn terms_for(&self, token: &str) -> Vec<String> {
        let text = if self.params.lowercase {
            token.to_lowercase()
        } else {
            token.to_string()
        };
        match self.params.analyzer {
            Analyzer::CharWb => char_wb_ngrams(&text, self.params.min_ngram, self.params.max_ngram),
            Analyzer::Word => vec![text],
        }
    }
}

/// Pads the token with one space per side and lists every char window of
/// each length in `min..=max`, shortest first, left to right.
pub fn char_wb_ngrams(token: &str, min: usize, max: usize) -> Vec<String> {
    let mut padded: Vec<char> = Vec::with_capacity(token.len() + 2);
    padded.push(' ');
    padded.extend(token.chars());
    padded.push(' ');
    let mut out = Vec::new();
    for n in min..=max {
        if n > padded.len() {
            break;
        }
        out.extend(padded.windows(n).map(|w| w.iter().collect::<String>()));
    }
    out
}

fn check_params(params: &CountVectorParams) -> Result<(), FeaturizeError> {
    if params.min_ngram == 0 || params.min_ngram > params.max_ngram {
        return Err(FeaturizeError::InvalidNgramRange {
            min: params.min_ngram,
            max: params.max_ngram,
        });
    }
    Ok(())
}

/// Builds the sorted vocabulary of every term observed in `corpus`.
pub fn fit_count_vocab(
    corpus: &[Vec<Token>],
    params: &CountVectorParams,
) -> Result<CountVectorVocab, FeaturizeError> {
    check_params(params)?;
    let mut vocab = CountVectorVocab {
        params: params.clone(),
        terms: Vec::new(),
    };
    let mut terms: Vec<String> = corpus
        .iter()
        .flatten()
        .flat_map(|t| vocab.terms_for(&t.text))
        .collect();
    terms.sort();
    terms.dedup();
    vocab.terms = terms;
    Ok(vocab)
}

/// Per-token term counts over the vocabulary (unseen terms ignored) and
/// their elementwise sum as the sentence vector.
pub fn count_vector_featurize(
    tokens: &[Token],
    vocab: &CountVectorVocab,
) -> (Vec<SparseVector>, SparseVector) {
    let dim = vocab.len();
    let per_token: Vec<SparseVector> = tokens
        .iter()
        .map(|t| {
            let pairs = vocab
                .terms_for(&t.text)
                .iter()
                .filter_map(|term| vocab.index_of(term))
                .map(|i| (i, 1.0))
                .collect();
            SparseVector::from_pairs(dim, pairs)
        })
        .collect();
    let sentence = SparseVector::sum(dim, &per_token);
    (per_token, sentence)
}
