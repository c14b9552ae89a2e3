//! Sparse and dense featurizers and their assembly into the per-token and
//! per-sentence blocks the classifier consumes.

mod count;
mod dense;
mod lexical;
mod regex;
mod vector;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::{Token, TokenizerKind};

pub use count::{char_wb_ngrams, count_vector_featurize, fit_count_vocab, Analyzer, CountVectorParams, CountVectorVocab};
pub use dense::{dense_featurize, hashed_ngram_vector, load_pretrained_vectors, DenseSource, PretrainedTable};
pub use lexical::{lexical_syntactic_featurize, LEXICAL_DIM};
pub use regex::{regex_featurize, NamedPattern, RegexPatternSet};
pub use vector::{DenseVector, SparseVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeaturizeError {
    #[error("invalid n-gram range {min}..={max}")]
    InvalidNgramRange { min: usize, max: usize },
    #[error("duplicate regex pattern name `{0}`")]
    DuplicatePatternName(String),
    #[error("regex pattern `{name}` does not compile: {message}")]
    InvalidPattern { name: String, message: String },
    #[error("line {line}: expected `name<TAB>pattern`")]
    MalformedPatternLine { line: usize },
    #[error("line {line}: column count disagrees with the vector file header")]
    HeaderMismatch { line: usize },
    #[error("line {line}: non-finite vector component")]
    NonFiniteValue { line: usize },
    #[error("line {line}: malformed number")]
    InvalidNumber { line: usize },
    #[error("vector file {path}: {message}")]
    VectorFile { path: String, message: String },
    #[error("featurizer block has {found} tokens, expected {expected}")]
    TokenCountMismatch { expected: usize, found: usize },
}

/// Seeded 64-bit FNV-1a.
pub(crate) fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageFeatures {
    pub tokens: Vec<Token>,
    pub token_sparse: Vec<SparseVector>,
    pub token_dense: Vec<DenseVector>,
    pub sentence_sparse: SparseVector,
    pub sentence_dense: DenseVector,
}

impl MessageFeatures {
    pub fn sparse_dim(&self) -> usize {
        self.sentence_sparse.dim
    }

    pub fn dense_dim(&self) -> usize {
        self.sentence_dense.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock {
    pub tokens: Vec<SparseVector>,
    pub sentence: SparseVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    pub tokens: Vec<DenseVector>,
    pub sentence: DenseVector,
}

fn concat_sparse<'a>(parts: impl Iterator<Item = &'a SparseVector>) -> SparseVector {
    let mut dim = 0;
    let mut entries = Vec::new();
    for part in parts {
        entries.extend(part.entries.iter().map(|&(i, v)| (i + dim, v)));
        dim += part.dim;
    }
    SparseVector { dim, entries }
}

fn concat_dense<'a>(parts: impl Iterator<Item = &'a DenseVector>) -> DenseVector {
    DenseVector {
        values: parts.flat_map(|p| p.values.iter().copied()).collect(),
    }
}

/// Concatenates blocks in the given order, shifting sparse indices by the
/// widths of the blocks before them.
pub fn assemble_features(
    tokens: Vec<Token>,
    sparse: &[SparseBlock],
    dense: &[DenseBlock],
) -> Result<MessageFeatures, FeaturizeError> {
    let n = tokens.len();
    let counts = sparse.iter().map(|b| b.tokens.len()).chain(dense.iter().map(|b| b.tokens.len()));
    for found in counts {
        if found != n {
            return Err(FeaturizeError::TokenCountMismatch { expected: n, found });
        }
    }
    let token_sparse = (0..n).map(|t| concat_sparse(sparse.iter().map(|b| &b.tokens[t]))).collect();
    let token_dense = (0..n).map(|t| concat_dense(dense.iter().map(|b| &b.tokens[t]))).collect();
    Ok(MessageFeatures {
        tokens,
        token_sparse,
        token_dense,
        sentence_sparse: concat_sparse(sparse.iter().map(|b| &b.sentence)),
        sentence_dense: concat_dense(dense.iter().map(|b| &b.sentence)),
    })
}

/// A featurizer as configured, before fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum FeaturizerSpec {
    Regex(RegexPatternSet),
    LexicalSyntactic,
    CountVector(CountVectorParams),
    Dense(DenseSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedFeaturizer {
    Regex(RegexPatternSet),
    LexicalSyntactic,
    CountVector(CountVectorVocab),
    Dense(DenseSource),
}

/// Tokenizer plus fitted featurizers in pipeline order. Immutable after
/// fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizerChain {
    pub tokenizer: TokenizerKind,
    pub featurizers: Vec<FittedFeaturizer>,
}

impl FeaturizerChain {
    /// Fits vocabularies on `train_texts` only.
    pub fn fit(
        tokenizer: TokenizerKind,
        specs: Vec<FeaturizerSpec>,
        train_texts: &[&str],
    ) -> Result<Self, FeaturizeError> {
        let corpus: Vec<Vec<Token>> = train_texts.iter().map(|t| tokenizer.tokenize(t)).collect();
        let featurizers = specs
            .into_iter()
            .map(|spec| {
                Ok(match spec {
                    FeaturizerSpec::Regex(p) => FittedFeaturizer::Regex(p),
                    FeaturizerSpec::LexicalSyntactic => FittedFeaturizer::LexicalSyntactic,
                    FeaturizerSpec::CountVector(params) => FittedFeaturizer::CountVector(fit_count_vocab(&corpus, &params)?),
                    FeaturizerSpec::Dense(source) => FittedFeaturizer::Dense(source),
                })
            })
            .collect::<Result<_, FeaturizeError>>()?;
        Ok(FeaturizerChain { tokenizer, featurizers })
    }

    pub fn sparse_dim(&self) -> usize {
        self.featurizers
            .iter()
            .map(|f| match f {
                FittedFeaturizer::Regex(p) => p.len(),
                FittedFeaturizer::LexicalSyntactic => LEXICAL_DIM,
                FittedFeaturizer::CountVector(v) => v.len(),
                FittedFeaturizer::Dense(_) => 0,
            })
            .sum()
    }

    pub fn dense_dim(&self) -> usize {
        self.featurizers
            .iter()
            .map(|f| match f {
                FittedFeaturizer::Dense(d) => d.dim(),
                _ => 0,
            })
            .sum()
    }

    /// Reloads any pretrained tables that were stored by reference.
    pub fn reload_resources(&mut self) -> Result<(), FeaturizeError> {
        for f in &mut self.featurizers {
            if let FittedFeaturizer::Dense(DenseSource::PretrainedTable(t)) = f {
                if t.is_empty() {
                    t.reload()?;
                }
            }
        }
        Ok(())
    }

    pub fn featurize(&self, text: &str) -> MessageFeatures {
        let tokens = self.tokenizer.tokenize(text);
        let mut sparse = Vec::new();
        let mut dense = Vec::new();
        for f in &self.featurizers {
            match f {
                FittedFeaturizer::Regex(p) => {
                    let (tokens, sentence) = regex_featurize(text, &tokens, p);
                    sparse.push(SparseBlock { tokens, sentence });
                }
                FittedFeaturizer::LexicalSyntactic => sparse.push(SparseBlock {
                    tokens: lexical_syntactic_featurize(&tokens),
                    // Window features have no sentence-level counterpart.
                    sentence: SparseVector::zeros(LEXICAL_DIM),
                }),
                FittedFeaturizer::CountVector(v) => {
                    let (tokens, sentence) = count_vector_featurize(&tokens, v);
                    sparse.push(SparseBlock { tokens, sentence });
                }
                FittedFeaturizer::Dense(d) => {
                    let (tokens, sentence) = dense_featurize(&tokens, d);
                    dense.push(DenseBlock { tokens, sentence });
                }
            }
        }
        assemble_features(tokens, &sparse, &dense).expect("every block is built from the same tokens")
    }
}
