use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{fnv1a, DenseVector, FeaturizeError};
use crate::tokenize::Token;

/// Word-vector table. Only `origin` and `dim` are serialized; a table read
/// back from an archive is empty until [`PretrainedTable::reload`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainedTable {
    pub dim: usize,
    pub origin: Option<String>,
    #[serde(skip)]
    vectors: HashMap<String, Vec<f64>>,
}

impl PretrainedTable {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Exact match first, then the lowercased form.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.origin = Some(origin.into());
        self
    }

    /// Re-reads the vectors from `origin`.
    pub fn reload(&mut self) -> Result<(), FeaturizeError> {
        let Some(path) = self.origin.clone() else {
            return Ok(());
        };
        let contents = std::fs::read_to_string(&path).map_err(|e| FeaturizeError::VectorFile {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let fresh = load_pretrained_vectors(&contents)?;
        if fresh.dim != self.dim {
            return Err(FeaturizeError::VectorFile {
                path,
                message: format!("dimension {} differs from trained dimension {}", fresh.dim, self.dim),
            });
        }
        self.vectors = fresh.vectors;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseSource {
    PretrainedTable(PretrainedTable),
    HashedNGram { dim: usize, seed: u64 },
}

impl DenseSource {
    pub fn dim(&self) -> usize {
        match self {
            DenseSource::PretrainedTable(t) => t.dim,
            DenseSource::HashedNGram { dim, .. } => *dim,
        }
    }

    pub fn token_vector(&self, token: &str) -> DenseVector {
        match self {
            DenseSource::PretrainedTable(table) => match table.lookup(token) {
                Some(v) => DenseVector { values: v.to_vec() },
                None => DenseVector::zeros(table.dim),
            },
            DenseSource::HashedNGram { dim, seed } => hashed_ngram_vector(token, *dim, *seed),
        }
    }
}

/// Parses the `count dim` header followed by `word v1 .. v_dim` lines.
pub fn load_pretrained_vectors(contents: &str) -> Result<PretrainedTable, FeaturizeError> {
    let mut lines = contents.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header: Vec<usize> = match lines.next() {
        Some((_, l)) => l
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| FeaturizeError::HeaderMismatch { line: 1 })?,
        None => return Err(FeaturizeError::HeaderMismatch { line: 1 }),
    };
    let [count, dim] = header[..] else {
        return Err(FeaturizeError::HeaderMismatch { line: 1 });
    };
    let mut vectors = HashMap::with_capacity(count);
    let mut rows = 0;
    for (i, line) in lines {
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-blank line has a field");
        let values: Vec<f64> = fields
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| FeaturizeError::InvalidNumber { line: line_no })?;
        if values.len() != dim {
            return Err(FeaturizeError::HeaderMismatch { line: line_no });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeaturizeError::NonFiniteValue { line: line_no });
        }
        rows += 1;
        if rows > count {
            return Err(FeaturizeError::HeaderMismatch { line: line_no });
        }
        vectors.insert(word.to_string(), values);
    }
    if rows != count {
        return Err(FeaturizeError::HeaderMismatch { line: 1 });
    }
    Ok(PretrainedTable {
        dim,
        origin: None,
        vectors,
    })
}

/// L2-normalized sum of hashed basis vectors over the char 3-grams of
/// `<token>`.
pub fn hashed_ngram_vector(token: &str, dim: usize, seed: u64) -> DenseVector {
    let mut values = vec![0.0; dim];
    if dim == 0 {
        return DenseVector { values };
    }
    let marked: Vec<char> = std::iter::once('<').chain(token.chars()).chain(std::iter::once('>')).collect();
    for w in marked.windows(3) {
        let gram: String = w.iter().collect();
        values[(fnv1a(seed, gram.as_bytes()) % dim as u64) as usize] += 1.0;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    DenseVector { values }
}

/// Per-token vectors and their mean (zero when there are no tokens).
pub fn dense_featurize(tokens: &[Token], source: &DenseSource) -> (Vec<DenseVector>, DenseVector) {
    let per_token: Vec<DenseVector> = tokens.iter().map(|t| source.token_vector(&t.text)).collect();
    let mut sentence = DenseVector::zeros(source.dim());
    if !per_token.is_empty() {
        for v in &per_token {
            for (s, x) in sentence.values.iter_mut().zip(&v.values) {
                *s += x;
            }
        }
        let n = per_token.len() as f64;
        sentence.values.iter_mut().for_each(|s| *s /= n);
    }
    (per_token, sentence)
}
