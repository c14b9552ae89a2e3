use serde::{Deserialize, Serialize};

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds from unsorted (index, value) pairs, summing duplicates and
    /// dropping zeros.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            debug_assert!(i < dim, "index {i} out of range for dim {dim}");
            match entries.last_mut() {
                Some((last, acc)) if *last == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseVector { dim, entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn add(&self, other: &SparseVector) -> SparseVector {
        assert_eq!(self.dim, other.dim);
        let mut pairs = self.entries.clone();
        pairs.extend_from_slice(&other.entries);
        SparseVector::from_pairs(self.dim, pairs)
    }

    pub fn scale(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.dim, self.entries.iter().map(|&(i, v)| (i, v * factor)).collect())
    }

    /// Elementwise sum; `dim` is used when `vectors` is empty.
    pub fn sum<'a>(dim: usize, vectors: impl IntoIterator<Item = &'a SparseVector>) -> SparseVector {
        let mut pairs = Vec::new();
        for v in vectors {
            assert_eq!(v.dim, dim);
            pairs.extend_from_slice(&v.entries);
        }
        SparseVector::from_pairs(dim, pairs)
    }

    pub fn is_well_formed(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].0 < w[1].0)
            && self.entries.iter().all(|&(i, v)| i < self.dim && v != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DenseVector {
    pub values: Vec<f64>,
}

impl DenseVector {
    pub fn zeros(dim: usize) -> Self {
        DenseVector {
            values: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pairs_merges_and_drops_zeros() {
        let v = SparseVector::from_pairs(5, vec![(3, 1.0), (1, 2.0), (3, -1.0), (1, 1.0)]);
        assert_eq!(v.entries, vec![(1, 3.0)]);
        assert!(v.is_well_formed());
        assert_eq!(v.get(1), 3.0);
        assert_eq!(v.get(3), 0.0);
    }

    #[test]
    fn sum_of_two_equals_scale() {
        let v = SparseVector::from_pairs(4, vec![(0, 1.0), (2, 3.0)]);
        assert_eq!(SparseVector::sum(4, [&v, &v]), v.scale(2.0));
    }
}
