use serde::{Deserialize, Serialize};

/// Sorted `(index, value)` pairs with strictly increasing indices and no
/// explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from arbitrary pairs: sorts, sums duplicate indices and drops zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((last, acc)) if *last == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseVector { entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.entries.iter().map(|&(i, v)| (i, v * factor)).collect())
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<SparseVector>,
    n_cols: usize,
}

impl FeatureMatrix {
    /// Panics if any row has an index `>= n_cols`.
    pub fn new(rows: Vec<SparseVector>, n_cols: usize) -> Self {
        assert!(
            rows.iter().all(|r| r.max_index().is_none_or(|m| m < n_cols)),
            "row index out of range for {n_cols} columns"
        );
        FeatureMatrix { rows, n_cols }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        FeatureMatrix::new(rows.iter().map(|r| SparseVector::from_dense(r)).collect(), n_cols)
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseVector {
        &self.rows[i]
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            n_cols: self.n_cols,
        }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> FeatureMatrix {
        FeatureMatrix {
            rows: self.rows[range].to_vec(),
            n_cols: self.n_cols,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pairs_normalizes() {
        let v = SparseVector::from_pairs(vec![(3, 1.0), (1, 2.0), (3, 1.5), (2, 0.0), (5, 1.0), (5, -1.0)]);
        assert_eq!(v.entries(), &[(1, 2.0), (3, 2.5)]);
        assert_eq!(v.get(3), 2.5);
        assert_eq!(v.get(4), 0.0);
    }

    #[test]
    #[should_panic]
    fn matrix_rejects_out_of_range() {
        FeatureMatrix::new(vec![SparseVector::from_pairs(vec![(4, 1.0)])], 4);
    }
}
