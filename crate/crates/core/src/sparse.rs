//! Compressed sparse row storage for symmetric operators sharing a mesh pattern.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Row-compressed sparsity pattern (both triangles stored, sorted columns).
#[derive(Debug, PartialEq, Eq)]
pub struct Pattern {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Pattern of the P1 operators on a mesh: diagonal plus every mesh edge.
    pub fn from_cells(n: usize, cells: &[[usize; 3]]) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for tri in cells {
            for &a in tri {
                for &b in tri {
                    rows[a].push(b);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        Self { row_ptr, col_idx }
    }

    pub fn dense(n: usize) -> Self {
        Self {
            row_ptr: (0..=n).map(|i| i * n).collect(),
            col_idx: (0..n * n).map(|k| k % n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Storage slot of entry (i, j), if it is in the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }
}

/// Sparse symmetric matrix. Operators assembled on the same mesh share one pattern,
/// so linear combinations are entrywise.
#[derive(Debug, Clone)]
pub struct SparseSymmetricMatrix {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let pattern = Arc::new(Pattern::dense(n));
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        let pattern = Arc::new(Pattern {
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
        });
        Self {
            pattern,
            values: vec![1.0; n],
        }
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` to entry (i, j); the entry must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside the sparsity pattern"));
        self.values[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for i in 0..p.n() {
            let mut acc = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * x[p.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec_into(x, &mut y);
        y
    }

    /// xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let p = &self.pattern;
        let mut total = 0.0;
        for i in 0..p.n() {
            let mut acc = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * x[p.col_idx[k]];
            }
            total += x[i] * acc;
        }
        total
    }

    /// Σ_ij A_ij, i.e. 1ᵀA1.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// α·self + β·other over a shared pattern.
    pub fn combine(&self, alpha: f64, other: &SparseSymmetricMatrix, beta: f64) -> Result<SparseSymmetricMatrix> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && *self.pattern != *other.pattern {
            return Err(Error::param("operators do not share a sparsity pattern"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(SparseSymmetricMatrix {
            pattern: Arc::clone(&self.pattern),
            values,
        })
    }

    /// Largest |A_ij − A_ji| relative to the largest |A_ij|.
    pub fn asymmetry(&self) -> f64 {
        let p = &self.pattern;
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..p.n() {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
