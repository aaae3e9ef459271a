//! Upper-triangular, row-substochastic matrices over the nonfailed states.
//!
//! Failed units never revive, so under the canonical state order every
//! transition goes to a state with a larger index and the consolidated
//! transition matrix is upper triangular. Solves against `I - P` are plain
//! back-substitutions.

use crate::error::{Error, Result};

/// Matrices up to this dimension are stored densely.
pub const DENSE_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(Vec<f64>),
    /// Compressed rows; columns within a row are strictly ascending.
    Csr {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangularMatrix {
    dim: usize,
    storage: Storage,
}

impl TriangularMatrix {
    /// Builds from per-row `(column, value)` lists with ascending columns,
    /// choosing dense storage for `dim <= DENSE_LIMIT`.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = rows.len();
        for (a, row) in rows.iter().enumerate() {
            let mut last = None;
            for &(b, v) in row {
                if b < a || b >= dim {
                    return Err(Error::InvalidConfig(format!(
                        "entry ({a}, {b}) lies outside the upper triangle"
                    )));
                }
                if last.is_some_and(|l| b <= l) {
                    return Err(Error::InvalidConfig(format!("row {a} columns not ascending")));
                }
                if !(v >= 0.0) {
                    return Err(Error::InvalidConfig(format!("entry ({a}, {b}) = {v} is negative")));
                }
                last = Some(b);
            }
        }
        let storage = if dim <= DENSE_LIMIT {
            let mut data = vec![0.0; dim * dim];
            for (a, row) in rows.iter().enumerate() {
                for &(b, v) in row {
                    data[a * dim + b] = v;
                }
            }
            Storage::Dense(data)
        } else {
            let mut row_ptr = Vec::with_capacity(dim + 1);
            let nnz = rows.iter().map(Vec::len).sum();
            let mut cols = Vec::with_capacity(nnz);
            let mut vals = Vec::with_capacity(nnz);
            row_ptr.push(0);
            for row in rows {
                for (b, v) in row {
                    cols.push(b);
                    vals.push(v);
                }
                row_ptr.push(cols.len());
            }
            Storage::Csr { row_ptr, cols, vals }
        };
        Ok(TriangularMatrix { dim, storage })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        match &self.storage {
            Storage::Dense(data) => data[a * self.dim + b],
            Storage::Csr { row_ptr, cols, vals } => {
                let range = row_ptr[a]..row_ptr[a + 1];
                match cols[range.clone()].binary_search(&b) {
                    Ok(pos) => vals[range.start + pos],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Nonzero entries of row `a` with ascending columns.
    pub fn row(&self, a: usize) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match &self.storage {
            Storage::Dense(data) => Box::new(
                data[a * self.dim + a..(a + 1) * self.dim]
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(off, &v)| (a + off, v)),
            ),
            Storage::Csr { row_ptr, cols, vals } => {
                let range = row_ptr[a]..row_ptr[a + 1];
                Box::new(cols[range.clone()].iter().copied().zip(vals[range].iter().copied()))
            }
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(data) => data.iter().filter(|v| **v != 0.0).count(),
            Storage::Csr { vals, .. } => vals.len(),
        }
    }

    pub fn diagonal(&self, a: usize) -> f64 {
        self.get(a, a)
    }

    pub fn row_sum(&self, a: usize) -> f64 {
        self.row(a).map(|(_, v)| v).sum()
    }

    /// `P v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|a| self.row(a).map(|(b, p)| p * v[b]).sum())
            .collect()
    }

    /// `u P`
    pub fn vec_mul(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for (a, &ua) in u.iter().enumerate() {
            if ua == 0.0 {
                continue;
            }
            for (b, p) in self.row(a) {
                out[b] += ua * p;
            }
        }
        out
    }

    /// Solves `(I - P) x = v` by back-substitution.
    pub fn solve_identity_minus(&self, v: &[f64]) -> Result<Vec<f64>> {
        debug_assert_eq!(v.len(), self.dim);
        let mut x = vec![0.0; self.dim];
        for a in (0..self.dim).rev() {
            let mut acc = v[a];
            let mut diag = 0.0;
            for (b, p) in self.row(a) {
                if b == a {
                    diag = p;
                } else {
                    acc += p * x[b];
                }
            }
            let pivot = 1.0 - diag;
            if !(pivot > 0.0) {
                return Err(Error::SingularSystem(format!(
                    "diagonal entry {diag} of row {a} leaves I - P singular"
                )));
            }
            x[a] = acc / pivot;
        }
        Ok(x)
    }

    /// Overwrites one stored entry. Only meant for negative-control checks
    /// that need a deliberately corrupted matrix.
    #[doc(hidden)]
    pub fn set_unchecked(&mut self, a: usize, b: usize, value: f64) {
        match &mut self.storage {
            Storage::Dense(data) => data[a * self.dim + b] = value,
            Storage::Csr { row_ptr, cols, vals } => {
                let range = row_ptr[a]..row_ptr[a + 1];
                if let Ok(pos) = cols[range.clone()].binary_search(&b) {
                    vals[range.start + pos] = value;
                }
            }
        }
    }
}
