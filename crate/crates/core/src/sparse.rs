//! Compressed sparse row storage for assembled operators.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Row pointers and sorted, unique column indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from per-row column lists (duplicates allowed).
    pub fn from_rows(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// Storage index of entry `(r, c)`, if structurally present.
    #[inline]
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.row(r).binary_search(&c).ok().map(|k| start + k)
    }
}

/// Assembled sparse matrix sharing a (possibly common) pattern.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pattern: Arc<SparsityPattern>,
    pub values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        let pattern = SparsityPattern {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
        };
        Self { pattern: Arc::new(pattern), values: vec![1.0; n] }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); nrows];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside a {nrows} x {ncols} matrix"
                )));
            }
            rows[r].push(c);
        }
        let mut op = Self::zeros(Arc::new(SparsityPattern::from_rows(ncols, rows)));
        for &(r, c, v) in triplets {
            op.add(r, c, v);
        }
        Ok(op)
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Adds `v` to a structurally present entry.
    ///
    /// Panics if `(r, c)` is not part of the pattern.
    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let k = self
            .pattern
            .position(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pattern.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec_add(1.0, x, &mut y);
        y
    }

    /// `y += alpha * A x`
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols());
        assert_eq!(y.len(), self.nrows());
        let p = &*self.pattern;
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yr += alpha * s;
        }
    }

    /// `y += alpha * A^T x`
    pub fn transpose_matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows());
        assert_eq!(y.len(), self.ncols());
        let p = &*self.pattern;
        for (r, &xr) in x.iter().enumerate() {
            let a = alpha * xr;
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                y[p.col_idx[k]] += self.values[k] * a;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let p = &*self.pattern;
        let mut rows = vec![Vec::new(); p.ncols];
        for r in 0..p.nrows {
            for &c in p.row(r) {
                rows[c].push(r);
            }
        }
        let mut t = Self::zeros(Arc::new(SparsityPattern::from_rows(p.nrows, rows)));
        for r in 0..p.nrows {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                t.add(p.col_idx[k], r, self.values[k]);
            }
        }
        t
    }

    /// `self += alpha * other`; both must share one pattern.
    pub fn axpy(&mut self, alpha: f64, other: &SparseOperator) -> Result<()> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && *self.pattern != *other.pattern {
            return Err(Error::InvalidArgument("operators have different sparsity patterns".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T| / max |A|`.
    pub fn symmetry_defect(&self) -> f64 {
        let p = &*self.pattern;
        let mut worst: f64 = 0.0;
        for r in 0..p.nrows {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                let c = p.col_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let p = &*self.pattern;
        let mut d = vec![vec![0.0; p.ncols]; p.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                row[p.col_idx[k]] += self.values[k];
            }
        }
        d
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseOperator::from_triplets(2, 3, &[(0, 2, 1.0), (0, 2, 2.0), (1, 0, -1.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 2), 3.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 2.0]), vec![6.0, -1.0]);
        assert!(SparseOperator::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn transpose_matches_transpose_matvec() {
        let a = SparseOperator::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, 3.0), (2, 1, -4.0)]).unwrap();
        let at = a.transpose();
        let x = [1.0, -2.0, 0.5];
        let mut y = vec![0.0; 2];
        a.transpose_matvec_add(1.0, &x, &mut y);
        assert_eq!(at.matvec(&x), y);
        assert_eq!(at.transpose().to_dense(), a.to_dense());
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        let s = SparseOperator::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(s.symmetry_defect(), 0.0);
        let n = SparseOperator::from_triplets(2, 2, &[(0, 1, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(n.symmetry_defect(), 0.5);
    }
}
