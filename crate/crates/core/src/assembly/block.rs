//! Square block matrices with a fixed global pattern.
//!
//! Block rows are concatenated in CSR order, so every block entry maps to
//! one global storage index computed once at construction. Refilling the
//! global matrix is then a scatter over value arrays.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::{SparseOperator, SparsityPattern};

#[derive(Debug)]
pub struct BlockStructure {
    offsets: Vec<usize>,
    pattern: Arc<SparsityPattern>,
    blocks: BTreeMap<(usize, usize), (Arc<SparsityPattern>, Vec<usize>)>,
}

impl BlockStructure {
    /// `sizes` gives the field sizes; `blocks` the nonzero blocks with their
    /// patterns.
    pub fn new(sizes: &[usize], blocks: Vec<(usize, usize, Arc<SparsityPattern>)>) -> Result<Self> {
        let mut offsets = vec![0];
        for s in sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        let nb = sizes.len();
        let mut by_pos: BTreeMap<(usize, usize), Arc<SparsityPattern>> = BTreeMap::new();
        for (bi, bj, p) in blocks {
            if bi >= nb || bj >= nb || p.nrows != sizes[bi] || p.ncols != sizes[bj] {
                return Err(Error::DimensionMismatch { expected: sizes.get(bi).copied().unwrap_or(0), found: p.nrows });
            }
            if by_pos.insert((bi, bj), p).is_some() {
                return Err(Error::InvalidArgument(format!("block ({bi}, {bj}) given twice")));
            }
        }
        let n = offsets[nb];
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        let mut maps: BTreeMap<(usize, usize), Vec<usize>> =
            by_pos.iter().map(|(k, p)| (*k, vec![0; p.nnz()])).collect();
        for bi in 0..nb {
            let row_blocks: Vec<_> = by_pos.range((bi, 0)..(bi + 1, 0)).map(|(k, p)| (k.1, p.clone())).collect();
            for r in 0..sizes[bi] {
                for (bj, p) in &row_blocks {
                    let map = maps.get_mut(&(bi, *bj)).unwrap();
                    for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                        map[k] = col_idx.len();
                        col_idx.push(offsets[*bj] + p.col_idx[k]);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let pattern = Arc::new(SparsityPattern { nrows: n, ncols: n, row_ptr, col_idx });
        let blocks = by_pos.into_iter().map(|(k, p)| (k, (p, maps.remove(&k).unwrap()))).collect();
        Ok(Self { offsets, pattern, blocks })
    }

    pub fn size(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn offset(&self, field: usize) -> usize {
        self.offsets[field]
    }

    pub fn range(&self, field: usize) -> std::ops::Range<usize> {
        self.offsets[field]..self.offsets[field + 1]
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn zeros(&self) -> SparseOperator {
        SparseOperator::zeros(self.pattern.clone())
    }

    /// `global[block (bi, bj)] += alpha * op`.
    pub fn add_block(&self, global: &mut SparseOperator, bi: usize, bj: usize, alpha: f64, op: &SparseOperator) -> Result<()> {
        let (p, map) = self
            .blocks
            .get(&(bi, bj))
            .ok_or_else(|| Error::InvalidArgument(format!("block ({bi}, {bj}) is not part of the structure")))?;
        if !Arc::ptr_eq(p, op.pattern()) && **p != **op.pattern() {
            return Err(Error::InvalidArgument(format!("block ({bi}, {bj}) pattern mismatch")));
        }
        for (k, v) in op.values.iter().enumerate() {
            global.values[map[k]] += alpha * v;
        }
        Ok(())
    }

    /// Storage positions needed to impose Dirichlet rows on `dofs`.
    pub fn dirichlet_mask(&self, dofs: &[usize]) -> DirichletMask {
        let n = self.size();
        let mut fixed = vec![false; n];
        for &d in dofs {
            fixed[d] = true;
        }
        let p = &*self.pattern;
        let mut zero = Vec::new();
        let mut diag = Vec::new();
        for r in 0..n {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                let c = p.col_idx[k];
                if fixed[r] && c == r {
                    diag.push(k);
                } else if fixed[r] || fixed[c] {
                    zero.push(k);
                }
            }
        }
        DirichletMask { dofs: dofs.to_vec(), zero, diag }
    }
}

/// Rows of fixed unknowns become identity rows and their columns are
/// removed from every other row.
#[derive(Clone, Debug)]
pub struct DirichletMask {
    pub dofs: Vec<usize>,
    zero: Vec<usize>,
    diag: Vec<usize>,
}

impl DirichletMask {
    pub fn apply(&self, a: &mut SparseOperator) {
        for &k in &self.zero {
            a.values[k] = 0.0;
        }
        for &k in &self.diag {
            a.values[k] = 1.0;
        }
    }
}

/// Dense single-column or single-row block from a vector.
pub fn column_block(v: &[f64]) -> SparseOperator {
    let n = v.len();
    let pattern = SparsityPattern { nrows: n, ncols: 1, row_ptr: (0..=n).collect(), col_idx: vec![0; n] };
    let mut op = SparseOperator::zeros(Arc::new(pattern));
    op.values.copy_from_slice(v);
    op
}

pub fn row_block(v: &[f64]) -> SparseOperator {
    let n = v.len();
    let pattern = SparsityPattern { nrows: 1, ncols: n, row_ptr: vec![0, n], col_idx: (0..n).collect() };
    let mut op = SparseOperator::zeros(Arc::new(pattern));
    op.values.copy_from_slice(v);
    op
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concatenation_places_blocks() {
        let a = SparseOperator::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let b = SparseOperator::from_triplets(2, 1, &[(1, 0, 3.0)]).unwrap();
        let s = BlockStructure::new(&[2, 1], vec![(0, 0, a.pattern().clone()), (0, 1, b.pattern().clone()), (1, 0, b.transpose().pattern().clone())]).unwrap();
        let mut g = s.zeros();
        s.add_block(&mut g, 0, 0, 1.0, &a).unwrap();
        s.add_block(&mut g, 0, 1, 1.0, &b).unwrap();
        s.add_block(&mut g, 1, 0, -1.0, &b.transpose()).unwrap();
        assert_eq!(g.to_dense(), vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 3.0], vec![0.0, -3.0, 0.0]]);
        let mask = s.dirichlet_mask(&[1]);
        mask.apply(&mut g);
        assert_eq!(g.to_dense(), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]);
        assert!(s.add_block(&mut g, 1, 1, 1.0, &a).is_err());
    }
}
