//! Multifrontal sparse LU on a geometric nested-dissection ordering.
//!
//! Every unknown carries a point (or none, for global unknowns such as
//! Lagrange multipliers) and a priority. The point cloud is bisected
//! recursively along mesh lines; unknowns on a cut form a separator, which
//! is eliminated after both halves. Global unknowns are eliminated last.
//! Within a front, pivots are chosen by partial pivoting restricted to the
//! fully summed rows, and lower-priority unknowns (e.g. velocities) are
//! ordered before higher-priority ones (pressures) so that saddle-point
//! zero diagonals have been filled in by the time they are reached.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_unit_lower_triangular_in_place};
use faer::perm::{permute_rows_in_place, permute_rows_in_place_scratch};
use faer::prelude::{Reborrow, ReborrowMut};
use faer::{Accum, Mat, Par};

use crate::error::{Error, Result};
use crate::sparse::{SparseOperator, SparsityPattern};

const LEAF_SIZE: usize = 96;
const CANDIDATES: usize = 2;

/// Placement of one unknown for the ordering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariableHint {
    pub point: Option<[f64; 2]>,
    pub priority: u8,
}

#[derive(Debug)]
struct Node {
    first: usize,
    count: usize,
    /// Positions of the non-pivotal unknowns of the front, ascending.
    structure: Vec<usize>,
    children: Vec<usize>,
    /// For each child, the front-local index of each of its structure
    /// entries.
    child_maps: Vec<Vec<u32>>,
}

impl Node {
    fn local(&self, pos: usize) -> u32 {
        if pos >= self.first && pos < self.first + self.count {
            (pos - self.first) as u32
        } else {
            (self.count + self.structure.binary_search(&pos).expect("position in front")) as u32
        }
    }
}

/// Ordering, assembly tree and entry-to-front map for one pattern.
#[derive(Debug)]
pub struct SymbolicMultifrontal {
    n: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
    entry_ptr: Vec<usize>,
    entry_k: Vec<u32>,
    entry_rc: Vec<(u32, u32)>,
}

struct Builder<'a> {
    hints: &'a [VariableHint],
    adj_ptr: Vec<usize>,
    adj: Vec<u32>,
    mark: Vec<u32>,
    stamp: u32,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[self.adj_ptr[v]..self.adj_ptr[v + 1]]
    }

    fn push_node(&mut self, mut own: Vec<usize>, children: Vec<usize>) -> usize {
        own.sort_by_key(|&v| (self.hints[v].priority, v));
        let first = self.order.len();
        let count = own.len();
        self.order.extend(own);
        self.nodes.push(Node { first, count, structure: Vec::new(), children, child_maps: Vec::new() });
        self.nodes.len() - 1
    }

    /// Splits at coordinate `c` along `axis`; returns (left, separator, right).
    fn split(&mut self, vars: &[usize], axis: usize, c: f64, tol: f64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        self.stamp += 2;
        let (sl, sr) = (self.stamp, self.stamp + 1);
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut sep = Vec::new();
        for &v in vars {
            let x = self.hints[v].point.expect("point")[axis];
            if x < c - tol {
                left.push(v);
                self.mark[v] = sl;
            } else if x > c + tol {
                right.push(v);
                self.mark[v] = sr;
            } else {
                sep.push(v);
            }
        }
        let mut kept = Vec::with_capacity(left.len());
        for v in left {
            if self.neighbors(v).iter().any(|&u| self.mark[u as usize] == sr) {
                sep.push(v);
            } else {
                kept.push(v);
            }
        }
        (kept, sep, right)
    }

    fn dissect(&mut self, vars: Vec<usize>) -> usize {
        if vars.len() <= LEAF_SIZE {
            return self.push_node(vars, Vec::new());
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &v in &vars {
            let p = self.hints[v].point.expect("point");
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
        let extent = hi[axis] - lo[axis];
        let tol = 1e-9 * extent.max(1e-300);
        let mut coords: Vec<f64> = vars.iter().map(|&v| self.hints[v].point.unwrap()[axis]).collect();
        coords.sort_by(f64::total_cmp);
        coords.dedup_by(|a, b| (*a - *b).abs() <= tol);
        if coords.len() < 3 {
            return self.push_node(vars, Vec::new());
        }
        let mid = coords.len() / 2;
        let lo_i = mid.saturating_sub(CANDIDATES).max(1);
        let hi_i = (mid + CANDIDATES).min(coords.len() - 2);
        let mut best: Option<(usize, f64)> = None;
        for (i, &c) in coords.iter().enumerate().take(hi_i + 1).skip(lo_i) {
            let (l, s, r) = self.split(&vars, axis, c, tol);
            if l.is_empty() || r.is_empty() {
                continue;
            }
            let imbalance = (l.len() as f64 - r.len() as f64).abs() / vars.len() as f64;
            let score = s.len() as f64 * (1.0 + imbalance);
            if best.map_or(true, |(_, b)| score < b) {
                best = Some((i, score));
            }
        }
        let Some((i, _)) = best else {
            return self.push_node(vars, Vec::new());
        };
        let (l, s, r) = self.split(&vars, axis, coords[i], tol);
        drop(vars);
        let a = self.dissect(l);
        let b = self.dissect(r);
        self.push_node(s, vec![a, b])
    }
}

impl SymbolicMultifrontal {
    pub fn analyze(pattern: &SparsityPattern, hints: &[VariableHint]) -> Result<Self> {
        let n = pattern.nrows;
        if pattern.ncols != n || hints.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: hints.len() });
        }
        if pattern.nnz() > u32::MAX as usize || n > u32::MAX as usize {
            return Err(Error::InvalidArgument("matrix too large for the multifrontal solver".into()));
        }
        // symmetrized adjacency without the diagonal
        let mut deg = vec![0usize; n];
        for r in 0..n {
            for &c in pattern.row(r) {
                if c != r {
                    deg[r] += 1;
                    deg[c] += 1;
                }
            }
        }
        let mut adj_ptr = vec![0usize; n + 1];
        for i in 0..n {
            adj_ptr[i + 1] = adj_ptr[i] + deg[i];
        }
        let mut fill = adj_ptr.clone();
        let mut adj = vec![0u32; adj_ptr[n]];
        for r in 0..n {
            for &c in pattern.row(r) {
                if c != r {
                    adj[fill[r]] = c as u32;
                    fill[r] += 1;
                    adj[fill[c]] = r as u32;
                    fill[c] += 1;
                }
            }
        }
        for i in 0..n {
            let s = &mut adj[adj_ptr[i]..adj_ptr[i + 1]];
            s.sort_unstable();
        }
        // dedup in place, rebuilding pointers
        let mut w = 0;
        let mut new_ptr = vec![0usize; n + 1];
        for i in 0..n {
            let (a, b) = (adj_ptr[i], adj_ptr[i + 1]);
            let mut last = u32::MAX;
            for k in a..b {
                if adj[k] != last {
                    last = adj[k];
                    adj[w] = last;
                    w += 1;
                }
            }
            new_ptr[i + 1] = w;
        }
        adj.truncate(w);

        let mut builder = Builder {
            hints,
            adj_ptr: new_ptr,
            adj,
            mark: vec![0; n],
            stamp: 0,
            order: Vec::with_capacity(n),
            nodes: Vec::new(),
        };
        let located: Vec<usize> = (0..n).filter(|&v| hints[v].point.is_some()).collect();
        let global: Vec<usize> = (0..n).filter(|&v| hints[v].point.is_none()).collect();
        if located.is_empty() {
            builder.push_node(global, Vec::new());
        } else {
            // Global unknowns join the top separator: the mean constraints
            // must share a front with the last pressure pivots, which are
            // singular on their own.
            let root = builder.dissect(located);
            let mut global = global;
            global.sort_by_key(|&v| (hints[v].priority, v));
            builder.nodes[root].count += global.len();
            builder.order.extend(global);
        }

        let order = std::mem::take(&mut builder.order);
        let mut pos = vec![0usize; n];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let mut nodes = std::mem::take(&mut builder.nodes);
        let mut owner = vec![0u32; n];
        for (id, node) in nodes.iter().enumerate() {
            for p in node.first..node.first + node.count {
                owner[p] = id as u32;
            }
        }

        // lowest position in each subtree; postorder makes subtrees contiguous
        let mut lowest: Vec<usize> = nodes.iter().map(|nd| nd.first).collect();
        for id in 0..nodes.len() {
            for &c in &nodes[id].children {
                lowest[id] = lowest[id].min(lowest[c]);
            }
        }
        // structure of each front, bottom-up
        let mut seen = vec![usize::MAX; n];
        for id in 0..nodes.len() {
            let (first, end) = (nodes[id].first, nodes[id].first + nodes[id].count);
            let mut s = Vec::new();
            for p in first..end {
                for &u in builder.neighbors(order[p]) {
                    let q = pos[u as usize];
                    if q >= end && seen[q] != id {
                        seen[q] = id;
                        s.push(q);
                    } else if q < first && q < lowest[id] {
                        return Err(Error::LinearSolver("nested dissection produced an invalid separator".into()));
                    }
                }
            }
            for ci in 0..nodes[id].children.len() {
                let c = nodes[id].children[ci];
                for &q in &nodes[c].structure {
                    if q >= end {
                        if seen[q] != id {
                            seen[q] = id;
                            s.push(q);
                        }
                    } else if q < first {
                        return Err(Error::LinearSolver("nested dissection produced an invalid separator".into()));
                    }
                }
            }
            s.sort_unstable();
            nodes[id].structure = s;
            let maps: Vec<Vec<u32>> = nodes[id]
                .children
                .iter()
                .map(|&c| nodes[c].structure.iter().map(|&q| nodes[id].local(q)).collect())
                .collect();
            nodes[id].child_maps = maps;
        }

        // entry-to-front assignment
        let nnz = pattern.nnz();
        let mut entry_node = vec![0u32; nnz];
        let mut counts = vec![0usize; nodes.len() + 1];
        for r in 0..n {
            for k in pattern.row_ptr[r]..pattern.row_ptr[r + 1] {
                let c = pattern.col_idx[k];
                let node = owner[pos[r].min(pos[c])];
                entry_node[k] = node;
                counts[node as usize + 1] += 1;
            }
        }
        for i in 0..nodes.len() {
            counts[i + 1] += counts[i];
        }
        let entry_ptr = counts.clone();
        let mut entry_k = vec![0u32; nnz];
        let mut entry_rc = vec![(0u32, 0u32); nnz];
        let mut next = counts;
        for r in 0..n {
            for k in pattern.row_ptr[r]..pattern.row_ptr[r + 1] {
                let c = pattern.col_idx[k];
                let node = entry_node[k] as usize;
                let slot = next[node];
                next[node] += 1;
                entry_k[slot] = k as u32;
                entry_rc[slot] = (nodes[node].local(pos[r]), nodes[node].local(pos[c]));
            }
        }
        Ok(Self { n, order, nodes, entry_ptr, entry_k, entry_rc })
    }

    /// Number of entries stored in the factors.
    pub fn factor_size(&self) -> usize {
        self.nodes.iter().map(|nd| nd.count * nd.count + 2 * nd.count * nd.structure.len()).sum()
    }

    pub fn largest_front(&self) -> usize {
        self.nodes.iter().map(|nd| nd.count + nd.structure.len()).max().unwrap_or(0)
    }

    pub fn factorize(&self, a: &SparseOperator) -> Result<NumericMultifrontal> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: a.nrows() });
        }
        let mut pending: Vec<Option<Mat<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut factors = Vec::with_capacity(self.nodes.len());
        for (id, node) in self.nodes.iter().enumerate() {
            let k = node.count;
            let m = node.structure.len();
            let s = k + m;
            let mut front = Mat::<f64>::zeros(s, s);
            for slot in self.entry_ptr[id]..self.entry_ptr[id + 1] {
                let (r, c) = self.entry_rc[slot];
                front[(r as usize, c as usize)] += a.values[self.entry_k[slot] as usize];
            }
            for (ci, &child) in node.children.iter().enumerate() {
                let cb = pending[child].take().expect("child processed first");
                let map = &node.child_maps[ci];
                for (jc, &lj) in map.iter().enumerate() {
                    let src = cb.col_as_slice(jc);
                    let dst = front.col_as_slice_mut(lj as usize);
                    for (ic, &li) in map.iter().enumerate() {
                        dst[li as usize] += src[ic];
                    }
                }
            }

            let mut perm = vec![0usize; k];
            let mut perm_inv = vec![0usize; k];
            let (mut f11, mut f12, mut f21, mut f22) = front.as_mut().split_at_mut(k, k);
            {
                let mut buf = MemBuffer::new(lu_in_place_scratch::<usize, f64>(k, k, Par::Seq, Default::default()));
                lu_in_place(f11.rb_mut(), &mut perm, &mut perm_inv, Par::Seq, MemStack::new(&mut buf), Default::default());
            }
            for j in 0..k {
                let d = f11[(j, j)];
                if !d.is_finite() || d == 0.0 {
                    return Err(Error::Singular { pivot: self.order[node.first + j] });
                }
            }
            if m > 0 {
                let perm_ref = faer::perm::PermRef::new_checked(&perm, &perm_inv, k);
                let mut buf = MemBuffer::new(permute_rows_in_place_scratch::<usize, f64>(k, m));
                permute_rows_in_place(f12.rb_mut(), perm_ref, MemStack::new(&mut buf));
                solve_unit_lower_triangular_in_place(f11.rb(), f12.rb_mut(), Par::Seq);
                solve_lower_triangular_in_place(f11.rb().transpose(), f21.rb_mut().transpose_mut(), Par::Seq);
                matmul(f22.rb_mut(), Accum::Add, f21.rb(), f12.rb(), -1.0, Par::Seq);
            }
            let lu11 = f11.rb().to_owned();
            let u12 = f12.rb().to_owned();
            let l21 = f21.rb().to_owned();
            if m > 0 {
                pending[id] = Some(f22.rb().to_owned());
            }
            drop(front);
            factors.push(FrontFactor { lu11, u12, l21, perm });
        }
        Ok(NumericMultifrontal { factors })
    }

    /// Solves `A x = b` in place with the factors of `A`.
    pub fn solve_in_place(&self, num: &NumericMultifrontal, b: &mut [f64]) {
        let y: Vec<f64> = self.order.iter().map(|&v| b[v]).collect();
        let mut y = y;
        let mut tmp = Vec::new();
        for (node, f) in self.nodes.iter().zip(&num.factors) {
            let k = node.count;
            let seg = &y[node.first..node.first + k];
            tmp.clear();
            tmp.extend(f.perm.iter().map(|&i| seg[i]));
            for j in 0..k {
                let xj = tmp[j];
                if xj != 0.0 {
                    let col = f.lu11.col_as_slice(j);
                    for i in j + 1..k {
                        tmp[i] -= col[i] * xj;
                    }
                }
            }
            for j in 0..k {
                let xj = tmp[j];
                if xj != 0.0 {
                    let col = f.l21.col_as_slice(j);
                    for (r, &q) in node.structure.iter().enumerate() {
                        y[q] -= col[r] * xj;
                    }
                }
            }
            y[node.first..node.first + k].copy_from_slice(&tmp);
        }
        for (node, f) in self.nodes.iter().zip(&num.factors).rev() {
            let k = node.count;
            tmp.clear();
            tmp.extend_from_slice(&y[node.first..node.first + k]);
            for (c, &q) in node.structure.iter().enumerate() {
                let zc = y[q];
                if zc != 0.0 {
                    let col = f.u12.col_as_slice(c);
                    for i in 0..k {
                        tmp[i] -= col[i] * zc;
                    }
                }
            }
            for j in (0..k).rev() {
                let col = f.lu11.col_as_slice(j);
                tmp[j] /= col[j];
                let xj = tmp[j];
                for i in 0..j {
                    tmp[i] -= col[i] * xj;
                }
            }
            y[node.first..node.first + k].copy_from_slice(&tmp);
        }
        for (p, &v) in self.order.iter().enumerate() {
            b[v] = y[p];
        }
    }
}

#[derive(Debug)]
struct FrontFactor {
    lu11: Mat<f64>,
    u12: Mat<f64>,
    l21: Mat<f64>,
    perm: Vec<usize>,
}

#[derive(Debug)]
pub struct NumericMultifrontal {
    factors: Vec<FrontFactor>,
}
