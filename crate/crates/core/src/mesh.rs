//! Structured triangulations of the unit square.
//!
//! Vertex `(i, j)` sits at `(i/n, j/n)` and has index `j * (n + 1) + i`.
//! Every grid cell is split along its bottom-left to top-right diagonal into
//! two counterclockwise triangles:
//!
//! ```text
//!  v01 ---- v11
//!   |  1  /  |
//!   |   /  0 |
//!  v00 ---- v10
//! ```
//!
//! Triangle `2 * (j * n + i)` is `[v00, v10, v11]` and triangle
//! `2 * (j * n + i) + 1` is `[v00, v11, v01]`.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Side of the unit square a boundary edge lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Conforming triangulation of `[0, 1]^2`. Immutable after construction.
#[derive(Clone, Debug)]
pub struct TriMesh {
    /// Cells per side.
    n: usize,
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Unique edges as sorted vertex pairs.
    pub edges: Vec<[usize; 2]>,
    /// Global edge index of local edges (0,1), (1,2), (2,0) of each triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Characteristic diameter, `1/n`.
    pub h: f64,
}

impl TriMesh {
    /// Builds the `n x n` structured grid with `2 n^2` triangles.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "mesh resolution must be at least 1".into(),
            ));
        }
        let np = n + 1;
        let inv = 1.0 / n as f64;
        let vid = |i: usize, j: usize| j * np + i;

        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push([i as f64 * inv, j as f64 * inv]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }

        let mut boundary_edges = Vec::with_capacity(4 * n);
        for i in 0..n {
            boundary_edges.push(BoundaryEdge { vertices: [vid(i, 0), vid(i + 1, 0)], tag: BoundaryTag::Bottom });
        }
        for j in 0..n {
            boundary_edges.push(BoundaryEdge { vertices: [vid(n, j), vid(n, j + 1)], tag: BoundaryTag::Right });
        }
        for i in (0..n).rev() {
            boundary_edges.push(BoundaryEdge { vertices: [vid(i + 1, n), vid(i, n)], tag: BoundaryTag::Top });
        }
        for j in (0..n).rev() {
            boundary_edges.push(BoundaryEdge { vertices: [vid(0, j + 1), vid(0, j)], tag: BoundaryTag::Left });
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(3 * n * n + 2 * n);
        let mut edges = Vec::with_capacity(3 * n * n + 2 * n);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = if a < b { [a, b] } else { [b, a] };
                *slot = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
            }
            triangle_edges.push(local);
        }

        Ok(Self {
            n,
            vertices,
            triangles,
            boundary_edges,
            edges,
            triangle_edges,
            h: inv,
        })
    }

    pub fn cells_per_side(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_boundary_point(p: [f64; 2]) -> bool {
        p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0
    }

    /// Vertices on the boundary of the square, in increasing index order.
    pub fn boundary_vertex_set(&self) -> BTreeSet<usize> {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, p)| Self::is_boundary_point(**p))
            .map(|(i, _)| i)
            .collect()
    }

    /// Signed area of triangle `t`; positive for counterclockwise order.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Boundary flags per edge, indexed like [`TriMesh::edges`].
    pub fn boundary_edge_flags(&self) -> Vec<bool> {
        self.edges
            .iter()
            .map(|&[a, b]| {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                (pa[0] == pb[0] && (pa[0] == 0.0 || pa[0] == 1.0))
                    || (pa[1] == pb[1] && (pa[1] == 0.0 || pa[1] == 1.0))
            })
            .collect()
    }

    /// Finds a triangle containing `p` and the barycentric coordinates of `p`
    /// in it. Uses the structured-grid inverse map; falls back to a scan.
    pub fn locate(&self, p: [f64; 2]) -> Result<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        if !(p[0] >= -TOL && p[0] <= 1.0 + TOL && p[1] >= -TOL && p[1] <= 1.0 + TOL) {
            return Err(Error::PointOutsideDomain { x: p[0], y: p[1] });
        }
        let n = self.n;
        let nf = n as f64;
        let i = ((p[0] * nf).floor().max(0.0) as usize).min(n - 1);
        let j = ((p[1] * nf).floor().max(0.0) as usize).min(n - 1);
        let (dx, dy) = (p[0] * nf - i as f64, p[1] * nf - j as f64);
        let cell = 2 * (j * n + i);
        let t = if dx >= dy { cell } else { cell + 1 };
        let bary = self.barycentric(t, p);
        if bary.iter().all(|&l| l >= -1e-10) {
            return Ok((t, bary));
        }
        for t in 0..self.triangles.len() {
            let bary = self.barycentric(t, p);
            if bary.iter().all(|&l| l >= -1e-10) {
                return Ok((t, bary));
            }
        }
        Err(Error::PointOutsideDomain { x: p[0], y: p[1] })
    }

    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let l1 = ((p[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (p[1] - pa[1])) / det;
        let l2 = ((pb[0] - pa[0]) * (p[1] - pa[1]) - (p[0] - pa[0]) * (pb[1] - pa[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Convenience wrapper matching the mesh constructor.
pub fn build_unit_square_mesh(n: usize) -> Result<TriMesh> {
    TriMesh::unit_square(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_resolution() {
        assert!(TriMesh::unit_square(0).is_err());
    }

    #[test]
    fn small_grid_counts() {
        let m = TriMesh::unit_square(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles(), m.boundary_edges.len()), (4, 2, 4));
        assert_eq!(m.num_edges(), 5);
        let m = TriMesh::unit_square(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles(), m.boundary_edges.len()), (9, 8, 8));
        assert_eq!(m.num_edges(), 16);
    }

    #[test]
    fn counts_euler_and_areas() {
        for n in [1, 2, 3, 5, 8, 17] {
            let m = TriMesh::unit_square(n).unwrap();
            assert_eq!(m.num_triangles(), 2 * n * n);
            assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.boundary_edges.len(), 4 * n);
            let euler = m.num_vertices() as i64 - m.num_edges() as i64 + m.num_triangles() as i64;
            assert_eq!(euler, 1);
            let expected = 1.0 / (2.0 * (n * n) as f64);
            let mut total = 0.0;
            for t in 0..m.num_triangles() {
                let a = m.signed_area(t);
                assert!((a - expected).abs() < 1e-14);
                total += a;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn edges_shared_by_one_or_two_triangles() {
        let m = TriMesh::unit_square(4).unwrap();
        let mut count = vec![0; m.num_edges()];
        for te in &m.triangle_edges {
            for &e in te {
                count[e] += 1;
            }
        }
        let flags = m.boundary_edge_flags();
        for (e, &c) in count.iter().enumerate() {
            assert_eq!(c, if flags[e] { 1 } else { 2 });
        }
        assert_eq!(flags.iter().filter(|&&b| b).count(), 16);
        for be in &m.boundary_edges {
            let key = if be.vertices[0] < be.vertices[1] { be.vertices } else { [be.vertices[1], be.vertices[0]] };
            let e = m.edges.iter().position(|&x| x == key).unwrap();
            assert!(flags[e]);
        }
    }

    #[test]
    fn boundary_vertices() {
        let m = TriMesh::unit_square(1).unwrap();
        assert_eq!(m.boundary_vertex_set().len(), 4);
        let m = TriMesh::unit_square(2).unwrap();
        let b = m.boundary_vertex_set();
        assert_eq!(b.len(), 8);
        assert!(!b.contains(&4));
        assert_eq!(m.vertices[4], [0.5, 0.5]);
        let m = TriMesh::unit_square(4).unwrap();
        let b = m.boundary_vertex_set();
        assert_eq!(b.len(), 16);
        assert_eq!(m.num_vertices() - b.len(), 9);
        for &v in &b {
            assert!(TriMesh::is_boundary_point(m.vertices[v]));
        }
    }

    #[test]
    fn h_matches_resolution() {
        let m = TriMesh::unit_square(128).unwrap();
        assert_eq!(m.h, 1.0 / 128.0);
    }

    #[test]
    fn locate_points() {
        let m = TriMesh::unit_square(3).unwrap();
        for &p in &[[0.0, 0.0], [1.0, 1.0], [0.2, 0.7], [0.5, 0.5], [1.0, 0.3], [0.999, 0.001]] {
            let (t, bary) = m.locate(p).unwrap();
            assert!(bary.iter().all(|&l| l >= -1e-12));
            let [a, b, c] = m.triangles[t];
            let x = bary[0] * m.vertices[a][0] + bary[1] * m.vertices[b][0] + bary[2] * m.vertices[c][0];
            let y = bary[0] * m.vertices[a][1] + bary[1] * m.vertices[b][1] + bary[2] * m.vertices[c][1];
            assert!((x - p[0]).abs() < 1e-14 && (y - p[1]).abs() < 1e-14);
        }
        assert!(m.locate([1.5, 0.2]).is_err());
    }
}
