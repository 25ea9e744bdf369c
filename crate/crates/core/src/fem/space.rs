//! Continuous Lagrange spaces on a [`TriMesh`] and fields living on them.
//!
//! Scalar P2 numbering puts all vertices first (same index as the mesh
//! vertex) followed by one node per edge. Vector spaces use a block layout:
//! global dof `c * scalar_dofs + s` is component `c` of scalar node `s`.

use std::sync::Arc;

use super::basis::{p1_gradients, p1_values, p2_gradients, p2_values};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Affine map from the reference triangle onto one mesh triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub origin: [f64; 2],
    /// Columns are the edge vectors `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn new(mesh: &TriMesh, t: usize) -> Self {
        let [a, b, c] = mesh.triangles[t];
        let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let jac = [[pb[0] - pa[0], pc[0] - pa[0]], [pb[1] - pa[1], pc[1] - pa[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        Self { origin: pa, jac, det }
    }

    #[inline]
    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    /// Maps a reference gradient to physical coordinates (`J^{-T} g`).
    #[inline]
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let j = &self.jac;
        [
            (j[1][1] * g[0] - j[1][0] * g[1]) / self.det,
            (-j[0][1] * g[0] + j[0][0] * g[1]) / self.det,
        ]
    }
}

#[derive(Debug)]
pub struct FunctionSpace {
    mesh: Arc<TriMesh>,
    degree: usize,
    components: usize,
    scalar_dofs: usize,
    nodes_per_element: usize,
    dof_map: Vec<usize>,
    dof_coords: Vec<[f64; 2]>,
    boundary_nodes: Vec<usize>,
    boundary_dofs: Vec<usize>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<TriMesh>, degree: usize, components: usize) -> Result<Self> {
        if !(1..=2).contains(&components) {
            return Err(Error::InvalidArgument(format!("unsupported component count {components}")));
        }
        let nv = mesh.num_vertices();
        let (scalar_dofs, nodes_per_element) = match degree {
            1 => (nv, 3),
            2 => (nv + mesh.num_edges(), 6),
            d => return Err(Error::InvalidArgument(format!("unsupported element degree {d}"))),
        };

        let mut dof_map = Vec::with_capacity(nodes_per_element * mesh.num_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            dof_map.extend_from_slice(tri);
            if degree == 2 {
                dof_map.extend(mesh.triangle_edges[t].iter().map(|&e| nv + e));
            }
        }

        let mut dof_coords = mesh.vertices.clone();
        if degree == 2 {
            dof_coords.extend(mesh.edges.iter().map(|&[a, b]| {
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
            }));
        }

        let boundary_nodes: Vec<usize> = dof_coords
            .iter()
            .enumerate()
            .filter(|(_, p)| TriMesh::is_boundary_point(**p))
            .map(|(i, _)| i)
            .collect();
        let boundary_dofs = (0..components)
            .flat_map(|c| boundary_nodes.iter().map(move |&s| c * scalar_dofs + s))
            .collect();

        Ok(Self {
            mesh,
            degree,
            components,
            scalar_dofs,
            nodes_per_element,
            dof_map,
            dof_coords,
            boundary_nodes,
            boundary_dofs,
        })
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn dof_count(&self) -> usize {
        self.components * self.scalar_dofs
    }

    pub fn scalar_dof_count(&self) -> usize {
        self.scalar_dofs
    }

    pub fn nodes_per_element(&self) -> usize {
        self.nodes_per_element
    }

    /// Scalar node indices of triangle `t` in local basis order.
    #[inline]
    pub fn element_nodes(&self, t: usize) -> &[usize] {
        let k = self.nodes_per_element;
        &self.dof_map[t * k..(t + 1) * k]
    }

    #[inline]
    pub fn dof(&self, component: usize, node: usize) -> usize {
        component * self.scalar_dofs + node
    }

    /// Coordinates of every scalar node.
    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Every global dof (all components) on the boundary, sorted.
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Basis values and reference gradients at a barycentric point.
    pub fn tabulate(&self, l: [f64; 3], values: &mut [f64], grads: &mut [[f64; 2]]) {
        match self.degree {
            1 => {
                values[..3].copy_from_slice(&p1_values(l));
                grads[..3].copy_from_slice(&p1_gradients());
            }
            _ => {
                values[..6].copy_from_slice(&p2_values(l));
                grads[..6].copy_from_slice(&p2_gradients(l));
            }
        }
    }

    pub fn same_as(&self, other: &FunctionSpace) -> bool {
        std::ptr::eq(self, other)
            || (Arc::ptr_eq(&self.mesh, &other.mesh)
                && self.degree == other.degree
                && self.components == other.components)
    }
}

/// Free function form of [`FunctionSpace::new`].
pub fn build_function_space(mesh: Arc<TriMesh>, degree: usize, components: usize) -> Result<Arc<FunctionSpace>> {
    FunctionSpace::new(mesh, degree, components).map(Arc::new)
}

/// Point value and physical gradient of each component of a field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldValue {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

/// Coefficient vector on a function space.
#[derive(Clone, Debug)]
pub struct Field {
    space: Arc<FunctionSpace>,
    pub coeffs: Vec<f64>,
}

impl Field {
    pub fn zeros(space: Arc<FunctionSpace>) -> Self {
        let n = space.dof_count();
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn from_coeffs(space: Arc<FunctionSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dof_count() {
            return Err(Error::DimensionMismatch { expected: space.dof_count(), found: coeffs.len() });
        }
        Ok(Self { space, coeffs })
    }

    /// Nodal interpolant: `f(point, component)` at every Lagrange node.
    pub fn interpolate(space: Arc<FunctionSpace>, f: impl Fn([f64; 2], usize) -> f64) -> Self {
        let ns = space.scalar_dof_count();
        let mut coeffs = vec![0.0; space.dof_count()];
        for c in 0..space.components() {
            for (s, &p) in space.dof_coords().iter().enumerate() {
                coeffs[c * ns + s] = f(p, c);
            }
        }
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    /// Value and gradient at `t`-local barycentric point `l`.
    pub fn eval_in_element(&self, t: usize, l: [f64; 3]) -> FieldValue {
        let space = &self.space;
        let map = ElementMap::new(space.mesh(), t);
        let mut vals = [0.0; 6];
        let mut grads = [[0.0; 2]; 6];
        space.tabulate(l, &mut vals, &mut grads);
        let nodes = space.element_nodes(t);
        let mut out = FieldValue {
            values: vec![0.0; space.components()],
            gradients: vec![[0.0; 2]; space.components()],
        };
        for (i, &node) in nodes.iter().enumerate() {
            let g = map.push_gradient(grads[i]);
            for c in 0..space.components() {
                let a = self.coeffs[space.dof(c, node)];
                out.values[c] += a * vals[i];
                out.gradients[c][0] += a * g[0];
                out.gradients[c][1] += a * g[1];
            }
        }
        out
    }

    /// Locates `p` and evaluates the field there.
    pub fn evaluate(&self, p: [f64; 2]) -> Result<FieldValue> {
        let (t, l) = self.space.mesh().locate(p)?;
        Ok(self.eval_in_element(t, l))
    }

    /// Scalar node values of one component.
    pub fn component(&self, c: usize) -> &[f64] {
        let ns = self.space.scalar_dof_count();
        &self.coeffs[c * ns..(c + 1) * ns]
    }

    pub fn check_same_space(&self, other: &Field) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

/// Free function form of [`Field::evaluate`].
pub fn evaluate_field(field: &Field, p: [f64; 2]) -> Result<FieldValue> {
    field.evaluate(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn mesh(n: usize) -> Arc<TriMesh> {
        Arc::new(TriMesh::unit_square(n).unwrap())
    }

    #[test]
    fn dof_counts() {
        assert_eq!(FunctionSpace::new(mesh(1), 1, 1).unwrap().dof_count(), 4);
        assert_eq!(FunctionSpace::new(mesh(1), 2, 1).unwrap().dof_count(), 9);
        assert_eq!(FunctionSpace::new(mesh(2), 2, 2).unwrap().dof_count(), 50);
        assert!(FunctionSpace::new(mesh(2), 3, 1).is_err());
    }

    #[test]
    fn shared_nodes_get_one_index() {
        let s = FunctionSpace::new(mesh(3), 2, 1).unwrap();
        let m = s.mesh();
        let mut coords_seen = std::collections::HashMap::new();
        for t in 0..m.num_triangles() {
            let map = ElementMap::new(m, t);
            for (i, &node) in s.element_nodes(t).iter().enumerate() {
                let l = crate::fem::basis::P2_NODES[i];
                let p = map.to_physical([l[1], l[2]]);
                assert!((p[0] - s.dof_coords()[node][0]).abs() < 1e-15);
                assert!((p[1] - s.dof_coords()[node][1]).abs() < 1e-15);
                let key = ((p[0] * 1e6).round() as i64, (p[1] * 1e6).round() as i64);
                assert_eq!(*coords_seen.entry(key).or_insert(node), node);
            }
        }
        assert_eq!(coords_seen.len(), s.scalar_dof_count());
    }

    #[test]
    fn boundary_dofs_per_component() {
        let s = FunctionSpace::new(mesh(4), 2, 2).unwrap();
        // 8n boundary nodes for P2
        assert_eq!(s.boundary_nodes().len(), 32);
        assert_eq!(s.boundary_dofs().len(), 64);
        assert!(s.boundary_dofs().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p1 = Arc::new(FunctionSpace::new(mesh(5), 1, 1).unwrap());
        let lin = Field::interpolate(p1.clone(), |p, _| p[0] + 2.0 * p[1]);
        let p2 = Arc::new(FunctionSpace::new(mesh(5), 2, 1).unwrap());
        let quad = Field::interpolate(p2, |p, _| p[0] * p[0]);
        for _ in 0..50 {
            let p = [rng.gen::<f64>(), rng.gen::<f64>()];
            let v = lin.evaluate(p).unwrap();
            assert!((v.values[0] - (p[0] + 2.0 * p[1])).abs() < 1e-13);
            assert!((v.gradients[0][0] - 1.0).abs() < 1e-12 && (v.gradients[0][1] - 2.0).abs() < 1e-12);
            let q = quad.evaluate(p).unwrap();
            assert!((q.values[0] - p[0] * p[0]).abs() < 1e-13);
            assert!((q.gradients[0][0] - 2.0 * p[0]).abs() < 1e-11);
        }
        let x = Field::interpolate(p1.clone(), |p, _| p[0]);
        for (s, &p) in p1.dof_coords().iter().enumerate() {
            assert_eq!(x.coeffs[s], p[0]);
        }
        let zero = Field::interpolate(p1, |_, _| 0.0);
        assert!(zero.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let s = Arc::new(FunctionSpace::new(mesh(3), 2, 2).unwrap());
        let f = Field::interpolate(s, |_, c| if c == 0 { 2.5 } else { -1.0 });
        let v = f.evaluate([0.31, 0.77]).unwrap();
        assert!((v.values[0] - 2.5).abs() < 1e-14 && (v.values[1] + 1.0).abs() < 1e-14);
        assert!(v.gradients.iter().flatten().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn p2_interpolant_of_trig_is_third_order_at_midpoints() {
        use std::f64::consts::PI;
        let f = |p: [f64; 2]| (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin();
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let s = Arc::new(FunctionSpace::new(mesh(n), 2, 1).unwrap());
            let fi = Field::interpolate(s.clone(), |p, _| f(p));
            let nodal = s
                .dof_coords()
                .iter()
                .enumerate()
                .map(|(i, &p)| (fi.evaluate(p).unwrap().values[0] - fi.coeffs[i]).abs())
                .fold(0.0, f64::max);
            assert!(nodal < 1e-14);
            let m = s.mesh();
            let mut worst: f64 = 0.0;
            for t in 0..m.num_triangles() {
                let map = ElementMap::new(m, t);
                let l = [0.25, 0.5, 0.25];
                let p = map.to_physical([l[1], l[2]]);
                worst = worst.max((fi.eval_in_element(t, l).values[0] - f(p)).abs());
            }
            errs.push(worst);
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 2.8, "rate {rate}");
        }
    }

    #[test]
    fn evaluation_outside_domain_fails() {
        let s = Arc::new(FunctionSpace::new(mesh(2), 1, 1).unwrap());
        assert!(evaluate_field(&Field::zeros(s), [-0.5, 0.5]).is_err());
    }
}
