//! Element-loop assembly of the bilinear, trilinear and cubic forms.
//!
//! Vector-valued operators on the velocity space all share one sparsity
//! pattern in which every component couples to every other, so any linear
//! combination of them can be formed directly on the value arrays.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{ElementMap, Field, FunctionSpace, QuadratureRule};
use crate::sparse::{SparseOperator, SparsityPattern};

/// Exactness degree used for every volume integral during assembly.
pub const ASSEMBLY_QUADRATURE_DEGREE: usize = 8;

const MAX_NODES: usize = 6;

/// Basis values and reference gradients at every point of a rule.
pub(crate) struct Tabulation {
    pub nodes: usize,
    pub values: Vec<[f64; MAX_NODES]>,
    pub grads: Vec<[[f64; 2]; MAX_NODES]>,
}

impl Tabulation {
    pub fn new(space: &FunctionSpace, rule: &QuadratureRule) -> Self {
        let mut values = Vec::with_capacity(rule.len());
        let mut grads = Vec::with_capacity(rule.len());
        for &l in &rule.points {
            let mut v = [0.0; MAX_NODES];
            let mut g = [[0.0; 2]; MAX_NODES];
            space.tabulate(l, &mut v, &mut g);
            values.push(v);
            grads.push(g);
        }
        Self { nodes: space.nodes_per_element(), values, grads }
    }

    /// Physical gradients at point `q` of element `map`.
    #[inline]
    pub fn physical_grads(&self, map: &ElementMap, q: usize) -> [[f64; 2]; MAX_NODES] {
        let mut out = [[0.0; 2]; MAX_NODES];
        for i in 0..self.nodes {
            out[i] = map.push_gradient(self.grads[q][i]);
        }
        out
    }
}

pub(crate) fn default_rule() -> QuadratureRule {
    QuadratureRule::for_degree(ASSEMBLY_QUADRATURE_DEGREE).expect("built-in rule")
}

/// Pattern coupling every test dof with every trial dof of each element,
/// across all component pairs.
pub fn coupling_pattern(test: &FunctionSpace, trial: &FunctionSpace) -> Result<Arc<SparsityPattern>> {
    if !Arc::ptr_eq(test.mesh(), trial.mesh()) {
        return Err(Error::SpaceMismatch);
    }
    let mesh = test.mesh();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); test.dof_count()];
    for t in 0..mesh.num_triangles() {
        let tn = test.element_nodes(t);
        let sn = trial.element_nodes(t);
        for ct in 0..test.components() {
            for &a in tn {
                let row = &mut rows[test.dof(ct, a)];
                for cs in 0..trial.components() {
                    row.extend(sn.iter().map(|&b| trial.dof(cs, b)));
                }
            }
        }
    }
    Ok(Arc::new(SparsityPattern::from_rows(trial.dof_count(), rows)))
}

/// Shared machinery for a square operator on one space.
fn assemble_square(
    space: &FunctionSpace,
    pattern: Option<Arc<SparsityPattern>>,
    mut local: impl FnMut(&ElementMap, usize, &Tabulation, &QuadratureRule, &mut [[f64; MAX_NODES]; MAX_NODES]),
) -> Result<SparseOperator> {
    let rule = default_rule();
    let tab = Tabulation::new(space, &rule);
    let pattern = match pattern {
        Some(p) => p,
        None => coupling_pattern(space, space)?,
    };
    let mut op = SparseOperator::zeros(pattern);
    let mesh = space.mesh();
    let nn = space.nodes_per_element();
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let mut k = [[0.0; MAX_NODES]; MAX_NODES];
        local(&map, t, &tab, &rule, &mut k);
        let nodes = space.element_nodes(t);
        for c in 0..space.components() {
            for i in 0..nn {
                let r = space.dof(c, nodes[i]);
                for j in 0..nn {
                    op.add(r, space.dof(c, nodes[j]), k[i][j]);
                }
            }
        }
    }
    Ok(op)
}

/// `M_ij = ∫ ψ_j · ψ_i` (component-diagonal for vector spaces).
pub fn assemble_mass(space: &FunctionSpace) -> Result<SparseOperator> {
    assemble_square(space, None, |map, _, tab, rule, k| {
        let w0 = map.det.abs();
        for q in 0..rule.len() {
            let w = rule.weights[q] * w0;
            let v = &tab.values[q];
            for i in 0..tab.nodes {
                for j in 0..tab.nodes {
                    k[i][j] += w * v[i] * v[j];
                }
            }
        }
    })
}

/// `K_ij = ∫ ∇ψ_j : ∇ψ_i`.
pub fn assemble_stiffness(space: &FunctionSpace) -> Result<SparseOperator> {
    assemble_square(space, None, |map, _, tab, rule, k| {
        let w0 = map.det.abs();
        for q in 0..rule.len() {
            let w = rule.weights[q] * w0;
            let g = tab.physical_grads(map, q);
            for i in 0..tab.nodes {
                for j in 0..tab.nodes {
                    k[i][j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
    })
}

/// `B_ij = ∫ (∇·ψ_j) q_i`, rows on the scalar space, columns on the
/// vector space.
pub fn assemble_divergence(velocity: &FunctionSpace, scalar: &FunctionSpace) -> Result<SparseOperator> {
    if velocity.components() != 2 || scalar.components() != 1 {
        return Err(Error::InvalidArgument("divergence needs a vector trial and a scalar test space".into()));
    }
    let rule = default_rule();
    let vt = Tabulation::new(velocity, &rule);
    let st = Tabulation::new(scalar, &rule);
    let mut op = SparseOperator::zeros(coupling_pattern(scalar, velocity)?);
    let mesh = velocity.mesh();
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let w0 = map.det.abs();
        let mut k = [[[0.0; MAX_NODES]; 2]; 3];
        for q in 0..rule.len() {
            let w = rule.weights[q] * w0;
            let g = vt.physical_grads(&map, q);
            for i in 0..st.nodes {
                let qi = w * st.values[q][i];
                for j in 0..vt.nodes {
                    k[i][0][j] += qi * g[j][0];
                    k[i][1][j] += qi * g[j][1];
                }
            }
        }
        let sn = scalar.element_nodes(t);
        let vn = velocity.element_nodes(t);
        for i in 0..st.nodes {
            for c in 0..2 {
                for j in 0..vt.nodes {
                    op.add(sn[i], velocity.dof(c, vn[j]), k[i][c][j]);
                }
            }
        }
    }
    Ok(op)
}

/// `c_i = ∫ q_i`, the functional that measures the mean of a scalar field.
pub fn assemble_mean_functional(scalar: &FunctionSpace) -> Vec<f64> {
    let rule = default_rule();
    let tab = Tabulation::new(scalar, &rule);
    let mesh = scalar.mesh();
    let mut out = vec![0.0; scalar.dof_count()];
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let nodes = scalar.element_nodes(t);
        for q in 0..rule.len() {
            let w = rule.weights[q] * map.det.abs();
            for i in 0..tab.nodes {
                out[nodes[i]] += w * tab.values[q][i];
            }
        }
    }
    out
}

/// Load vector `∫ f·ψ_i + G:∇ψ_i` on a vector or scalar space.
///
/// `data(x)` returns `(f, G)` where `G[c]` is the row multiplying `∇ψ` of
/// component `c`.
pub fn assemble_weak_load(
    space: &FunctionSpace,
    data: impl Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
) -> Vec<f64> {
    let rule = default_rule();
    let tab = Tabulation::new(space, &rule);
    let mesh = space.mesh();
    let mut out = vec![0.0; space.dof_count()];
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let nodes = space.element_nodes(t);
        for q in 0..rule.len() {
            let w = rule.weights[q] * map.det.abs();
            let x = map.to_physical(rule.reference_point(q));
            let (f, gm) = data(x);
            let g = tab.physical_grads(&map, q);
            for c in 0..space.components() {
                for i in 0..tab.nodes {
                    let v = f[c] * tab.values[q][i] + gm[c][0] * g[i][0] + gm[c][1] * g[i][1];
                    out[space.dof(c, nodes[i])] += w * v;
                }
            }
        }
    }
    out
}

/// Load vector `∫ f·ψ_i`.
pub fn assemble_load(space: &FunctionSpace, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    assemble_weak_load(space, |x| (f(x), [[0.0; 2]; 2]))
}

/// Value and gradient of a vector P2 field at each quadrature point of one
/// element.
#[inline]
fn local_state(
    field: &Field,
    nodes: &[usize],
    tab: &Tabulation,
    q: usize,
    g: &[[f64; 2]; MAX_NODES],
) -> ([f64; 2], [[f64; 2]; 2]) {
    let space = field.space();
    let mut u = [0.0; 2];
    let mut du = [[0.0; 2]; 2];
    for c in 0..2 {
        for i in 0..tab.nodes {
            let a = field.coeffs[space.dof(c, nodes[i])];
            u[c] += a * tab.values[q][i];
            du[c][0] += a * g[i][0];
            du[c][1] += a * g[i][1];
        }
    }
    (u, du)
}

fn check_vector_field(u: &Field) -> Result<()> {
    if u.space().components() != 2 {
        return Err(Error::InvalidArgument("expected a vector field".into()));
    }
    Ok(())
}

/// Which nonlinear contributions to evaluate in one element sweep.
#[derive(Clone, Copy, Debug, Default)]
pub struct NonlinearRequest {
    pub convection_residual: bool,
    pub convection_jacobian: bool,
    pub cubic_residual: bool,
    pub cubic_jacobian: bool,
}

#[derive(Clone, Debug, Default)]
pub struct NonlinearTerms {
    /// `b(u, u, ψ_i)`
    pub convection_residual: Option<Vec<f64>>,
    /// Derivative of `b(u, u, ψ_i)` with respect to `u`.
    pub convection_jacobian: Option<SparseOperator>,
    /// `∫ |u|² u · ψ_i`
    pub cubic_residual: Option<Vec<f64>>,
    pub cubic_jacobian: Option<SparseOperator>,
}

/// Evaluates the convection and cubic terms at `u` in a single pass.
/// Jacobians are stored on `pattern`, which must be the velocity coupling
/// pattern.
pub fn assemble_nonlinear(u: &Field, pattern: &Arc<SparsityPattern>, req: NonlinearRequest) -> Result<NonlinearTerms> {
    check_vector_field(u)?;
    let space = u.space();
    let rule = default_rule();
    let tab = Tabulation::new(space, &rule);
    let mesh = space.mesh();
    let nn = tab.nodes;
    let n = space.dof_count();

    let mut conv_r = req.convection_residual.then(|| vec![0.0; n]);
    let mut cubic_r = req.cubic_residual.then(|| vec![0.0; n]);
    let mut conv_j = req.convection_jacobian.then(|| SparseOperator::zeros(pattern.clone()));
    let mut cubic_j = req.cubic_jacobian.then(|| SparseOperator::zeros(pattern.clone()));

    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(mesh, t);
        let nodes = space.element_nodes(t);
        let w0 = map.det.abs();
        // local blocks indexed [test comp][trial comp][test node][trial node]
        let mut kc = [[[[0.0; MAX_NODES]; MAX_NODES]; 2]; 2];
        let mut kq = [[[[0.0; MAX_NODES]; MAX_NODES]; 2]; 2];
        let mut rc = [[0.0; MAX_NODES]; 2];
        let mut rq = [[0.0; MAX_NODES]; 2];
        for q in 0..rule.len() {
            let w = rule.weights[q] * w0;
            let g = tab.physical_grads(&map, q);
            let v = &tab.values[q];
            let (uq, du) = local_state(u, nodes, &tab, q, &g);
            let u2 = uq[0] * uq[0] + uq[1] * uq[1];
            // u·∇φ_i
            let mut adv = [0.0; MAX_NODES];
            for i in 0..nn {
                adv[i] = uq[0] * g[i][0] + uq[1] * g[i][1];
            }
            if conv_r.is_some() {
                for d in 0..2 {
                    let udu = uq[0] * du[d][0] + uq[1] * du[d][1];
                    for b in 0..nn {
                        rc[d][b] += w * 0.5 * (udu * v[b] - adv[b] * uq[d]);
                    }
                }
            }
            if conv_j.is_some() {
                for b in 0..nn {
                    for a in 0..nn {
                        let skew = 0.5 * w * (adv[a] * v[b] - adv[b] * v[a]);
                        kc[0][0][b][a] += skew;
                        kc[1][1][b][a] += skew;
                        for d in 0..2 {
                            for c in 0..2 {
                                kc[d][c][b][a] += 0.5 * w * v[a] * (du[d][c] * v[b] - g[b][c] * uq[d]);
                            }
                        }
                    }
                }
            }
            if cubic_r.is_some() {
                for d in 0..2 {
                    for b in 0..nn {
                        rq[d][b] += w * u2 * uq[d] * v[b];
                    }
                }
            }
            if cubic_j.is_some() {
                for d in 0..2 {
                    for c in 0..2 {
                        let coef = if c == d { u2 } else { 0.0 } + 2.0 * uq[c] * uq[d];
                        for b in 0..nn {
                            let wb = w * coef * v[b];
                            for a in 0..nn {
                                kq[d][c][b][a] += wb * v[a];
                            }
                        }
                    }
                }
            }
        }
        for d in 0..2 {
            for b in 0..nn {
                let r = space.dof(d, nodes[b]);
                if let Some(cr) = conv_r.as_mut() {
                    cr[r] += rc[d][b];
                }
                if let Some(qr) = cubic_r.as_mut() {
                    qr[r] += rq[d][b];
                }
                for c in 0..2 {
                    for a in 0..nn {
                        let col = space.dof(c, nodes[a]);
                        if let Some(j) = conv_j.as_mut() {
                            j.add(r, col, kc[d][c][b][a]);
                        }
                        if let Some(j) = cubic_j.as_mut() {
                            j.add(r, col, kq[d][c][b][a]);
                        }
                    }
                }
            }
        }
    }
    Ok(NonlinearTerms {
        convection_residual: conv_r,
        convection_jacobian: conv_j,
        cubic_residual: cubic_r,
        cubic_jacobian: cubic_j,
    })
}

/// `N(u)_ij = b(u, ψ_j, ψ_i)` with `b(u,v,w) = ½(u·∇v, w) − ½(u·∇w, v)`.
/// Skew-symmetric for every `u`.
pub fn assemble_trilinear_matrix(u: &Field) -> Result<SparseOperator> {
    check_vector_field(u)?;
    let space = u.space();
    assemble_square(space, None, |map, t, tab, rule, k| {
        let nodes = space.element_nodes(t);
        let w0 = map.det.abs();
        for q in 0..rule.len() {
            let w = rule.weights[q] * w0;
            let g = tab.physical_grads(map, q);
            let (uq, _) = local_state(u, nodes, tab, q, &g);
            for i in 0..tab.nodes {
                let adv_i = uq[0] * g[i][0] + uq[1] * g[i][1];
                for j in 0..tab.nodes {
                    let adv_j = uq[0] * g[j][0] + uq[1] * g[j][1];
                    k[i][j] += 0.5 * w * (adv_j * tab.values[q][i] - adv_i * tab.values[q][j]);
                }
            }
        }
    })
}

/// Residual `∫|u|²u·ψ_i` and its Jacobian
/// `∫ |u|² ψ_j·ψ_i + 2 (u·ψ_j)(u·ψ_i)`.
pub fn assemble_cubic_residual_and_jacobian(u: &Field) -> Result<(Vec<f64>, SparseOperator)> {
    let pattern = coupling_pattern(u.space(), u.space())?;
    let terms = assemble_nonlinear(
        u,
        &pattern,
        NonlinearRequest { cubic_residual: true, cubic_jacobian: true, ..Default::default() },
    )?;
    Ok((terms.cubic_residual.unwrap(), terms.cubic_jacobian.unwrap()))
}
