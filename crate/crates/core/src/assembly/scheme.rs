//! Four-field saddle systems: the DLN step, the trapezoidal start-up step
//! and the Stokes-type projection.
//!
//! Global unknown layout is `[u | w | φ | p | m_φ | m_p]`, where `m_φ` and
//! `m_p` are Lagrange multipliers enforcing `∫φ = 0` and `∫p = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::block::{column_block, row_block, BlockStructure, DirichletMask};
use super::forms::{
    assemble_divergence, assemble_mass, assemble_mean_functional, assemble_nonlinear, assemble_stiffness,
    assemble_weak_load, coupling_pattern, NonlinearRequest,
};
use crate::error::{Error, Result};
use crate::fem::{build_function_space, Field, FunctionSpace};
use crate::mesh::TriMesh;
use crate::solver::{DirectSolver, VariableHint};
use crate::sparse::{SparseOperator, SparsityPattern};

pub const FIELD_U: usize = 0;
pub const FIELD_W: usize = 1;
pub const FIELD_PHI: usize = 2;
pub const FIELD_P: usize = 3;
pub const FIELD_MEAN_PHI: usize = 4;
pub const FIELD_MEAN_P: usize = 5;

/// Coefficients of the model
/// `u_t − μΔu − γΔw + ν(u·∇)u + ρu + λ|u|²u + ∇p = f`, `w = −Δu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub gamma: f64,
    pub nu: f64,
    pub rho: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mu, self.gamma, self.nu, self.rho, self.lambda];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("model coefficients must be finite".into()));
        }
        if self.mu <= 0.0 || self.gamma <= 0.0 {
            return Err(Error::InvalidArgument("mu and gamma must be positive".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidArgument("lambda must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Residual and Jacobian of one assembled system.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub residual: Vec<f64>,
    pub jacobian: Option<SparseOperator>,
    /// Global indices of the Dirichlet unknowns of `u` and `w`.
    pub bc_dofs: Arc<Vec<usize>>,
}

/// Spaces, constant operators and the global block structure for one mesh.
#[derive(Debug)]
pub struct Discretization {
    pub mesh: Arc<TriMesh>,
    pub velocity: Arc<FunctionSpace>,
    pub scalar: Arc<FunctionSpace>,
    pub velocity_pattern: Arc<SparsityPattern>,
    pub mass: SparseOperator,
    pub stiffness: SparseOperator,
    pub divergence: SparseOperator,
    pub divergence_t: SparseOperator,
    pub mean: Vec<f64>,
    structure: BlockStructure,
    mask: DirichletMask,
    bc_dofs: Arc<Vec<usize>>,
    mean_col: SparseOperator,
    mean_row: SparseOperator,
}

impl Discretization {
    pub fn new(mesh: Arc<TriMesh>) -> Result<Self> {
        let velocity = build_function_space(mesh.clone(), 2, 2)?;
        let scalar = build_function_space(mesh.clone(), 1, 1)?;
        let velocity_pattern = coupling_pattern(&velocity, &velocity)?;
        let mass = assemble_mass(&velocity)?;
        let stiffness = assemble_stiffness(&velocity)?;
        let divergence = assemble_divergence(&velocity, &scalar)?;
        let divergence_t = divergence.transpose();
        let mean = assemble_mean_functional(&scalar);
        let mean_col = column_block(&mean);
        let mean_row = row_block(&mean);
        let nx = velocity.dof_count();
        let nq = scalar.dof_count();
        let vp = velocity_pattern.clone();
        let structure = BlockStructure::new(
            &[nx, nx, nq, nq, 1, 1],
            vec![
                (FIELD_U, FIELD_U, vp.clone()),
                (FIELD_U, FIELD_W, vp.clone()),
                (FIELD_U, FIELD_P, divergence_t.pattern().clone()),
                (FIELD_W, FIELD_U, vp.clone()),
                (FIELD_W, FIELD_W, vp),
                (FIELD_W, FIELD_PHI, divergence_t.pattern().clone()),
                (FIELD_PHI, FIELD_W, divergence.pattern().clone()),
                (FIELD_PHI, FIELD_MEAN_PHI, mean_col.pattern().clone()),
                (FIELD_P, FIELD_U, divergence.pattern().clone()),
                (FIELD_P, FIELD_MEAN_P, mean_col.pattern().clone()),
                (FIELD_MEAN_PHI, FIELD_PHI, mean_row.pattern().clone()),
                (FIELD_MEAN_P, FIELD_P, mean_row.pattern().clone()),
            ],
        )?;
        let mut bc = Vec::new();
        for field in [FIELD_U, FIELD_W] {
            bc.extend(velocity.boundary_dofs().iter().map(|d| structure.offset(field) + d));
        }
        let mask = structure.dirichlet_mask(&bc);
        Ok(Self {
            mesh,
            velocity,
            scalar,
            velocity_pattern,
            mass,
            stiffness,
            divergence,
            divergence_t,
            mean,
            structure,
            mask,
            bc_dofs: Arc::new(bc),
            mean_col,
            mean_row,
        })
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(Arc::new(TriMesh::unit_square(n)?))
    }

    pub fn size(&self) -> usize {
        self.structure.size()
    }

    pub fn range(&self, field: usize) -> std::ops::Range<usize> {
        self.structure.range(field)
    }

    pub fn bc_dofs(&self) -> &Arc<Vec<usize>> {
        &self.bc_dofs
    }

    /// Concatenates field coefficients into a global vector (multipliers 0).
    pub fn pack(&self, u: &[f64], w: &[f64], phi: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.size()];
        for (field, src) in [(FIELD_U, u), (FIELD_W, w), (FIELD_PHI, phi), (FIELD_P, p)] {
            let r = self.range(field);
            if src.len() != r.len() {
                return Err(Error::DimensionMismatch { expected: r.len(), found: src.len() });
            }
            x[r].copy_from_slice(src);
        }
        Ok(x)
    }

    pub fn field<'a>(&self, x: &'a [f64], field: usize) -> &'a [f64] {
        &x[self.range(field)]
    }

    /// Extracts a field of a global vector as a finite element function.
    pub fn field_function(&self, x: &[f64], field: usize) -> Field {
        let space = match field {
            FIELD_U | FIELD_W => self.velocity.clone(),
            _ => self.scalar.clone(),
        };
        Field::from_coeffs(space, self.field(x, field).to_vec()).expect("layout matches spaces")
    }

    /// Placement of every unknown for the nested-dissection ordering:
    /// the node location for field unknowns, none for the multipliers.
    /// Velocity-like unknowns are eliminated before the scalar ones.
    pub fn variable_hints(&self) -> Vec<VariableHint> {
        let mut hints = vec![VariableHint { point: None, priority: 2 }; self.size()];
        let vc = self.velocity.dof_coords();
        let nv = vc.len();
        for field in [FIELD_U, FIELD_W] {
            let r = self.range(field);
            for (i, h) in hints[r].iter_mut().enumerate() {
                *h = VariableHint { point: Some(vc[i % nv]), priority: 0 };
            }
        }
        let sc = self.scalar.dof_coords();
        for field in [FIELD_PHI, FIELD_P] {
            let r = self.range(field);
            for (i, h) in hints[r].iter_mut().enumerate() {
                *h = VariableHint { point: Some(sc[i]), priority: 1 };
            }
        }
        hints
    }

    /// Direct solver set up with [`Self::variable_hints`].
    pub fn direct_solver(&self) -> DirectSolver {
        DirectSolver::with_hints(Arc::new(self.variable_hints()))
    }

    /// Global vector holding nodal values of `g_u`, `g_w` at boundary dofs.
    pub fn boundary_vector(&self, g_u: impl Fn([f64; 2]) -> [f64; 2], g_w: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut x = vec![0.0; self.size()];
        let coords = self.velocity.dof_coords();
        let nodes = self.velocity.boundary_nodes();
        for &a in nodes {
            let gu = g_u(coords[a]);
            let gw = g_w(coords[a]);
            for c in 0..2 {
                let d = self.velocity.dof(c, a);
                x[self.range(FIELD_U).start + d] = gu[c];
                x[self.range(FIELD_W).start + d] = gw[c];
            }
        }
        x
    }

    /// Global saddle matrix with `uu` in the momentum-velocity block,
    /// `uw·K` in the momentum-w block and `−up·Bᵀ` on the pressure, plus the
    /// fixed w-definition, divergence and mean-constraint blocks.
    fn saddle_matrix(&self, uu: &SparseOperator, uw: f64, up: f64) -> Result<SparseOperator> {
        let s = &self.structure;
        let mut a = s.zeros();
        s.add_block(&mut a, FIELD_U, FIELD_U, 1.0, uu)?;
        s.add_block(&mut a, FIELD_U, FIELD_W, uw, &self.stiffness)?;
        s.add_block(&mut a, FIELD_U, FIELD_P, -up, &self.divergence_t)?;
        s.add_block(&mut a, FIELD_W, FIELD_U, -1.0, &self.stiffness)?;
        s.add_block(&mut a, FIELD_W, FIELD_W, 1.0, &self.mass)?;
        s.add_block(&mut a, FIELD_W, FIELD_PHI, -1.0, &self.divergence_t)?;
        s.add_block(&mut a, FIELD_PHI, FIELD_W, 1.0, &self.divergence)?;
        s.add_block(&mut a, FIELD_PHI, FIELD_MEAN_PHI, 1.0, &self.mean_col)?;
        s.add_block(&mut a, FIELD_P, FIELD_U, 1.0, &self.divergence)?;
        s.add_block(&mut a, FIELD_P, FIELD_MEAN_P, 1.0, &self.mean_col)?;
        s.add_block(&mut a, FIELD_MEAN_PHI, FIELD_PHI, 1.0, &self.mean_row)?;
        s.add_block(&mut a, FIELD_MEAN_P, FIELD_P, 1.0, &self.mean_row)?;
        self.mask.apply(&mut a);
        Ok(a)
    }

    /// Rows of the w-definition, both divergence constraints and both mean
    /// constraints evaluated at `x`; these are shared by every system.
    fn constraint_residual(&self, x: &[f64], r: &mut [f64]) {
        let u = self.field(x, FIELD_U);
        let w = self.field(x, FIELD_W);
        let phi = self.field(x, FIELD_PHI);
        let p = self.field(x, FIELD_P);
        let mphi = x[self.range(FIELD_MEAN_PHI).start];
        let mp = x[self.range(FIELD_MEAN_P).start];
        {
            let rw = &mut r[self.range(FIELD_W)];
            self.mass.matvec_add(1.0, w, rw);
            self.stiffness.matvec_add(-1.0, u, rw);
            self.divergence_t.matvec_add(-1.0, phi, rw);
        }
        {
            let rphi = &mut r[self.range(FIELD_PHI)];
            self.divergence.matvec_add(1.0, w, rphi);
            for (ri, ci) in rphi.iter_mut().zip(&self.mean) {
                *ri += ci * mphi;
            }
        }
        {
            let rp = &mut r[self.range(FIELD_P)];
            self.divergence.matvec_add(1.0, u, rp);
            for (ri, ci) in rp.iter_mut().zip(&self.mean) {
                *ri += ci * mp;
            }
        }
        r[self.range(FIELD_MEAN_PHI).start] = crate::sparse::dot(&self.mean, phi);
        r[self.range(FIELD_MEAN_P).start] = crate::sparse::dot(&self.mean, p);
    }

    fn apply_boundary_residual(&self, x: &[f64], boundary: Option<&[f64]>, r: &mut [f64]) {
        for &d in self.bc_dofs.iter() {
            r[d] = x[d] - boundary.map_or(0.0, |g| g[d]);
        }
    }
}

/// One evaluation of the spatial operator inside a time step:
/// `weight · A(c₀ z_{n−1} + c₁ z_n + c₂ z_{n+1})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub weight: f64,
    pub combo: [f64; 3],
}

/// Time-discrete weights of a two-step one-leg formula:
/// `(1/k̂) Σ α_ℓ u_{n−1+ℓ} + Σ_s weight_s A(stage_s) = F`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepWeights {
    pub alpha: [f64; 3],
    pub k_hat: f64,
    pub stages: Vec<Stage>,
}

impl StepWeights {
    /// One-leg DLN step with `z_{n,β} = Σ β_ℓ z_{n−1+ℓ}`.
    pub fn one_leg(alpha: [f64; 3], beta: [f64; 3], k_hat: f64) -> Self {
        Self { alpha, k_hat, stages: vec![Stage { weight: 1.0, combo: beta }] }
    }

    /// Trapezoidal step from level `n` to `n+1` (the `n−1` slot is unused).
    pub fn trapezoidal(k: f64) -> Self {
        Self {
            alpha: [0.0, -1.0, 1.0],
            k_hat: k,
            stages: vec![
                Stage { weight: 0.5, combo: [0.0, 0.0, 1.0] },
                Stage { weight: 0.5, combo: [0.0, 1.0, 0.0] },
            ],
        }
    }
}

/// Nonlinear system of one time step, as a function of the new level.
pub struct SchemeProblem<'a> {
    pub disc: &'a Discretization,
    pub params: ModelParams,
    pub weights: StepWeights,
    /// Global vectors of levels `n−1` and `n`.
    pub prev: &'a [f64],
    pub curr: &'a [f64],
    /// Assembled momentum load `Σ weight_s (f(t_s), ψ_i)` on the velocity space.
    pub load: &'a [f64],
    /// Dirichlet data for `u`, `w` at level `n+1`; `None` means homogeneous.
    pub boundary: Option<&'a [f64]>,
}

impl SchemeProblem<'_> {
    fn check(&self, x: &[f64]) -> Result<()> {
        let n = self.disc.size();
        for (name, v) in [("guess", x), ("level n-1", self.prev), ("level n", self.curr)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.len() }).map_err(|e| {
                    log::debug!("{name} has wrong length");
                    e
                });
            }
        }
        if self.load.len() != self.disc.velocity.dof_count() {
            return Err(Error::DimensionMismatch { expected: self.disc.velocity.dof_count(), found: self.load.len() });
        }
        if let Some(g) = self.boundary {
            if g.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.len() });
            }
        }
        if !(self.weights.k_hat > 0.0) {
            return Err(Error::InvalidArgument("k_hat must be positive".into()));
        }
        Ok(())
    }

    fn combine(&self, x: &[f64], combo: [f64; 3], field: usize) -> Vec<f64> {
        let r = self.disc.range(field);
        let (a, b, c) = (&self.prev[r.clone()], &self.curr[r.clone()], &x[r]);
        (0..a.len()).map(|i| combo[0] * a[i] + combo[1] * b[i] + combo[2] * c[i]).collect()
    }

    /// Residual, and the Jacobian when `with_jacobian` is set.
    pub fn assemble(&self, x: &[f64], with_jacobian: bool) -> Result<BlockSystem> {
        self.check(x)?;
        let d = self.disc;
        let p = self.params;
        let mut r = vec![0.0; d.size()];
        d.constraint_residual(x, &mut r);

        let ru_range = d.range(FIELD_U);
        let mut ru = vec![0.0; ru_range.len()];
        let ua = self.combine(x, self.weights.alpha, FIELD_U);
        d.mass.matvec_add(1.0 / self.weights.k_hat, &ua, &mut ru);
        for (ri, fi) in ru.iter_mut().zip(self.load) {
            *ri -= fi;
        }

        let mut uu = if with_jacobian {
            let mut m = d.mass.clone();
            m.scale(self.weights.alpha[2] / self.weights.k_hat);
            Some(m)
        } else {
            None
        };
        let mut chain = 0.0;
        for stage in &self.weights.stages {
            let ws = stage.weight;
            let us = self.combine(x, stage.combo, FIELD_U);
            let wsv = self.combine(x, stage.combo, FIELD_W);
            let ps = self.combine(x, stage.combo, FIELD_P);
            d.stiffness.matvec_add(ws * p.mu, &us, &mut ru);
            d.stiffness.matvec_add(ws * p.gamma, &wsv, &mut ru);
            d.mass.matvec_add(ws * p.rho, &us, &mut ru);
            d.divergence_t.matvec_add(-ws, &ps, &mut ru);

            let c2 = stage.combo[2] * ws;
            let jac_here = with_jacobian && c2 != 0.0;
            let req = NonlinearRequest {
                convection_residual: p.nu != 0.0,
                convection_jacobian: jac_here && p.nu != 0.0,
                cubic_residual: p.lambda != 0.0,
                cubic_jacobian: jac_here && p.lambda != 0.0,
            };
            if p.nu != 0.0 || p.lambda != 0.0 {
                let field = Field::from_coeffs(d.velocity.clone(), us)?;
                let terms = assemble_nonlinear(&field, &d.velocity_pattern, req)?;
                if let Some(cr) = &terms.convection_residual {
                    ru.iter_mut().zip(cr).for_each(|(a, b)| *a += ws * p.nu * b);
                }
                if let Some(qr) = &terms.cubic_residual {
                    ru.iter_mut().zip(qr).for_each(|(a, b)| *a += ws * p.lambda * b);
                }
                if let Some(m) = uu.as_mut() {
                    if let Some(cj) = &terms.convection_jacobian {
                        m.axpy(c2 * p.nu, cj)?;
                    }
                    if let Some(qj) = &terms.cubic_jacobian {
                        m.axpy(c2 * p.lambda, qj)?;
                    }
                }
            }
            if let Some(m) = uu.as_mut() {
                if c2 != 0.0 {
                    m.axpy(c2 * p.mu, &d.stiffness)?;
                    m.axpy(c2 * p.rho, &d.mass)?;
                }
            }
            chain += c2;
        }
        r[ru_range].copy_from_slice(&ru);
        d.apply_boundary_residual(x, self.boundary, &mut r);

        let jacobian = match uu {
            Some(m) => Some(d.saddle_matrix(&m, chain * p.gamma, chain)?),
            None => None,
        };
        Ok(BlockSystem { residual: r, jacobian, bc_dofs: d.bc_dofs.clone() })
    }
}

/// Residual and Jacobian of one time step at the iterate `guess`.
pub fn assemble_scheme_system(problem: &SchemeProblem<'_>, guess: &[f64]) -> Result<BlockSystem> {
    problem.assemble(guess, true)
}

/// Exact fields for the Stokes-type projection, evaluated pointwise.
pub trait ProjectionData {
    fn u(&self, x: [f64; 2]) -> [f64; 2];
    fn grad_u(&self, x: [f64; 2]) -> [[f64; 2]; 2];
    fn w(&self, x: [f64; 2]) -> [f64; 2];
    fn grad_w(&self, x: [f64; 2]) -> [[f64; 2]; 2];
    fn phi(&self, x: [f64; 2]) -> f64;
    fn p(&self, x: [f64; 2]) -> f64;
}

/// Stokes-type projection as a linear system linearized at `base`, the
/// global vector carrying the interpolated Dirichlet data of `u` and `w`.
/// The projection is `base − J⁻¹ r`.
#[derive(Clone, Debug)]
pub struct ProjectionSystem {
    pub system: BlockSystem,
    pub base: Vec<f64>,
}

/// Galerkin equations of the Stokes-type projection of exact fields:
/// `μ(∇u,∇v) + γ(∇w,∇v) − (p,∇·v)`, the w-definition
/// `(w,ϕ) − (φ,∇·ϕ) − (∇u,∇ϕ)`, and both divergence constraints, with the
/// exact fields' integrals on the right-hand side.
pub fn assemble_stokes_projection_system(
    disc: &Discretization,
    mu: f64,
    gamma: f64,
    data: &dyn ProjectionData,
) -> Result<ProjectionSystem> {
    if !(mu > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidArgument("mu and gamma must be positive".into()));
    }
    let mut uu = disc.stiffness.clone();
    uu.scale(mu);
    let jacobian = disc.saddle_matrix(&uu, gamma, 1.0)?;

    let fu = assemble_weak_load(&disc.velocity, |x| {
        let gu = data.grad_u(x);
        let gw = data.grad_w(x);
        let p = data.p(x);
        let mut g = [[0.0; 2]; 2];
        for c in 0..2 {
            for k in 0..2 {
                g[c][k] = mu * gu[c][k] + gamma * gw[c][k] - if c == k { p } else { 0.0 };
            }
        }
        ([0.0; 2], g)
    });
    let fw = assemble_weak_load(&disc.velocity, |x| {
        let gu = data.grad_u(x);
        let phi = data.phi(x);
        let mut g = [[0.0; 2]; 2];
        for c in 0..2 {
            for k in 0..2 {
                g[c][k] = -gu[c][k] - if c == k { phi } else { 0.0 };
            }
        }
        (data.w(x), g)
    });
    let base = disc.boundary_vector(|x| data.u(x), |x| data.w(x));

    let mut r = vec![0.0; disc.size()];
    disc.constraint_residual(&base, &mut r);
    {
        let ru = &mut r[disc.range(FIELD_U)];
        disc.stiffness.matvec_add(mu, disc.field(&base, FIELD_U), ru);
        disc.stiffness.matvec_add(gamma, disc.field(&base, FIELD_W), ru);
        ru.iter_mut().zip(&fu).for_each(|(a, b)| *a -= b);
    }
    r[disc.range(FIELD_W)].iter_mut().zip(&fw).for_each(|(a, b)| *a -= b);
    disc.apply_boundary_residual(&base, Some(&base), &mut r);
    Ok(ProjectionSystem {
        system: BlockSystem { residual: r, jacobian: Some(jacobian), bc_dofs: disc.bc_dofs.clone() },
        base,
    })
}
/// Discretely divergence-free `L²` projection of a velocity `u₀` with zero
/// boundary values, together with the matching `w` and `φ`:
/// `(u,v) − (p,∇·v) = (u₀,v)`, the w-definition and both divergence
/// constraints. Returns the matrix and right-hand side.
pub fn assemble_leray_system(disc: &Discretization, u0: &[f64]) -> Result<(SparseOperator, Vec<f64>)> {
    let ur = disc.range(FIELD_U);
    if u0.len() != ur.len() {
        return Err(Error::DimensionMismatch { expected: ur.len(), found: u0.len() });
    }
    let a = disc.saddle_matrix(&disc.mass, 0.0, 1.0)?;
    let mut b = vec![0.0; disc.size()];
    disc.mass.matvec_add(1.0, u0, &mut b[ur]);
    for &d in disc.bc_dofs.iter() {
        b[d] = 0.0;
    }
    Ok((a, b))
}

