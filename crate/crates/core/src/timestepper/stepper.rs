//! Step orchestration: initial state, the trapezoidal bootstrap step and
//! DLN steps with per-step diagnostics.

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_leray_system, assemble_load, assemble_stokes_projection_system, Discretization, ModelParams,
    ProjectionData, SchemeProblem, StepWeights, FIELD_P, FIELD_U, FIELD_W,
};
use crate::error::{Error, Result};
use crate::solver::{newton_solve, DirectSolver, NewtonConfig};
use crate::sparse::norm2;

use super::coefficients::{check_stability_step_condition, dln_coefficients, g_norm_squared, DlnStepContext};

/// Body force and Dirichlet data of a time-dependent problem.
pub trait ProblemData {
    /// Whether the body force vanishes identically.
    fn is_unforced(&self) -> bool {
        false
    }
    fn source(&self, x: [f64; 2], t: f64) -> [f64; 2];
    /// Whether `u` and `w` have nonzero boundary values.
    fn has_boundary_data(&self) -> bool {
        false
    }
    /// Boundary values of `(u, w)`.
    fn boundary(&self, _x: [f64; 2], _t: f64) -> ([f64; 2], [f64; 2]) {
        ([0.0; 2], [0.0; 2])
    }
}

/// No body force and homogeneous boundary conditions.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unforced;

impl ProblemData for Unforced {
    fn is_unforced(&self) -> bool {
        true
    }
    fn source(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0; 2]
    }
}

/// Two consecutive levels of the global unknown vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionHistory {
    pub prev: Vec<f64>,
    pub curr: Vec<f64>,
    pub t_prev: f64,
    pub t_curr: f64,
    /// Number of steps taken so far.
    pub step: usize,
}

impl SolutionHistory {
    pub fn k_prev(&self) -> f64 {
        self.t_curr - self.t_prev
    }

    /// DLN context for the next step of size `k`.
    pub fn context(&self, theta: f64, k: f64) -> Result<DlnStepContext> {
        dln_coefficients(theta, self.k_prev(), k)
    }
}

/// Per-step record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub k: f64,
    pub k_hat: f64,
    /// G-norm energy `(1+θ)/4‖u_{n+1}‖² + (1−θ)/4‖u_n‖²`.
    pub energy: f64,
    pub kinetic: f64,
    pub eps_nd_u: f64,
    pub eps_vd_u: f64,
    pub eps_nd_w: f64,
    pub eps_vd_w: f64,
    pub chi_u: f64,
    pub chi_w: f64,
    pub newton_iterations: usize,
    pub newton_residuals: Vec<f64>,
    /// Norm of each Newton update.
    pub newton_updates: Vec<f64>,
    /// Residual threshold Newton was asked to reach.
    pub newton_target: f64,
    /// `‖(∇·u_{n+1}, q_i)‖` and `‖(∇·w_{n+1}, q_i)‖` over the pressure basis.
    pub div_u: f64,
    pub div_w: f64,
    pub stability_margin: f64,
}

impl StepDiagnostics {
    pub const CSV_HEADER: &'static str =
        "step,time,k,k_hat,energy,kinetic,chi_u,chi_w,newton_iterations,div_u,div_w,stability_margin";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.time,
            self.k,
            self.k_hat,
            self.energy,
            self.kinetic,
            self.chi_u,
            self.chi_w,
            self.newton_iterations,
            self.div_u,
            self.div_w,
            self.stability_margin
        )
    }
}

/// Projection of exact fields onto the discrete spaces: the global vector
/// `[u | w | φ | p | m_φ | m_p]`.
pub fn stokes_projection(
    disc: &Discretization,
    mu: f64,
    gamma: f64,
    data: &dyn ProjectionData,
    solver: &mut DirectSolver,
) -> Result<Vec<f64>> {
    let ps = assemble_stokes_projection_system(disc, mu, gamma, data)?;
    let jac = ps.system.jacobian.as_ref().expect("projection system carries its matrix");
    let delta = solver.solve(jac, &ps.system.residual)?;
    Ok(ps.base.iter().zip(&delta).map(|(b, d)| b - d).collect())
}

/// Initial state for velocity coefficients without derivative information
/// (e.g. random data): the discretely divergence-free `L²` projection of
/// `u0` with zero boundary values, the matching `w` and `φ`, and `p = 0`.
pub fn leray_initial_state(disc: &Discretization, u0: &[f64], solver: &mut DirectSolver) -> Result<Vec<f64>> {
    let (a, b) = assemble_leray_system(disc, u0)?;
    let mut x = solver.solve(&a, &b)?;
    for v in &mut x[disc.range(FIELD_P)] {
        *v = 0.0;
    }
    Ok(x)
}

/// Scheme of the first step, which has no second history level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapRule {
    /// `(u₁ − u₀)/k + ½A(u₁) + ½A(u₀) = ½(f(t₀) + f(t₁))`.
    #[default]
    Trapezoidal,
    /// `(u₁ − u₀)/k + A((u₀ + u₁)/2) = f(t₀ + k/2)`.
    Midpoint,
}

/// Advances the coupled system in time with a fixed parameter set.
pub struct Stepper<'a> {
    pub disc: &'a Discretization,
    pub params: ModelParams,
    pub theta: f64,
    pub newton: NewtonConfig,
    /// Linear extrapolation of the previous two levels as Newton guess.
    pub predictor: bool,
    pub bootstrap: BootstrapRule,
    data: &'a dyn ProblemData,
    solver: DirectSolver,
}

impl<'a> Stepper<'a> {
    pub fn new(disc: &'a Discretization, params: ModelParams, theta: f64, data: &'a dyn ProblemData) -> Result<Self> {
        params.validate()?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta = {theta} is outside [0, 1]")));
        }
        Ok(Self {
            disc,
            params,
            theta,
            newton: NewtonConfig::default(),
            predictor: true,
            bootstrap: BootstrapRule::default(),
            data,
            solver: disc.direct_solver(),
        })
    }

    pub fn solver(&mut self) -> &mut DirectSolver {
        &mut self.solver
    }

    fn load(&self, t: f64) -> Vec<f64> {
        if self.data.is_unforced() {
            vec![0.0; self.disc.velocity.dof_count()]
        } else {
            assemble_load(&self.disc.velocity, |x| self.data.source(x, t))
        }
    }

    fn boundary(&self, t: f64) -> Option<Vec<f64>> {
        self.data.has_boundary_data().then(|| {
            self.disc.boundary_vector(|x| self.data.boundary(x, t).0, |x| self.data.boundary(x, t).1)
        })
    }

    fn solve_step(
        &mut self,
        weights: StepWeights,
        history: (&[f64], &[f64]),
        load: &[f64],
        boundary: Option<&[f64]>,
        mut guess: Vec<f64>,
    ) -> Result<(Vec<f64>, (usize, Vec<f64>, Vec<f64>, f64))> {
        if let Some(g) = boundary {
            for &d in self.disc.bc_dofs().iter() {
                guess[d] = g[d];
            }
        } else {
            for &d in self.disc.bc_dofs().iter() {
                guess[d] = 0.0;
            }
        }
        let problem = SchemeProblem {
            disc: self.disc,
            params: self.params,
            weights,
            prev: history.0,
            curr: history.1,
            load,
            boundary,
        };
        let r0 = norm2(&problem.assemble(&guess, false)?.residual);
        let target = self.newton.abs_tol.max(self.newton.rel_tol * r0);
        let out = newton_solve(|x, j| problem.assemble(x, j), &self.newton, guess, &mut self.solver)?;
        Ok((out.solution, (out.iterations, out.residual_history, out.update_history, target)))
    }

    fn diagnostics(
        &self,
        step: usize,
        time: f64,
        k: f64,
        alpha: [f64; 3],
        beta: [f64; 3],
        k_hat: f64,
        levels: [&[f64]; 3],
        newton: (usize, Vec<f64>, Vec<f64>, f64),
        stability_margin: f64,
    ) -> Result<StepDiagnostics> {
        let d = self.disc;
        let comb = |c: [f64; 3], field: usize| -> Vec<f64> {
            let r = d.range(field);
            let v: Vec<&[f64]> = levels.iter().map(|l| &l[r.clone()]).collect();
            (0..r.len()).map(|i| c[0] * v[0][i] + c[1] * v[1][i] + c[2] * v[2][i]).collect()
        };
        let ua = comb(alpha, FIELD_U);
        let ub = comb(beta, FIELD_U);
        let wa = comb(alpha, FIELD_W);
        let wb = comb(beta, FIELD_W);
        let eps_nd_u = d.mass.bilinear(&ua, &ua) / k_hat;
        let eps_vd_u = self.params.mu * d.stiffness.bilinear(&ub, &ub);
        let eps_nd_w = d.mass.bilinear(&wa, &wa) / k_hat;
        let eps_vd_w = self.params.gamma * d.stiffness.bilinear(&wb, &wb);
        let un = &levels[2][d.range(FIELD_U)];
        let uc = &levels[1][d.range(FIELD_U)];
        let energy = g_norm_squared(&d.mass, un, uc, self.theta)?;
        let kinetic = 0.5 * d.mass.bilinear(un, un);
        let div_u = norm2(&d.divergence.matvec(un));
        let div_w = norm2(&d.divergence.matvec(&levels[2][d.range(FIELD_W)]));
        Ok(StepDiagnostics {
            step,
            time,
            k,
            k_hat,
            energy,
            kinetic,
            eps_nd_u,
            eps_vd_u,
            eps_nd_w,
            eps_vd_w,
            chi_u: eps_nd_u / eps_vd_u,
            chi_w: eps_nd_w / eps_vd_w,
            newton_iterations: newton.0,
            newton_residuals: newton.1,
            newton_updates: newton.2,
            newton_target: newton.3,
            div_u,
            div_w,
            stability_margin,
        })
    }

    /// Takes the level-0 state `x0` at `t0` and computes level 1 with one
    /// fully implicit trapezoidal step of size `k0`.
    pub fn bootstrap_first_step(
        &mut self,
        x0: Vec<f64>,
        t0: f64,
        k0: f64,
    ) -> Result<(SolutionHistory, StepDiagnostics)> {
        if x0.len() != self.disc.size() {
            return Err(Error::DimensionMismatch { expected: self.disc.size(), found: x0.len() });
        }
        if !(k0 > 0.0) {
            return Err(Error::InvalidArgument(format!("first step must be positive (got {k0})")));
        }
        let t1 = t0 + k0;
        let (weights, load) = match self.bootstrap {
            BootstrapRule::Trapezoidal => {
                let mut load = self.load(t0);
                let l1 = self.load(t1);
                load.iter_mut().zip(&l1).for_each(|(a, b)| *a = 0.5 * (*a + b));
                (StepWeights::trapezoidal(k0), load)
            }
            BootstrapRule::Midpoint => {
                (StepWeights::one_leg([0.0, -1.0, 1.0], [0.0, 0.5, 0.5], k0), self.load(t0 + 0.5 * k0))
            }
        };
        let boundary = self.boundary(t1);
        let (x1, newton) = self.solve_step(weights, (&x0, &x0), &load, boundary.as_deref(), x0.clone())?;
        let diag = self.diagnostics(
            1,
            t1,
            k0,
            [0.0, -1.0, 1.0],
            [0.0, 0.5, 0.5],
            k0,
            [&x0, &x0, &x1],
            newton,
            f64::INFINITY,
        )?;
        Ok((SolutionHistory { prev: x0, curr: x1, t_prev: t0, t_curr: t1, step: 1 }, diag))
    }

    /// One DLN step with the coefficients `ctx`, whose `k_prev` must match the
    /// last step of `history`.
    pub fn advance(&mut self, history: &SolutionHistory, ctx: &DlnStepContext) -> Result<(SolutionHistory, StepDiagnostics)> {
        let kp = history.k_prev();
        if (ctx.k_prev - kp).abs() > 1e-12 * kp.max(ctx.k_prev) {
            return Err(Error::InvalidArgument(format!(
                "context step k_prev = {} does not match history step {kp}",
                ctx.k_prev
            )));
        }
        if (ctx.theta - self.theta).abs() > 0.0 {
            return Err(Error::InvalidArgument("context theta differs from the stepper's".into()));
        }
        let (ok, margin) = check_stability_step_condition(ctx, self.params.rho);
        if !ok {
            log::warn!(
                "step {}: C_beta |rho| k_hat exceeds (1+theta)/4 by {:.3e}; energy bound not guaranteed",
                history.step + 1,
                -margin
            );
        }
        let t_next = history.t_curr + ctx.k_curr;
        let times = [history.t_prev, history.t_curr, t_next];
        let mut load = vec![0.0; self.disc.velocity.dof_count()];
        for (b, t) in ctx.beta.iter().zip(times) {
            if *b != 0.0 {
                load.iter_mut().zip(self.load(t)).for_each(|(a, f)| *a += b * f);
            }
        }
        let boundary = self.boundary(t_next);
        let guess = if self.predictor {
            let r = ctx.k_curr / kp;
            history.curr.iter().zip(&history.prev).map(|(c, p)| c + r * (c - p)).collect()
        } else {
            history.curr.clone()
        };
        let weights = StepWeights::one_leg(ctx.alpha, ctx.beta, ctx.k_hat);
        let (x, newton) =
            self.solve_step(weights, (&history.prev, &history.curr), &load, boundary.as_deref(), guess)?;
        let diag = self.diagnostics(
            history.step + 1,
            t_next,
            ctx.k_curr,
            ctx.alpha,
            ctx.beta,
            ctx.k_hat,
            [&history.prev, &history.curr, &x],
            newton,
            margin,
        )?;
        let next = SolutionHistory {
            prev: history.curr.clone(),
            curr: x,
            t_prev: history.t_curr,
            t_curr: t_next,
            step: history.step + 1,
        };
        Ok((next, diag))
    }

    /// DLN step of size `k` with coefficients from the history's last step.
    pub fn step(&mut self, history: &SolutionHistory, k: f64) -> Result<(SolutionHistory, StepDiagnostics)> {
        let ctx = history.context(self.theta, k)?;
        self.advance(history, &ctx)
    }
}
