//! Experiment drivers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{Discretization, ModelParams, FIELD_P, FIELD_PHI, FIELD_U, FIELD_W};
use crate::error::{Error, Result};
use crate::solver::NewtonConfig;
use crate::timestepper::{
    adapt_step, leray_initial_state, BootstrapRule, ControllerBounds, ProblemData, SolutionHistory, StepDiagnostics, Stepper,
    Unforced,
};

use super::exact::{source_term, ManufacturedSolution};
use super::norms::{error_norms_with, ErrorReport, ErrorRow};

pub use crate::timestepper::stokes_projection;

/// Errors of a global solution vector against the exact fields at `t`;
/// `φ` and `p` are compared modulo constants.
pub fn solution_errors(disc: &Discretization, x: &[f64], ms: &ManufacturedSolution, t: f64) -> Result<ErrorRow> {
    let u = disc.field_function(x, FIELD_U);
    let w = disc.field_function(x, FIELD_W);
    let phi = disc.field_function(x, FIELD_PHI);
    let p = disc.field_function(x, FIELD_P);
    let eu = error_norms_with(
        &u,
        &|y, v, g| {
            v.copy_from_slice(&ms.u(y, t));
            g.copy_from_slice(&ms.grad_u(y, t));
        },
        false,
    )?;
    let ew = error_norms_with(
        &w,
        &|y, v, g| {
            v.copy_from_slice(&ms.w(y, t));
            g.copy_from_slice(&ms.grad_w(y, t));
        },
        false,
    )?;
    let ephi = error_norms_with(
        &phi,
        &|y, v, g| {
            v[0] = ms.phi(y, t);
            g[0] = ms.grad_phi(y, t);
        },
        true,
    )?;
    let ep = error_norms_with(
        &p,
        &|y, v, g| {
            v[0] = ms.p(y, t);
            g[0] = ms.grad_p(y, t);
        },
        true,
    )?;
    Ok(ErrorRow { size: disc.mesh.h, u: eu, w: ew, phi: ephi, p: ep })
}

/// Projection errors on each `n × n` mesh; row sizes are mesh `h`.
pub fn run_projection_convergence(
    ns: &[usize],
    mu: f64,
    gamma: f64,
    ms: &ManufacturedSolution,
) -> Result<ErrorReport> {
    if ns.is_empty() {
        return Err(Error::InvalidArgument("no mesh sizes given".into()));
    }
    let mut report = ErrorReport::new("h");
    for &n in ns {
        let disc = Discretization::unit_square(n)?;
        let mut solver = disc.direct_solver();
        let x = stokes_projection(&disc, mu, gamma, &ms.at(0.0), &mut solver)?;
        let row = solution_errors(&disc, &x, ms, 0.0)?;
        log::info!("projection n={n}: u L2 {:.3e}, p L2 {:.3e}", row.u.l2, row.p.l2);
        report.rows.push(row);
    }
    Ok(report)
}

/// Manufactured forcing and boundary data for the time-dependent problem.
pub struct ManufacturedProblem<'a> {
    pub ms: &'a ManufacturedSolution,
    pub params: ModelParams,
}

impl ProblemData for ManufacturedProblem<'_> {
    fn source(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        source_term(self.ms, &self.params, x, t)
    }
    fn has_boundary_data(&self) -> bool {
        true
    }
    fn boundary(&self, x: [f64; 2], t: f64) -> ([f64; 2], [f64; 2]) {
        (self.ms.u(x, t), self.ms.w(x, t))
    }
}

/// Settings shared by the manufactured time-dependent runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeRunOptions {
    pub theta: f64,
    pub params: ModelParams,
    pub t_end: f64,
    pub newton: NewtonConfig,
    pub predictor: bool,
    pub bootstrap: BootstrapRule,
}

impl Default for SchemeRunOptions {
    fn default() -> Self {
        Self {
            theta: 0.3,
            params: ModelParams { mu: 1.0, gamma: 1.0, nu: 1.0, rho: 1.0, lambda: 1.0 },
            t_end: 1.0,
            newton: NewtonConfig::default(),
            predictor: true,
            bootstrap: BootstrapRule::default(),
        }
    }
}

/// Final-time errors and the per-step records of one manufactured run.
#[derive(Clone, Debug)]
pub struct ManufacturedRun {
    pub errors: ErrorRow,
    pub diagnostics: Vec<StepDiagnostics>,
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    let m = (t_end / dt).round();
    if !(dt > 0.0 && t_end > 0.0) || m < 2.0 || ((m * dt - t_end).abs() > 1e-9 * t_end) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} must divide T = {t_end} into at least two steps"
        )));
    }
    Ok(m as usize)
}

/// Projected initial state, one trapezoidal step, then constant-step DLN
/// steps of size `dt` up to `t_end`. Errors are measured at `t_end`.
pub fn run_manufactured(
    disc: &Discretization,
    ms: &ManufacturedSolution,
    opts: &SchemeRunOptions,
    dt: f64,
) -> Result<ManufacturedRun> {
    let steps = step_count(opts.t_end, dt)?;
    let data = ManufacturedProblem { ms, params: opts.params };
    let mut stepper = Stepper::new(disc, opts.params, opts.theta, &data)?;
    stepper.newton = opts.newton;
    stepper.predictor = opts.predictor;
    stepper.bootstrap = opts.bootstrap;
    let x0 = stokes_projection(disc, opts.params.mu, opts.params.gamma, &ms.at(0.0), stepper.solver())?;
    let (mut hist, d) = stepper.bootstrap_first_step(x0, 0.0, dt)?;
    let mut diagnostics = vec![d];
    for _ in 1..steps {
        let (h, d) = stepper.step(&hist, dt)?;
        hist = h;
        diagnostics.push(d);
    }
    let errors = solution_errors(disc, &hist.curr, ms, hist.t_curr)?;
    Ok(ManufacturedRun { errors: ErrorRow { size: dt, ..errors }, diagnostics })
}

/// Fixed `n × n` mesh, one run per step size; row sizes are `dt`.
pub fn run_scheme_convergence_time(
    n: usize,
    dts: &[f64],
    ms: &ManufacturedSolution,
    opts: &SchemeRunOptions,
) -> Result<(ErrorReport, Vec<ManufacturedRun>)> {
    let disc = Discretization::unit_square(n)?;
    let mut report = ErrorReport::new("dt");
    let mut runs = Vec::new();
    for &dt in dts {
        let run = run_manufactured(&disc, ms, opts, dt)?;
        log::info!("time convergence dt={dt}: u L2 {:.3e}", run.errors.u.l2);
        report.rows.push(run.errors.clone());
        runs.push(run);
    }
    Ok((report, runs))
}

/// Fixed step `dt`, one run per mesh; row sizes are mesh `h`.
pub fn run_scheme_convergence_space(
    ns: &[usize],
    dt: f64,
    ms: &ManufacturedSolution,
    opts: &SchemeRunOptions,
) -> Result<(ErrorReport, Vec<ManufacturedRun>)> {
    let mut report = ErrorReport::new("h");
    let mut runs = Vec::new();
    for &n in ns {
        let disc = Discretization::unit_square(n)?;
        let mut run = run_manufactured(&disc, ms, opts, dt)?;
        run.errors.size = disc.mesh.h;
        log::info!("space convergence n={n}: u L2 {:.3e}", run.errors.u.l2);
        report.rows.push(run.errors.clone());
        runs.push(run);
    }
    Ok((report, runs))
}

/// Parameters of the self-organization experiment with `ρ = −0.81`,
/// `λ = 0.5`, `μ = 0.045`, `ν = 0.003`, `γ = μ³`.
pub fn self_organization_params() -> ModelParams {
    let mu: f64 = 0.045;
    ModelParams { mu, gamma: mu.powi(3), nu: 0.003, rho: -0.81, lambda: 0.5 }
}

/// Uniform `[−1, 1]` values for both velocity components at every
/// interior velocity node; zero on the boundary.
pub fn random_velocity(disc: &Discretization, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = disc.velocity.dof_count();
    let mut u: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    for &d in disc.velocity.boundary_dofs() {
        u[d] = 0.0;
    }
    u
}

/// Settings of a randomly initialized unforced run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomRunConfig {
    pub n: usize,
    pub theta: f64,
    pub params: ModelParams,
    pub t_end: f64,
    pub seed: u64,
    pub newton: NewtonConfig,
    /// Stop after this many steps even if `t_end` is not reached.
    pub max_steps: Option<usize>,
}

/// Output of a random-data run.
#[derive(Clone, Debug)]
pub struct RandomRun {
    /// Random velocity coefficients before projection.
    pub initial_velocity: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// `(t, global vector)` at the requested snapshot times (first step at
    /// or after each).
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub discretization_size: usize,
}

fn random_start<'a>(
    disc: &'a Discretization,
    cfg: &RandomRunConfig,
    data: &'a Unforced,
) -> Result<(Stepper<'a>, Vec<f64>, Vec<f64>)> {
    let mut stepper = Stepper::new(disc, cfg.params, cfg.theta, data)?;
    stepper.newton = cfg.newton;
    let u0 = random_velocity(disc, cfg.seed);
    let x0 = leray_initial_state(disc, &u0, stepper.solver())?;
    Ok((stepper, u0, x0))
}

fn take_snapshots(pending: &mut Vec<f64>, t: f64, x: &[f64], out: &mut Vec<(f64, Vec<f64>)>) {
    while let Some(&s) = pending.first() {
        if t + 1e-12 >= s {
            out.push((t, x.to_vec()));
            pending.remove(0);
        } else {
            break;
        }
    }
}

/// Random initial data with constant step `dt` on `[0, t_end]`.
pub fn run_self_organization(cfg: &RandomRunConfig, dt: f64, snapshot_times: &[f64]) -> Result<RandomRun> {
    let steps = step_count(cfg.t_end, dt)?;
    let disc = Discretization::unit_square(cfg.n)?;
    let data = Unforced;
    let (mut stepper, u0, x0) = random_start(&disc, cfg, &data)?;
    let mut pending: Vec<f64> = snapshot_times.to_vec();
    pending.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    take_snapshots(&mut pending, 0.0, &x0, &mut snapshots);
    let (mut hist, d) = stepper.bootstrap_first_step(x0, 0.0, dt)?;
    take_snapshots(&mut pending, hist.t_curr, &hist.curr, &mut snapshots);
    let mut diagnostics = vec![d];
    for i in 1..steps {
        let (h, d) = stepper
            .step(&hist, dt)
            .map_err(|e| Error::StepFailed { step: i + 1, source: Box::new(e) })?;
        hist = h;
        take_snapshots(&mut pending, hist.t_curr, &hist.curr, &mut snapshots);
        diagnostics.push(d);
    }
    Ok(RandomRun { initial_velocity: u0, diagnostics, snapshots, discretization_size: disc.size() })
}

/// Random initial data with an arbitrary step sequence given by `next_step`
/// (called with the last diagnostics); the final step is shortened to land
/// on `t_end`. Stops early once `cfg.max_steps` steps are taken.
pub fn run_random_with_steps(
    cfg: &RandomRunConfig,
    k0: f64,
    mut next_step: impl FnMut(&StepDiagnostics) -> f64,
) -> Result<(SolutionHistory, RandomRun)> {
    let disc = Discretization::unit_square(cfg.n)?;
    let data = Unforced;
    let (mut stepper, u0, x0) = random_start(&disc, cfg, &data)?;
    let (mut hist, d) = stepper.bootstrap_first_step(x0, 0.0, k0.min(cfg.t_end))?;
    let mut diagnostics = vec![d];
    let end_tol = 1e-12 * cfg.t_end;
    while hist.t_curr < cfg.t_end - end_tol {
        if cfg.max_steps.is_some_and(|m| diagnostics.len() >= m) {
            break;
        }
        let mut k = next_step(diagnostics.last().expect("at least one step"));
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("step sequence produced k = {k}")));
        }
        if hist.t_curr + k > cfg.t_end - end_tol {
            k = cfg.t_end - hist.t_curr;
        }
        let (h, d) = stepper
            .step(&hist, k)
            .map_err(|e| Error::StepFailed { step: hist.step + 1, source: Box::new(e) })?;
        hist = h;
        diagnostics.push(d);
    }
    let size = disc.size();
    Ok((hist, RandomRun { initial_velocity: u0, diagnostics, snapshots: Vec::new(), discretization_size: size }))
}

/// Step count of the minimum-dissipation controller for one Reynolds
/// number, next to the constant-step count it is compared with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRow {
    pub re: f64,
    pub adaptive_steps: usize,
    pub constant_steps: usize,
    pub min_step: f64,
    pub max_step: f64,
    /// Final time of the adaptive run; below `t_end` when the step budget
    /// ran out first.
    pub t_reached: f64,
}

/// Adaptive run at `μ = 1/Re`, `γ = μ³`, other settings from `base`; the
/// first step is `k_min`.
pub fn run_adaptive(re: f64, base: &RandomRunConfig, bounds: &ControllerBounds) -> Result<(AdaptiveRow, RandomRun)> {
    bounds.validate()?;
    if !(re > 0.0) {
        return Err(Error::InvalidArgument(format!("Reynolds number must be positive (got {re})")));
    }
    let mu = 1.0 / re;
    let cfg = RandomRunConfig { params: ModelParams { mu, gamma: mu.powi(3), ..base.params }, ..base.clone() };
    let (hist, run) = run_random_with_steps(&cfg, bounds.k_min, |d| adapt_step(d.chi_u, d.chi_w, d.k, bounds))?;
    let ks = run.diagnostics.iter().map(|d| d.k);
    let row = AdaptiveRow {
        re,
        adaptive_steps: run.diagnostics.len(),
        constant_steps: 0,
        min_step: ks.clone().fold(f64::INFINITY, f64::min),
        max_step: ks.fold(0.0, f64::max),
        t_reached: hist.t_curr,
    };
    Ok((row, run))
}

/// Adaptive step counts for each Reynolds number against a constant-step
/// scheme of `constant_steps` steps over the same interval.
pub fn run_adaptive_comparison(
    res: &[f64],
    base: &RandomRunConfig,
    bounds: &ControllerBounds,
    constant_steps: usize,
) -> Result<Vec<AdaptiveRow>> {
    res.iter()
        .map(|&re| {
            let (mut row, _) = run_adaptive(re, base, bounds)?;
            row.constant_steps = constant_steps;
            log::info!("adaptive Re={re}: {} steps", row.adaptive_steps);
            Ok(row)
        })
        .collect()
}

/// Number of steps of the doubling schedule from `k_min` clamped at `k_max`
/// that covers `[0, t_end]` (the controller with unlimited tolerance).
pub fn doubling_schedule_steps(bounds: &ControllerBounds, t_end: f64) -> usize {
    let mut t = 0.0;
    let mut k = bounds.k_min;
    let mut count = 0;
    let tol = 1e-12 * t_end;
    while t < t_end - tol {
        let step = k.min(t_end - t);
        t += step;
        count += 1;
        k = (2.0 * k).min(bounds.k_max);
    }
    count
}
