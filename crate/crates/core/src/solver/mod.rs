//! Sparse direct solves and Newton's method for the per-step systems.

use std::sync::Arc;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut};
use serde::{Deserialize, Serialize};

use crate::assembly::BlockSystem;
use crate::error::{Error, Result};
use crate::sparse::{norm2, SparseOperator, SparsityPattern};

pub mod multifrontal;

pub use multifrontal::{NumericMultifrontal, SymbolicMultifrontal, VariableHint};

const REFINEMENT_STEPS: usize = 3;
const ACCEPT_FACTOR: f64 = 1e-10;

/// Sparse LU with the symbolic analysis cached per sparsity pattern.
///
/// With variable hints the multifrontal nested-dissection factorization is
/// used; otherwise faer's sparse LU. For the latter the CSR arrays of `A`
/// are handed over as the CSC arrays of `Aᵀ`; solving with the transposed
/// factors then solves `A x = b`.
#[derive(Default)]
pub struct DirectSolver {
    hints: Option<Arc<Vec<VariableHint>>>,
    symbolic: Option<(Arc<SparsityPattern>, SymbolicLu<usize>)>,
    multifrontal: Option<(Arc<SparsityPattern>, Arc<SymbolicMultifrontal>)>,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("hints", &self.hints.is_some())
            .field("cached", &(self.symbolic.is_some() || self.multifrontal.is_some()))
            .finish()
    }
}

enum Backend {
    Faer(Lu<usize, f64>),
    Multifrontal(Arc<SymbolicMultifrontal>, NumericMultifrontal),
}

/// A factorized matrix that can be applied to several right-hand sides.
pub struct Factorization<'a> {
    matrix: &'a SparseOperator,
    backend: Backend,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solver using the multifrontal backend with the given placement of
    /// unknowns.
    pub fn with_hints(hints: Arc<Vec<VariableHint>>) -> Self {
        Self { hints: Some(hints), ..Self::default() }
    }

    fn symbolic_for(&mut self, a: &SparseOperator) -> Result<SymbolicLu<usize>> {
        if let Some((p, s)) = &self.symbolic {
            if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern() {
                return Ok(s.clone());
            }
        }
        let p = a.pattern();
        let view = SymbolicSparseColMatRef::new_checked(p.ncols, p.nrows, &p.row_ptr, None, &p.col_idx);
        let s = SymbolicLu::try_new(view).map_err(|e| Error::LinearSolver(format!("symbolic analysis: {e:?}")))?;
        self.symbolic = Some((p.clone(), s.clone()));
        Ok(s)
    }

    fn multifrontal_for(&mut self, a: &SparseOperator, hints: &[VariableHint]) -> Result<Arc<SymbolicMultifrontal>> {
        if let Some((p, s)) = &self.multifrontal {
            if Arc::ptr_eq(p, a.pattern()) || **p == **a.pattern() {
                return Ok(s.clone());
            }
        }
        let s = Arc::new(SymbolicMultifrontal::analyze(a.pattern(), hints)?);
        self.multifrontal = Some((a.pattern().clone(), s.clone()));
        Ok(s)
    }

    pub fn factorize<'a>(&mut self, a: &'a SparseOperator) -> Result<Factorization<'a>> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
        }
        if a.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolver("matrix has non-finite entries".into()));
        }
        if let Some(hints) = self.hints.clone() {
            if hints.len() == a.nrows() {
                match self.multifrontal_for(a, &hints) {
                    Ok(sym) => match sym.factorize(a) {
                        Ok(num) => return Ok(Factorization { matrix: a, backend: Backend::Multifrontal(sym, num) }),
                        // Pivoting is restricted to each front; a zero pivot there
                        // does not mean the matrix is singular.
                        Err(Error::Singular { pivot }) => {
                            log::warn!("multifrontal zero pivot at unknown {pivot}; using faer LU")
                        }
                        Err(e) => return Err(e),
                    },
                    Err(Error::LinearSolver(msg)) => log::warn!("multifrontal analysis failed ({msg}); using faer LU"),
                    Err(e) => return Err(e),
                }
            }
        }
        let symbolic = self.symbolic_for(a)?;
        let p = a.pattern();
        let sym = SymbolicSparseColMatRef::new_checked(p.ncols, p.nrows, &p.row_ptr, None, &p.col_idx);
        let at = SparseColMatRef::new(sym, &a.values);
        let lu = Lu::try_new_with_symbolic(symbolic, at).map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
            LuError::Generic(g) => Error::LinearSolver(format!("{g:?}")),
        })?;
        Ok(Factorization { matrix: a, backend: Backend::Faer(lu) })
    }

    /// Solves `A x = b` to the relative residual `1e-10 (‖A‖‖x‖ + ‖b‖)`.
    pub fn solve(&mut self, a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
        self.factorize(a)?.solve(b)
    }
}

impl Factorization<'_> {
    fn apply_inverse(&self, rhs: &mut [f64]) {
        match &self.backend {
            Backend::Faer(lu) => {
                let n = rhs.len();
                let m = MatMut::from_column_major_slice_mut(rhs, n, 1);
                lu.solve_transpose_in_place_with_conj(Conj::No, m);
            }
            Backend::Multifrontal(sym, num) => sym.solve_in_place(num, rhs),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let a = self.matrix;
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.len() });
        }
        let norm_a = frobenius(a);
        let norm_b = norm2(b);
        let mut x = b.to_vec();
        self.apply_inverse(&mut x);
        for step in 0..=REFINEMENT_STEPS {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular { pivot: first_nonfinite(&x) });
            }
            let mut r = b.to_vec();
            a.matvec_add(-1.0, &x, &mut r);
            let res = norm2(&r);
            let bound = ACCEPT_FACTOR * (norm_a * norm2(&x) + norm_b);
            if res <= bound {
                return Ok(x);
            }
            if step == REFINEMENT_STEPS {
                return Err(Error::LinearSolver(format!(
                    "residual {res:.3e} above {bound:.3e} after refinement; matrix is numerically singular"
                )));
            }
            self.apply_inverse(&mut r);
            x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
        }
        unreachable!()
    }
}

fn first_nonfinite(x: &[f64]) -> usize {
    x.iter().position(|v| !v.is_finite()).unwrap_or(0)
}

fn frobenius(a: &SparseOperator) -> f64 {
    norm2(&a.values)
}

/// Solves `A x = b` with a fresh factorization.
pub fn sparse_direct_solve(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::new().solve(a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub line_search: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-11, rel_tol: 1e-10, max_iters: 25, line_search: false }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument("Newton tolerances must be positive and max_iters >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Residual norm before each iteration and after the last one.
    pub residual_history: Vec<f64>,
    /// Norm of each Newton update.
    pub update_history: Vec<f64>,
}

/// Newton iteration on `F(x) = 0`.
///
/// `build(x, with_jacobian)` returns the residual and, on request, the
/// Jacobian. Converged when `‖F‖ ≤ max(abs_tol, rel_tol ‖F(x₀)‖)` or when
/// the update satisfies `‖δ‖ ≤ rel_tol ‖x‖` (the residual has reached its
/// roundoff floor).
pub fn newton_solve(
    mut build: impl FnMut(&[f64], bool) -> Result<BlockSystem>,
    config: &NewtonConfig,
    guess: Vec<f64>,
    solver: &mut DirectSolver,
) -> Result<NewtonOutcome> {
    config.validate()?;
    let mut x = guess;
    let mut sys = build(&x, false)?;
    let mut res = norm2(&sys.residual);
    let target = config.abs_tol.max(config.rel_tol * res);
    let mut history = vec![res];
    let mut updates = Vec::new();
    let mut iterations = 0;
    while res > target {
        if iterations == config.max_iters {
            return Err(Error::NewtonNotConverged { iterations, residual: res });
        }
        if sys.jacobian.is_none() {
            sys = build(&x, true)?;
        }
        let jac = sys
            .jacobian
            .take()
            .ok_or_else(|| Error::InvalidArgument("system builder returned no Jacobian".into()))?;
        let mut delta = solver.solve(&jac, &sys.residual)?;
        drop(jac);
        delta.iter_mut().for_each(|d| *d = -*d);
        iterations += 1;

        let mut step = 1.0;
        let mut trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
        sys = build(&trial, false)?;
        if config.line_search {
            while norm2(&sys.residual) >= (1.0 - 1e-4 * step) * res && step > 1e-3 {
                step *= 0.5;
                trial = x.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
                sys = build(&trial, false)?;
            }
        }
        updates.push(step * norm2(&delta));
        let small_step = step * norm2(&delta) <= config.rel_tol * norm2(&trial);
        x = trial;
        res = norm2(&sys.residual);
        history.push(res);
        if !res.is_finite() {
            return Err(Error::NewtonNotConverged { iterations, residual: res });
        }
        if small_step {
            break;
        }
    }
    Ok(NewtonOutcome { solution: x, iterations, residual_history: history, update_history: updates })
}
