//! DLN coefficients, the G-norm and the step-size controller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Coefficients of one variable-step DLN step from `t_n` to `t_{n+1}`.
///
/// Arrays are indexed by level offset: entry `ℓ` multiplies level
/// `n − 1 + ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DlnStepContext {
    pub theta: f64,
    pub k_prev: f64,
    pub k_curr: f64,
    /// Step variability `(k_curr − k_prev)/(k_curr + k_prev)`.
    pub epsilon: f64,
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub k_hat: f64,
}

pub fn dln_coefficients(theta: f64, k_prev: f64, k_curr: f64) -> Result<DlnStepContext> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta = {theta} is outside [0, 1]")));
    }
    if !(k_prev > 0.0 && k_curr > 0.0 && k_prev.is_finite() && k_curr.is_finite()) {
        return Err(Error::InvalidArgument(format!("step sizes must be positive (got {k_prev}, {k_curr})")));
    }
    let eps = (k_curr - k_prev) / (k_curr + k_prev);
    let d = (1.0 + eps * theta).powi(2);
    let s = (1.0 - theta * theta) / d;
    let e = eps * eps * theta * (1.0 - theta * theta) / d;
    let beta = [0.25 * (1.0 + s - e - theta), 0.5 * (1.0 - s), 0.25 * (1.0 + s + e + theta)];
    let alpha = [0.5 * (theta - 1.0), -theta, 0.5 * (theta + 1.0)];
    let k_hat = 0.5 * (1.0 + theta) * k_curr + 0.5 * (1.0 - theta) * k_prev;
    Ok(DlnStepContext { theta, k_prev, k_curr, epsilon: eps, alpha, beta, k_hat })
}

impl DlnStepContext {
    /// `Σ β_ℓ t_{n−1+ℓ}` for `t_n` and the step sizes of the context.
    pub fn beta_time(&self, t_curr: f64) -> f64 {
        let t = [t_curr - self.k_prev, t_curr, t_curr + self.k_curr];
        self.beta.iter().zip(&t).map(|(b, t)| b * t).sum()
    }

    /// `C_β = Σ β_ℓ²`.
    pub fn c_beta(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }

    /// Coefficients `a_ℓ` of the numerical dissipation term in the G-stability
    /// identity.
    pub fn g_coefficients(&self) -> [f64; 3] {
        let th = self.theta;
        let a1 = -(th * (1.0 - th * th)).max(0.0).sqrt() / (2f64.sqrt() * (1.0 + self.epsilon * th));
        [-0.5 * (1.0 + self.epsilon) * a1, a1, -0.5 * (1.0 - self.epsilon) * a1]
    }
}

fn mass_norm_squared(mass: &SparseOperator, v: &[f64]) -> f64 {
    mass.bilinear(v, v)
}

fn check_len(mass: &SparseOperator, vs: &[&[f64]]) -> Result<()> {
    for v in vs {
        if v.len() != mass.nrows() {
            return Err(Error::DimensionMismatch { expected: mass.nrows(), found: v.len() });
        }
    }
    Ok(())
}

/// `(1+θ)/4 ‖u‖² + (1−θ)/4 ‖v‖²` with the `L²` norm given by `mass`.
pub fn g_norm_squared(mass: &SparseOperator, u: &[f64], v: &[f64], theta: f64) -> Result<f64> {
    check_len(mass, &[u, v])?;
    Ok(0.25 * (1.0 + theta) * mass_norm_squared(mass, u) + 0.25 * (1.0 - theta) * mass_norm_squared(mass, v))
}

/// Residual of the G-stability identity for three consecutive levels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GStabilityResidual {
    pub residual: f64,
    /// Sum of the squared norms of the three levels, for relative checks.
    pub scale: f64,
}

/// `|(v_α, v_β) − [G(v_{n+1}, v_n) − G(v_n, v_{n−1}) + ‖Σ a_ℓ v_{n−1+ℓ}‖²]|`.
pub fn g_stability_check(
    mass: &SparseOperator,
    v_prev: &[f64],
    v_curr: &[f64],
    v_next: &[f64],
    ctx: &DlnStepContext,
) -> Result<GStabilityResidual> {
    check_len(mass, &[v_prev, v_curr, v_next])?;
    let lv = [v_prev, v_curr, v_next];
    let combo = |c: [f64; 3]| -> Vec<f64> {
        (0..v_prev.len()).map(|i| c[0] * lv[0][i] + c[1] * lv[1][i] + c[2] * lv[2][i]).collect()
    };
    let va = combo(ctx.alpha);
    let vb = combo(ctx.beta);
    let vd = combo(ctx.g_coefficients());
    let lhs = mass.bilinear(&va, &vb);
    let rhs = g_norm_squared(mass, v_next, v_curr, ctx.theta)? - g_norm_squared(mass, v_curr, v_prev, ctx.theta)?
        + mass_norm_squared(mass, &vd);
    let scale = lv.iter().map(|v| mass_norm_squared(mass, v)).sum();
    Ok(GStabilityResidual { residual: (lhs - rhs).abs(), scale })
}

/// Sufficient step condition for energy boundedness with a linear
/// coefficient `ρ`: `C_β |ρ| k̂ ≤ (1+θ)/4`. Returns whether it holds and
/// the margin `(1+θ)/4 − C_β |ρ| k̂`.
pub fn check_stability_step_condition(ctx: &DlnStepContext, rho: f64) -> (bool, f64) {
    let margin = 0.25 * (1.0 + ctx.theta) - ctx.c_beta() * rho.abs() * ctx.k_hat;
    (margin >= 0.0, margin)
}

/// Bounds and tolerance of the minimum-dissipation controller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerBounds {
    pub k_min: f64,
    pub k_max: f64,
    pub delta: f64,
}

impl Default for ControllerBounds {
    fn default() -> Self {
        Self { k_min: 1e-5, k_max: 0.01, delta: 2.0 }
    }
}

impl ControllerBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0 && self.k_min <= self.k_max && self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "controller needs 0 < k_min <= k_max and delta > 0 (got {:?})",
                self
            )));
        }
        Ok(())
    }
}

/// Doubles the step (up to `k_max`) when both dissipation ratios are within
/// `δ`, halves it (down to `k_min`) otherwise. A non-finite ratio counts as
/// exceeding the tolerance.
pub fn adapt_step(chi_u: f64, chi_w: f64, k_curr: f64, bounds: &ControllerBounds) -> f64 {
    let within = chi_u.abs() <= bounds.delta && chi_w.abs() <= bounds.delta;
    if within {
        (2.0 * k_curr).min(bounds.k_max)
    } else {
        (0.5 * k_curr).max(bounds.k_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_limits() {
        let c = dln_coefficients(1.0, 0.3, 0.1).unwrap();
        assert_eq!(c.alpha, [0.0, -1.0, 1.0]);
        assert_eq!(c.beta, [0.0, 0.5, 0.5]);
        assert_eq!(c.k_hat, 0.1);
        let c = dln_coefficients(0.0, 0.3, 0.1).unwrap();
        assert_eq!(c.alpha, [-0.5, 0.0, 0.5]);
        assert_eq!(c.beta, [0.5, 0.0, 0.5]);
        assert!((c.k_hat - 0.2).abs() < 1e-16);
    }

    #[test]
    fn direct_substitution() {
        let c = dln_coefficients(0.3, 0.1, 0.2).unwrap();
        let eps: f64 = 1.0 / 3.0;
        assert!((c.epsilon - eps).abs() < 1e-15);
        let th: f64 = 0.3;
        let d = (1.0 + eps * th) * (1.0 + eps * th);
        let b2 = (1.0 + (1.0 - th * th) / d + eps * eps * th * (1.0 - th * th) / d + th) / 4.0;
        let b1 = (1.0 - (1.0 - th * th) / d) / 2.0;
        let b0 = (1.0 + (1.0 - th * th) / d - eps * eps * th * (1.0 - th * th) / d - th) / 4.0;
        assert!((c.beta[2] - b2).abs() < 1e-15);
        assert!((c.beta[1] - b1).abs() < 1e-15);
        assert!((c.beta[0] - b0).abs() < 1e-15);
        assert!((c.beta.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(dln_coefficients(1.2, 0.1, 0.1).is_err());
        assert!(dln_coefficients(-0.1, 0.1, 0.1).is_err());
        assert!(dln_coefficients(0.5, 0.0, 0.1).is_err());
        assert!(dln_coefficients(0.5, 0.1, -1.0).is_err());
    }

    #[test]
    fn step_condition_examples() {
        let c = dln_coefficients(1.0, 1.0, 1.0).unwrap();
        assert!((c.c_beta() - 0.5).abs() < 1e-15);
        assert!(check_stability_step_condition(&c, 1.0).0);
        let c = dln_coefficients(1.0, 1.1, 1.1).unwrap();
        assert!(!check_stability_step_condition(&c, 1.0).0);
        assert!(check_stability_step_condition(&c, 0.0).0);
        let c = dln_coefficients(0.3, 0.01, 0.01).unwrap();
        let (ok, margin) = check_stability_step_condition(&c, -0.81);
        assert!(ok && margin > 0.3);
    }

    #[test]
    fn controller_branches() {
        let b = ControllerBounds::default();
        assert_eq!(adapt_step(0.0, 0.0, 1e-3, &b), 2e-3);
        assert_eq!(adapt_step(2.0, -2.0, 1e-3, &b), 2e-3);
        assert_eq!(adapt_step(2.0 + 1e-12, 0.0, 1e-3, &b), 5e-4);
        assert_eq!(adapt_step(0.1, 0.1, 0.01, &b), 0.01);
        assert_eq!(adapt_step(10.0, 0.1, 1e-5, &b), 1e-5);
        assert_eq!(adapt_step(f64::NAN, 0.1, 1e-3, &b), 5e-4);
    }
}
