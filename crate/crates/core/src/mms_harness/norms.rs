//! Error norms against pointwise exact fields and observed rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{ElementMap, Field, QuadratureRule};

/// Exactness degree of the rule used for error integrals (two above the
/// assembly rule).
pub const ERROR_QUADRATURE_DEGREE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub l2: f64,
    /// Full `H¹` norm of the error, `(‖e‖² + ‖∇e‖²)^{1/2}`.
    pub h1: f64,
}

/// Exact field evaluated at a point: component values and gradients.
pub type ExactEval<'a> = dyn Fn([f64; 2], &mut [f64], &mut [[f64; 2]]) + 'a;

fn rule() -> QuadratureRule {
    QuadratureRule::for_degree(ERROR_QUADRATURE_DEGREE).expect("built-in rule")
}

/// `∫ field` and `∫ exact`, per component, and the domain area.
fn means(field: &Field, exact: &ExactEval<'_>) -> (Vec<f64>, Vec<f64>) {
    let nc = field.space().components();
    let mut ih = vec![0.0; nc];
    let mut ie = vec![0.0; nc];
    let mut area = 0.0;
    let mut ev = vec![0.0; nc];
    let mut eg = vec![[0.0; 2]; nc];
    let rule = rule();
    let mesh = field.space().mesh().clone();
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(&mesh, t);
        for (q, &l) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * map.det.abs();
            let fv = field.eval_in_element(t, l);
            exact(map.to_physical(rule.reference_point(q)), &mut ev, &mut eg);
            for c in 0..nc {
                ih[c] += w * fv.values[c];
                ie[c] += w * ev[c];
            }
            area += w;
        }
    }
    (ih.iter().map(|v| v / area).collect(), ie.iter().map(|v| v / area).collect())
}

/// `L²` and `H¹` errors of `field` against `exact`. With `modulo_constants`
/// the mean of each is removed first (fields defined up to a constant).
pub fn error_norms_with(field: &Field, exact: &ExactEval<'_>, modulo_constants: bool) -> Result<ErrorPair> {
    let nc = field.space().components();
    let (mh, me) = if modulo_constants { means(field, exact) } else { (vec![0.0; nc], vec![0.0; nc]) };
    let rule = rule();
    let mesh = field.space().mesh().clone();
    let mut l2 = 0.0;
    let mut semi = 0.0;
    let mut ev = vec![0.0; nc];
    let mut eg = vec![[0.0; 2]; nc];
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(&mesh, t);
        for (q, &l) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * map.det.abs();
            let fv = field.eval_in_element(t, l);
            exact(map.to_physical(rule.reference_point(q)), &mut ev, &mut eg);
            for c in 0..nc {
                let d = (fv.values[c] - mh[c]) - (ev[c] - me[c]);
                l2 += w * d * d;
                let gx = fv.gradients[c][0] - eg[c][0];
                let gy = fv.gradients[c][1] - eg[c][1];
                semi += w * (gx * gx + gy * gy);
            }
        }
    }
    if !(l2.is_finite() && semi.is_finite()) {
        return Err(Error::InvalidArgument("error integral is not finite".into()));
    }
    Ok(ErrorPair { l2: l2.sqrt(), h1: (l2 + semi).sqrt() })
}

/// `L²` and `H¹` errors without mean removal.
pub fn error_norms(field: &Field, exact: &ExactEval<'_>) -> Result<ErrorPair> {
    error_norms_with(field, exact, false)
}

/// `log(e₁/e₂) / log(s₁/s₂)`; `None` when either error is zero or not
/// finite.
pub fn observed_rate(e1: f64, e2: f64, s1: f64, s2: f64) -> Option<f64> {
    if e1 > 0.0 && e2 > 0.0 && e1.is_finite() && e2.is_finite() && s1 != s2 {
        Some((e1 / e2).ln() / (s1 / s2).ln())
    } else {
        None
    }
}

/// Errors of all four fields for one mesh or step size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    /// `h` or `k` of the row.
    pub size: f64,
    pub u: ErrorPair,
    pub w: ErrorPair,
    pub phi: ErrorPair,
    pub p: ErrorPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `"h"` or `"dt"`.
    pub size_label: String,
    pub rows: Vec<ErrorRow>,
}

/// Names of the eight reported quantities, in table order.
pub const ERROR_COLUMNS: [&str; 8] = ["u_l2", "w_l2", "phi_l2", "p_l2", "u_h1", "w_h1", "phi_h1", "p_h1"];

impl ErrorRow {
    pub fn values(&self) -> [f64; 8] {
        [self.u.l2, self.w.l2, self.phi.l2, self.p.l2, self.u.h1, self.w.h1, self.phi.h1, self.p.h1]
    }
}

impl ErrorReport {
    pub fn new(size_label: &str) -> Self {
        Self { size_label: size_label.into(), rows: Vec::new() }
    }

    /// Rates of row `i` against row `i − 1` for each column; `None` for the
    /// first row.
    pub fn rates(&self, i: usize) -> [Option<f64>; 8] {
        if i == 0 || i >= self.rows.len() {
            return [None; 8];
        }
        let a = &self.rows[i - 1];
        let b = &self.rows[i];
        let (va, vb) = (a.values(), b.values());
        let mut out = [None; 8];
        for k in 0..8 {
            out[k] = observed_rate(va[k], vb[k], a.size, b.size);
        }
        out
    }

    /// Rate of `column` between the last two rows.
    pub fn finest_rate(&self, column: &str) -> Option<f64> {
        let k = ERROR_COLUMNS.iter().position(|c| *c == column)?;
        self.rates(self.rows.len().checked_sub(1)?)[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_function_space;
    use crate::mesh::TriMesh;
    use std::sync::Arc;

    #[test]
    fn exact_member_has_zero_error() {
        let mesh = Arc::new(TriMesh::unit_square(3).unwrap());
        let space = build_function_space(mesh, 2, 2).unwrap();
        let f = Field::interpolate(space, |x, c| if c == 0 { x[0] * x[1] } else { x[1] * x[1] - x[0] });
        let exact = |x: [f64; 2], v: &mut [f64], g: &mut [[f64; 2]]| {
            v[0] = x[0] * x[1];
            v[1] = x[1] * x[1] - x[0];
            g[0] = [x[1], x[0]];
            g[1] = [-1.0, 2.0 * x[1]];
        };
        let e = error_norms(&f, &exact).unwrap();
        assert!(e.l2 < 1e-13 && e.h1 < 1e-12, "{e:?}");
    }

    #[test]
    fn zero_field_error_is_exact_norm() {
        let mesh = Arc::new(TriMesh::unit_square(4).unwrap());
        let space = build_function_space(mesh, 1, 1).unwrap();
        let f = Field::zeros(space);
        let exact = |x: [f64; 2], v: &mut [f64], g: &mut [[f64; 2]]| {
            v[0] = x[0];
            g[0] = [1.0, 0.0];
        };
        let e = error_norms(&f, &exact).unwrap();
        assert!((e.l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((e.h1 - (4.0f64 / 3.0).sqrt()).abs() < 1e-14);
        let m = error_norms_with(&f, &exact, true).unwrap();
        assert!((m.l2 - (1.0f64 / 12.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rates_follow_log_ratio() {
        assert!((observed_rate(8.0, 1.0, 0.5, 0.25).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(observed_rate(0.0, 1.0, 0.5, 0.25), None);
    }
}
