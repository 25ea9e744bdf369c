//! Closed-form exact solutions and the source terms they induce.
//!
//! Each solution is a product of a spatial profile and an exponential time
//! factor: `u, w, φ` scale with `exp(growth·t)` and `p` with
//! `exp(pressure_rate·t)`. The auxiliary field satisfies
//! `w = −Δu − ∇φ` with `φ` harmonic, so `Δw = −Δ²u`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::{ModelParams, ProjectionData};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VelocityProfile {
    /// `u = ((cos 2πx − 1) sin 2πy, −sin 2πx cos 2πy)`, `φ = x³ − 3xy²`.
    Trigonometric,
    /// `u = (x², −2xy)`, `φ = x − ½`; every field lies in the discrete spaces.
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PressureProfile {
    /// `−cos 2πx − cos 2πy`
    Cosine,
    /// `sin(3π²x) cos(3π²y)`
    Oscillatory,
    /// `y − ½`
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSolution {
    pub velocity: VelocityProfile,
    pub pressure: PressureProfile,
    pub growth: f64,
    pub pressure_rate: f64,
}

impl ManufacturedSolution {
    /// Steady trigonometric data of the projection test.
    pub fn projection_test() -> Self {
        Self { velocity: VelocityProfile::Trigonometric, pressure: PressureProfile::Cosine, growth: 0.0, pressure_rate: 0.0 }
    }

    /// Time-dependent data of the scheme convergence tests.
    pub fn scheme_test() -> Self {
        Self {
            velocity: VelocityProfile::Trigonometric,
            pressure: PressureProfile::Oscillatory,
            growth: 2.0,
            pressure_rate: -1.0,
        }
    }

    /// Polynomial data contained in the Taylor–Hood spaces.
    pub fn polynomial(growth: f64) -> Self {
        Self { velocity: VelocityProfile::Polynomial, pressure: PressureProfile::Linear, growth, pressure_rate: 0.0 }
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        (self.growth * t).exp()
    }

    pub fn pressure_factor(&self, t: f64) -> f64 {
        (self.pressure_rate * t).exp()
    }

    fn su(&self, [x, y]: Vec2) -> Vec2 {
        match self.velocity {
            VelocityProfile::Trigonometric => {
                let (sx, cx) = (2.0 * PI * x).sin_cos();
                let (sy, cy) = (2.0 * PI * y).sin_cos();
                [(cx - 1.0) * sy, -sx * cy]
            }
            VelocityProfile::Polynomial => [x * x, -2.0 * x * y],
        }
    }

    fn sgrad_u(&self, [x, y]: Vec2) -> Mat2 {
        match self.velocity {
            VelocityProfile::Trigonometric => {
                let tp = 2.0 * PI;
                let (sx, cx) = (tp * x).sin_cos();
                let (sy, cy) = (tp * y).sin_cos();
                [[-tp * sx * sy, tp * (cx - 1.0) * cy], [-tp * cx * cy, tp * sx * sy]]
            }
            VelocityProfile::Polynomial => [[2.0 * x, 0.0], [-2.0 * y, -2.0 * x]],
        }
    }

    fn slap_u(&self, [x, y]: Vec2) -> Vec2 {
        match self.velocity {
            VelocityProfile::Trigonometric => {
                let p2 = PI * PI;
                let (sx, cx) = (2.0 * PI * x).sin_cos();
                let (sy, cy) = (2.0 * PI * y).sin_cos();
                [-8.0 * p2 * cx * sy + 4.0 * p2 * sy, 8.0 * p2 * sx * cy]
            }
            VelocityProfile::Polynomial => [2.0, 0.0],
        }
    }

    fn sphi(&self, [x, y]: Vec2) -> f64 {
        match self.velocity {
            VelocityProfile::Trigonometric => x * x * x - 3.0 * x * y * y,
            VelocityProfile::Polynomial => x - 0.5,
        }
    }

    fn sgrad_phi(&self, [x, y]: Vec2) -> Vec2 {
        match self.velocity {
            VelocityProfile::Trigonometric => [3.0 * x * x - 3.0 * y * y, -6.0 * x * y],
            VelocityProfile::Polynomial => [1.0, 0.0],
        }
    }

    fn sw(&self, x: Vec2) -> Vec2 {
        let l = self.slap_u(x);
        let g = self.sgrad_phi(x);
        [-l[0] - g[0], -l[1] - g[1]]
    }

    fn sgrad_w(&self, [x, y]: Vec2) -> Mat2 {
        match self.velocity {
            VelocityProfile::Trigonometric => {
                let p3 = PI * PI * PI;
                let (sx, cx) = (2.0 * PI * x).sin_cos();
                let (sy, cy) = (2.0 * PI * y).sin_cos();
                [
                    [-16.0 * p3 * sx * sy - 6.0 * x, 16.0 * p3 * cx * cy - 8.0 * p3 * cy + 6.0 * y],
                    [-16.0 * p3 * cx * cy + 6.0 * y, 16.0 * p3 * sx * sy + 6.0 * x],
                ]
            }
            VelocityProfile::Polynomial => [[0.0; 2]; 2],
        }
    }

    fn slap_w(&self, [x, y]: Vec2) -> Vec2 {
        match self.velocity {
            VelocityProfile::Trigonometric => {
                let p4 = PI.powi(4);
                let (sx, cx) = (2.0 * PI * x).sin_cos();
                let (sy, cy) = (2.0 * PI * y).sin_cos();
                [-64.0 * p4 * cx * sy + 16.0 * p4 * sy, 64.0 * p4 * sx * cy]
            }
            VelocityProfile::Polynomial => [0.0; 2],
        }
    }

    fn sp(&self, [x, y]: Vec2) -> f64 {
        match self.pressure {
            PressureProfile::Cosine => -(2.0 * PI * x).cos() - (2.0 * PI * y).cos(),
            PressureProfile::Oscillatory => {
                let k = 3.0 * PI * PI;
                (k * x).sin() * (k * y).cos()
            }
            PressureProfile::Linear => y - 0.5,
        }
    }

    fn sgrad_p(&self, [x, y]: Vec2) -> Vec2 {
        match self.pressure {
            PressureProfile::Cosine => [2.0 * PI * (2.0 * PI * x).sin(), 2.0 * PI * (2.0 * PI * y).sin()],
            PressureProfile::Oscillatory => {
                let k = 3.0 * PI * PI;
                let (sx, cx) = (k * x).sin_cos();
                let (sy, cy) = (k * y).sin_cos();
                [k * cx * cy, -k * sx * sy]
            }
            PressureProfile::Linear => [0.0, 1.0],
        }
    }

    pub fn u(&self, x: Vec2, t: f64) -> Vec2 {
        scale2(self.su(x), self.time_factor(t))
    }

    pub fn u_t(&self, x: Vec2, t: f64) -> Vec2 {
        scale2(self.su(x), self.growth * self.time_factor(t))
    }

    pub fn grad_u(&self, x: Vec2, t: f64) -> Mat2 {
        scale22(self.sgrad_u(x), self.time_factor(t))
    }

    pub fn lap_u(&self, x: Vec2, t: f64) -> Vec2 {
        scale2(self.slap_u(x), self.time_factor(t))
    }

    pub fn w(&self, x: Vec2, t: f64) -> Vec2 {
        scale2(self.sw(x), self.time_factor(t))
    }

    pub fn grad_w(&self, x: Vec2, t: f64) -> Mat2 {
        scale22(self.sgrad_w(x), self.time_factor(t))
    }

    pub fn lap_w(&self, x: Vec2, t: f64) -> Vec2 {
        scale2(self.slap_w(x), self.time_factor(t))
    }

    pub fn phi(&self, x: Vec2, t: f64) -> f64 {
        self.sphi(x) * self.time_factor(t)
    }

    pub fn grad_phi(&self, x: Vec2, t: f64) -> Vec2 {
        scale2(self.sgrad_phi(x), self.time_factor(t))
    }

    pub fn p(&self, x: Vec2, t: f64) -> f64 {
        self.sp(x) * self.pressure_factor(t)
    }

    pub fn grad_p(&self, x: Vec2, t: f64) -> Vec2 {
        scale2(self.sgrad_p(x), self.pressure_factor(t))
    }

    /// Fields frozen at time `t`, for the projection.
    pub fn at(&self, t: f64) -> ManufacturedAt<'_> {
        ManufacturedAt { ms: self, t }
    }
}

/// `f = u_t − μΔu − γΔw + ν(u·∇)u + ρu + λ|u|²u + ∇p`.
pub fn source_term(ms: &ManufacturedSolution, params: &ModelParams, x: Vec2, t: f64) -> Vec2 {
    let u = ms.u(x, t);
    let ut = ms.u_t(x, t);
    let gu = ms.grad_u(x, t);
    let lu = ms.lap_u(x, t);
    let lw = ms.lap_w(x, t);
    let gp = ms.grad_p(x, t);
    let u2 = u[0] * u[0] + u[1] * u[1];
    let mut f = [0.0; 2];
    for c in 0..2 {
        let conv = u[0] * gu[c][0] + u[1] * gu[c][1];
        f[c] = ut[c] - params.mu * lu[c] - params.gamma * lw[c]
            + params.nu * conv
            + params.rho * u[c]
            + params.lambda * u2 * u[c]
            + gp[c];
    }
    f
}

pub struct ManufacturedAt<'a> {
    ms: &'a ManufacturedSolution,
    t: f64,
}

impl ProjectionData for ManufacturedAt<'_> {
    fn u(&self, x: Vec2) -> Vec2 {
        self.ms.u(x, self.t)
    }
    fn grad_u(&self, x: Vec2) -> Mat2 {
        self.ms.grad_u(x, self.t)
    }
    fn w(&self, x: Vec2) -> Vec2 {
        self.ms.w(x, self.t)
    }
    fn grad_w(&self, x: Vec2) -> Mat2 {
        self.ms.grad_w(x, self.t)
    }
    fn phi(&self, x: Vec2) -> f64 {
        self.ms.phi(x, self.t)
    }
    fn p(&self, x: Vec2) -> f64 {
        self.ms.p(x, self.t)
    }
}

fn scale2(v: Vec2, s: f64) -> Vec2 {
    [v[0] * s, v[1] * s]
}

fn scale22(m: Mat2, s: f64) -> Mat2 {
    [scale2(m[0], s), scale2(m[1], s)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const H: f64 = 1e-4;

    fn fd_grad(f: impl Fn(Vec2) -> f64, x: Vec2) -> Vec2 {
        [
            (f([x[0] + H, x[1]]) - f([x[0] - H, x[1]])) / (2.0 * H),
            (f([x[0], x[1] + H]) - f([x[0], x[1] - H])) / (2.0 * H),
        ]
    }

    fn fd_lap(f: impl Fn(Vec2) -> f64, x: Vec2) -> f64 {
        let h = 1e-3;
        (f([x[0] + h, x[1]]) + f([x[0] - h, x[1]]) + f([x[0], x[1] + h]) + f([x[0], x[1] - h]) - 4.0 * f(x)) / (h * h)
    }

    fn all() -> Vec<ManufacturedSolution> {
        vec![ManufacturedSolution::projection_test(), ManufacturedSolution::scheme_test(), ManufacturedSolution::polynomial(0.5)]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for ms in all() {
            for _ in 0..200 {
                let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
                let t = rng.gen_range(0.0..1.0);
                let tol = |scale: f64| 1e-5 * scale.abs().max(1.0);
                for c in 0..2 {
                    let g = fd_grad(|y| ms.u(y, t)[c], x);
                    let e = ms.grad_u(x, t)[c];
                    for k in 0..2 {
                        assert!((g[k] - e[k]).abs() < tol(e[k]) * 10.0, "grad u");
                    }
                    let g = fd_grad(|y| ms.w(y, t)[c], x);
                    let e = ms.grad_w(x, t)[c];
                    for k in 0..2 {
                        assert!((g[k] - e[k]).abs() < tol(e[k]) * 100.0, "grad w {g:?} {e:?}");
                    }
                    let l = fd_lap(|y| ms.u(y, t)[c], x);
                    assert!((l - ms.lap_u(x, t)[c]).abs() < 1e-3 * ms.lap_u(x, t)[c].abs().max(1.0), "lap u");
                    let l = fd_lap(|y| ms.w(y, t)[c], x);
                    assert!((l - ms.lap_w(x, t)[c]).abs() < 2e-3 * ms.lap_w(x, t)[c].abs().max(1.0), "lap w");
                }
                let g = fd_grad(|y| ms.p(y, t), x);
                let e = ms.grad_p(x, t);
                assert!((g[0] - e[0]).abs() < 1e-4 * e[0].abs().max(1.0) * 10.0);
                assert!((g[1] - e[1]).abs() < 1e-4 * e[1].abs().max(1.0) * 10.0);
                let g = fd_grad(|y| ms.phi(y, t), x);
                let e = ms.grad_phi(x, t);
                assert!((g[0] - e[0]).abs() < 1e-6 && (g[1] - e[1]).abs() < 1e-6);
                let ut = (ms.u(x, t + H)[0] - ms.u(x, t - H)[0]) / (2.0 * H);
                assert!((ut - ms.u_t(x, t)[0]).abs() < 1e-6 * ut.abs().max(1.0));
            }
        }
    }

    #[test]
    fn auxiliary_and_divergence_identities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for ms in all() {
            for _ in 0..1000 {
                let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let t = rng.gen_range(0.0..1.0);
                let div = fd_grad(|y| ms.u(y, t)[0], x)[0] + fd_grad(|y| ms.u(y, t)[1], x)[1];
                assert!(div.abs() < 1e-5, "div u = {div}");
                let divw = fd_grad(|y| ms.w(y, t)[0], x)[0] + fd_grad(|y| ms.w(y, t)[1], x)[1];
                assert!(divw.abs() < 1e-3, "div w = {divw}");
                // w + ∇φ = −Δu
                for c in 0..2 {
                    let l = fd_lap(|y| ms.u(y, t)[c], x);
                    let lhs = ms.w(x, t)[c] + ms.grad_phi(x, t)[c];
                    assert!((lhs + l).abs() < 1e-3 * l.abs().max(1.0));
                }
                assert!(fd_lap(|y| ms.phi(y, t), x).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn source_matches_finite_difference_operator() {
        let ms = ManufacturedSolution::scheme_test();
        let params = ModelParams { mu: 1.0, gamma: 1.0, nu: 1.0, rho: 1.0, lambda: 1.0 };
        let x = [0.3, 0.7];
        let t = 0.5;
        let f = source_term(&ms, &params, x, t);
        let u = ms.u(x, t);
        let u2 = u[0] * u[0] + u[1] * u[1];
        for c in 0..2 {
            let ut = (ms.u(x, t + H)[c] - ms.u(x, t - H)[c]) / (2.0 * H);
            let lu = fd_lap(|y| ms.u(y, t)[c], x);
            // −Δw = Δ²u via a 13-point composition of the 5-point Laplacian
            let h = 2e-3;
            let lap = |y: Vec2| fd_lap(|z| ms.u(z, t)[c], y);
            let bi = (lap([x[0] + h, x[1]]) + lap([x[0] - h, x[1]]) + lap([x[0], x[1] + h]) + lap([x[0], x[1] - h])
                - 4.0 * lap(x))
                / (h * h);
            let gu = fd_grad(|y| ms.u(y, t)[c], x);
            let gp = fd_grad(|y| ms.p(y, t), x);
            let oracle = ut - lu + bi + (u[0] * gu[0] + u[1] * gu[1]) + u[c] + u2 * u[c] + gp[c];
            let rel = (oracle - f[c]).abs() / f[c].abs().max(1.0);
            assert!(rel < 1e-4, "component {c}: {oracle} vs {}", f[c]);
        }
    }

    #[test]
    fn steady_zero_coefficients_give_pressure_gradient() {
        let ms = ManufacturedSolution::projection_test();
        let params = ModelParams { mu: 0.0, gamma: 0.0, nu: 0.0, rho: 0.0, lambda: 0.0 };
        let x = [0.2, 0.9];
        assert_eq!(source_term(&ms, &params, x, 0.0), ms.grad_p(x, 0.0));
    }
}
