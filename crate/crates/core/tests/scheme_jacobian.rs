use dlnfem_core::assembly::{Discretization, ModelParams, SchemeProblem, StepWeights};
use dlnfem_core::timestepper::dln_coefficients;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::fd_defect;

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn dln_jacobian_matches_finite_differences() {
    let disc = Discretization::unit_square(2).unwrap();
    let n = disc.size();
    let nv = disc.velocity.dof_count();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..4 {
        let theta = [0.0, 0.3, 0.7, 1.0][trial];
        let kp = rng.gen_range(0.05..0.2);
        let kc = rng.gen_range(0.05..0.2);
        let ctx = dln_coefficients(theta, kp, kc).unwrap();
        let params = ModelParams {
            mu: rng.gen_range(0.1..2.0),
            gamma: rng.gen_range(0.1..2.0),
            nu: rng.gen_range(0.5..2.0),
            rho: rng.gen_range(-1.0..1.0),
            lambda: rng.gen_range(0.5..2.0),
        };
        let prev = random_vec(&mut rng, n, 1.0);
        let curr = random_vec(&mut rng, n, 1.0);
        let x = random_vec(&mut rng, n, 1.0);
        let load = random_vec(&mut rng, nv, 1.0);
        let boundary = random_vec(&mut rng, n, 1.0);
        let problem = SchemeProblem {
            disc: &disc,
            params,
            weights: StepWeights::one_leg(ctx.alpha, ctx.beta, ctx.k_hat),
            prev: &prev,
            curr: &curr,
            load: &load,
            boundary: Some(&boundary),
        };
        let d = fd_defect(&problem, &x);
        assert!(d <= 1e-6, "theta {theta}: relative Jacobian defect {d:.3e}");
    }
}

#[test]
fn trapezoidal_jacobian_matches_finite_differences() {
    let disc = Discretization::unit_square(2).unwrap();
    let n = disc.size();
    let nv = disc.velocity.dof_count();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = ModelParams { mu: 1.0, gamma: 1.0, nu: 1.0, rho: 1.0, lambda: 1.0 };
    let curr = random_vec(&mut rng, n, 2.0);
    let x = random_vec(&mut rng, n, 2.0);
    let load = random_vec(&mut rng, nv, 1.0);
    let problem = SchemeProblem {
        disc: &disc,
        params,
        weights: StepWeights::trapezoidal(0.1),
        prev: &curr,
        curr: &curr,
        load: &load,
        boundary: None,
    };
    let d = fd_defect(&problem, &x);
    assert!(d <= 1e-6, "relative Jacobian defect {d:.3e}");
}
