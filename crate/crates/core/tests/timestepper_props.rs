use dlnfem_core::assembly::{Discretization, ModelParams};
use dlnfem_core::mms_harness::{
    doubling_schedule_steps, run_adaptive, run_random_with_steps, self_organization_params, RandomRunConfig,
};
use dlnfem_core::solver::NewtonConfig;
use dlnfem_core::sparse::norm2;
use dlnfem_core::timestepper::{adapt_step, dln_coefficients, g_stability_check, ControllerBounds, Stepper, Unforced};
use proptest::prelude::*;

fn base_config(n: usize, theta: f64, t_end: f64) -> RandomRunConfig {
    RandomRunConfig {
        n,
        theta,
        params: self_organization_params(),
        t_end,
        seed: 3,
        newton: NewtonConfig::default(),
        max_steps: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn coefficient_sums(theta in 0.0..=1.0f64, kp in 1e-4..1.0f64, kc in 1e-4..1.0f64) {
        let c = dln_coefficients(theta, kp, kc).unwrap();
        prop_assert!(c.alpha.iter().sum::<f64>().abs() < 1e-14);
        prop_assert!((c.beta.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        prop_assert!(c.k_hat > 0.0);
    }

    #[test]
    fn one_leg_is_exact_on_quadratics(theta in 0.0..=1.0f64, kp in 1e-3..1.0f64, kc in 1e-3..1.0f64, t0 in -1.0..1.0f64) {
        let c = dln_coefficients(theta, kp, kc).unwrap();
        let t = [t0 - kp, t0, t0 + kc];
        let tb = c.beta_time(t0);
        let d1: f64 = c.alpha.iter().zip(&t).map(|(a, t)| a * t).sum::<f64>() / c.k_hat;
        let d2: f64 = c.alpha.iter().zip(&t).map(|(a, t)| a * t * t).sum::<f64>() / c.k_hat;
        prop_assert!((d1 - 1.0).abs() < 1e-10);
        prop_assert!((d2 - 2.0 * tb).abs() < 1e-9 * (1.0 + tb.abs()));
    }

    #[test]
    fn controller_stays_in_bounds(chi_u in -10.0..10.0f64, chi_w in -10.0..10.0f64, e in 0u32..10) {
        let b = ControllerBounds::default();
        let k = (b.k_min * 2f64.powi(e as i32)).min(b.k_max);
        let next = adapt_step(chi_u, chi_w, k, &b);
        prop_assert!(next >= b.k_min && next <= b.k_max);
        prop_assert!(next == (2.0 * k).min(b.k_max) || next == (0.5 * k).max(b.k_min));
    }
}

#[test]
fn g_identity_with_mass_matrix() {
    use rand::{Rng, SeedableRng};
    let disc = Discretization::unit_square(3).unwrap();
    let m = &disc.mass;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let vec = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..m.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    for _ in 0..200 {
        let theta = rng.gen_range(0.0..=1.0);
        let kp = 10f64.powf(rng.gen_range(-3.0..0.0));
        let kc = 10f64.powf(rng.gen_range(-3.0..0.0));
        let c = dln_coefficients(theta, kp, kc).unwrap();
        let (a, b, d) = (vec(&mut rng), vec(&mut rng), vec(&mut rng));
        let r = g_stability_check(m, &a, &b, &d, &c).unwrap();
        assert!(r.residual <= 1e-11 * r.scale, "{r:?} theta={theta}");
    }
}

#[test]
fn zero_state_stays_zero() {
    let disc = Discretization::unit_square(2).unwrap();
    let data = Unforced;
    let params = ModelParams { mu: 0.1, gamma: 0.01, nu: 0.2, rho: -0.5, lambda: 1.0 };
    let mut stepper = Stepper::new(&disc, params, 0.6, &data).unwrap();
    let (mut hist, _) = stepper.bootstrap_first_step(vec![0.0; disc.size()], 0.0, 0.01).unwrap();
    for k in [0.01, 0.02, 0.005] {
        hist = stepper.step(&hist, k).unwrap().0;
    }
    assert!(hist.curr.iter().all(|v| *v == 0.0));
}

#[test]
fn unlimited_tolerance_follows_doubling_schedule() {
    let bounds = ControllerBounds { k_min: 1e-3, k_max: 0.02, delta: f64::MAX };
    let t_end = 0.1;
    let (row, _) = run_adaptive(100.0, &base_config(2, 0.5, t_end), &bounds).unwrap();
    // 1, 2, 4, 8, 16 (×1e-3) cover 0.031; then ceil(0.069 / 0.02) = 4.
    assert_eq!(doubling_schedule_steps(&bounds, t_end), 9);
    assert_eq!(row.adaptive_steps, 9);
    assert!((row.t_reached - t_end).abs() < 1e-12);
}

#[test]
fn zero_tolerance_pins_the_minimum_step() {
    let bounds = ControllerBounds { k_min: 5e-3, k_max: 0.02, delta: f64::MIN_POSITIVE };
    let (row, run) = run_adaptive(100.0, &base_config(2, 0.5, 0.05), &bounds).unwrap();
    assert_eq!(row.adaptive_steps, 10);
    assert!(run.diagnostics.iter().all(|d| (d.k - 5e-3).abs() < 1e-15));
}

#[test]
fn constant_step_self_convergence_is_second_order() {
    // Differences between successive halvings shrink by about four.
    let finals: Vec<Vec<f64>> = [0.004, 0.002, 0.001]
        .iter()
        .map(|&dt| {
            let cfg = base_config(4, 0.5, 0.2);
            let (hist, _) = run_random_with_steps(&cfg, dt, |_| dt).unwrap();
            // u and w blocks.
            let uw = 2 * Discretization::unit_square(4).unwrap().velocity.dof_count();
            hist.curr[..uw].to_vec()
        })
        .collect();
    let diff = |a: &[f64], b: &[f64]| norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let ratio = diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2]);
    assert!(ratio > 3.0 && ratio < 5.5, "ratio {ratio}");
}
