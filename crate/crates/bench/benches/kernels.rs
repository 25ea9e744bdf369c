use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dlnfem_core::assembly::{Discretization, ModelParams, SchemeProblem, StepWeights};
use dlnfem_core::mms_harness::{random_velocity, self_organization_params};
use dlnfem_core::timestepper::{dln_coefficients, leray_initial_state, Stepper, Unforced};

fn coefficients(c: &mut Criterion) {
    c.bench_function("dln_coefficients", |b| {
        b.iter(|| dln_coefficients(black_box(0.3), black_box(0.01), black_box(0.013)).unwrap())
    });
}

fn scheme_state(n: usize) -> (Discretization, Vec<f64>) {
    let disc = Discretization::unit_square(n).unwrap();
    let u0 = random_velocity(&disc, 1);
    let mut solver = disc.direct_solver();
    let x0 = leray_initial_state(&disc, &u0, &mut solver).unwrap();
    (disc, x0)
}

fn assembly(c: &mut Criterion) {
    let (disc, x) = scheme_state(16);
    let load = vec![0.0; disc.velocity.dof_count()];
    let ctx = dln_coefficients(0.3, 0.01, 0.01).unwrap();
    let params = ModelParams { mu: 1.0, gamma: 1.0, nu: 1.0, rho: 1.0, lambda: 1.0 };
    let problem = SchemeProblem {
        disc: &disc,
        params,
        weights: StepWeights::one_leg(ctx.alpha, ctx.beta, ctx.k_hat),
        prev: &x,
        curr: &x,
        load: &load,
        boundary: None,
    };
    c.bench_function("scheme_residual_jacobian_n16", |b| b.iter(|| problem.assemble(black_box(&x), true).unwrap()));
    let jac = problem.assemble(&x, true).unwrap().jacobian.unwrap();
    let mut solver = disc.direct_solver();
    solver.factorize(&jac).unwrap();
    c.bench_function("multifrontal_factorize_n16", |b| b.iter(|| solver.factorize(black_box(&jac)).unwrap().solve(&x).unwrap()));
}

fn stepping(c: &mut Criterion) {
    let (disc, x0) = scheme_state(8);
    let data = Unforced;
    let mut stepper = Stepper::new(&disc, self_organization_params(), 0.3, &data).unwrap();
    let (hist, _) = stepper.bootstrap_first_step(x0, 0.0, 0.01).unwrap();
    c.bench_function("dln_step_n8", |b| b.iter(|| stepper.step(black_box(&hist), 0.01).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = coefficients, assembly, stepping
}
criterion_main!(kernels);
