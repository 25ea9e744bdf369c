use std::f64::consts::PI;
use std::sync::Arc;

use dlnfem_core::assembly::{
    assemble_divergence, assemble_mass, assemble_mean_functional, assemble_nonlinear, assemble_stiffness,
    assemble_trilinear_matrix, coupling_pattern, Discretization, ModelParams, NonlinearRequest, SchemeProblem,
    StepWeights,
};
use dlnfem_core::fem::{build_function_space, quadrature_rule, ElementMap, Field, FunctionSpace};
use dlnfem_core::mesh::TriMesh;
use dlnfem_core::sparse::dot;
use proptest::prelude::*;

fn space(n: usize, degree: usize, comps: usize) -> Arc<FunctionSpace> {
    build_function_space(Arc::new(TriMesh::unit_square(n).unwrap()), degree, comps).unwrap()
}

fn random_field(space: &Arc<FunctionSpace>, seed: u64) -> Field {
    // Small deterministic generator; the tests only need spread-out values.
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let coeffs = (0..space.dof_count())
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect();
    Field::from_coeffs(space.clone(), coeffs).unwrap()
}

/// `∫ g(field value)` with a degree-10 rule evaluated element by element
/// through `Field::eval_in_element`, independent of the assembly kernels.
fn integrate(field: &Field, g: impl Fn(&[f64]) -> f64) -> f64 {
    let rule = quadrature_rule(10).unwrap();
    let mesh = field.space().mesh();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let det = ElementMap::new(mesh, t).det.abs();
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            total += w * det * g(&field.eval_in_element(t, *p).values);
        }
    }
    total
}

#[test]
fn mass_entries_sum_to_area_per_component() {
    for (deg, comps) in [(1, 1), (2, 1), (2, 2)] {
        let m = assemble_mass(&space(5, deg, comps)).unwrap();
        let total: f64 = m.values.iter().sum();
        assert!((total - comps as f64).abs() < 1e-13, "P{deg}x{comps}: {total}");
        assert!(m.symmetry_defect() < 1e-15);
    }
}

#[test]
fn stiffness_annihilates_constants() {
    let s = space(4, 2, 2);
    let k = assemble_stiffness(&s).unwrap();
    let ones = vec![1.0; s.dof_count()];
    let r = k.matvec(&ones);
    assert!(r.iter().all(|v| v.abs() < 1e-12));
    assert!(k.symmetry_defect() < 1e-13);
}

#[test]
fn rayleigh_quotient_of_first_dirichlet_mode() {
    let s = space(16, 2, 1);
    let m = assemble_mass(&s).unwrap();
    let k = assemble_stiffness(&s).unwrap();
    let u = Field::interpolate(s.clone(), |p, _| (PI * p[0]).sin() * (PI * p[1]).sin());
    let q = k.bilinear(&u.coeffs, &u.coeffs) / m.bilinear(&u.coeffs, &u.coeffs);
    assert!((q / (2.0 * PI * PI) - 1.0).abs() < 1e-4, "{q}");
}

#[test]
fn divergence_of_polynomial_fields() {
    let mesh = Arc::new(TriMesh::unit_square(3).unwrap());
    let v = build_function_space(mesh.clone(), 2, 2).unwrap();
    let q = build_function_space(mesh, 1, 1).unwrap();
    let b = assemble_divergence(&v, &q).unwrap();
    let c = assemble_mean_functional(&q);
    // u = (x², −2xy) has ∇·u = 0 and is exact in P2.
    let u = Field::interpolate(v.clone(), |p, c| if c == 0 { p[0] * p[0] } else { -2.0 * p[0] * p[1] });
    assert!(b.matvec(&u.coeffs).iter().all(|r| r.abs() < 1e-14));
    // u = (x, 0): (∇·u, q_i) = ∫ q_i.
    let u = Field::interpolate(v.clone(), |p, c| if c == 0 { p[0] } else { 0.0 });
    let r = b.matvec(&u.coeffs);
    for (a, e) in r.iter().zip(&c) {
        assert!((a - e).abs() < 1e-14);
    }
    assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn convection_residual_matches_trilinear_matrix() {
    let s = space(3, 2, 2);
    let pattern = coupling_pattern(&s, &s).unwrap();
    for seed in 0..3 {
        let u = random_field(&s, seed);
        let t = assemble_nonlinear(&u, &pattern, NonlinearRequest { convection_residual: true, ..Default::default() })
            .unwrap();
        let r = t.convection_residual.unwrap();
        let n = assemble_trilinear_matrix(&u).unwrap();
        let nu = n.matvec(&u.coeffs);
        for (a, b) in r.iter().zip(&nu) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(n.values.iter().zip(n.transpose().values.iter()).all(|(a, b)| (a + b).abs() < 1e-13));
        assert!(dot(&r, &u.coeffs).abs() < 1e-12);
    }
}

#[test]
fn cubic_residual_matches_independent_quadrature() {
    let s = space(3, 2, 2);
    let pattern = coupling_pattern(&s, &s).unwrap();
    let u = random_field(&s, 7);
    let t = assemble_nonlinear(&u, &pattern, NonlinearRequest { cubic_residual: true, ..Default::default() }).unwrap();
    let r = t.cubic_residual.unwrap();
    let quartic = integrate(&u, |v| (v[0] * v[0] + v[1] * v[1]).powi(2));
    assert!((dot(&r, &u.coeffs) - quartic).abs() < 1e-12 * quartic.max(1.0));
}

#[test]
fn zero_data_gives_zero_residual() {
    let disc = Discretization::unit_square(3).unwrap();
    let z = vec![0.0; disc.size()];
    let load = vec![0.0; disc.velocity.dof_count()];
    let problem = SchemeProblem {
        disc: &disc,
        params: ModelParams { mu: 1.0, gamma: 1.0, nu: 1.0, rho: -1.0, lambda: 1.0 },
        weights: StepWeights::one_leg([-0.35, -0.3, 0.65], [0.3, 0.2, 0.5], 0.1),
        prev: &z,
        curr: &z,
        load: &load,
        boundary: None,
    };
    let sys = problem.assemble(&z, false).unwrap();
    assert!(sys.residual.iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cubic_term_is_monotone(a in 0u64..1000, b in 0u64..1000) {
        let s = space(2, 2, 2);
        let pattern = coupling_pattern(&s, &s).unwrap();
        let req = NonlinearRequest { cubic_residual: true, ..Default::default() };
        let u = random_field(&s, a);
        let v = random_field(&s, b + 1000);
        let ru = assemble_nonlinear(&u, &pattern, req).unwrap().cubic_residual.unwrap();
        let rv = assemble_nonlinear(&v, &pattern, req).unwrap().cubic_residual.unwrap();
        let d: Vec<f64> = u.coeffs.iter().zip(&v.coeffs).map(|(x, y)| x - y).collect();
        let g: Vec<f64> = ru.iter().zip(&rv).map(|(x, y)| x - y).collect();
        prop_assert!(dot(&g, &d) >= -1e-13);
    }

    #[test]
    fn convection_is_energy_neutral(seed in 0u64..10_000) {
        let s = space(2, 2, 2);
        let n = assemble_trilinear_matrix(&random_field(&s, seed)).unwrap();
        let v = random_field(&s, seed + 1);
        prop_assert!(n.bilinear(&v.coeffs, &v.coeffs).abs() < 1e-12);
    }
}
