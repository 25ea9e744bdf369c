use dlnfem_core::assembly::SchemeProblem;

/// Largest entry-wise difference between the assembled Jacobian and central
/// differences of the residual, relative to the largest Jacobian entry.
pub fn fd_defect(problem: &SchemeProblem<'_>, x: &[f64]) -> f64 {
    let sys = problem.assemble(x, true).unwrap();
    let jac = sys.jacobian.unwrap();
    let dense = jac.to_dense();
    let scale = jac.max_abs();
    let mut fixed = vec![false; x.len()];
    for &d in sys.bc_dofs.iter() {
        fixed[d] = true;
    }
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let h = 1e-6 * (1.0 + x[j].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let rp = problem.assemble(&xp, false).unwrap().residual;
        let rm = problem.assemble(&xm, false).unwrap().residual;
        for i in 0..x.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            // Dirichlet columns are eliminated: Newton only moves along the
            // affine set where the boundary rows are already satisfied.
            let expect = if fixed[j] { if i == j { 1.0 } else { 0.0 } } else { fd };
            worst = worst.max((expect - dense[i][j]).abs());
        }
    }
    worst / scale
}
