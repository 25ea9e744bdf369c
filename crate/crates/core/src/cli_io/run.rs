//! Runs one configured experiment and writes its artifacts.

use std::path::PathBuf;

use crate::assembly::{Discretization, FIELD_P, FIELD_PHI, FIELD_U, FIELD_W};
use crate::error::Result;
use crate::mms_harness::{
    run_adaptive, run_projection_convergence, run_scheme_convergence_space, run_scheme_convergence_time,
    run_self_organization, AdaptiveRow, ErrorReport, ManufacturedSolution, RandomRunConfig, SchemeRunOptions,
    ERROR_COLUMNS,
};
use crate::solver::NewtonConfig;

use super::config::{Experiment, RunConfig};
use super::output::{
    format_sci, write_adaptive_table, write_diagnostics_csv, write_error_table, write_manifest, write_vtk_fields,
};

/// Files written by a run and a printable summary.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn report_lines(report: &ErrorReport) -> Vec<String> {
    let mut lines = vec![format!("{:>10} {}", report.size_label, ERROR_COLUMNS.map(|c| format!("{c:>18}")).join(""))];
    for (i, row) in report.rows.iter().enumerate() {
        let rates = report.rates(i);
        let cells: String = row
            .values()
            .iter()
            .zip(rates)
            .map(|(v, r)| format!("{:>18}", format!("{v:.3e} ({})", r.map_or("-".into(), |r| format!("{r:.2}")))))
            .collect();
        lines.push(format!("{:>10.3e} {cells}", row.size));
    }
    lines
}

fn scheme_options(cfg: &RunConfig) -> SchemeRunOptions {
    SchemeRunOptions { theta: cfg.theta, params: cfg.params, t_end: cfg.t_end, ..SchemeRunOptions::default() }
}

fn random_config(cfg: &RunConfig, n: usize) -> RandomRunConfig {
    RandomRunConfig {
        n,
        theta: cfg.theta,
        params: cfg.params,
        t_end: cfg.t_end,
        seed: cfg.seed,
        newton: NewtonConfig::default(),
        max_steps: None,
    }
}

/// Runs `cfg.experiment`. The manifest is written before any computation,
/// so a crashed run still leaves it behind.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut s = RunSummary::default();
    let manifest = cfg.out.join("manifest.json");
    write_manifest(cfg, &manifest)?;
    s.files.push(manifest);

    match cfg.experiment {
        Experiment::ProjectConvergence => {
            let ms = ManufacturedSolution::projection_test();
            let report = run_projection_convergence(&cfg.nx, cfg.params.mu, cfg.params.gamma, &ms)?;
            let path = cfg.out.join("errors.csv");
            write_error_table(&report, &path)?;
            s.files.push(path);
            s.lines = report_lines(&report);
        }
        Experiment::TimeConvergence => {
            let ms = ManufacturedSolution::scheme_test();
            let (report, runs) = run_scheme_convergence_time(cfg.nx[0], &cfg.dt, &ms, &scheme_options(cfg))?;
            let path = cfg.out.join("errors.csv");
            write_error_table(&report, &path)?;
            s.files.push(path);
            for (i, run) in runs.iter().enumerate() {
                let path = cfg.out.join(format!("diagnostics_dt{i}.csv"));
                write_diagnostics_csv(&run.diagnostics, &path)?;
                s.files.push(path);
            }
            s.lines = report_lines(&report);
        }
        Experiment::SpaceConvergence => {
            let ms = ManufacturedSolution::scheme_test();
            let (report, runs) = run_scheme_convergence_space(&cfg.nx, cfg.dt[0], &ms, &scheme_options(cfg))?;
            let path = cfg.out.join("errors.csv");
            write_error_table(&report, &path)?;
            s.files.push(path);
            for (run, n) in runs.iter().zip(&cfg.nx) {
                let path = cfg.out.join(format!("diagnostics_n{n}.csv"));
                write_diagnostics_csv(&run.diagnostics, &path)?;
                s.files.push(path);
            }
            s.lines = report_lines(&report);
        }
        Experiment::SelfOrganization => {
            let n = cfg.nx[0];
            let run = run_self_organization(&random_config(cfg, n), cfg.dt[0], &cfg.snapshots)?;
            let path = cfg.out.join("diagnostics.csv");
            write_diagnostics_csv(&run.diagnostics, &path)?;
            s.files.push(path);
            let disc = Discretization::unit_square(n)?;
            for (i, (t, x)) in run.snapshots.iter().enumerate() {
                let u = disc.field_function(x, FIELD_U);
                let w = disc.field_function(x, FIELD_W);
                let phi = disc.field_function(x, FIELD_PHI);
                let p = disc.field_function(x, FIELD_P);
                let path = cfg.out.join(format!("snapshot_{i:03}.vtk"));
                write_vtk_fields(&disc.mesh, &[("u", &u), ("w", &w), ("p", &p), ("phi", &phi)], *t, &path)?;
                s.files.push(path);
                s.lines.push(format!("snapshot t = {t}: {}", s.files.last().unwrap().display()));
            }
            for d in run.diagnostics.iter().filter(|d| d.step % 10 == 0 || d.step == run.diagnostics.len()) {
                s.lines.push(format!("step {:>5} t = {:.4} kinetic = {:.6e}", d.step, d.time, d.kinetic));
            }
        }
        Experiment::AdaptiveCompare => {
            // A run that needs as many steps as the constant scheme can no
            // longer show a reduction, so the budget stops it there.
            let mut base = random_config(cfg, cfg.nx[0]);
            base.max_steps = Some(cfg.constant_steps);
            let mut rows: Vec<AdaptiveRow> = Vec::new();
            for &re in &cfg.re {
                let (mut row, run) = run_adaptive(re, &base, &cfg.controller)?;
                row.constant_steps = cfg.constant_steps;
                let path = cfg.out.join(format!("diagnostics_re{re}.csv"));
                write_diagnostics_csv(&run.diagnostics, &path)?;
                s.files.push(path);
                s.lines.push(format!(
                    "Re {:>8}: adaptive {:>6} steps (k in [{}, {}], reached t = {:.4}) vs constant {}",
                    re,
                    row.adaptive_steps,
                    format_sci(row.min_step),
                    format_sci(row.max_step),
                    row.t_reached,
                    row.constant_steps
                ));
                rows.push(row);
            }
            let path = cfg.out.join("adaptive.csv");
            write_adaptive_table(&rows, &path)?;
            s.files.push(path);
        }
    }
    Ok(s)
}
