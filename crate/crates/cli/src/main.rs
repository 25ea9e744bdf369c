use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dlnfem_core::cli_io::{parse_config, render_config, run_experiment, ConfigSources};
use dlnfem_core::Error;

/// Mixed finite element / DLN experiments for the fourth-order active
/// fluid equations. Every option can also be set in a `key = value` config
/// file or through `DLNFEM_<KEY>` environment variables; the command line
/// wins over both.
#[derive(Parser, Debug)]
#[command(name = "dlnfem", version)]
struct Cli {
    /// project-convergence, time-convergence, space-convergence,
    /// self-organization or adaptive-compare.
    #[arg(long)]
    experiment: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    theta: Option<String>,
    /// Cells per side of a single mesh.
    #[arg(long, conflicts_with = "nx_list")]
    nx: Option<String>,
    /// Comma-separated cells per side.
    #[arg(long)]
    nx_list: Option<String>,
    /// Single time step; fractions such as 1/32 are accepted.
    #[arg(long, conflicts_with = "dt_list")]
    dt: Option<String>,
    #[arg(long)]
    dt_list: Option<String>,
    /// Final time.
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Reynolds number(s) of the adaptive comparison, comma-separated.
    #[arg(long)]
    re: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Controller tolerance.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    kmin: Option<String>,
    #[arg(long)]
    kmax: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Use the large grid and step sets.
    #[arg(long)]
    paper_scale: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

impl Cli {
    fn overrides(&self) -> Vec<(String, String)> {
        let fields = [
            ("experiment", &self.experiment),
            ("theta", &self.theta),
            ("nx", &self.nx),
            ("nx", &self.nx_list),
            ("dt", &self.dt),
            ("dt", &self.dt_list),
            ("tmax", &self.tmax),
            ("mu", &self.mu),
            ("gamma", &self.gamma),
            ("nu", &self.nu),
            ("rho", &self.rho),
            ("lambda", &self.lambda),
            ("re", &self.re),
            ("seed", &self.seed),
            ("delta", &self.delta),
            ("kmin", &self.kmin),
            ("kmax", &self.kmax),
            ("out", &self.out),
        ];
        let mut v: Vec<(String, String)> =
            fields.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect();
        if self.paper_scale {
            v.push(("paper_scale".into(), "true".into()));
        }
        v
    }
}

/// Exit codes by failure category.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        Error::Singular { .. } | Error::LinearSolver(_) | Error::NewtonNotConverged { .. } | Error::StepFailed { .. } => 4,
        _ => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let sources = ConfigSources {
        file: cli.config.clone(),
        env: ConfigSources::env_from(std::env::vars()),
        cli: cli.overrides(),
    };
    let cfg = match parse_config(&sources) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        print!("{}", render_config(&cfg));
        return ExitCode::SUCCESS;
    }
    match run_experiment(&cfg) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for f in &summary.files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
