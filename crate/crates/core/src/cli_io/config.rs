//! Run configuration: a flat `key = value` file, environment overrides and
//! command-line overrides, applied in that order on top of per-experiment
//! defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::ModelParams;
use crate::mms_harness::self_organization_params;
use crate::timestepper::ControllerBounds;

/// Prefix of environment variables that override config keys, e.g.
/// `DLNFEM_THETA=0.5`.
pub const ENV_PREFIX: &str = "DLNFEM_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ProjectConvergence,
    TimeConvergence,
    SpaceConvergence,
    SelfOrganization,
    AdaptiveCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::ProjectConvergence,
        Experiment::TimeConvergence,
        Experiment::SpaceConvergence,
        Experiment::SelfOrganization,
        Experiment::AdaptiveCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ProjectConvergence => "project-convergence",
            Experiment::TimeConvergence => "time-convergence",
            Experiment::SpaceConvergence => "space-convergence",
            Experiment::SelfOrganization => "self-organization",
            Experiment::AdaptiveCompare => "adaptive-compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| ConfigError::UnknownExperiment(s.trim().to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown experiment '{0}' (expected one of project-convergence, time-convergence, space-convergence, self-organization, adaptive-compare)")]
    UnknownExperiment(String),
    #[error("no experiment given")]
    MissingExperiment,
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("{source_name}:{line}: malformed line '{text}' (expected key = value)")]
    MalformedLine { source_name: String, line: usize, text: String },
    #[error("invalid value '{value}' for {key}: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{key} = {value} is out of range: {reason}")]
    OutOfRange { key: String, value: String, reason: String },
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Fully validated settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub theta: f64,
    /// Cells per side of each mesh.
    pub nx: Vec<usize>,
    /// Time steps (one per row for time convergence, otherwise the first
    /// entry is used).
    pub dt: Vec<f64>,
    pub t_end: f64,
    pub params: ModelParams,
    /// Reynolds numbers of the adaptive comparison.
    pub re: Vec<f64>,
    pub controller: ControllerBounds,
    /// Step count of the constant-step reference in the adaptive comparison.
    pub constant_steps: usize,
    pub seed: u64,
    /// Snapshot times of the self-organization run.
    pub snapshots: Vec<f64>,
    pub out: PathBuf,
    pub paper_scale: bool,
}

impl RunConfig {
    /// Defaults of `experiment` at the default or the large scale.
    pub fn defaults(experiment: Experiment, paper_scale: bool) -> Self {
        let unit = ModelParams { mu: 1.0, gamma: 1.0, nu: 1.0, rho: 1.0, lambda: 1.0 };
        let mut c = RunConfig {
            experiment,
            theta: 0.3,
            nx: vec![32],
            dt: vec![0.25, 0.125, 0.0625, 0.03125],
            t_end: 1.0,
            params: unit,
            re: vec![300.0],
            controller: ControllerBounds::default(),
            constant_steps: 10_000,
            seed: 0,
            snapshots: vec![0.0, 0.03, 0.1, 1.0],
            out: PathBuf::from("out").join(experiment.name()),
            paper_scale,
        };
        match experiment {
            Experiment::ProjectConvergence => {
                c.nx = if paper_scale { vec![8, 16, 32, 64, 128, 256, 512] } else { vec![8, 16, 32, 64, 128] };
                c.dt = vec![];
            }
            Experiment::TimeConvergence => {
                c.nx = vec![if paper_scale { 64 } else { 32 }];
            }
            Experiment::SpaceConvergence => {
                c.nx = if paper_scale { vec![4, 8, 16, 32, 64] } else { vec![4, 8, 16, 32] };
                c.dt = vec![if paper_scale { 1e-5 } else { 1e-4 }];
            }
            Experiment::SelfOrganization => {
                c.params = self_organization_params();
                c.dt = vec![0.01];
            }
            Experiment::AdaptiveCompare => {
                c.params = self_organization_params();
                c.nx = vec![if paper_scale { 64 } else { 32 }];
                c.dt = vec![];
                if paper_scale {
                    c.re = vec![300.0, 500.0, 3000.0, 5000.0, 10_000.0, 50_000.0];
                }
            }
        }
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String, reason: &str| ConfigError::OutOfRange {
            key: key.into(),
            value,
            reason: reason.into(),
        };
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(bad("theta", self.theta.to_string(), "theta must lie in [0, 1]"));
        }
        if self.nx.is_empty() || self.nx.iter().any(|&n| n == 0) {
            return Err(bad("nx", format!("{:?}", self.nx), "mesh sizes must be positive"));
        }
        let needs_dt = matches!(
            self.experiment,
            Experiment::TimeConvergence | Experiment::SpaceConvergence | Experiment::SelfOrganization
        );
        if needs_dt && self.dt.is_empty() {
            return Err(bad("dt", "[]".into(), "at least one time step is required"));
        }
        if self.dt.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(bad("dt", format!("{:?}", self.dt), "time steps must be positive"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(bad("tmax", self.t_end.to_string(), "final time must be positive"));
        }
        let p = &self.params;
        for (k, v) in [("mu", p.mu), ("gamma", p.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(k, v.to_string(), "must be positive"));
            }
        }
        for (k, v) in [("nu", p.nu), ("rho", p.rho)] {
            if !v.is_finite() {
                return Err(bad(k, v.to_string(), "must be finite"));
            }
        }
        if !(p.lambda >= 0.0 && p.lambda.is_finite()) {
            return Err(bad("lambda", p.lambda.to_string(), "must be non-negative"));
        }
        if self.re.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(bad("re", format!("{:?}", self.re), "Reynolds numbers must be positive"));
        }
        let b = &self.controller;
        if !(b.k_min > 0.0) {
            return Err(bad("kmin", b.k_min.to_string(), "must be positive"));
        }
        if !(b.k_min <= b.k_max) {
            return Err(bad("kmax", b.k_max.to_string(), "k_min must not exceed k_max"));
        }
        if !(b.delta > 0.0) {
            return Err(bad("delta", b.delta.to_string(), "must be positive"));
        }
        if self.snapshots.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(bad("snapshots", format!("{:?}", self.snapshots), "times must be non-negative"));
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let invalid = |reason: String| ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            reason,
        };
        let num = |v: &str| -> Result<f64, ConfigError> { parse_number(v).map_err(|e| invalid(e)) };
        let nums = |v: &str| -> Result<Vec<f64>, ConfigError> { split_list(v).map(|s| num(s)).collect() };
        let ints = |v: &str| -> Result<Vec<usize>, ConfigError> {
            split_list(v).map(|s| s.parse::<usize>().map_err(|e| invalid(e.to_string()))).collect()
        };
        match key {
            "experiment" => self.experiment = value.parse()?,
            "theta" => self.theta = num(value)?,
            "nx" | "nx_list" => self.nx = ints(value)?,
            "dt" | "dt_list" => self.dt = nums(value)?,
            "tmax" | "t_end" => self.t_end = num(value)?,
            "mu" => self.params.mu = num(value)?,
            "gamma" => self.params.gamma = num(value)?,
            "nu" => self.params.nu = num(value)?,
            "rho" => self.params.rho = num(value)?,
            "lambda" => self.params.lambda = num(value)?,
            "re" | "re_list" => self.re = nums(value)?,
            "delta" => self.controller.delta = num(value)?,
            "kmin" => self.controller.k_min = num(value)?,
            "kmax" => self.controller.k_max = num(value)?,
            "constant_steps" => {
                self.constant_steps = value.trim().parse().map_err(|e: std::num::ParseIntError| invalid(e.to_string()))?
            }
            "seed" => self.seed = value.trim().parse().map_err(|e: std::num::ParseIntError| invalid(e.to_string()))?,
            "snapshots" => self.snapshots = nums(value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "paper_scale" => self.paper_scale = parse_bool(value).map_err(invalid)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }
}

/// Accepts plain numbers and fractions such as `1/32`.
fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        if b == 0.0 {
            return Err("division by zero".into());
        }
        return Ok(a / b);
    }
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(format!("'{other}' is not a boolean")),
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").to_ascii_lowercase().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str, source_name: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::MalformedLine {
            source_name: source_name.into(),
            line: i + 1,
            text: raw.trim().into(),
        })?;
        let k = normalize_key(k);
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(ConfigError::MalformedLine { source_name: source_name.into(), line: i + 1, text: raw.trim().into() });
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Where the settings of a run come from.
#[derive(Clone, Debug, Default)]
pub struct ConfigSources {
    pub file: Option<PathBuf>,
    /// `(key, value)` pairs from the environment, already stripped of
    /// [`ENV_PREFIX`].
    pub env: Vec<(String, String)>,
    /// Command-line `(key, value)` pairs; these win over everything else.
    pub cli: Vec<(String, String)>,
}

impl ConfigSources {
    /// Collects `DLNFEM_*` variables from `vars`.
    pub fn env_from<I: IntoIterator<Item = (String, String)>>(vars: I) -> Vec<(String, String)> {
        vars.into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (normalize_key(k), v)))
            .collect()
    }
}

fn read_file(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    parse_config_text(&text, &path.display().to_string())
}

/// Merges defaults, config file, environment and command line (in
/// increasing precedence) into a validated [`RunConfig`].
pub fn parse_config(sources: &ConfigSources) -> Result<RunConfig, ConfigError> {
    let file = match &sources.file {
        Some(p) => read_file(p)?,
        None => Vec::new(),
    };
    let layers: Vec<(String, String)> = file
        .into_iter()
        .chain(sources.env.iter().cloned())
        .chain(sources.cli.iter().map(|(k, v)| (normalize_key(k), v.clone())))
        .collect();
    // Defaults depend on the experiment and the scale, so those two keys
    // are resolved first.
    let mut experiment = None;
    let mut paper_scale = false;
    for (k, v) in &layers {
        match k.as_str() {
            "experiment" => experiment = Some(v.parse::<Experiment>()?),
            "paper_scale" => {
                paper_scale = parse_bool(v).map_err(|reason| ConfigError::InvalidValue {
                    key: k.clone(),
                    value: v.clone(),
                    reason,
                })?
            }
            _ => {}
        }
    }
    let experiment = experiment.ok_or(ConfigError::MissingExperiment)?;
    let mut cfg = RunConfig::defaults(experiment, paper_scale);
    for (k, v) in &layers {
        cfg.apply(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Flat `key = value` rendering that [`parse_config`] reads back.
pub fn render_config(cfg: &RunConfig) -> String {
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut m = BTreeMap::new();
    m.insert("experiment", cfg.experiment.to_string());
    m.insert("theta", cfg.theta.to_string());
    m.insert("nx", cfg.nx.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    m.insert("dt", list(&cfg.dt));
    m.insert("tmax", cfg.t_end.to_string());
    m.insert("mu", cfg.params.mu.to_string());
    m.insert("gamma", cfg.params.gamma.to_string());
    m.insert("nu", cfg.params.nu.to_string());
    m.insert("rho", cfg.params.rho.to_string());
    m.insert("lambda", cfg.params.lambda.to_string());
    m.insert("re", list(&cfg.re));
    m.insert("delta", cfg.controller.delta.to_string());
    m.insert("kmin", cfg.controller.k_min.to_string());
    m.insert("kmax", cfg.controller.k_max.to_string());
    m.insert("constant_steps", cfg.constant_steps.to_string());
    m.insert("seed", cfg.seed.to_string());
    m.insert("snapshots", list(&cfg.snapshots));
    m.insert("out", cfg.out.display().to_string());
    m.insert("paper_scale", cfg.paper_scale.to_string());
    m.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(pairs: &[(&str, &str)]) -> ConfigSources {
        ConfigSources {
            cli: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn time_convergence_defaults() {
        let c = parse_config(&cli(&[("experiment", "time-convergence")])).unwrap();
        assert_eq!(c.theta, 0.3);
        assert_eq!(c.nx, vec![32]);
        assert_eq!(c.dt, vec![0.25, 0.125, 0.0625, 0.03125]);
        assert_eq!(c.t_end, 1.0);
    }

    #[test]
    fn adaptive_defaults() {
        let c = parse_config(&cli(&[("--experiment", "adaptive-compare"), ("--re", "300")])).unwrap();
        assert_eq!(c.re, vec![300.0]);
        assert_eq!(c.controller, ControllerBounds { k_min: 1e-5, k_max: 0.01, delta: 2.0 });
        assert_eq!(c.params.rho, -0.81);
        assert_eq!(c.constant_steps, 10_000);
    }

    #[test]
    fn errors_are_distinct() {
        let e = parse_config(&cli(&[("experiment", "time-convergence"), ("theta", "1.2")])).unwrap_err();
        assert!(matches!(e, ConfigError::OutOfRange { ref key, .. } if key == "theta"), "{e}");
        let e = parse_config(&cli(&[("experiment", "nope")])).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownExperiment(_)), "{e}");
        let e = parse_config_text("theta 0.3", "f").unwrap_err();
        assert!(matches!(e, ConfigError::MalformedLine { line: 1, .. }), "{e}");
        let e = parse_config(&cli(&[("experiment", "time-convergence"), ("colour", "red")])).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(_)), "{e}");
        let e = parse_config(&cli(&[("experiment", "time-convergence"), ("theta", "abc")])).unwrap_err();
        assert!(matches!(e, ConfigError::InvalidValue { .. }), "{e}");
        let e = parse_config(&cli(&[("experiment", "adaptive-compare"), ("kmin", "1"), ("kmax", "0.1")])).unwrap_err();
        assert!(matches!(e, ConfigError::OutOfRange { .. }), "{e}");
        assert!(matches!(parse_config(&ConfigSources::default()).unwrap_err(), ConfigError::MissingExperiment));
    }

    #[test]
    fn precedence_file_env_cli() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# sweep\nexperiment = time-convergence\ntheta = 0.1\ndt = 1/8, 1/16\nseed = 4\n").unwrap();
        let sources = ConfigSources {
            file: Some(path),
            env: ConfigSources::env_from([("DLNFEM_THETA".to_string(), "0.2".to_string()), ("HOME".into(), "/".into())]),
            cli: vec![("seed".into(), "9".into())],
        };
        let c = parse_config(&sources).unwrap();
        assert_eq!(c.theta, 0.2);
        assert_eq!(c.dt, vec![0.125, 0.0625]);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn render_round_trips() {
        for e in Experiment::ALL {
            let c = RunConfig::defaults(e, false);
            let pairs = parse_config_text(&render_config(&c), "rendered").unwrap();
            let back = parse_config(&ConfigSources { cli: pairs, ..Default::default() }).unwrap();
            assert_eq!(back, c);
        }
    }
}
