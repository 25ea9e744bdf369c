//! Run configuration and every file the program writes.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_text, render_config, ConfigError, ConfigSources, Experiment, RunConfig, ENV_PREFIX};
pub use output::{
    error_table_header, format_sci, read_error_table, write_adaptive_table, write_diagnostics_csv, write_error_table,
    write_manifest, write_vtk_fields,
};
pub use run::{run_experiment, RunSummary};
