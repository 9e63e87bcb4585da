//! Config-driven experiment runner behind the `paneitz-lab` binary.

mod config;
mod output;
mod run;

pub use config::{
    load_config, parse_config, parse_config_in, Action, Coefficient, ExperimentConfig, PsiSpec, SolverSettings,
    SweepSpec,
};
pub use output::{sha256_hex, Artifact, RunManifest, RunSummary, Timing, SCHEMA_VERSION, TRACE_COLUMNS};
pub use run::{build_operator, build_problem, error_json, run};
