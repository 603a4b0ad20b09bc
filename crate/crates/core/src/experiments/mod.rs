//! Config-driven experiments: rate studies, checks and table dumps.

pub mod checks;
pub mod config;
pub mod dump;
pub mod rate;

pub use checks::{audit, run_checks, CheckReport, CheckRow};
pub use config::{Evaluator, ExperimentConfig, HamiltonianSpec, DEFAULT_EPSILONS};
pub use dump::{dump_paths, effective_h_table};
pub use rate::{
    certificate_constant, fit_slope, run_rate_study, write_report, ConvergenceReport, ProbeValue, RateRow, SlopeFit,
    CROSS_ORACLE_CELLS,
};
