//! Run configuration, orchestration and file output.

mod config;
mod expr;
mod output;
mod run;

pub use config::{
    load_config, parse_config, AlgorithmSpec, CouplingSpec, DomainSpec, InitialSpec, LoadSpec, MaterialSpec, RunConfig,
    StudySpec,
};
pub use expr::expression_initial;
pub use output::{diagnostics_csv, write_snapshot, DIAGNOSTICS_HEADER};
pub use run::{build_problem, execute_run, execute_study, study_config, RunSummary};
