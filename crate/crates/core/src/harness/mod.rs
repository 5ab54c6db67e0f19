//! Test-problem generation, accuracy metrics, experiments and report I/O.

mod experiment;
mod generator;
mod io;
mod metrics;
mod validate;

pub use experiment::{
    format_table, run_all, run_experiment, sweep_cells, sweep_dims, thread_cap, ExperimentReport, Method, Metrics,
    Scale, PHASES, SWEEP_CONDS, SWEEP_METHODS,
};
pub use generator::{gen_gls, gen_lse, gen_problem, singular_values, Distribution, GeneratorSpec, Problem, ProblemKind};
pub use io::{
    read_matrix_market, read_reports_json, write_matrix_market, write_report, write_report_to, ReportFormat,
    CSV_HEADER, MM_HEADER,
};
pub use metrics::{metric_er1_gls, metric_er2_gls, metric_err1_lse, metric_err2_lse};
pub use validate::{
    bd_preconditioned_cond, factor_backward_errors, run_suite, Check, Suite, FACTOR_TOL_FACTOR, PRECOND_COND_LIMIT,
    SHAPE_CASES,
};
