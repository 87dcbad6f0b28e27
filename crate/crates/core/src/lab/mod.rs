//! Seeded path generators, the classical local-time reference, the
//! Q-statistic, and the Monte Carlo experiment runner.

mod classical;
mod experiment;
mod generator;

pub use crate::field::lp_distance;
pub use classical::{
    classical_local_time, classical_local_time_at, classical_local_time_binned, crossing_time_reference,
    q_statistic, ClassicalLocalTime,
};
pub use experiment::{
    mean_and_se, run_convergence_experiment, thread_pool, Distance, Estimator, ExperimentConfig,
    ExperimentReport, ReportRow,
};
pub use generator::{GeneratorKind, GeneratorSpec};
