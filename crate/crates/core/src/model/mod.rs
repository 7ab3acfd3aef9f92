//! The department model: configuration, one replication, and its metrics.

mod config;
pub mod metrics;
mod run;

pub use config::{
    load_config, parse_config, DepartmentConfig, Durations, Horizon, HorizonError, Patience,
    Probabilities, ProbabilityInterpretation, StaffingPlan, DAY_CYCLE_MINUTES, SHIPPED_ATV,
    SHIPPED_WW,
};
pub use metrics::RunMetrics;
pub use run::{run_replication, run_replication_with, RunOptions, RunOutput};
