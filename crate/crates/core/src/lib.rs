//! Agent-based simulation of staffing and refund empowerment in retail
//! departments, with the replication harness and the statistics used to
//! analyse it.

pub mod agents;
pub mod analysis;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod model;
pub mod queueing;
pub mod stats;
pub mod stochastic;

pub use agents::{
    CustomerAgent, CustomerState, EventKind, SatisfactionEvent, SatisfactionWeights, ServiceKind,
    StaffRole,
};
pub use error::SweepError;
pub use error::{ConfigError, ModelFault, RunFailure};
pub use experiments::{
    run_cashier_sweep, run_empowerment_sweep, summarize, Experiment, ExperimentDesign, ResultRow,
    ResultTable,
};
pub use kernel::{derive_seed, AgentId, Kernel, Minutes};
pub use model::{
    load_config, parse_config, run_replication, run_replication_with, DepartmentConfig, Horizon,
    RunMetrics, RunOptions, RunOutput, StaffingPlan,
};
pub use queueing::EmpowermentPolicy;
pub use stochastic::{ArrivalProfile, DecisionProb, TriangularParams};
