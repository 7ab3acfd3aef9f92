use std::path::PathBuf;

use crate::agents::{CustomerState, StaffRole, Trigger};
use crate::kernel::{AgentId, DispatchError, KernelError, Minutes};

/// A violation of the model's own logic. These abort a replication.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelFault {
    #[error("illegal transition: customer {customer} in state {state:?} received {trigger:?}")]
    IllegalTransition {
        customer: AgentId,
        state: CustomerState,
        trigger: Trigger,
    },
    #[error("staff {staff} ({role:?}) is already busy, cannot serve customer {customer}")]
    StaffBusy {
        staff: usize,
        role: StaffRole,
        customer: AgentId,
    },
    #[error("staff {0} released while idle")]
    StaffIdle(usize),
    #[error("service duration must be positive and finite, got {0}")]
    BadDuration(Minutes),
    #[error("unknown customer {0}")]
    UnknownCustomer(AgentId),
    #[error("customer {0} is already queued")]
    AlreadyQueued(AgentId),
    #[error("invariant violated at t={clock:.3}: {message}")]
    Invariant { clock: Minutes, message: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}{}: invalid `{field}`: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Invalid {
        path: PathBuf,
        field: String,
        line: Option<usize>,
        message: String,
    },
}

impl ConfigError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

/// A replication that aborted, with enough context to replay it.
#[derive(Debug, thiserror::Error)]
pub enum RunFailure {
    #[error("invalid run setup: {0}")]
    Setup(String),
    #[error("model fault: {0}")]
    Fault(#[from] DispatchError<ModelFault>),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("replication failed in cell ({department}, level {level}, rep {replication}) with seed {seed}: {source}")]
    Replication {
        department: String,
        level: String,
        replication: usize,
        seed: u64,
        #[source]
        source: Box<RunFailure>,
    },
    #[error("invalid experiment design: {0}")]
    Design(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
