//! Error types shared across the engine and analysis modules.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("reward octet 0x{0:02X} is not one of 0xFF, 0x00, 0x01")]
    RewardOutOfRange(u8),
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("probability row for {context} sums to {sum}, expected 1")]
    RowNotNormalized { context: String, sum: f64 },
    #[error("state {0} is unreachable from the initial state")]
    UnreachableState(usize),
    #[error("soft limit {soft} exceeds hard limit {hard}")]
    LimitOrder { soft: u64, hard: u64 },
    #[error("env_step called after hard-limit termination (elapsed {0})")]
    StepAfterTermination(u64),
    #[error("unknown task id {0:?}")]
    UnknownTask(String),
    #[error("invalid curriculum config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("agent failure: {0}")]
    AgentFailure(String),
    #[error("budget exceeded after {steps} steps")]
    BudgetExceeded { steps: u64 },
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Error)]
pub enum MechanicsError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("chain is not ergodic: {count} recurrent classes {classes:?}")]
    NonErgodic {
        count: usize,
        classes: Vec<Vec<usize>>,
    },
    #[error("machine is not unifilar at {witnesses:?} (state, symbol) pairs")]
    NotUnifilar { witnesses: Vec<(usize, String)> },
    #[error("malformed machine: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
    #[error("insufficient data: history {history:?} has only {count} counts")]
    InsufficientData { history: String, count: u64 },
    #[error("reachable joint state count exceeded cap {cap}")]
    StateExplosion { cap: usize },
    #[error(transparent)]
    Task(#[from] TaskError),
}
