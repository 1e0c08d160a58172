//! Scenario runner for the clarification-time experiment, summary
//! statistics, transcript replay and the delay-budget calculator.

pub mod budget;
pub mod liveness;
pub mod replay;
pub mod scenario;
pub mod stats;
pub mod sweep;

use thiserror::Error;

pub use budget::{delay_budget, BudgetError};
pub use scenario::Scenario;
pub use stats::StatsSummary;
pub use sweep::{run_sweep, SweepOptions, SweepReport};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),
    #[error("replay: {0}")]
    Replay(String),
    #[error(transparent)]
    Net(#[from] cuas_netsim::NetError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
