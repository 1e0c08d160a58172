//! Clarification protocols between the CUAS, the authority and operators.

pub mod authority;
pub mod cases;
pub mod harness;
pub mod message;
pub mod risk;
pub mod session;

pub use authority::{Authority, AuthorityConfig, DispatchError, Outgoing, RepairPolicy};
pub use harness::{run_protocol, HarnessError, HarnessOutcome, HarnessSetup, Responder, WorldFacts};
pub use message::{AgentId, ConfirmKind, Envelope, MsgType, OperatorResponse, Role, WireError};
pub use risk::{RiskInputs, RiskPolicy, RiskRule};
pub use session::{AuditRecord, ConfirmationMode, Phase, ProtocolSession, SessionStatus, SessionSummary};
