//! Per-protocol session records kept by the authority.

use serde::{Deserialize, Serialize};

use super::message::{AgentId, Envelope};
use super::risk::RiskInputs;
use crate::domain::{Decision, DroneId, OperatorId, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum SessionStatus {
    Open,
    Decided,
    /// Handed over to another protocol's session.
    Escalated { to_session: String, to_protocol: u8 },
    /// The drone disappeared before a decision.
    Cancelled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    AwaitingOperator,
    /// A restoration claim is being checked by the CUAS. Holds the case
    /// that applies when it is confirmed.
    AwaitingConfirmation,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ConfirmationMode {
    /// The CUAS answers with CONFIRMED / NOT CONFIRMED messages.
    #[default]
    Explicit,
    /// Silence until the window closes confirms; a repeated opening
    /// message for the same drone invalidates.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSession {
    pub session_id: String,
    pub protocol: u8,
    pub drone_id: DroneId,
    pub cuas_id: AgentId,
    pub operator_id: Option<OperatorId>,
    pub opened_at: Timestamp,
    pub decided_at: Option<Timestamp>,
    pub case_label: Option<String>,
    pub outcome: Option<Decision>,
    pub status: SessionStatus,
    pub phase: Phase,
    pub escalated_from: Option<String>,
    pub risk_inputs: RiskInputs,
    pub transcript: Vec<Envelope>,
    pub(crate) timer_epoch: u64,
}

impl ProtocolSession {
    pub fn is_open(&self) -> bool {
        self.status == SessionStatus::Open
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            protocol: self.protocol,
            drone_id: self.drone_id.clone(),
            cuas_id: self.cuas_id,
            operator_id: self.operator_id,
            opened_at: self.opened_at,
            decided_at: self.decided_at,
            case_label: self.case_label.clone(),
            outcome: self.outcome,
            status: self.status.clone(),
            escalated_from: self.escalated_from.clone(),
            messages: self.transcript.len(),
        }
    }
}

/// One line of `sessions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub protocol: u8,
    pub drone_id: DroneId,
    pub cuas_id: AgentId,
    pub operator_id: Option<OperatorId>,
    pub opened_at: Timestamp,
    pub decided_at: Option<Timestamp>,
    pub case_label: Option<String>,
    pub outcome: Option<Decision>,
    #[serde(flatten)]
    pub status: SessionStatus,
    pub escalated_from: Option<String>,
    pub messages: usize,
}

/// One line of `audit.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub at: Timestamp,
    pub kind: String,
    pub session_id: String,
    pub drone_id: Option<DroneId>,
    pub protocol: Option<u8>,
    pub case_label: Option<String>,
    pub decision: Option<Decision>,
}
