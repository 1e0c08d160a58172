//! Wire vocabulary: agent ids, message labels and the envelope.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::domain::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("unknown agent id {0:?}")]
    AgentId(String),
    #[error("unknown message type {0:?}")]
    MsgType(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Authority,
    Cuas,
    Operator,
    Court,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Authority, Role::Cuas, Role::Operator, Role::Court];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Authority => "authority",
            Role::Cuas => "cuas",
            Role::Operator => "operator",
            Role::Court => "court",
        }
    }
}

impl FromStr for Role {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| WireError::AgentId(s.to_string()))
    }
}

/// Rendered as `role-index`, e.g. `operator-12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId {
    pub role: Role,
    pub index: u32,
}

impl AgentId {
    pub const AUTHORITY: AgentId = AgentId::new(Role::Authority, 0);

    pub const fn new(role: Role, index: u32) -> Self {
        AgentId { role, index }
    }

    pub const fn cuas(index: u32) -> Self {
        AgentId::new(Role::Cuas, index)
    }

    pub const fn operator(index: u32) -> Self {
        AgentId::new(Role::Operator, index)
    }

    pub const fn court(index: u32) -> Self {
        AgentId::new(Role::Court, index)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.role.as_str(), self.index)
    }
}

impl FromStr for AgentId {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WireError::AgentId(s.to_string());
        let (role, index) = s.rsplit_once('-').ok_or_else(bad)?;
        Ok(AgentId {
            role: role.parse().map_err(|_| bad())?,
            index: index.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for AgentId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// What a confirmation request asks the CUAS to verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfirmKind {
    IdRestoration,
    ValidIdEntry,
    DatabaseRestoration,
    ReturnToArea,
    MissionStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorResponse {
    NoResponse,
    NotFlying,
    AlreadyTransmitting,
    CannotRestore,
    RestoredId,
    AlreadyInAuthorizedArea,
    CannotReturn,
    ReturnedToArea,
    NotExceedingTime,
    CannotStop,
    StoppedMission,
}

impl OperatorResponse {
    pub const ALL: [OperatorResponse; 11] = [
        OperatorResponse::NoResponse,
        OperatorResponse::NotFlying,
        OperatorResponse::AlreadyTransmitting,
        OperatorResponse::CannotRestore,
        OperatorResponse::RestoredId,
        OperatorResponse::AlreadyInAuthorizedArea,
        OperatorResponse::CannotReturn,
        OperatorResponse::ReturnedToArea,
        OperatorResponse::NotExceedingTime,
        OperatorResponse::CannotStop,
        OperatorResponse::StoppedMission,
    ];

    /// Responses the protocol accepts, `NoResponse` included. Protocols
    /// without an operator leg accept only silence.
    pub fn legal_for(protocol: u8) -> &'static [OperatorResponse] {
        use OperatorResponse::*;
        match protocol {
            1 => &[NoResponse, NotFlying, AlreadyTransmitting, CannotRestore, RestoredId],
            7 => &[NoResponse, AlreadyInAuthorizedArea, CannotReturn, ReturnedToArea],
            8 => &[NoResponse, NotExceedingTime, CannotStop, StoppedMission],
            _ => &[NoResponse],
        }
    }

    pub fn msg_type(self) -> Option<MsgType> {
        use OperatorResponse as R;
        Some(match self {
            R::NoResponse => return None,
            R::NotFlying => MsgType::NotFlying,
            R::AlreadyTransmitting => MsgType::AlreadyTransmitting,
            R::CannotRestore => MsgType::CannotRestore,
            R::RestoredId => MsgType::RestoredId,
            R::AlreadyInAuthorizedArea => MsgType::AlreadyInAuthorizedArea,
            R::CannotReturn => MsgType::CannotReturn,
            R::ReturnedToArea => MsgType::ReturnedToArea,
            R::NotExceedingTime => MsgType::NotExceedingTime,
            R::CannotStop => MsgType::CannotStop,
            R::StoppedMission => MsgType::StoppedMission,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MsgType {
    // CUAS to authority: protocol openings.
    NoIdButPotentialOperator,
    UnknownId,
    IdDbMiss,
    ExpiredIdUnauthorizedMission,
    ExpiredIdButAuthorizedMission,
    AuthDbMiss,
    AreaViolation,
    TimeViolation,
    // Authority to operator.
    CheckRestoreIdTransmission,
    ReturnToAuthorizedArea,
    StopMissionIfTimeExceeded,
    StopMission,
    CompleteMission,
    ClaimUnderVerification,
    // Operator to authority.
    NotFlying,
    AlreadyTransmitting,
    CannotRestore,
    RestoredId,
    AlreadyInAuthorizedArea,
    CannotReturn,
    ReturnedToArea,
    NotExceedingTime,
    CannotStop,
    StoppedMission,
    // Authority to CUAS.
    InterdictImmediately,
    ImmediateInterdictionAuthorization,
    InterdictAfterTimeout,
    TimedInterdictionAuthorization,
    TolerateIdFailure,
    TolerateExpiredId,
    TolerateAuthFailure,
    TolerateMission,
    AuthDbMissResolved,
    CaseClosed,
    Escalated,
    ConfirmRequest(ConfirmKind),
    // CUAS to authority.
    Confirmed(ConfirmKind),
    NotConfirmed(ConfirmKind),
    InterdictionReport,
    TrackLost,
    // Authority to court.
    InterdictionRecord,
    LawsuitCase,
    // Plumbing.
    Hello,
    Timer,
    Error,
}

const LABELS: &[(MsgType, &str)] = {
    use ConfirmKind as K;
    use MsgType::*;
    &[
        (NoIdButPotentialOperator, "NO ID BUT POTENTIAL OPERATOR"),
        (UnknownId, "UNKNOWN ID"),
        (IdDbMiss, "ID-DB MISS"),
        (ExpiredIdUnauthorizedMission, "EXPIRED ID & UNAUTHORIZED MISSION"),
        (ExpiredIdButAuthorizedMission, "EXPIRED ID BUT AUTHORIZED MISSION"),
        (AuthDbMiss, "AUTH-DB MISS"),
        (AreaViolation, "AREA VIOLATION"),
        (TimeViolation, "TIME VIOLATION"),
        (CheckRestoreIdTransmission, "CHECK/RESTORE ID TRANSMISSION"),
        (ReturnToAuthorizedArea, "RETURN TO AUTHORIZED AREA"),
        (StopMissionIfTimeExceeded, "STOP MISSION IF AUTHORIZED TIME IS EXCEEDED"),
        (StopMission, "STOP MISSION"),
        (CompleteMission, "COMPLETE MISSION"),
        (ClaimUnderVerification, "CLAIM UNDER VERIFICATION"),
        (NotFlying, "I AM NOT FLYING"),
        (AlreadyTransmitting, "I AM ALREADY TRANSMITTING MY ID"),
        (CannotRestore, "I AM NOT ABLE TO RESTORE ID"),
        (RestoredId, "I RESTORED ID TRANSMISSION"),
        (AlreadyInAuthorizedArea, "I AM ALREADY FLYING IN AUTHORIZED AREA"),
        (CannotReturn, "I CANNOT RETURN TO AUTHORIZED AREA"),
        (ReturnedToArea, "I RETURNED TO AUTHORIZED AREA"),
        (NotExceedingTime, "I AM NOT EXCEEDING AUTHORIZED FLIGHT TIME"),
        (CannotStop, "I CANNOT STOP MISSION"),
        (StoppedMission, "I STOPPED MISSION"),
        (InterdictImmediately, "INTERDICT IMMEDIATELY"),
        (ImmediateInterdictionAuthorization, "IMMEDIATE INTERDICTION AUTHORIZATION"),
        (InterdictAfterTimeout, "INTERDICT AFTER TIME-OUT"),
        (TimedInterdictionAuthorization, "TIMED INTERDICTION AUTHORIZATION"),
        (TolerateIdFailure, "TOLERATE ID FAILURE"),
        (TolerateExpiredId, "TOLERATE EXPIRED ID"),
        (TolerateAuthFailure, "TOLERATE AUTH FAILURE"),
        (TolerateMission, "TOLERATE MISSION"),
        (AuthDbMissResolved, "AUTH-DB MISS RESOLVED"),
        (CaseClosed, "CASE CLOSED"),
        (Escalated, "ESCALATED"),
        (ConfirmRequest(K::IdRestoration), "CONFIRM ID RESTORATION!"),
        (ConfirmRequest(K::ValidIdEntry), "CONFIRM VALID ID ENTRY!"),
        (ConfirmRequest(K::DatabaseRestoration), "CONFIRM DATABASE RESTORATION!"),
        (ConfirmRequest(K::ReturnToArea), "CONFIRM RETURN TO AUTHORIZED AREA!"),
        (ConfirmRequest(K::MissionStop), "CONFIRM MISSION STOP!"),
        (Confirmed(K::IdRestoration), "ID RESTORATION CONFIRMED"),
        (Confirmed(K::ValidIdEntry), "VALID ID ENTRY CONFIRMED"),
        (Confirmed(K::DatabaseRestoration), "DATABASE RESTORATION CONFIRMED"),
        (Confirmed(K::ReturnToArea), "RETURN TO AUTHORIZED AREA CONFIRMED"),
        (Confirmed(K::MissionStop), "MISSION STOP CONFIRMED"),
        (NotConfirmed(K::IdRestoration), "ID RESTORATION NOT CONFIRMED"),
        (NotConfirmed(K::ValidIdEntry), "VALID ID ENTRY NOT CONFIRMED"),
        (NotConfirmed(K::DatabaseRestoration), "DATABASE RESTORATION NOT CONFIRMED"),
        (NotConfirmed(K::ReturnToArea), "RETURN TO AUTHORIZED AREA NOT CONFIRMED"),
        (NotConfirmed(K::MissionStop), "MISSION STOP NOT CONFIRMED"),
        (InterdictionReport, "INTERDICTION REPORT"),
        (TrackLost, "TRACK LOST"),
        (InterdictionRecord, "INTERDICTION RECORD"),
        (LawsuitCase, "LAWSUIT CASE"),
        (Hello, "HELLO"),
        (Timer, "TIMER"),
        (Error, "ERROR"),
    ]
};

impl MsgType {
    pub fn all() -> impl Iterator<Item = MsgType> {
        LABELS.iter().map(|(t, _)| *t)
    }

    pub fn label(self) -> &'static str {
        LABELS
            .iter()
            .find(|(t, _)| *t == self)
            .map(|(_, l)| *l)
            .expect("every message type has a label")
    }

    /// Protocol opened by this CUAS message.
    pub fn opens_protocol(self) -> Option<u8> {
        use MsgType::*;
        Some(match self {
            NoIdButPotentialOperator => 1,
            UnknownId => 2,
            IdDbMiss => 3,
            ExpiredIdUnauthorizedMission => 4,
            ExpiredIdButAuthorizedMission => 5,
            AuthDbMiss => 6,
            AreaViolation => 7,
            TimeViolation => 8,
            _ => return None,
        })
    }

    pub fn opening(protocol: u8) -> Option<MsgType> {
        MsgType::all().find(|t| t.opens_protocol() == Some(protocol))
    }

    pub fn operator_response(self) -> Option<OperatorResponse> {
        OperatorResponse::ALL
            .into_iter()
            .find(|r| r.msg_type() == Some(self))
    }

    /// Authority to CUAS messages that carry a decision.
    pub fn is_decision(self) -> bool {
        use MsgType::*;
        matches!(
            self,
            InterdictImmediately
                | ImmediateInterdictionAuthorization
                | InterdictAfterTimeout
                | TimedInterdictionAuthorization
                | TolerateIdFailure
                | TolerateExpiredId
                | TolerateAuthFailure
                | TolerateMission
                | AuthDbMissResolved
                | CaseClosed
        )
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MsgType {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LABELS
            .iter()
            .find(|(_, l)| *l == s)
            .map(|(t, _)| *t)
            .ok_or_else(|| WireError::MsgType(s.to_string()))
    }
}

impl Serialize for MsgType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for MsgType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One message between agents. Field names and order are the wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub msg_id: String,
    pub correlation_id: String,
    pub sender: AgentId,
    pub recipient: AgentId,
    pub msg_type: MsgType,
    pub sent_at: Timestamp,
    pub payload: serde_json::Value,
}

impl Envelope {
    /// Envelope without a message id; transports assign one when sending.
    pub fn new(
        sender: AgentId,
        recipient: AgentId,
        msg_type: MsgType,
        correlation_id: impl Into<String>,
        payload: serde_json::Value,
    ) -> Self {
        Envelope {
            msg_id: String::new(),
            correlation_id: correlation_id.into(),
            sender,
            recipient,
            msg_type,
            sent_at: Timestamp(0),
            payload,
        }
    }

    pub fn payload_str(&self, key: &str) -> Option<&str> {
        self.payload.get(key).and_then(|v| v.as_str())
    }

    pub fn payload_u64(&self, key: &str) -> Option<u64> {
        self.payload.get(key).and_then(|v| v.as_u64())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}
