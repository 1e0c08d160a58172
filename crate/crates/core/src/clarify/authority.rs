//! Authority-side protocol engine.
//!
//! [`Authority::dispatch`] consumes one inbound envelope and returns the
//! envelopes to send, each with a delay relative to the dispatch time.
//! Timeouts are envelopes the authority sends to itself; they carry an
//! epoch so a timer armed before a later state change is ignored. Because
//! timers travel as ordinary envelopes, feeding a recorded stream of
//! authority-bound envelopes to a fresh engine reproduces its output.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::message::{AgentId, ConfirmKind, Envelope, MsgType, OperatorResponse, Role};
use super::risk::{RiskInputs, RiskPolicy};
use super::session::{AuditRecord, ConfirmationMode, Phase, ProtocolSession, SessionStatus};
use crate::domain::{Decision, DroneId, OperatorId, RiskLevel, Timestamp};
use crate::postdetect::{apply_tolerance, ToleranceCounter};
use crate::registry::{FaultKind, Registry};

/// How the authority handles a database fault it has diagnosed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum RepairPolicy {
    /// Tolerate now, fix later.
    #[default]
    Defer,
    /// Fix at once and ask the CUAS to confirm.
    Immediate,
    /// Claim a fix that does not take effect.
    Ineffective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuthorityConfig {
    pub operator_timeout_ms: u64,
    /// How long the authority waits on a confirmation request.
    pub confirm_window_ms: u64,
    pub confirmation: ConfirmationMode,
    pub interdiction_timeout_s: u32,
    pub tolerance_threshold: u32,
    /// Time spent checking the databases before answering protocols 2 to 6.
    pub diagnosis_ms: u64,
    pub risk_assessment_ms: u64,
    pub fast_risk_assessment_ms: u64,
    /// Ask for a non-destroying interdiction when an authentic ID is
    /// unknown and no fault explains it.
    pub nondestructive_on_security_break: bool,
}

impl Default for AuthorityConfig {
    fn default() -> Self {
        AuthorityConfig {
            operator_timeout_ms: 10_000,
            confirm_window_ms: 3_000,
            confirmation: ConfirmationMode::Explicit,
            interdiction_timeout_s: 30,
            tolerance_threshold: 2,
            diagnosis_ms: 0,
            risk_assessment_ms: 0,
            fast_risk_assessment_ms: 0,
            nondestructive_on_security_break: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispatchError {
    #[error("no session with correlation id {0:?}")]
    UnknownCorrelation(String),
    #[error("protocol {protocol} already active for drone {drone}")]
    DuplicateOpen { drone: DroneId, protocol: u8 },
    #[error("response {response:?} is not legal in protocol {protocol}")]
    IllegalResponse {
        protocol: u8,
        response: OperatorResponse,
    },
    #[error("{msg_type} not expected in session {session}")]
    UnexpectedMessage { msg_type: String, session: String },
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
}

/// An envelope to emit after `delay_ms`. `env.sent_at` already equals the
/// dispatch time plus the delay.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub env: Envelope,
    pub delay_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimerKind {
    Operator,
    Confirmation,
}

impl TimerKind {
    fn as_str(self) -> &'static str {
        match self {
            TimerKind::Operator => "operator",
            TimerKind::Confirmation => "confirmation",
        }
    }
}

fn confirm_kind(protocol: u8) -> ConfirmKind {
    match protocol {
        1 | 3 => ConfirmKind::IdRestoration,
        4 => ConfirmKind::DatabaseRestoration,
        5 => ConfirmKind::ValidIdEntry,
        7 => ConfirmKind::ReturnToArea,
        _ => ConfirmKind::MissionStop,
    }
}

fn operator_request(protocol: u8) -> Option<MsgType> {
    match protocol {
        1 => Some(MsgType::CheckRestoreIdTransmission),
        7 => Some(MsgType::ReturnToAuthorizedArea),
        8 => Some(MsgType::StopMissionIfTimeExceeded),
        _ => None,
    }
}

/// Label of the decision message sent to the CUAS.
pub fn decision_msg_type(protocol: u8, d: &Decision) -> MsgType {
    match d {
        Decision::ImmediateInterdiction { .. } if protocol == 2 => {
            MsgType::ImmediateInterdictionAuthorization
        }
        Decision::ImmediateInterdiction { .. } => MsgType::InterdictImmediately,
        Decision::TimedInterdiction { .. } if protocol == 4 => {
            MsgType::TimedInterdictionAuthorization
        }
        Decision::TimedInterdiction { .. } => MsgType::InterdictAfterTimeout,
        Decision::TolerateIdFailure if protocol == 5 => MsgType::TolerateExpiredId,
        Decision::TolerateIdFailure => MsgType::TolerateIdFailure,
        Decision::TolerateAuthFailure => MsgType::TolerateAuthFailure,
        Decision::TolerateMission => MsgType::TolerateMission,
        Decision::IssueResolved => MsgType::AuthDbMissResolved,
        Decision::RestorationConfirmed => MsgType::CaseClosed,
    }
}

pub struct Authority {
    id: AgentId,
    registry: Arc<Registry>,
    config: AuthorityConfig,
    risk: RiskPolicy,
    repair: BTreeMap<DroneId, RepairPolicy>,
    operators: BTreeMap<OperatorId, AgentId>,
    court: Option<AgentId>,
    sessions: BTreeMap<String, ProtocolSession>,
    active: BTreeMap<(DroneId, u8), String>,
    tolerance: ToleranceCounter,
    audit: Vec<AuditRecord>,
    msg_seq: u64,
    session_seq: u64,
}

impl Authority {
    pub fn new(registry: Arc<Registry>, config: AuthorityConfig, risk: RiskPolicy) -> Self {
        Authority {
            id: AgentId::AUTHORITY,
            registry,
            config,
            risk,
            repair: BTreeMap::new(),
            operators: BTreeMap::new(),
            court: None,
            sessions: BTreeMap::new(),
            active: BTreeMap::new(),
            tolerance: ToleranceCounter::new(),
            audit: Vec::new(),
            msg_seq: 0,
            session_seq: 0,
        }
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn config(&self) -> &AuthorityConfig {
        &self.config
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn set_repair_policy(&mut self, drone: DroneId, policy: RepairPolicy) {
        self.repair.insert(drone, policy);
    }

    pub fn register_operator(&mut self, operator: OperatorId, agent: AgentId) {
        self.operators.insert(operator, agent);
    }

    pub fn set_court(&mut self, court: AgentId) {
        self.court = Some(court);
    }

    pub fn sessions(&self) -> impl Iterator<Item = &ProtocolSession> {
        self.sessions.values()
    }

    pub fn session(&self, id: &str) -> Option<&ProtocolSession> {
        self.sessions.get(id)
    }

    pub fn audit(&self) -> &[AuditRecord] {
        &self.audit
    }

    pub fn tolerance(&self) -> &ToleranceCounter {
        &self.tolerance
    }

    /// Handles one inbound envelope at time `now`.
    pub fn dispatch(&mut self, env: Envelope, now: Timestamp) -> Result<Vec<Outgoing>, DispatchError> {
        let t = env.msg_type;
        if t.opens_protocol().is_some() {
            return self.on_open(env, now);
        }
        if t.operator_response().is_some() {
            return self.on_operator(env, now);
        }
        match t {
            MsgType::Timer => self.on_timer(env, now),
            MsgType::Confirmed(k) => self.on_confirmation(env, k, true, now),
            MsgType::NotConfirmed(k) => self.on_confirmation(env, k, false, now),
            MsgType::InterdictionReport => Ok(self.on_report(env, now)),
            MsgType::TrackLost => self.on_track_lost(env),
            MsgType::Hello => self.on_hello(&env).map(|_| Vec::new()),
            other => Err(DispatchError::UnexpectedMessage {
                msg_type: other.label().to_string(),
                session: env.correlation_id,
            }),
        }
    }

    /// ERROR envelope answering a message that failed to dispatch.
    pub fn error_reply(&mut self, to: &Envelope, err: &DispatchError, now: Timestamp) -> Envelope {
        let mut env = Envelope::new(
            self.id,
            to.sender,
            MsgType::Error,
            to.correlation_id.clone(),
            json!({"error": err.to_string(), "in_reply_to": to.msg_id}),
        );
        env.msg_id = self.next_msg_id();
        env.sent_at = now;
        env
    }

    fn next_msg_id(&mut self) -> String {
        self.msg_seq += 1;
        format!("{}#{}", self.id, self.msg_seq)
    }

    fn on_hello(&mut self, env: &Envelope) -> Result<(), DispatchError> {
        match env.sender.role {
            Role::Operator => {
                let op = env
                    .payload_str("operator_id")
                    .ok_or_else(|| DispatchError::MalformedPayload("HELLO without operator_id".into()))?
                    .parse::<OperatorId>()
                    .map_err(|e| DispatchError::MalformedPayload(e.to_string()))?;
                self.operators.insert(op, env.sender);
            }
            Role::Court => self.court = Some(env.sender),
            Role::Cuas | Role::Authority => {}
        }
        Ok(())
    }

    fn record(&mut self, sid: &str, env: Envelope) {
        if let Some(s) = self.sessions.get_mut(sid) {
            s.transcript.push(env);
        }
    }

    fn out(&mut self, sid: &str, to: AgentId, t: MsgType, payload: Value, delay: u64, now: Timestamp) -> Outgoing {
        let mut env = Envelope::new(self.id, to, t, sid, payload);
        env.msg_id = self.next_msg_id();
        env.sent_at = now.plus_ms(delay);
        self.record(sid, env.clone());
        Outgoing { env, delay_ms: delay }
    }

    fn arm(&mut self, sid: &str, kind: TimerKind, delay: u64, now: Timestamp) -> Outgoing {
        let s = self.sessions.get_mut(sid).expect("session exists");
        s.timer_epoch += 1;
        let epoch = s.timer_epoch;
        let me = self.id;
        self.out(
            sid,
            me,
            MsgType::Timer,
            json!({"timer": kind.as_str(), "epoch": epoch}),
            delay,
            now,
        )
    }

    fn sess(&self, sid: &str) -> &ProtocolSession {
        &self.sessions[sid]
    }

    fn operator_agent(&self, sid: &str) -> Option<AgentId> {
        self.sess(sid)
            .operator_id
            .and_then(|op| self.operators.get(&op).copied())
    }

    fn repair_policy(&self, drone: &DroneId) -> RepairPolicy {
        self.repair.get(drone).copied().unwrap_or_default()
    }

    fn timed(&self) -> Decision {
        Decision::TimedInterdiction {
            timeout_s: self.config.interdiction_timeout_s.max(1),
        }
    }

    fn on_open(&mut self, env: Envelope, now: Timestamp) -> Result<Vec<Outgoing>, DispatchError> {
        let protocol = env.msg_type.opens_protocol().expect("opening message");
        let drone: DroneId = env
            .payload_str("drone_id")
            .ok_or_else(|| DispatchError::MalformedPayload("missing drone_id".into()))?
            .parse()
            .map_err(|e: crate::domain::DomainError| DispatchError::MalformedPayload(e.to_string()))?;

        let existing = self
            .sessions
            .get(&env.correlation_id)
            .filter(|s| s.is_open())
            .map(|s| s.session_id.clone())
            .or_else(|| self.active.get(&(drone.clone(), protocol)).cloned());
        if let Some(sid) = existing {
            let s = self.sess(&sid);
            if s.protocol == protocol && s.phase == Phase::AwaitingConfirmation {
                // A repeated report while a fix is being verified refutes it.
                self.record(&sid, env);
                return Ok(self.unconfirmed(&sid, now));
            }
            return Err(DispatchError::DuplicateOpen { drone, protocol });
        }
        if self.sessions.contains_key(&env.correlation_id) {
            return Err(DispatchError::DuplicateOpen { drone, protocol });
        }

        let operator_id = match env.payload_str("operator_id") {
            Some(s) => Some(
                s.parse::<OperatorId>()
                    .map_err(|e| DispatchError::MalformedPayload(e.to_string()))?,
            ),
            None => self.registry.raw_record(&drone).map(|r| r.operator_id),
        };
        let risk_inputs = RiskInputs {
            mission_tag: env.payload_str("mission_tag").unwrap_or_default().to_string(),
            zone_tag: env.payload_str("zone_tag").unwrap_or_default().to_string(),
            emergency: env
                .payload
                .get("emergency")
                .and_then(Value::as_bool)
                .unwrap_or(false),
        };
        let sid = env.correlation_id.clone();
        self.sessions.insert(
            sid.clone(),
            ProtocolSession {
                session_id: sid.clone(),
                protocol,
                drone_id: drone.clone(),
                cuas_id: env.sender,
                operator_id,
                opened_at: now,
                decided_at: None,
                case_label: None,
                outcome: None,
                status: SessionStatus::Open,
                phase: Phase::AwaitingOperator,
                escalated_from: None,
                risk_inputs,
                transcript: Vec::new(),
                timer_epoch: 0,
            },
        );
        self.active.insert((drone, protocol), sid.clone());
        self.record(&sid, env);
        Ok(self.start(&sid, now))
    }

    fn start(&mut self, sid: &str, now: Timestamp) -> Vec<Outgoing> {
        let protocol = self.sess(sid).protocol;
        match operator_request(protocol) {
            Some(req) => {
                let mut outs = Vec::new();
                if let Some(op) = self.operator_agent(sid) {
                    let payload = json!({"drone_id": self.sess(sid).drone_id, "protocol": protocol});
                    outs.push(self.out(sid, op, req, payload, 0, now));
                }
                let timeout = self.config.operator_timeout_ms;
                outs.push(self.arm(sid, TimerKind::Operator, timeout, now));
                outs
            }
            None => self.diagnose(sid, now),
        }
    }

    fn diagnose(&mut self, sid: &str, now: Timestamp) -> Vec<Outgoing> {
        let d = self.config.diagnosis_ms;
        let s = self.sess(sid);
        let (protocol, drone) = (s.protocol, s.drone_id.clone());
        let reg = Arc::clone(&self.registry);
        let has = |k| reg.has_fault(k, &drone);
        let record_hidden = reg.raw_record(&drone).is_some() && has(FaultKind::IdDbMiss);
        let auth_hidden = has(FaultKind::AuthDbMiss)
            && (reg.raw_authorization_any(&drone, now).is_some()
                || reg.raw_latest_started(&drone, now).is_some());
        let repair = self.repair_policy(&drone);

        match protocol {
            2 => {
                if record_hidden && auth_hidden {
                    self.decide(sid, "CASE3", Decision::TolerateAuthFailure, None, d, now)
                } else if record_hidden {
                    let timed = self.timed();
                    self.decide(sid, "CASE2", timed, Some(MsgType::StopMission), d, now)
                } else {
                    let imm = Decision::ImmediateInterdiction {
                        nondestructive: self.config.nondestructive_on_security_break,
                    };
                    self.decide(sid, "CASE1", imm, None, d, now)
                }
            }
            3 => {
                if !record_hidden {
                    return self.escalate(sid, 2, "no ID-DB fault found", d, now);
                }
                match repair {
                    RepairPolicy::Defer => {
                        self.decide(sid, "CASE1", Decision::TolerateIdFailure, None, d, now)
                    }
                    RepairPolicy::Immediate => {
                        reg.clear_fault(FaultKind::IdDbMiss, &drone);
                        self.request_confirmation(sid, d, now)
                    }
                    RepairPolicy::Ineffective => self.request_confirmation(sid, d, now),
                }
            }
            4 => {
                let fault = has(FaultKind::StaleExpiry) || auth_hidden;
                if !fault {
                    let timed = self.timed();
                    return self.decide(sid, "CASE1", timed, Some(MsgType::StopMission), d, now);
                }
                match repair {
                    RepairPolicy::Defer => {
                        self.decide(sid, "CASE2", Decision::TolerateAuthFailure, None, d, now)
                    }
                    RepairPolicy::Immediate => {
                        reg.clear_fault(FaultKind::StaleExpiry, &drone);
                        reg.clear_fault(FaultKind::AuthDbMiss, &drone);
                        self.request_confirmation(sid, d, now)
                    }
                    RepairPolicy::Ineffective => self.request_confirmation(sid, d, now),
                }
            }
            5 => {
                let fault = has(FaultKind::StaleExpiry);
                match repair {
                    RepairPolicy::Immediate if fault => {
                        reg.clear_fault(FaultKind::StaleExpiry, &drone);
                        self.request_confirmation(sid, d, now)
                    }
                    RepairPolicy::Ineffective if fault => self.request_confirmation(sid, d, now),
                    _ => self.decide(sid, "CASE1", Decision::TolerateIdFailure, None, d, now),
                }
            }
            6 => {
                if auth_hidden {
                    reg.clear_fault(FaultKind::AuthDbMiss, &drone);
                    return self.decide(sid, "CASE1", Decision::IssueResolved, None, d, now);
                }
                let delay = d + self.config.risk_assessment_ms;
                match self.risk.assess(&self.sess(sid).risk_inputs) {
                    RiskLevel::High => {
                        let timed = self.timed();
                        self.decide(sid, "CASE2", timed, Some(MsgType::StopMission), delay, now)
                    }
                    RiskLevel::Low => self.decide(
                        sid,
                        "CASE3",
                        Decision::TolerateMission,
                        Some(MsgType::CompleteMission),
                        delay,
                        now,
                    ),
                }
            }
            _ => unreachable!("protocol {protocol} has an operator leg"),
        }
    }

    fn request_confirmation(&mut self, sid: &str, delay: u64, now: Timestamp) -> Vec<Outgoing> {
        let s = self.sessions.get_mut(sid).expect("session exists");
        s.phase = Phase::AwaitingConfirmation;
        let (protocol, cuas) = (s.protocol, s.cuas_id);
        let payload = json!({"drone_id": s.drone_id, "protocol": protocol});
        let mut outs = vec![self.out(
            sid,
            cuas,
            MsgType::ConfirmRequest(confirm_kind(protocol)),
            payload.clone(),
            delay,
            now,
        )];
        if operator_request(protocol).is_some() {
            if let Some(op) = self.operator_agent(sid) {
                outs.push(self.out(sid, op, MsgType::ClaimUnderVerification, payload, delay, now));
            }
        }
        let window = delay + self.config.confirm_window_ms;
        outs.push(self.arm(sid, TimerKind::Confirmation, window, now));
        outs
    }

    fn confirmed(&mut self, sid: &str, now: Timestamp) -> Vec<Outgoing> {
        let case = match self.sess(sid).protocol {
            1 => "CASE5",
            3 | 5 => "CASE2",
            4 => "CASE3",
            _ => "CASE4",
        };
        self.decide(sid, case, Decision::RestorationConfirmed, None, 0, now)
    }

    fn unconfirmed(&mut self, sid: &str, now: Timestamp) -> Vec<Outgoing> {
        match self.sess(sid).protocol {
            1 => self.risk_decide(sid, "CASE6", Decision::TolerateIdFailure, true, now),
            3 => self.escalate(sid, 2, "restoration not confirmed", 0, now),
            4 => self.decide(sid, "CASE2", Decision::TolerateAuthFailure, None, 0, now),
            5 => self.escalate(sid, 4, "valid entry not confirmed", 0, now),
            _ => {
                let timed = self.timed();
                self.decide(sid, "CASE5", timed, Some(MsgType::StopMission), 0, now)
            }
        }
    }

    fn risk_decide(&mut self, sid: &str, case: &str, low: Decision, fast: bool, now: Timestamp) -> Vec<Outgoing> {
        let delay = if fast {
            self.config.fast_risk_assessment_ms
        } else {
            self.config.risk_assessment_ms
        };
        match self.risk.assess(&self.sess(sid).risk_inputs) {
            RiskLevel::Low => self.decide(sid, case, low, Some(MsgType::CompleteMission), delay, now),
            RiskLevel::High => {
                let timed = self.timed();
                self.decide(sid, case, timed, Some(MsgType::StopMission), delay, now)
            }
        }
    }

    fn decide(
        &mut self,
        sid: &str,
        case: &str,
        decision: Decision,
        order: Option<MsgType>,
        delay: u64,
        now: Timestamp,
    ) -> Vec<Outgoing> {
        let (drone, protocol, cuas) = {
            let s = self.sess(sid);
            (s.drone_id.clone(), s.protocol, s.cuas_id)
        };
        let decision = apply_tolerance(
            &mut self.tolerance,
            &drone,
            protocol,
            self.config.tolerance_threshold,
            decision,
            self.config.interdiction_timeout_s,
        );
        let order = match decision {
            Decision::TimedInterdiction { .. } => Some(MsgType::StopMission),
            _ => order,
        };
        let decided_at = now.plus_ms(delay);
        {
            let s = self.sessions.get_mut(sid).expect("session exists");
            s.status = SessionStatus::Decided;
            s.phase = Phase::Closed;
            s.timer_epoch += 1;
            s.decided_at = Some(decided_at);
            s.case_label = Some(case.to_string());
            s.outcome = Some(decision);
        }
        self.active.remove(&(drone.clone(), protocol));

        let mut outs = Vec::new();
        if let (Some(order), Some(op)) = (order, self.operator_agent(sid)) {
            let payload = json!({"drone_id": drone, "protocol": protocol, "case": case});
            outs.push(self.out(sid, op, order, payload, delay, now));
        }
        let payload = json!({
            "protocol": protocol,
            "case": case,
            "decision": decision,
            "drone_id": drone,
        });
        outs.push(self.out(sid, cuas, decision_msg_type(protocol, &decision), payload.clone(), delay, now));
        if decision.is_interdiction() {
            self.audit.push(AuditRecord {
                at: decided_at,
                kind: MsgType::InterdictionRecord.label().to_string(),
                session_id: sid.to_string(),
                drone_id: Some(drone),
                protocol: Some(protocol),
                case_label: Some(case.to_string()),
                decision: Some(decision),
            });
            if let Some(court) = self.court {
                outs.push(self.out(sid, court, MsgType::InterdictionRecord, payload, delay, now));
            }
        }
        outs
    }

    fn escalate(&mut self, sid: &str, to: u8, reason: &str, delay: u64, now: Timestamp) -> Vec<Outgoing> {
        self.session_seq += 1;
        let new_id = format!("{}/s{}", self.id, self.session_seq);
        let old = self.sessions.get_mut(sid).expect("session exists");
        old.status = SessionStatus::Escalated {
            to_session: new_id.clone(),
            to_protocol: to,
        };
        old.phase = Phase::Closed;
        old.timer_epoch += 1;
        let new = ProtocolSession {
            session_id: new_id.clone(),
            protocol: to,
            opened_at: now.plus_ms(delay),
            decided_at: None,
            case_label: None,
            outcome: None,
            status: SessionStatus::Open,
            phase: Phase::AwaitingOperator,
            escalated_from: Some(sid.to_string()),
            transcript: Vec::new(),
            timer_epoch: 0,
            ..old.clone()
        };
        let (drone, from, cuas) = (old.drone_id.clone(), old.protocol, old.cuas_id);
        self.active.remove(&(drone.clone(), from));
        self.active.insert((drone.clone(), to), new_id.clone());
        self.sessions.insert(new_id.clone(), new);

        let payload = json!({
            "drone_id": drone,
            "protocol": from,
            "to_protocol": to,
            "session": new_id,
            "reason": reason,
        });
        let mut outs = vec![self.out(sid, cuas, MsgType::Escalated, payload, delay, now)];
        let later = now.plus_ms(delay);
        outs.extend(self.start(&new_id, later).into_iter().map(|mut o| {
            o.delay_ms += delay;
            o
        }));
        outs
    }

    fn on_timer(&mut self, env: Envelope, now: Timestamp) -> Result<Vec<Outgoing>, DispatchError> {
        let sid = env.correlation_id.clone();
        let s = self
            .sessions
            .get(&sid)
            .ok_or_else(|| DispatchError::UnknownCorrelation(sid.clone()))?;
        let epoch = env.payload_u64("epoch");
        let kind = env.payload_str("timer").map(str::to_string);
        let live = s.is_open() && epoch == Some(s.timer_epoch);
        let phase = s.phase;
        // Already in the transcript from when it was armed.
        if !live {
            return Ok(Vec::new());
        }
        let outs = match (kind.as_deref(), phase) {
            (Some("operator"), Phase::AwaitingOperator) => match self.sess(&sid).protocol {
                1 => self.decide(&sid, "CASE1", Decision::immediate(), None, 0, now),
                _ => {
                    let timed = self.timed();
                    self.decide(&sid, "CASE1", timed, Some(MsgType::StopMission), 0, now)
                }
            },
            (Some("confirmation"), Phase::AwaitingConfirmation) => match self.config.confirmation {
                ConfirmationMode::Explicit => self.unconfirmed(&sid, now),
                ConfirmationMode::Implicit => self.confirmed(&sid, now),
            },
            _ => Vec::new(),
        };
        Ok(outs)
    }

    fn on_operator(&mut self, env: Envelope, now: Timestamp) -> Result<Vec<Outgoing>, DispatchError> {
        let sid = env.correlation_id.clone();
        let s = self
            .sessions
            .get(&sid)
            .ok_or_else(|| DispatchError::UnknownCorrelation(sid.clone()))?;
        let (protocol, open, phase) = (s.protocol, s.is_open(), s.phase);
        let msg_type = env.msg_type;
        let response = msg_type.operator_response().expect("operator response");
        self.record(&sid, env);
        if !OperatorResponse::legal_for(protocol).contains(&response) {
            return Err(DispatchError::IllegalResponse { protocol, response });
        }
        if !open || phase != Phase::AwaitingOperator {
            return Err(DispatchError::UnexpectedMessage {
                msg_type: msg_type.label().to_string(),
                session: sid,
            });
        }
        use OperatorResponse as R;
        let outs = match response {
            R::NotFlying => self.decide(&sid, "CASE2", Decision::immediate(), None, 0, now),
            R::AlreadyTransmitting => {
                self.risk_decide(&sid, "CASE3", Decision::TolerateIdFailure, false, now)
            }
            R::CannotRestore => self.risk_decide(&sid, "CASE4", Decision::TolerateIdFailure, false, now),
            R::AlreadyInAuthorizedArea | R::NotExceedingTime => {
                self.risk_decide(&sid, "CASE2", Decision::TolerateMission, true, now)
            }
            R::CannotReturn | R::CannotStop => {
                self.risk_decide(&sid, "CASE3", Decision::TolerateMission, true, now)
            }
            R::RestoredId | R::ReturnedToArea | R::StoppedMission => {
                self.request_confirmation(&sid, 0, now)
            }
            R::NoResponse => unreachable!("silence has no message"),
        };
        Ok(outs)
    }

    fn on_confirmation(
        &mut self,
        env: Envelope,
        kind: ConfirmKind,
        ok: bool,
        now: Timestamp,
    ) -> Result<Vec<Outgoing>, DispatchError> {
        let sid = env.correlation_id.clone();
        let s = self
            .sessions
            .get(&sid)
            .ok_or_else(|| DispatchError::UnknownCorrelation(sid.clone()))?;
        let expected = s.is_open()
            && s.phase == Phase::AwaitingConfirmation
            && confirm_kind(s.protocol) == kind;
        let label = env.msg_type.label().to_string();
        self.record(&sid, env);
        if !expected {
            return Err(DispatchError::UnexpectedMessage {
                msg_type: label,
                session: sid,
            });
        }
        Ok(if ok {
            self.confirmed(&sid, now)
        } else {
            self.unconfirmed(&sid, now)
        })
    }

    fn on_report(&mut self, env: Envelope, now: Timestamp) -> Vec<Outgoing> {
        let sid = env.correlation_id.clone();
        let drone = env.payload_str("drone_id").and_then(|d| d.parse().ok());
        let session = self.sessions.get(&sid);
        self.audit.push(AuditRecord {
            at: now,
            kind: MsgType::LawsuitCase.label().to_string(),
            session_id: sid.clone(),
            drone_id: drone,
            protocol: session.map(|s| s.protocol),
            case_label: session.and_then(|s| s.case_label.clone()),
            decision: session.and_then(|s| s.outcome),
        });
        let payload = json!({"report": env.payload});
        self.record(&sid, env);
        match self.court {
            Some(court) => vec![self.out(&sid, court, MsgType::LawsuitCase, payload, 0, now)],
            None => Vec::new(),
        }
    }

    fn on_track_lost(&mut self, env: Envelope) -> Result<Vec<Outgoing>, DispatchError> {
        let sid = env.correlation_id.clone();
        let s = self
            .sessions
            .get_mut(&sid)
            .ok_or_else(|| DispatchError::UnknownCorrelation(sid.clone()))?;
        if s.is_open() {
            s.status = SessionStatus::Cancelled;
            s.phase = Phase::Closed;
            s.timer_epoch += 1;
            let key = (s.drone_id.clone(), s.protocol);
            self.active.remove(&key);
        }
        self.record(&sid, env);
        Ok(Vec::new())
    }
}
