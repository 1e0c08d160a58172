//! Synchronous driver for one protocol run.
//!
//! Pumps an [`Authority`] with zero network delay, answering operator
//! requests through a [`Responder`] and confirmation requests the way a
//! CUAS would: by re-querying the registry or by looking at scripted
//! world facts.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use serde_json::json;
use thiserror::Error;

use super::authority::{Authority, AuthorityConfig, DispatchError, RepairPolicy};
use super::message::{AgentId, ConfirmKind, Envelope, MsgType, OperatorResponse, Role};
use super::risk::{RiskInputs, RiskPolicy};
use super::session::{ConfirmationMode, ProtocolSession};
use crate::domain::{Decision, DroneId, GeoPoint, OperatorId, Timestamp};
use crate::registry::{AccessLevel, IdValidity, MissionAuthorization, Registry};

/// Source of operator answers.
pub trait Responder {
    /// Answer to an authority request; `None` stays silent.
    fn respond(&mut self, request: &Envelope) -> Option<OperatorResponse>;
}

impl Responder for OperatorResponse {
    fn respond(&mut self, _request: &Envelope) -> Option<OperatorResponse> {
        (*self != OperatorResponse::NoResponse).then_some(*self)
    }
}

impl<F: FnMut(&Envelope) -> Option<OperatorResponse>> Responder for F {
    fn respond(&mut self, request: &Envelope) -> Option<OperatorResponse> {
        self(request)
    }
}

/// What the CUAS will see when asked to verify an operator's claim.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct WorldFacts {
    pub rid_restored: bool,
    pub back_in_area: bool,
    pub rid_ceased: bool,
}

pub struct HarnessSetup {
    pub registry: Arc<Registry>,
    pub config: AuthorityConfig,
    pub risk: RiskPolicy,
    pub repair: RepairPolicy,
    pub responder: Box<dyn Responder>,
    pub facts: WorldFacts,
    pub drone: DroneId,
    pub operator: Option<OperatorId>,
    pub position: GeoPoint,
    pub now: Timestamp,
    pub risk_inputs: RiskInputs,
}

impl HarnessSetup {
    pub fn new(registry: Arc<Registry>, drone: DroneId, position: GeoPoint, now: Timestamp) -> Self {
        HarnessSetup {
            registry,
            config: AuthorityConfig::default(),
            risk: RiskPolicy::default(),
            repair: RepairPolicy::Defer,
            responder: Box::new(OperatorResponse::NoResponse),
            facts: WorldFacts::default(),
            drone,
            operator: None,
            position,
            now,
            risk_inputs: RiskInputs::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error("session never reached a decision")]
    NoDecision,
    #[error("exceeded {0} delivery steps")]
    Stalled(usize),
}

#[derive(Debug, Clone)]
pub struct HarnessOutcome {
    pub opened_protocol: u8,
    pub deciding_protocol: u8,
    pub case_label: String,
    pub decision: Decision,
    /// Authority to operator orders in the deciding session.
    pub operator_orders: Vec<MsgType>,
    pub cuas_messages: Vec<MsgType>,
    pub sessions: Vec<ProtocolSession>,
    pub delivered: Vec<Envelope>,
    pub errors: Vec<DispatchError>,
}

const OPERATOR: AgentId = AgentId::operator(0);
const CUAS: AgentId = AgentId::cuas(0);
const MAX_STEPS: usize = 10_000;

/// Runs `protocol` to completion. Dispatch errors are collected, not
/// fatal, so a bad answer leaves the session to its timeout.
pub fn run_protocol(protocol: u8, mut setup: HarnessSetup) -> Result<HarnessOutcome, HarnessError> {
    let mut authority = Authority::new(
        Arc::clone(&setup.registry),
        setup.config.clone(),
        setup.risk.clone(),
    );
    authority.set_repair_policy(setup.drone.clone(), setup.repair);
    if let Some(op) = setup.operator {
        authority.register_operator(op, OPERATOR);
    }
    authority.set_court(AgentId::court(0));

    let mut open_payload = json!({
        "drone_id": setup.drone,
        "mission_tag": setup.risk_inputs.mission_tag,
        "zone_tag": setup.risk_inputs.zone_tag,
        "emergency": setup.risk_inputs.emergency,
    });
    if let Some(op) = setup.operator {
        open_payload["operator_id"] = json!(op);
    }
    let opening = MsgType::opening(protocol).expect("protocol 1..=8");
    let correlation = format!("{CUAS}/{}/p{protocol}", setup.drone);

    let mut queue: BinaryHeap<Reverse<(Timestamp, u64)>> = BinaryHeap::new();
    let mut pending: BTreeMap<u64, Envelope> = BTreeMap::new();
    let mut seq = 0u64;
    let mut push = |env: Envelope, at: Timestamp, queue: &mut BinaryHeap<_>, pending: &mut BTreeMap<_, _>| {
        seq += 1;
        queue.push(Reverse((at, seq)));
        pending.insert(seq, env);
    };

    let mut first = Envelope::new(CUAS, AgentId::AUTHORITY, opening, correlation.clone(), open_payload.clone());
    first.msg_id = "cuas-0#1".into();
    first.sent_at = setup.now;
    push(first, setup.now, &mut queue, &mut pending);

    let mut cuas_seq = 1u64;
    let mut delivered = Vec::new();
    let mut errors = Vec::new();
    let mut last_decision: Option<Envelope> = None;
    let mut steps = 0usize;

    while let Some(Reverse((now, id))) = queue.pop() {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(HarnessError::Stalled(MAX_STEPS));
        }
        let env = pending.remove(&id).expect("queued envelope");
        delivered.push(env.clone());
        let mut replies: Vec<Envelope> = Vec::new();
        match env.recipient.role {
            Role::Authority => match authority.dispatch(env, now) {
                Ok(outs) => {
                    for o in outs {
                        let at = o.env.sent_at;
                        push(o.env, at, &mut queue, &mut pending);
                    }
                }
                Err(e) => errors.push(e),
            },
            Role::Operator => {
                let is_request = matches!(
                    env.msg_type,
                    MsgType::CheckRestoreIdTransmission
                        | MsgType::ReturnToAuthorizedArea
                        | MsgType::StopMissionIfTimeExceeded
                );
                if is_request {
                    if let Some(r) = setup.responder.respond(&env) {
                        let t = r.msg_type().expect("non-silent response");
                        replies.push(Envelope::new(OPERATOR, AgentId::AUTHORITY, t, env.correlation_id.clone(), json!({})));
                    }
                }
            }
            Role::Cuas => {
                if env.msg_type.is_decision() {
                    last_decision = Some(env);
                } else if let MsgType::ConfirmRequest(kind) = env.msg_type {
                    let protocol = env.payload_u64("protocol").unwrap_or(0) as u8;
                    let ok = verify(&setup, kind, protocol, now);
                    match (setup.config.confirmation, ok) {
                        (ConfirmationMode::Explicit, true) => replies.push(answer(&env, MsgType::Confirmed(kind))),
                        (ConfirmationMode::Explicit, false) => replies.push(answer(&env, MsgType::NotConfirmed(kind))),
                        (ConfirmationMode::Implicit, true) => {}
                        (ConfirmationMode::Implicit, false) => {
                            let reopen = MsgType::opening(protocol).expect("protocol 1..=8");
                            replies.push(Envelope::new(
                                CUAS,
                                AgentId::AUTHORITY,
                                reopen,
                                env.correlation_id.clone(),
                                open_payload.clone(),
                            ));
                        }
                    }
                }
            }
            Role::Court => {}
        }
        for mut r in replies {
            cuas_seq += 1;
            r.msg_id = format!("{}#{}", r.sender, cuas_seq);
            r.sent_at = now;
            push(r, now, &mut queue, &mut pending);
        }
    }

    let decision_env = last_decision.ok_or(HarnessError::NoDecision)?;
    let deciding_session = decision_env.correlation_id.clone();
    let payload = &decision_env.payload;
    let decision: Decision = serde_json::from_value(payload["decision"].clone())
        .map_err(|_| HarnessError::NoDecision)?;
    let session = authority
        .session(&deciding_session)
        .ok_or(HarnessError::NoDecision)?;
    let operator_orders = session
        .transcript
        .iter()
        .filter(|e| e.recipient.role == Role::Operator)
        .map(|e| e.msg_type)
        .filter(|t| matches!(t, MsgType::StopMission | MsgType::CompleteMission))
        .collect();
    let cuas_messages = delivered
        .iter()
        .filter(|e| e.recipient == CUAS)
        .map(|e| e.msg_type)
        .collect();
    Ok(HarnessOutcome {
        opened_protocol: protocol,
        deciding_protocol: session.protocol,
        case_label: session.case_label.clone().unwrap_or_default(),
        decision,
        operator_orders,
        cuas_messages,
        sessions: authority.sessions().cloned().collect(),
        delivered,
        errors,
    })
}

fn answer(req: &Envelope, t: MsgType) -> Envelope {
    Envelope::new(CUAS, AgentId::AUTHORITY, t, req.correlation_id.clone(), json!({"drone_id": req.payload["drone_id"]}))
}

/// How the CUAS checks each kind of restoration claim.
fn verify(setup: &HarnessSetup, kind: ConfirmKind, protocol: u8, now: Timestamp) -> bool {
    let reg = &setup.registry;
    let id = &setup.drone;
    match kind {
        ConfirmKind::IdRestoration if protocol == 1 => setup.facts.rid_restored,
        ConfirmKind::IdRestoration => reg.lookup_id(id, AccessLevel::Officials).is_some(),
        ConfirmKind::ValidIdEntry => reg.validity(id, now, AccessLevel::Officials) == IdValidity::Valid,
        ConfirmKind::DatabaseRestoration => {
            reg.validity(id, now, AccessLevel::Officials) == IdValidity::Valid
                && reg.find_authorization(id, now, &setup.position).is_some()
        }
        ConfirmKind::ReturnToArea => setup.facts.back_in_area,
        ConfirmKind::MissionStop => setup.facts.rid_ceased,
    }
}

fn strict(out: HarnessOutcome) -> Result<(String, Decision), HarnessError> {
    match out.errors.into_iter().next() {
        Some(e) => Err(HarnessError::Dispatch(e)),
        None => Ok((out.case_label, out.decision)),
    }
}

/// Missing Remote ID with a potential operator taken from the AUTH-DB.
pub fn run_protocol1(
    mut setup: HarnessSetup,
    potential: &MissionAuthorization,
    responder: impl Responder + 'static,
    risk: RiskPolicy,
    confirm: ConfirmationMode,
) -> Result<(String, Decision), HarnessError> {
    setup.operator = Some(potential.operator_id);
    setup.responder = Box::new(responder);
    setup.risk = risk;
    setup.config.confirmation = confirm;
    strict(run_protocol(1, setup)?)
}

/// Authentic ID unknown to both databases.
pub fn run_protocol2(setup: HarnessSetup) -> Result<(String, Decision), HarnessError> {
    strict(run_protocol(2, setup)?)
}

/// Authentic ID missing from the ID-DB with an authorization on file.
pub fn run_protocol3(setup: HarnessSetup) -> Result<(String, Decision), HarnessError> {
    strict(run_protocol(3, setup)?)
}

/// Expired ID and no authorization.
pub fn run_protocol4(setup: HarnessSetup) -> Result<(String, Decision), HarnessError> {
    strict(run_protocol(4, setup)?)
}

/// Expired ID with an authorization.
pub fn run_protocol5(setup: HarnessSetup) -> Result<(String, Decision), HarnessError> {
    strict(run_protocol(5, setup)?)
}

/// Valid ID without an authorization.
pub fn run_protocol6(setup: HarnessSetup, risk: RiskPolicy) -> Result<(String, Decision), HarnessError> {
    let mut setup = setup;
    setup.risk = risk;
    strict(run_protocol(6, setup)?)
}

/// Drone outside its authorized area.
pub fn run_protocol7(
    mut setup: HarnessSetup,
    responder: impl Responder + 'static,
    risk: RiskPolicy,
    confirm: ConfirmationMode,
) -> Result<(String, Decision), HarnessError> {
    setup.responder = Box::new(responder);
    setup.risk = risk;
    setup.config.confirmation = confirm;
    strict(run_protocol(7, setup)?)
}

/// Drone past its authorized time.
pub fn run_protocol8(
    mut setup: HarnessSetup,
    responder: impl Responder + 'static,
    risk: RiskPolicy,
    confirm: ConfirmationMode,
) -> Result<(String, Decision), HarnessError> {
    setup.responder = Box::new(responder);
    setup.risk = risk;
    setup.config.confirmation = confirm;
    strict(run_protocol(8, setup)?)
}
