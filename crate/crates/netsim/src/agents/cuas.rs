use std::sync::Arc;

use cuas_core::clarify::{AgentId, ConfirmKind, ConfirmationMode, Envelope, MsgType, RiskInputs};
use cuas_core::domain::{Decision, DroneId, GeoPoint, RemoteIdMessage, Timestamp};
use cuas_core::postdetect::{
    protocol_trigger, successor, trigger_state, DroneState, EventTag, OutcomeKind,
    PostDetectConfig, Probe,
};
use cuas_core::registry::{AccessLevel, IdValidity, Registry};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Ctx;

/// What the drone broadcasts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RidScript {
    Absent,
    /// Token issued under the named registry key.
    Authentic { key: String },
    /// Token that no registry key produces.
    Fake,
}

/// One scripted detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub drone_id: DroneId,
    /// Offset from the start of the run.
    pub at_ms: u64,
    pub position: GeoPoint,
    pub rid: RidScript,
    #[serde(default)]
    pub risk: RiskInputs,
    /// Broadcast after the operator restores Remote ID; `None` if they
    /// cannot.
    #[serde(default)]
    pub restores_rid: Option<RidScript>,
    #[serde(default)]
    pub returns_to_area: bool,
    #[serde(default)]
    pub stops_mission: bool,
    /// Track lost this long after detection.
    #[serde(default)]
    pub lost_after_ms: Option<u64>,
}

impl Detection {
    /// State the check chain reaches on first sight.
    pub fn classify(&self, registry: &Registry, at: Timestamp, config: &CuasConfig) -> DroneState {
        let rid = broadcast(registry, &self.drone_id, &self.rid, self.position, self.risk.emergency, at);
        Probe {
            registry,
            rid: rid.as_ref(),
            position: self.position,
            at,
            level: config.level,
            config: config.postdetect,
        }
        .classify(DroneState::DroneDetected)
        .0
    }
}

fn broadcast(
    registry: &Registry,
    drone: &DroneId,
    rid: &RidScript,
    position: GeoPoint,
    emergency: bool,
    at: Timestamp,
) -> Option<RemoteIdMessage> {
    let token = match rid {
        RidScript::Absent => return None,
        RidScript::Authentic { key } => registry.issue_token(drone, key).unwrap_or_default(),
        RidScript::Fake => b"forged".to_vec(),
    };
    Some(RemoteIdMessage {
        drone_id: drone.clone(),
        position,
        velocity: 0.0,
        station: position,
        time_mark: at,
        emergency,
        auth_token: token,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CuasConfig {
    pub rid_acquire_ms: u64,
    pub rid_wait_ms: u64,
    pub db_query_ms: u64,
    pub level: AccessLevel,
    pub postdetect: PostDetectConfig,
    pub confirmation: ConfirmationMode,
}

impl Default for CuasConfig {
    fn default() -> Self {
        CuasConfig {
            rid_acquire_ms: 0,
            rid_wait_ms: 0,
            db_query_ms: 0,
            level: AccessLevel::Officials,
            postdetect: PostDetectConfig::default(),
            confirmation: ConfirmationMode::Explicit,
        }
    }
}

/// Time from detection to the first decision on the drone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClarificationSample {
    pub cuas_id: AgentId,
    pub drone_id: DroneId,
    /// Protocol the CUAS opened, even if another one decided.
    pub protocol: u8,
    pub case_label: String,
    pub decision: Decision,
    pub detected_at: Timestamp,
    pub decided_at: Timestamp,
    pub delta_ms: u64,
}

struct Track {
    det: Detection,
    detected_at: Option<Timestamp>,
    rid: RidScript,
    position: GeoPoint,
    session: Option<String>,
    /// Opening message of the current session, kept for implicit
    /// invalidation.
    opening: Option<(MsgType, serde_json::Value)>,
    first_protocol: Option<u8>,
    sampled: bool,
    opened: u32,
    done: bool,
}

pub struct CuasAgent {
    id: AgentId,
    registry: Arc<Registry>,
    config: CuasConfig,
    tracks: Vec<Track>,
    errors: usize,
}

impl CuasAgent {
    pub fn new(index: u32, registry: Arc<Registry>, config: CuasConfig, script: Vec<Detection>) -> Self {
        let tracks = script
            .into_iter()
            .map(|det| Track {
                rid: det.rid.clone(),
                position: det.position,
                det,
                detected_at: None,
                session: None,
                opening: None,
                first_protocol: None,
                sampled: false,
                opened: 0,
                done: false,
            })
            .collect();
        CuasAgent {
            id: AgentId::cuas(index),
            registry,
            config,
            tracks,
            errors: 0,
        }
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn errors(&self) -> usize {
        self.errors
    }

    pub fn is_done(&self) -> bool {
        self.tracks.iter().all(|t| t.done)
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        for (i, t) in self.tracks.iter().enumerate() {
            let at = ctx.now.plus_ms(t.det.at_ms);
            ctx.send_at(self.timer(json!({"detect": i})), at);
            if let Some(lost) = t.det.lost_after_ms {
                ctx.send_at(self.timer(json!({"lost": i})), at.plus_ms(lost));
            }
        }
    }

    fn timer(&self, payload: serde_json::Value) -> Envelope {
        Envelope::new(self.id, self.id, MsgType::Timer, "", payload)
    }

    fn to_authority(&self, t: MsgType, correlation: &str, payload: serde_json::Value) -> Envelope {
        Envelope::new(self.id, AgentId::AUTHORITY, t, correlation, payload)
    }

    pub fn on_message(&mut self, env: Envelope, ctx: &mut Ctx) {
        if env.msg_type == MsgType::Timer {
            if let Some(i) = env.payload_u64("detect") {
                let i = i as usize;
                if let Some(t) = self.tracks.get_mut(i) {
                    t.detected_at = Some(ctx.now);
                }
                self.run_checks(i, DroneState::DroneDetected, ctx);
            } else if let Some(i) = env.payload_u64("lost") {
                self.lose(i as usize, ctx);
            }
            return;
        }
        if env.msg_type == MsgType::Error {
            self.errors += 1;
            return;
        }
        let Some(i) = env
            .payload_str("drone_id")
            .and_then(|d| self.tracks.iter().position(|t| t.det.drone_id.as_str() == d))
        else {
            return;
        };
        match env.msg_type {
            MsgType::Escalated => {
                if let Some(s) = env.payload_str("session") {
                    self.tracks[i].session = Some(s.to_string());
                }
            }
            MsgType::ConfirmRequest(kind) => self.confirm(i, kind, &env, ctx),
            t if t.is_decision() => self.on_decision(i, &env, ctx),
            _ => {}
        }
    }

    fn cost(&self, tag: EventTag) -> u64 {
        use EventTag as E;
        match tag {
            E::RidReceived => self.config.rid_acquire_ms,
            E::RidTimeout => self.config.rid_wait_ms,
            E::IdDbHit
            | E::IdDbMiss
            | E::IdValid
            | E::IdExpired
            | E::AuthDbHit
            | E::AuthDbMiss
            | E::PotentialOperatorFound
            | E::NoPotentialOperator => self.config.db_query_ms,
            _ => 0,
        }
    }

    /// Walks the check chain from `from` and acts on where it stops.
    fn run_checks(&mut self, i: usize, from: DroneState, ctx: &mut Ctx) {
        let t = &self.tracks[i];
        if t.done {
            return;
        }
        let rid = broadcast(&self.registry, &t.det.drone_id, &t.rid, t.position, t.det.risk.emergency, ctx.now);
        let probe = Probe {
            registry: &self.registry,
            rid: rid.as_ref(),
            position: t.position,
            at: ctx.now,
            level: self.config.level,
            config: self.config.postdetect,
        };
        let (end, path) = probe.classify(from);
        let potential = (end == DroneState::NoIdButPotentialOperator)
            .then(|| {
                self.registry
                    .find_potential_operators(&probe.search_zone(), ctx.now)
                    .into_iter()
                    .next()
            })
            .flatten();
        let at = ctx.now.plus_ms(path.iter().map(|(_, tag)| self.cost(*tag)).sum());

        if let Some(protocol) = protocol_trigger(end) {
            let t = &mut self.tracks[i];
            t.opened += 1;
            let correlation = format!("{}/{}/{}", self.id, t.det.drone_id, t.opened);
            let mut payload = json!({
                "drone_id": t.det.drone_id,
                "mission_tag": t.det.risk.mission_tag,
                "zone_tag": t.det.risk.zone_tag,
                "emergency": t.det.risk.emergency,
            });
            if let Some(a) = potential {
                payload["operator_id"] = json!(a.operator_id);
            }
            let opening = MsgType::opening(protocol).expect("trigger states map to protocols");
            t.session = Some(correlation.clone());
            t.opening = Some((opening, payload.clone()));
            t.first_protocol.get_or_insert(protocol);
            let env = self.to_authority(opening, &correlation, payload);
            ctx.send_at(env, at);
        } else if end.is_interdiction() {
            let t = &mut self.tracks[i];
            t.done = true;
            let correlation = format!("{}/{}/report", self.id, t.det.drone_id);
            let payload = json!({"drone_id": t.det.drone_id, "state": end.name()});
            let env = self.to_authority(MsgType::InterdictionReport, &correlation, payload);
            ctx.send_at(env, at);
        } else {
            self.tracks[i].done = true;
        }
    }

    fn on_decision(&mut self, i: usize, env: &Envelope, ctx: &mut Ctx) {
        let Ok(decision) = serde_json::from_value::<Decision>(env.payload["decision"].clone()) else {
            self.errors += 1;
            return;
        };
        let protocol = env.payload_u64("protocol").unwrap_or(0) as u8;
        let case = env.payload_str("case").unwrap_or_default().to_string();
        let t = &mut self.tracks[i];
        if !t.sampled {
            t.sampled = true;
            let detected_at = t.detected_at.unwrap_or(ctx.now);
            ctx.record(ClarificationSample {
                cuas_id: self.id,
                drone_id: t.det.drone_id.clone(),
                protocol: t.first_protocol.unwrap_or(protocol),
                case_label: case,
                decision,
                detected_at,
                decided_at: ctx.now,
                delta_ms: ctx.now.saturating_sub(detected_at),
            });
        }
        t.session = None;
        t.opening = None;
        match decision {
            Decision::ImmediateInterdiction { .. } => {
                t.done = true;
                let payload = json!({"drone_id": t.det.drone_id, "decision": decision});
                let correlation = env.correlation_id.clone();
                let report = self.to_authority(MsgType::InterdictionReport, &correlation, payload);
                ctx.send(report);
            }
            Decision::RestorationConfirmed | Decision::IssueResolved => {
                match protocol {
                    1 => {
                        if let Some(r) = t.det.restores_rid.clone() {
                            t.rid = r;
                        }
                    }
                    7 => {
                        if let Some(a) = self.registry.find_authorization_any(&t.det.drone_id, ctx.now) {
                            t.position = centroid(a.area.vertices());
                        }
                    }
                    _ => {}
                }
                let resume = trigger_state(protocol)
                    .and_then(|s| successor(s, EventTag::ProtocolOutcome(OutcomeKind::from(&decision))));
                match resume {
                    Some(s) => self.run_checks(i, s, ctx),
                    None => self.tracks[i].done = true,
                }
            }
            _ => t.done = true,
        }
    }

    fn confirm(&mut self, i: usize, kind: ConfirmKind, env: &Envelope, ctx: &mut Ctx) {
        let t = &self.tracks[i];
        let protocol = env.payload_u64("protocol").unwrap_or(0) as u8;
        let reg = &self.registry;
        let id = &t.det.drone_id;
        let level = self.config.level;
        let (ok, cost) = match kind {
            ConfirmKind::IdRestoration if protocol == 1 => {
                (t.det.restores_rid.is_some(), self.config.rid_acquire_ms)
            }
            ConfirmKind::IdRestoration => (reg.lookup_id(id, level).is_some(), self.config.db_query_ms),
            ConfirmKind::ValidIdEntry => {
                (reg.validity(id, ctx.now, level) == IdValidity::Valid, self.config.db_query_ms)
            }
            ConfirmKind::DatabaseRestoration => (
                reg.validity(id, ctx.now, level) == IdValidity::Valid
                    && reg.find_authorization(id, ctx.now, &t.position).is_some(),
                2 * self.config.db_query_ms,
            ),
            ConfirmKind::ReturnToArea => (t.det.returns_to_area, self.config.rid_acquire_ms),
            ConfirmKind::MissionStop => (t.det.stops_mission, self.config.rid_acquire_ms),
        };
        let at = ctx.now.plus_ms(cost);
        let correlation = env.correlation_id.clone();
        let reply = match (self.config.confirmation, ok) {
            (ConfirmationMode::Explicit, true) => {
                self.to_authority(MsgType::Confirmed(kind), &correlation, json!({"drone_id": id}))
            }
            (ConfirmationMode::Explicit, false) => {
                self.to_authority(MsgType::NotConfirmed(kind), &correlation, json!({"drone_id": id}))
            }
            (ConfirmationMode::Implicit, true) => return,
            (ConfirmationMode::Implicit, false) => {
                let (opening, payload) = match (&t.opening, MsgType::opening(protocol)) {
                    (Some((m, p)), Some(o)) if *m == o => (o, p.clone()),
                    (_, Some(o)) => (o, json!({"drone_id": id})),
                    (_, None) => return,
                };
                self.to_authority(opening, &correlation, payload)
            }
        };
        ctx.send_at(reply, at);
    }

    fn lose(&mut self, i: usize, ctx: &mut Ctx) {
        let Some(t) = self.tracks.get_mut(i) else { return };
        if t.done {
            return;
        }
        t.done = true;
        if let Some(session) = t.session.take() {
            let env = Envelope::new(
                self.id,
                AgentId::AUTHORITY,
                MsgType::TrackLost,
                session,
                json!({"drone_id": t.det.drone_id}),
            );
            ctx.send(env);
        }
    }
}

fn centroid(points: &[GeoPoint]) -> GeoPoint {
    let n = points.len().max(1) as f64;
    let (lat, lon, alt) = points.iter().fold((0.0, 0.0, 0.0), |(a, b, c), p| {
        (a + p.lat(), b + p.lon(), c + p.alt())
    });
    GeoPoint::new(lat / n, lon / n, alt / n).expect("mean of valid points is valid")
}
