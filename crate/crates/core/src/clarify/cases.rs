//! The table of protocol cases and an exhaustive driver that checks every
//! reachable case against it.
//!
//! A [`WorldSpec`] fixes what the registry holds about one drone and what
//! the drone broadcasts. The post-detection probe decides which protocol
//! the world opens; the harness then plays the protocol under every
//! operator answer, risk level, repair policy and confirmation mode that
//! matters to it.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::authority::RepairPolicy;
use super::harness::{run_protocol, HarnessOutcome, HarnessSetup, WorldFacts};
use super::message::{MsgType, OperatorResponse};
use super::risk::RiskPolicy;
use super::session::ConfirmationMode;
use crate::domain::{Decision, DroneId, GeoPoint, OperatorId, RemoteIdMessage, RiskLevel, Timestamp, TimeWindow, Zone};
use crate::postdetect::{protocol_trigger, DroneState, PostDetectConfig, Probe};
use crate::registry::{AccessLevel, FaultKind, IdRecord, MissionAuthorization, Registry};

/// Expected result of one case at one risk level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expect {
    pub decision: Decision,
    pub cuas_msg: MsgType,
    pub operator_order: Option<MsgType>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub protocol: u8,
    pub case: &'static str,
    pub description: &'static str,
    /// `None` when the case cannot occur at that risk level.
    pub low: Option<Expect>,
    pub high: Option<Expect>,
}

impl OracleRow {
    pub fn expect(&self, level: RiskLevel) -> Option<Expect> {
        match level {
            RiskLevel::Low => self.low,
            RiskLevel::High => self.high,
        }
    }
}

const TIMED: Decision = Decision::TimedInterdiction { timeout_s: 30 };
const IMMEDIATE: Decision = Decision::ImmediateInterdiction { nondestructive: false };

const fn same(e: Expect) -> (Option<Expect>, Option<Expect>) {
    (Some(e), Some(e))
}

const fn ex(decision: Decision, cuas_msg: MsgType, operator_order: Option<MsgType>) -> Expect {
    Expect {
        decision,
        cuas_msg,
        operator_order,
    }
}

const STOP: Option<MsgType> = Some(MsgType::StopMission);
const COMPLETE: Option<MsgType> = Some(MsgType::CompleteMission);

const fn row(
    protocol: u8,
    case: &'static str,
    description: &'static str,
    (low, high): (Option<Expect>, Option<Expect>),
) -> OracleRow {
    OracleRow {
        protocol,
        case,
        description,
        low,
        high,
    }
}

const fn risk_row(protocol: u8, case: &'static str, description: &'static str, low: Decision, low_msg: MsgType) -> OracleRow {
    row(
        protocol,
        case,
        description,
        (
            Some(ex(low, low_msg, COMPLETE)),
            Some(ex(TIMED, MsgType::InterdictAfterTimeout, STOP)),
        ),
    )
}

const RESTORED: Expect = ex(Decision::RestorationConfirmed, MsgType::CaseClosed, None);
const TIMED_STOP: Expect = ex(TIMED, MsgType::InterdictAfterTimeout, STOP);

/// Every case of the eight clarification protocols, with default timeouts.
pub const ORACLE: [OracleRow; 29] = {
    use MsgType as M;
    [
        row(1, "CASE1", "no operator response", same(ex(IMMEDIATE, M::InterdictImmediately, None))),
        row(1, "CASE2", "operator not flying", same(ex(IMMEDIATE, M::InterdictImmediately, None))),
        risk_row(1, "CASE3", "operator already transmitting", Decision::TolerateIdFailure, M::TolerateIdFailure),
        risk_row(1, "CASE4", "operator cannot restore ID", Decision::TolerateIdFailure, M::TolerateIdFailure),
        row(1, "CASE5", "ID restoration confirmed", same(RESTORED)),
        risk_row(1, "CASE6", "ID restoration not confirmed", Decision::TolerateIdFailure, M::TolerateIdFailure),
        row(
            2,
            "CASE1",
            "no fault explains the unknown ID",
            same(ex(
                Decision::ImmediateInterdiction { nondestructive: true },
                M::ImmediateInterdictionAuthorization,
                None,
            )),
        ),
        row(2, "CASE2", "ID-DB fault only", same(TIMED_STOP)),
        row(2, "CASE3", "ID-DB and AUTH-DB faults", same(ex(Decision::TolerateAuthFailure, M::TolerateAuthFailure, None))),
        row(3, "CASE1", "ID-DB fix deferred", same(ex(Decision::TolerateIdFailure, M::TolerateIdFailure, None))),
        row(3, "CASE2", "ID-DB fix confirmed", same(RESTORED)),
        row(4, "CASE1", "no database fault", same(ex(TIMED, M::TimedInterdictionAuthorization, STOP))),
        row(4, "CASE2", "database fix deferred or not confirmed", same(ex(Decision::TolerateAuthFailure, M::TolerateAuthFailure, None))),
        row(4, "CASE3", "database fix confirmed", same(RESTORED)),
        row(5, "CASE1", "expired ID tolerated", same(ex(Decision::TolerateIdFailure, M::TolerateExpiredId, None))),
        row(5, "CASE2", "valid ID entry confirmed", same(RESTORED)),
        row(6, "CASE1", "AUTH-DB fault resolved", same(ex(Decision::IssueResolved, M::AuthDbMissResolved, None))),
        row(6, "CASE2", "unauthorized mission, high risk", (None, Some(TIMED_STOP))),
        row(
            6,
            "CASE3",
            "unauthorized mission, low risk",
            (Some(ex(Decision::TolerateMission, M::TolerateMission, COMPLETE)), None),
        ),
        row(7, "CASE1", "no operator response", same(TIMED_STOP)),
        risk_row(7, "CASE2", "operator claims to be in area", Decision::TolerateMission, M::TolerateMission),
        risk_row(7, "CASE3", "operator cannot return", Decision::TolerateMission, M::TolerateMission),
        row(7, "CASE4", "return confirmed", same(RESTORED)),
        row(7, "CASE5", "return not confirmed", same(TIMED_STOP)),
        row(8, "CASE1", "no operator response", same(TIMED_STOP)),
        risk_row(8, "CASE2", "operator claims to be on time", Decision::TolerateMission, M::TolerateMission),
        risk_row(8, "CASE3", "operator cannot stop", Decision::TolerateMission, M::TolerateMission),
        row(8, "CASE4", "mission stop confirmed", same(RESTORED)),
        row(8, "CASE5", "mission stop not confirmed", same(TIMED_STOP)),
    ]
};

pub fn oracle_row(protocol: u8, case: &str) -> Option<&'static OracleRow> {
    ORACLE.iter().find(|r| r.protocol == protocol && r.case == case)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RidState {
    Absent,
    Authentic,
    Fake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordState {
    Absent,
    Valid,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AuthState {
    Absent,
    /// Current window, area around the drone.
    InArea,
    /// Current window, area elsewhere.
    OutOfArea,
    /// Window ended a minute ago, area around the drone.
    Overrun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorldSpec {
    pub rid: RidState,
    pub record: RecordState,
    pub auth: AuthState,
    pub id_db_miss: bool,
    pub auth_db_miss: bool,
    pub stale_expiry: bool,
}

pub const NOW: Timestamp = Timestamp(10_000_000);
const KEY: &str = "issuer-1";
const LAT: f64 = 45.0;
const LON: f64 = 7.0;

pub fn world_drone() -> DroneId {
    DroneId::new("UAS-0001").expect("valid id")
}

pub fn world_operator() -> OperatorId {
    OperatorId::from_bytes([0x0a; 8])
}

pub fn world_position() -> GeoPoint {
    GeoPoint::new(LAT, LON, 50.0).expect("valid point")
}

impl WorldSpec {
    pub const fn clean(rid: RidState, record: RecordState, auth: AuthState) -> Self {
        WorldSpec {
            rid,
            record,
            auth,
            id_db_miss: false,
            auth_db_miss: false,
            stale_expiry: false,
        }
    }

    pub const fn faults(mut self, id_db_miss: bool, auth_db_miss: bool, stale_expiry: bool) -> Self {
        self.id_db_miss = id_db_miss;
        self.auth_db_miss = auth_db_miss;
        self.stale_expiry = stale_expiry;
        self
    }

    /// Every combination of broadcast, records and faults.
    pub fn all() -> Vec<WorldSpec> {
        let mut out = Vec::new();
        for rid in [RidState::Absent, RidState::Authentic, RidState::Fake] {
            for record in [RecordState::Absent, RecordState::Valid, RecordState::Expired] {
                for auth in [AuthState::Absent, AuthState::InArea, AuthState::OutOfArea, AuthState::Overrun] {
                    for bits in 0u8..8 {
                        out.push(WorldSpec::clean(rid, record, auth).faults(
                            bits & 1 != 0,
                            bits & 2 != 0,
                            bits & 4 != 0,
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn build(&self) -> World {
        let registry = Registry::new();
        registry.add_secret(KEY, b"issuer secret".to_vec());
        let drone = world_drone();
        let hour = 3_600_000;
        let expiry = match self.record {
            RecordState::Absent => None,
            RecordState::Valid => Some(NOW.plus_ms(hour)),
            RecordState::Expired => Some(Timestamp(NOW.as_millis() - hour)),
        };
        if let Some(expiry) = expiry {
            registry
                .register_drone(IdRecord {
                    drone_id: drone.clone(),
                    operator_id: world_operator(),
                    expiry,
                    issuer_secret_ref: KEY.into(),
                    personally_identifiable: serde_json::Value::Null,
                    tracking: Vec::new(),
                })
                .expect("fresh registry");
        }
        let minute = 60_000;
        let now = NOW.as_millis();
        let auth = match self.auth {
            AuthState::Absent => None,
            AuthState::InArea => Some((now - 10 * minute, now + 10 * minute, LAT)),
            AuthState::OutOfArea => Some((now - 10 * minute, now + 10 * minute, LAT + 0.5)),
            AuthState::Overrun => Some((now - 60 * minute, now - minute, LAT)),
        };
        if let Some((start, end, lat)) = auth {
            registry
                .insert_authorization(MissionAuthorization {
                    auth_id: "A-1".into(),
                    drone_id: drone.clone(),
                    operator_id: world_operator(),
                    window: TimeWindow::from_millis(start, end).expect("ordered window"),
                    area: Zone::square(lat, LON, 0.01).expect("valid zone"),
                })
                .expect("no overlap");
        }
        for (on, kind) in [
            (self.id_db_miss, FaultKind::IdDbMiss),
            (self.auth_db_miss, FaultKind::AuthDbMiss),
            (self.stale_expiry, FaultKind::StaleExpiry),
        ] {
            if on {
                registry.inject_fault(kind, drone.clone());
            }
        }
        let token = match self.rid {
            RidState::Absent => None,
            RidState::Authentic => registry.issue_token(&drone, KEY),
            RidState::Fake => Some(vec![0u8; 16]),
        };
        let rid = token.map(|t| {
            RemoteIdMessage::new(
                drone.clone(),
                world_position(),
                12.0,
                GeoPoint::surface(LAT - 0.001, LON).expect("valid point"),
                NOW,
                false,
                t,
                NOW,
                1_000,
            )
            .expect("valid broadcast")
        });
        World {
            spec: *self,
            registry: Arc::new(registry),
            rid,
        }
    }
}

pub struct World {
    pub spec: WorldSpec,
    pub registry: Arc<Registry>,
    pub rid: Option<RemoteIdMessage>,
}

impl World {
    pub fn probe(&self) -> Probe<'_> {
        Probe {
            registry: &self.registry,
            rid: self.rid.as_ref(),
            position: world_position(),
            at: NOW,
            level: AccessLevel::Officials,
            config: PostDetectConfig::default(),
        }
    }

    /// State the post-detection checks settle in.
    pub fn classify(&self) -> DroneState {
        self.probe().classify(DroneState::DroneDetected).0
    }

    /// Protocol the world opens, if any.
    pub fn protocol(&self) -> Option<u8> {
        protocol_trigger(self.classify())
    }

    pub fn setup(&self) -> HarnessSetup {
        let mut s = HarnessSetup::new(Arc::clone(&self.registry), world_drone(), world_position(), NOW);
        s.operator = Some(world_operator());
        s
    }
}

/// One concrete way to play a protocol in a world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub response: OperatorResponse,
    pub risk: RiskLevel,
    pub repair: RepairPolicy,
    pub facts: WorldFacts,
    pub confirmation: ConfirmationMode,
}

impl Variant {
    pub const fn new(response: OperatorResponse, risk: RiskLevel) -> Self {
        Variant {
            response,
            risk,
            repair: RepairPolicy::Defer,
            facts: WorldFacts {
                rid_restored: false,
                back_in_area: false,
                rid_ceased: false,
            },
            confirmation: ConfirmationMode::Explicit,
        }
    }

    pub const fn repair(mut self, repair: RepairPolicy) -> Self {
        self.repair = repair;
        self
    }

    /// Sets every scripted fact to `truth`.
    pub const fn claims_hold(mut self, truth: bool) -> Self {
        self.facts = WorldFacts {
            rid_restored: truth,
            back_in_area: truth,
            rid_ceased: truth,
        };
        self
    }

    pub const fn confirmation(mut self, mode: ConfirmationMode) -> Self {
        self.confirmation = mode;
        self
    }

    /// All variants that can change the course of `protocol`.
    pub fn all_for(protocol: u8) -> Vec<Variant> {
        let repairs: &[RepairPolicy] = match protocol {
            3..=5 => &[RepairPolicy::Defer, RepairPolicy::Immediate, RepairPolicy::Ineffective],
            _ => &[RepairPolicy::Defer],
        };
        let truths: &[bool] = match protocol {
            1 | 7 | 8 => &[false, true],
            _ => &[false],
        };
        let modes: &[ConfirmationMode] = match protocol {
            2 | 6 => &[ConfirmationMode::Explicit],
            _ => &[ConfirmationMode::Explicit, ConfirmationMode::Implicit],
        };
        let mut out = Vec::new();
        for &response in OperatorResponse::legal_for(protocol) {
            for risk in [RiskLevel::Low, RiskLevel::High] {
                for &repair in repairs {
                    for &truth in truths {
                        for &mode in modes {
                            out.push(
                                Variant::new(response, risk)
                                    .repair(repair)
                                    .claims_hold(truth)
                                    .confirmation(mode),
                            );
                        }
                    }
                }
            }
        }
        out
    }
}

/// Plays `protocol` in a fresh copy of `world`.
pub fn play(world: &WorldSpec, protocol: u8, v: Variant) -> Result<HarnessOutcome, String> {
    let w = world.build();
    let mut setup = w.setup();
    setup.responder = Box::new(v.response);
    setup.risk = RiskPolicy::constant(v.risk);
    setup.repair = v.repair;
    setup.facts = v.facts;
    setup.config.confirmation = v.confirmation;
    run_protocol(protocol, setup).map_err(|e| e.to_string())
}

/// Compares an outcome with the oracle row for the case it ended in.
pub fn check_outcome(out: &HarnessOutcome, risk: RiskLevel) -> Result<&'static OracleRow, String> {
    let row = oracle_row(out.deciding_protocol, &out.case_label)
        .ok_or_else(|| format!("P{} {} is not a known case", out.deciding_protocol, out.case_label))?;
    let expect = row
        .expect(risk)
        .ok_or_else(|| format!("P{} {} reached at {risk:?} risk", row.protocol, row.case))?;
    if out.decision != expect.decision {
        return Err(format!(
            "P{} {}: decision {:?}, expected {:?}",
            row.protocol, row.case, out.decision, expect.decision
        ));
    }
    if !out.cuas_messages.contains(&expect.cuas_msg) {
        return Err(format!("P{} {}: CUAS never got {}", row.protocol, row.case, expect.cuas_msg));
    }
    let orders: Vec<MsgType> = expect.operator_order.into_iter().collect();
    if out.operator_orders != orders {
        return Err(format!(
            "P{} {}: operator orders {:?}, expected {:?}",
            row.protocol, row.case, out.operator_orders, orders
        ));
    }
    if let Some(e) = out.errors.first() {
        return Err(format!("P{} {}: dispatch error {e}", row.protocol, row.case));
    }
    Ok(row)
}

/// A world and variant that lead straight to one case.
#[derive(Debug, Clone, Copy)]
pub struct Canonical {
    pub world: WorldSpec,
    pub response: OperatorResponse,
    pub repair: RepairPolicy,
    pub claims_hold: bool,
}

/// Canonical scenario for each row of [`ORACLE`].
pub fn canonical(protocol: u8, case: &str) -> Option<Canonical> {
    use AuthState as A;
    use OperatorResponse as R;
    use RecordState as Rec;
    use RidState::*;
    let w = WorldSpec::clean;
    let c = |world, response, repair, claims_hold| Canonical {
        world,
        response,
        repair,
        claims_hold,
    };
    let defer = RepairPolicy::Defer;
    let fix = RepairPolicy::Immediate;
    let silent = R::NoResponse;
    let p1 = w(Absent, Rec::Valid, A::InArea);
    let p7 = w(Authentic, Rec::Valid, A::OutOfArea);
    let p8 = w(Authentic, Rec::Valid, A::Overrun);
    Some(match (protocol, case) {
        (1, "CASE1") => c(p1, silent, defer, false),
        (1, "CASE2") => c(p1, R::NotFlying, defer, false),
        (1, "CASE3") => c(p1, R::AlreadyTransmitting, defer, false),
        (1, "CASE4") => c(p1, R::CannotRestore, defer, false),
        (1, "CASE5") => c(p1, R::RestoredId, defer, true),
        (1, "CASE6") => c(p1, R::RestoredId, defer, false),
        (2, "CASE1") => c(w(Authentic, Rec::Absent, A::Absent), silent, defer, false),
        (2, "CASE2") => c(w(Authentic, Rec::Valid, A::Absent).faults(true, false, false), silent, defer, false),
        (2, "CASE3") => c(w(Authentic, Rec::Valid, A::InArea).faults(true, true, false), silent, defer, false),
        (3, "CASE1") => c(w(Authentic, Rec::Valid, A::InArea).faults(true, false, false), silent, defer, false),
        (3, "CASE2") => c(w(Authentic, Rec::Valid, A::InArea).faults(true, false, false), silent, fix, false),
        (4, "CASE1") => c(w(Authentic, Rec::Expired, A::Absent), silent, defer, false),
        (4, "CASE2") => c(w(Authentic, Rec::Valid, A::InArea).faults(false, true, true), silent, defer, false),
        (4, "CASE3") => c(w(Authentic, Rec::Valid, A::InArea).faults(false, true, true), silent, fix, false),
        (5, "CASE1") => c(w(Authentic, Rec::Valid, A::InArea).faults(false, false, true), silent, defer, false),
        (5, "CASE2") => c(w(Authentic, Rec::Valid, A::InArea).faults(false, false, true), silent, fix, false),
        (6, "CASE1") => c(w(Authentic, Rec::Valid, A::InArea).faults(false, true, false), silent, defer, false),
        (6, "CASE2") | (6, "CASE3") => c(w(Authentic, Rec::Valid, A::Absent), silent, defer, false),
        (7, "CASE1") => c(p7, silent, defer, false),
        (7, "CASE2") => c(p7, R::AlreadyInAuthorizedArea, defer, false),
        (7, "CASE3") => c(p7, R::CannotReturn, defer, false),
        (7, "CASE4") => c(p7, R::ReturnedToArea, defer, true),
        (7, "CASE5") => c(p7, R::ReturnedToArea, defer, false),
        (8, "CASE1") => c(p8, silent, defer, false),
        (8, "CASE2") => c(p8, R::NotExceedingTime, defer, false),
        (8, "CASE3") => c(p8, R::CannotStop, defer, false),
        (8, "CASE4") => c(p8, R::StoppedMission, defer, true),
        (8, "CASE5") => c(p8, R::StoppedMission, defer, false),
        _ => return None,
    })
}

/// Runs the canonical scenario of `row` at every risk level the row
/// allows and checks the protocol and case it lands in.
pub fn check_row(row: &OracleRow) -> Result<(), String> {
    let c = canonical(row.protocol, row.case)
        .ok_or_else(|| format!("P{} {} has no scenario", row.protocol, row.case))?;
    let opened = c.world.build().protocol();
    if opened != Some(row.protocol) {
        return Err(format!(
            "P{} {}: world opens {opened:?}",
            row.protocol, row.case
        ));
    }
    for risk in [RiskLevel::Low, RiskLevel::High] {
        if row.expect(risk).is_none() {
            continue;
        }
        let v = Variant::new(c.response, risk)
            .repair(c.repair)
            .claims_hold(c.claims_hold);
        let out = play(&c.world, row.protocol, v)?;
        let got = check_outcome(&out, risk)?;
        if (got.protocol, got.case) != (row.protocol, row.case) {
            return Err(format!(
                "P{} {}: landed in P{} {} at {risk:?} risk",
                row.protocol, row.case, got.protocol, got.case
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct EnumerationReport {
    pub worlds: usize,
    pub runs: usize,
    pub protocols_opened: BTreeSet<u8>,
    pub covered: BTreeSet<(u8, &'static str)>,
    pub mismatches: Vec<String>,
}

impl EnumerationReport {
    pub fn uncovered(&self) -> Vec<(u8, &'static str)> {
        ORACLE
            .iter()
            .map(|r| (r.protocol, r.case))
            .filter(|k| !self.covered.contains(k))
            .collect()
    }
}

/// Plays every protocol-opening world under every relevant variant.
pub fn enumerate() -> EnumerationReport {
    let mut report = EnumerationReport::default();
    for world in WorldSpec::all() {
        report.worlds += 1;
        let Some(protocol) = world.build().protocol() else {
            continue;
        };
        report.protocols_opened.insert(protocol);
        for v in Variant::all_for(protocol) {
            report.runs += 1;
            let result = play(&world, protocol, v).and_then(|out| check_outcome(&out, v.risk));
            match result {
                Ok(row) => {
                    report.covered.insert((row.protocol, row.case));
                }
                Err(e) => report.mismatches.push(format!("{world:?} {v:?}: {e}")),
            }
        }
    }
    report
}

/// One fault-toggle expectation: the same world with and without a fault
/// (or with a repair that does or does not take effect) must end in the
/// two given cases.
#[derive(Debug, Clone, Copy)]
pub struct FaultToggle {
    pub name: &'static str,
    pub protocol: u8,
    pub with: (WorldSpec, RepairPolicy),
    pub with_case: (u8, &'static str),
    pub without: (WorldSpec, RepairPolicy),
    pub without_case: (u8, &'static str),
}

pub fn fault_toggles() -> Vec<FaultToggle> {
    use AuthState as A;
    use RecordState as Rec;
    use RepairPolicy::*;
    use RidState::Authentic;
    let w = WorldSpec::clean;
    let t = |name, protocol, with, with_case, without, without_case| FaultToggle {
        name,
        protocol,
        with,
        with_case,
        without,
        without_case,
    };
    let p3 = w(Authentic, Rec::Valid, A::InArea).faults(true, false, false);
    let p4 = w(Authentic, Rec::Valid, A::InArea).faults(false, true, true);
    let p5 = w(Authentic, Rec::Valid, A::InArea).faults(false, false, true);
    let p6 = w(Authentic, Rec::Valid, A::InArea).faults(false, true, false);
    vec![
        t("id_db_miss fixed vs left in place", 3, (p3, Ineffective), (2, "CASE2"), (p3, Immediate), (3, "CASE2")),
        t("id_db_miss deferred vs fixed", 3, (p3, Defer), (3, "CASE1"), (p3, Immediate), (3, "CASE2")),
        t(
            "auth_db_miss on an unknown ID",
            2,
            (w(Authentic, Rec::Valid, A::InArea).faults(true, true, false), Defer),
            (2, "CASE3"),
            (w(Authentic, Rec::Valid, A::Absent).faults(true, false, false), Defer),
            (2, "CASE2"),
        ),
        t(
            "id_db_miss explains an unknown ID",
            2,
            (w(Authentic, Rec::Valid, A::Absent).faults(true, false, false), Defer),
            (2, "CASE2"),
            (w(Authentic, Rec::Absent, A::Absent), Defer),
            (2, "CASE1"),
        ),
        t(
            "stale_expiry and auth_db_miss both present vs none",
            4,
            (p4, Defer),
            (4, "CASE2"),
            (w(Authentic, Rec::Expired, A::Absent), Defer),
            (4, "CASE1"),
        ),
        t("stale_expiry and auth_db_miss both cleared", 4, (p4, Ineffective), (4, "CASE2"), (p4, Immediate), (4, "CASE3")),
        t("stale_expiry left in place escalates", 5, (p5, Ineffective), (4, "CASE2"), (p5, Immediate), (5, "CASE2")),
        t(
            "auth_db_miss resolved vs genuine absence",
            6,
            (p6, Defer),
            (6, "CASE1"),
            (w(Authentic, Rec::Valid, A::Absent), Defer),
            (6, "CASE2"),
        ),
    ]
}

/// Plays both sides of a toggle at high risk and checks the cases.
pub fn check_toggle(t: &FaultToggle) -> Result<(), String> {
    for ((world, repair), (p, case)) in [(t.with, t.with_case), (t.without, t.without_case)] {
        let opened = world.build().protocol();
        if opened != Some(t.protocol) {
            return Err(format!("{}: world opens {opened:?}", t.name));
        }
        let v = Variant::new(OperatorResponse::NoResponse, RiskLevel::High).repair(repair);
        let out = play(&world, t.protocol, v)?;
        check_outcome(&out, RiskLevel::High)?;
        if (out.deciding_protocol, out.case_label.as_str()) != (p, case) {
            return Err(format!(
                "{}: expected P{p} {case}, got P{} {}",
                t.name, out.deciding_protocol, out.case_label
            ));
        }
    }
    Ok(())
}
