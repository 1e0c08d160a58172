//! CUAS post-detection state machine.
//!
//! A detected drone walks a chain of checks (Remote ID, authenticity,
//! ID-DB, expiry, AUTH-DB, area, time). Failed checks land in orange
//! states that trigger one of the eight clarification protocols; protocol
//! outcomes move the drone to a green state or to one of the two red
//! interdiction states.
//!
//! The table is static. [`step`] is a pure lookup, [`transition_table`]
//! lists every edge, and [`Probe`] turns registry queries into the next
//! check event so runtimes and the test harness drive the machine the
//! same way.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    point_in_zone, Decision, DroneId, GeoPoint, RemoteIdMessage, Timestamp, Zone,
};
use crate::registry::{AccessLevel, IdValidity, MissionAuthorization, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DroneState {
    Surveillance,
    DroneDetected,
    IdReceived,
    NoIdReceived,
    NoIdNoPotentialOperator,
    NoIdButPotentialOperator,
    FakeId,
    /// Authentic ID, not yet looked up.
    AuthenticId,
    IdNotInIdDb,
    UnknownId,
    /// Authentic ID absent from the ID-DB while the AUTH-DB holds an
    /// authorization for it.
    IdKnownButNoAuth,
    /// ID found in the ID-DB, expiry not yet checked.
    KnownId,
    ExpiredId,
    ExpiredIdUnauthorized,
    ExpiredIdButAuthorized,
    ValidId,
    MissionNotAuthorized,
    AuthorizedMission,
    AreaViolation,
    /// Inside the authorized area, time not yet checked.
    InAuthorizedArea,
    TimeViolation,
    Compliant,
    TolerateIdFailure,
    TolerateAuthFailure,
    ImmediateInterdiction,
    TimedInterdiction,
}

impl DroneState {
    pub const ALL: [DroneState; 26] = [
        DroneState::Surveillance,
        DroneState::DroneDetected,
        DroneState::IdReceived,
        DroneState::NoIdReceived,
        DroneState::NoIdNoPotentialOperator,
        DroneState::NoIdButPotentialOperator,
        DroneState::FakeId,
        DroneState::AuthenticId,
        DroneState::IdNotInIdDb,
        DroneState::UnknownId,
        DroneState::IdKnownButNoAuth,
        DroneState::KnownId,
        DroneState::ExpiredId,
        DroneState::ExpiredIdUnauthorized,
        DroneState::ExpiredIdButAuthorized,
        DroneState::ValidId,
        DroneState::MissionNotAuthorized,
        DroneState::AuthorizedMission,
        DroneState::AreaViolation,
        DroneState::InAuthorizedArea,
        DroneState::TimeViolation,
        DroneState::Compliant,
        DroneState::TolerateIdFailure,
        DroneState::TolerateAuthFailure,
        DroneState::ImmediateInterdiction,
        DroneState::TimedInterdiction,
    ];

    pub fn color(self) -> Color {
        use DroneState::*;
        match self {
            Surveillance | DroneDetected | IdReceived | AuthenticId | KnownId | ValidId
            | AuthorizedMission | InAuthorizedArea | Compliant | TolerateIdFailure
            | TolerateAuthFailure => Color::Green,
            ImmediateInterdiction | TimedInterdiction | FakeId | NoIdNoPotentialOperator => {
                Color::Red
            }
            NoIdReceived | NoIdButPotentialOperator | IdNotInIdDb | UnknownId
            | IdKnownButNoAuth | ExpiredId | ExpiredIdUnauthorized | ExpiredIdButAuthorized
            | MissionNotAuthorized | AreaViolation | TimeViolation => Color::Orange,
        }
    }

    pub fn name(self) -> &'static str {
        use DroneState::*;
        match self {
            Surveillance => "Surveillance",
            DroneDetected => "DroneDetected",
            IdReceived => "IdReceived",
            NoIdReceived => "NoIdReceived",
            NoIdNoPotentialOperator => "NoIdNoPotentialOperator",
            NoIdButPotentialOperator => "NoIdButPotentialOperator",
            FakeId => "FakeId",
            AuthenticId => "AuthenticId",
            IdNotInIdDb => "IdNotInIdDb",
            UnknownId => "UnknownId",
            IdKnownButNoAuth => "IdKnownButNoAuth",
            KnownId => "KnownId",
            ExpiredId => "ExpiredId",
            ExpiredIdUnauthorized => "ExpiredIdUnauthorized",
            ExpiredIdButAuthorized => "ExpiredIdButAuthorized",
            ValidId => "ValidId",
            MissionNotAuthorized => "MissionNotAuthorized",
            AuthorizedMission => "AuthorizedMission",
            AreaViolation => "AreaViolation",
            InAuthorizedArea => "InAuthorizedArea",
            TimeViolation => "TimeViolation",
            Compliant => "Compliant",
            TolerateIdFailure => "TolerateIdFailure",
            TolerateAuthFailure => "TolerateAuthFailure",
            ImmediateInterdiction => "ImmediateInterdiction",
            TimedInterdiction => "TimedInterdiction",
        }
    }

    pub fn is_interdiction(self) -> bool {
        matches!(
            self,
            DroneState::ImmediateInterdiction | DroneState::TimedInterdiction
        )
    }
}

impl fmt::Display for DroneState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Green,
    Orange,
    Red,
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Green => "green",
            Color::Orange => "orange",
            Color::Red => "red",
        })
    }
}

/// Payload-free view of a [`Decision`], used as a table key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutcomeKind {
    ImmediateInterdiction,
    TimedInterdiction,
    TolerateIdFailure,
    TolerateAuthFailure,
    TolerateMission,
    RestorationConfirmed,
    IssueResolved,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 7] = [
        OutcomeKind::ImmediateInterdiction,
        OutcomeKind::TimedInterdiction,
        OutcomeKind::TolerateIdFailure,
        OutcomeKind::TolerateAuthFailure,
        OutcomeKind::TolerateMission,
        OutcomeKind::RestorationConfirmed,
        OutcomeKind::IssueResolved,
    ];
}

impl From<&Decision> for OutcomeKind {
    fn from(d: &Decision) -> Self {
        match d {
            Decision::ImmediateInterdiction { .. } => OutcomeKind::ImmediateInterdiction,
            Decision::TimedInterdiction { .. } => OutcomeKind::TimedInterdiction,
            Decision::TolerateIdFailure => OutcomeKind::TolerateIdFailure,
            Decision::TolerateAuthFailure => OutcomeKind::TolerateAuthFailure,
            Decision::TolerateMission => OutcomeKind::TolerateMission,
            Decision::RestorationConfirmed => OutcomeKind::RestorationConfirmed,
            Decision::IssueResolved => OutcomeKind::IssueResolved,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckEvent {
    ObjectClassifiedAsDrone,
    RidReceived(RemoteIdMessage),
    RidTimeout,
    AuthenticityOk,
    AuthenticityFail,
    IdDbHit,
    IdDbMiss,
    IdValid,
    IdExpired,
    AuthDbHit,
    AuthDbMiss,
    PotentialOperatorFound(MissionAuthorization),
    NoPotentialOperator,
    AreaOk,
    AreaViolated,
    TimeOk,
    TimeViolated,
    ProtocolOutcome(Decision),
    MissionEndedOrOutOfRange,
}

/// Payload-free event key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventTag {
    ObjectClassifiedAsDrone,
    RidReceived,
    RidTimeout,
    AuthenticityOk,
    AuthenticityFail,
    IdDbHit,
    IdDbMiss,
    IdValid,
    IdExpired,
    AuthDbHit,
    AuthDbMiss,
    PotentialOperatorFound,
    NoPotentialOperator,
    AreaOk,
    AreaViolated,
    TimeOk,
    TimeViolated,
    ProtocolOutcome(OutcomeKind),
    MissionEndedOrOutOfRange,
}

impl EventTag {
    pub fn all() -> Vec<EventTag> {
        use EventTag::*;
        let mut v = vec![
            ObjectClassifiedAsDrone,
            RidReceived,
            RidTimeout,
            AuthenticityOk,
            AuthenticityFail,
            IdDbHit,
            IdDbMiss,
            IdValid,
            IdExpired,
            AuthDbHit,
            AuthDbMiss,
            PotentialOperatorFound,
            NoPotentialOperator,
            AreaOk,
            AreaViolated,
            TimeOk,
            TimeViolated,
        ];
        v.extend(OutcomeKind::ALL.into_iter().map(ProtocolOutcome));
        v.push(MissionEndedOrOutOfRange);
        v
    }

    pub fn name(&self) -> String {
        match self {
            EventTag::ProtocolOutcome(k) => format!("ProtocolOutcome({k:?})"),
            other => format!("{other:?}"),
        }
    }
}

impl CheckEvent {
    pub fn tag(&self) -> EventTag {
        use CheckEvent as E;
        match self {
            E::ObjectClassifiedAsDrone => EventTag::ObjectClassifiedAsDrone,
            E::RidReceived(_) => EventTag::RidReceived,
            E::RidTimeout => EventTag::RidTimeout,
            E::AuthenticityOk => EventTag::AuthenticityOk,
            E::AuthenticityFail => EventTag::AuthenticityFail,
            E::IdDbHit => EventTag::IdDbHit,
            E::IdDbMiss => EventTag::IdDbMiss,
            E::IdValid => EventTag::IdValid,
            E::IdExpired => EventTag::IdExpired,
            E::AuthDbHit => EventTag::AuthDbHit,
            E::AuthDbMiss => EventTag::AuthDbMiss,
            E::PotentialOperatorFound(_) => EventTag::PotentialOperatorFound,
            E::NoPotentialOperator => EventTag::NoPotentialOperator,
            E::AreaOk => EventTag::AreaOk,
            E::AreaViolated => EventTag::AreaViolated,
            E::TimeOk => EventTag::TimeOk,
            E::TimeViolated => EventTag::TimeViolated,
            E::ProtocolOutcome(d) => EventTag::ProtocolOutcome(d.into()),
            E::MissionEndedOrOutOfRange => EventTag::MissionEndedOrOutOfRange,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no transition from {state} on {event}")]
pub struct IllegalTransition {
    pub state: DroneState,
    pub event: String,
}

/// Successor for a payload-free event, or `None` if the pair is illegal.
pub fn successor(s: DroneState, e: EventTag) -> Option<DroneState> {
    use DroneState as S;
    use EventTag as E;
    use OutcomeKind as O;

    if e == E::MissionEndedOrOutOfRange {
        return Some(S::Surveillance);
    }
    let next = match (s, e) {
        (S::Surveillance, E::ObjectClassifiedAsDrone) => S::DroneDetected,

        (S::DroneDetected, E::RidReceived) => S::IdReceived,
        (S::DroneDetected, E::RidTimeout) => S::NoIdReceived,

        (S::NoIdReceived, E::PotentialOperatorFound) => S::NoIdButPotentialOperator,
        (S::NoIdReceived, E::NoPotentialOperator) => S::NoIdNoPotentialOperator,

        (S::NoIdButPotentialOperator, E::ObjectClassifiedAsDrone) => S::DroneDetected,
        (S::NoIdButPotentialOperator, E::ProtocolOutcome(o)) => match o {
            O::ImmediateInterdiction => S::ImmediateInterdiction,
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateIdFailure => S::TolerateIdFailure,
            O::RestorationConfirmed => S::IdReceived,
            _ => return None,
        },

        (S::IdReceived, E::AuthenticityOk) => S::AuthenticId,
        (S::IdReceived, E::AuthenticityFail) => S::FakeId,

        (S::AuthenticId, E::IdDbHit) => S::KnownId,
        (S::AuthenticId, E::IdDbMiss) => S::IdNotInIdDb,

        (S::IdNotInIdDb, E::AuthDbHit) => S::IdKnownButNoAuth,
        (S::IdNotInIdDb, E::AuthDbMiss) => S::UnknownId,

        (S::UnknownId, E::ProtocolOutcome(o)) => match o {
            O::ImmediateInterdiction => S::ImmediateInterdiction,
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateAuthFailure => S::TolerateAuthFailure,
            _ => return None,
        },

        // Escalates to the unknown-ID protocol when the repair claim fails.
        (S::IdKnownButNoAuth, E::ProtocolOutcome(o)) => match o {
            O::TolerateIdFailure => S::TolerateIdFailure,
            O::RestorationConfirmed => S::KnownId,
            O::ImmediateInterdiction => S::ImmediateInterdiction,
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateAuthFailure => S::TolerateAuthFailure,
            _ => return None,
        },

        (S::KnownId, E::IdValid) => S::ValidId,
        (S::KnownId, E::IdExpired) => S::ExpiredId,

        (S::ExpiredId, E::AuthDbHit) => S::ExpiredIdButAuthorized,
        (S::ExpiredId, E::AuthDbMiss) => S::ExpiredIdUnauthorized,

        (S::ExpiredIdUnauthorized, E::ProtocolOutcome(o)) => match o {
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateAuthFailure => S::TolerateAuthFailure,
            O::RestorationConfirmed => S::ValidId,
            _ => return None,
        },

        // Escalates to the expired-and-unauthorized protocol.
        (S::ExpiredIdButAuthorized, E::ProtocolOutcome(o)) => match o {
            O::TolerateIdFailure => S::TolerateIdFailure,
            O::RestorationConfirmed => S::ValidId,
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateAuthFailure => S::TolerateAuthFailure,
            _ => return None,
        },

        (S::ValidId | S::TolerateIdFailure, E::AuthDbHit) => S::AuthorizedMission,
        (S::ValidId | S::TolerateIdFailure, E::AuthDbMiss) => S::MissionNotAuthorized,

        (S::MissionNotAuthorized, E::ProtocolOutcome(o)) => match o {
            O::IssueResolved => S::ValidId,
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateMission => S::TolerateAuthFailure,
            _ => return None,
        },

        (S::AuthorizedMission | S::TolerateAuthFailure, E::AreaOk) => S::InAuthorizedArea,
        (S::AuthorizedMission | S::TolerateAuthFailure, E::AreaViolated) => S::AreaViolation,

        (S::AreaViolation, E::ObjectClassifiedAsDrone) => S::DroneDetected,
        (S::AreaViolation, E::ProtocolOutcome(o)) => match o {
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateMission => S::TolerateAuthFailure,
            O::RestorationConfirmed => S::InAuthorizedArea,
            _ => return None,
        },

        (S::InAuthorizedArea, E::TimeOk) => S::Compliant,
        (S::InAuthorizedArea, E::TimeViolated) => S::TimeViolation,

        (S::TimeViolation, E::ObjectClassifiedAsDrone) => S::DroneDetected,
        (S::TimeViolation, E::ProtocolOutcome(o)) => match o {
            O::TimedInterdiction => S::TimedInterdiction,
            O::TolerateMission => S::TolerateAuthFailure,
            O::RestorationConfirmed => S::Surveillance,
            _ => return None,
        },

        // Periodic recheck loop.
        (S::Compliant | S::TolerateIdFailure | S::TolerateAuthFailure, E::ObjectClassifiedAsDrone) => {
            S::DroneDetected
        }

        _ => return None,
    };
    Some(next)
}

/// One transition of the machine.
pub fn step(s: DroneState, e: &CheckEvent) -> Result<DroneState, IllegalTransition> {
    successor(s, e.tag()).ok_or_else(|| IllegalTransition {
        state: s,
        event: e.tag().name(),
    })
}

/// States that move on without an external event.
pub fn forced_successor(s: DroneState) -> Option<DroneState> {
    match s {
        DroneState::FakeId | DroneState::NoIdNoPotentialOperator => {
            Some(DroneState::ImmediateInterdiction)
        }
        _ => None,
    }
}

/// Protocol run from an orange state, if any.
pub fn protocol_trigger(s: DroneState) -> Option<u8> {
    match s {
        DroneState::NoIdButPotentialOperator => Some(1),
        DroneState::UnknownId => Some(2),
        DroneState::IdKnownButNoAuth => Some(3),
        DroneState::ExpiredIdUnauthorized => Some(4),
        DroneState::ExpiredIdButAuthorized => Some(5),
        DroneState::MissionNotAuthorized => Some(6),
        DroneState::AreaViolation => Some(7),
        DroneState::TimeViolation => Some(8),
        _ => None,
    }
}

/// Inverse of [`protocol_trigger`].
pub fn trigger_state(protocol: u8) -> Option<DroneState> {
    DroneState::ALL
        .into_iter()
        .find(|&s| protocol_trigger(s) == Some(protocol))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: DroneState,
    /// `None` for forced transitions.
    pub event: Option<EventTag>,
    pub to: DroneState,
}

impl Edge {
    pub fn event_name(&self) -> String {
        self.event.map_or_else(|| "forced".to_string(), |e| e.name())
    }
}

/// Every legal edge, including forced ones, in state then event order.
pub fn transition_table() -> Vec<Edge> {
    let events = EventTag::all();
    let mut edges = Vec::new();
    for s in DroneState::ALL {
        for &e in &events {
            if let Some(to) = successor(s, e) {
                edges.push(Edge {
                    from: s,
                    event: Some(e),
                    to,
                });
            }
        }
        if let Some(to) = forced_successor(s) {
            edges.push(Edge {
                from: s,
                event: None,
                to,
            });
        }
    }
    edges
}

/// Edge list as `state,event,next_state,color` lines, color being that of
/// `next_state`.
pub fn export_edge_list() -> String {
    let mut out = String::from("state,event,next_state,color\n");
    for e in transition_table() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.from,
            e.event_name(),
            e.to,
            e.to.color()
        ));
    }
    out
}

/// States reachable from `start`, excluding the mission-ended reset edges.
pub fn reachable_from(start: DroneState) -> BTreeSet<DroneState> {
    let mut adj: BTreeMap<DroneState, Vec<DroneState>> = BTreeMap::new();
    for e in transition_table() {
        if e.event != Some(EventTag::MissionEndedOrOutOfRange) {
            adj.entry(e.from).or_default().push(e.to);
        }
    }
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for &n in adj.get(&s).map(Vec::as_slice).unwrap_or_default() {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// For every orange state: can it reach some green state, and some red one?
pub fn orange_reachability() -> Vec<(DroneState, bool, bool)> {
    DroneState::ALL
        .into_iter()
        .filter(|s| s.color() == Color::Orange)
        .map(|s| {
            let r = reachable_from(s);
            (
                s,
                r.iter().any(|t| t.color() == Color::Green),
                r.iter().any(|t| t.color() == Color::Red),
            )
        })
        .collect()
}

fn decision_for(kind: OutcomeKind, timeout_s: u32) -> Decision {
    match kind {
        OutcomeKind::ImmediateInterdiction => Decision::immediate(),
        OutcomeKind::TimedInterdiction => Decision::TimedInterdiction { timeout_s },
        OutcomeKind::TolerateIdFailure => Decision::TolerateIdFailure,
        OutcomeKind::TolerateAuthFailure => Decision::TolerateAuthFailure,
        OutcomeKind::TolerateMission => Decision::TolerateMission,
        OutcomeKind::RestorationConfirmed => Decision::RestorationConfirmed,
        OutcomeKind::IssueResolved => Decision::IssueResolved,
    }
}

/// Number of consecutive runs of `protocol` for one drone, each granting
/// `outcome`, before the drone lands in a red state. `None` if it never
/// does within `threshold + 2` runs, or if the protocol cannot grant
/// `outcome` at all.
pub fn runs_to_red(protocol: u8, outcome: OutcomeKind, threshold: u32) -> Option<u32> {
    let trigger = trigger_state(protocol)?;
    successor(trigger, EventTag::ProtocolOutcome(outcome))?;
    let drone = DroneId::new("deadlock-probe").expect("valid id");
    let mut counter = ToleranceCounter::new();
    for run in 1..=threshold + 2 {
        let d = apply_tolerance(&mut counter, &drone, protocol, threshold, decision_for(outcome, 30), 30);
        let next = successor(trigger, EventTag::ProtocolOutcome((&d).into()))?;
        if next.color() == Color::Red {
            return Some(run);
        }
    }
    None
}

/// Worst case of [`runs_to_red`] over every protocol and every clearing
/// outcome its trigger state accepts.
pub fn worst_case_runs_to_red(threshold: u32) -> Option<u32> {
    let mut worst = 0;
    for p in 1..=8 {
        let trigger = trigger_state(p)?;
        for kind in OutcomeKind::ALL {
            let Some(next) = successor(trigger, EventTag::ProtocolOutcome(kind)) else {
                continue;
            };
            if next.color() == Color::Red {
                continue;
            }
            worst = worst.max(runs_to_red(p, kind, threshold)?);
        }
    }
    Some(worst)
}

/// Clearing decisions granted per (drone, protocol).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToleranceCounter {
    counts: BTreeMap<(DroneId, u8), u32>,
}

impl ToleranceCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, drone: &DroneId, protocol: u8) -> u32 {
        self.counts.get(&(drone.clone(), protocol)).copied().unwrap_or(0)
    }

    /// Forget a drone, at the end of its tracking episode.
    pub fn reset(&mut self, drone: &DroneId) {
        self.counts.retain(|(d, _), _| d != drone);
    }
}

/// Counts a non-interdiction decision and converts it into a timed
/// interdiction once the count exceeds `threshold`. Interdictions pass
/// through uncounted.
pub fn apply_tolerance(
    counter: &mut ToleranceCounter,
    drone: &DroneId,
    protocol: u8,
    threshold: u32,
    decision: Decision,
    timeout_s: u32,
) -> Decision {
    if decision.is_interdiction() {
        return decision;
    }
    let n = counter.counts.entry((drone.clone(), protocol)).or_insert(0);
    *n += 1;
    if *n > threshold {
        Decision::TimedInterdiction {
            timeout_s: timeout_s.max(1),
        }
    } else {
        decision
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostDetectConfig {
    pub tolerance_threshold: u32,
    pub recheck_period_ms: u64,
    /// How long after an authorization ends a drone still counts as that
    /// mission overrunning its time, rather than as unauthorized.
    pub overrun_horizon_ms: u64,
    /// Half width, in degrees, of the square searched for potential
    /// operators around a drone without Remote ID.
    pub search_half_width_deg: f64,
}

impl Default for PostDetectConfig {
    fn default() -> Self {
        PostDetectConfig {
            tolerance_threshold: 2,
            recheck_period_ms: 1_000,
            overrun_horizon_ms: 3_600_000,
            search_half_width_deg: 0.001,
        }
    }
}

/// What the CUAS currently observes about one drone, plus the registry it
/// may query. Produces the check event for the current state.
pub struct Probe<'a> {
    pub registry: &'a Registry,
    pub rid: Option<&'a RemoteIdMessage>,
    pub position: GeoPoint,
    pub at: Timestamp,
    pub level: AccessLevel,
    pub config: PostDetectConfig,
}

impl Probe<'_> {
    fn drone_id(&self) -> Option<&DroneId> {
        self.rid.map(|r| &r.drone_id)
    }

    /// Authorization covering `at`, or the latest one still inside the
    /// overrun horizon.
    pub fn mission(&self) -> Option<MissionAuthorization> {
        let id = self.drone_id()?;
        self.registry.find_authorization_any(id, self.at).or_else(|| {
            self.registry
                .find_latest_started(id, self.at)
                .filter(|a| {
                    self.at.as_millis() < a.window.end().as_millis() + self.config.overrun_horizon_ms
                })
        })
    }

    pub fn search_zone(&self) -> Zone {
        Zone::square(
            self.position.lat(),
            self.position.lon(),
            self.config.search_half_width_deg,
        )
        .expect("search half width is positive")
    }

    /// The check the CUAS performs in state `s`, or `None` when the state
    /// waits for a protocol or is final.
    pub fn check_event(&self, s: DroneState) -> Option<CheckEvent> {
        use DroneState as S;
        let ev = match s {
            S::DroneDetected => match self.rid {
                Some(r) => CheckEvent::RidReceived(r.clone()),
                None => CheckEvent::RidTimeout,
            },
            S::NoIdReceived => {
                match self
                    .registry
                    .find_potential_operators(&self.search_zone(), self.at)
                    .into_iter()
                    .next()
                {
                    Some(a) => CheckEvent::PotentialOperatorFound(a),
                    None => CheckEvent::NoPotentialOperator,
                }
            }
            S::IdReceived => {
                if self.registry.verify_authenticity(self.rid?) {
                    CheckEvent::AuthenticityOk
                } else {
                    CheckEvent::AuthenticityFail
                }
            }
            S::AuthenticId => match self.registry.lookup_id(self.drone_id()?, self.level) {
                Some(_) => CheckEvent::IdDbHit,
                None => CheckEvent::IdDbMiss,
            },
            S::KnownId => match self.registry.validity(self.drone_id()?, self.at, self.level) {
                IdValidity::Valid => CheckEvent::IdValid,
                _ => CheckEvent::IdExpired,
            },
            S::IdNotInIdDb | S::ValidId | S::TolerateIdFailure => match self.mission() {
                Some(_) => CheckEvent::AuthDbHit,
                None => CheckEvent::AuthDbMiss,
            },
            S::ExpiredId => {
                match self
                    .registry
                    .find_authorization(self.drone_id()?, self.at, &self.position)
                {
                    Some(_) => CheckEvent::AuthDbHit,
                    None => CheckEvent::AuthDbMiss,
                }
            }
            S::AuthorizedMission | S::TolerateAuthFailure => match self.mission() {
                Some(a) if !point_in_zone(&self.position, &a.area) => CheckEvent::AreaViolated,
                _ => CheckEvent::AreaOk,
            },
            S::InAuthorizedArea => match self.mission() {
                Some(a) if !a.window.contains(self.at) => CheckEvent::TimeViolated,
                _ => CheckEvent::TimeOk,
            },
            _ => return None,
        };
        Some(ev)
    }

    /// Runs checks from `start` until a protocol state, `Compliant` or a
    /// red state. Returns the final state and the path taken.
    pub fn classify(&self, start: DroneState) -> (DroneState, Vec<(DroneState, EventTag)>) {
        let mut s = start;
        let mut path = Vec::new();
        loop {
            if let Some(next) = forced_successor(s) {
                s = next;
                continue;
            }
            let Some(ev) = self.check_event(s) else {
                return (s, path);
            };
            path.push((s, ev.tag()));
            s = step(s, &ev).expect("probe only emits legal events");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TimeWindow;
    use crate::registry::{FaultKind, IdRecord};
    use crate::domain::OperatorId;

    #[test]
    fn detection_and_fake_id() {
        assert_eq!(
            step(DroneState::Surveillance, &CheckEvent::ObjectClassifiedAsDrone),
            Ok(DroneState::DroneDetected)
        );
        let s = step(DroneState::IdReceived, &CheckEvent::AuthenticityFail).unwrap();
        assert_eq!(s, DroneState::FakeId);
        assert_eq!(forced_successor(s), Some(DroneState::ImmediateInterdiction));
    }

    #[test]
    fn compliant_loops_or_resets() {
        assert_eq!(
            step(DroneState::Compliant, &CheckEvent::MissionEndedOrOutOfRange),
            Ok(DroneState::Surveillance)
        );
        assert_eq!(
            step(DroneState::Compliant, &CheckEvent::ObjectClassifiedAsDrone),
            Ok(DroneState::DroneDetected)
        );
    }

    #[test]
    fn no_id_no_operator_interdicts() {
        let s = step(DroneState::NoIdReceived, &CheckEvent::NoPotentialOperator).unwrap();
        assert_eq!(s, DroneState::NoIdNoPotentialOperator);
        assert_eq!(forced_successor(s), Some(DroneState::ImmediateInterdiction));
    }

    #[test]
    fn illegal_pair_is_an_error() {
        let err = step(DroneState::Surveillance, &CheckEvent::IdDbHit).unwrap_err();
        assert_eq!(err.state, DroneState::Surveillance);
        assert!(step(
            DroneState::UnknownId,
            &CheckEvent::ProtocolOutcome(Decision::TolerateMission)
        )
        .is_err());
    }

    #[test]
    fn triggers() {
        assert_eq!(protocol_trigger(DroneState::UnknownId), Some(2));
        assert_eq!(protocol_trigger(DroneState::Compliant), None);
        assert_eq!(protocol_trigger(DroneState::AreaViolation), Some(7));
        for p in 1..=8 {
            assert_eq!(protocol_trigger(trigger_state(p).unwrap()), Some(p));
        }
    }

    #[test]
    fn tolerance_threshold() {
        let d = DroneId::new("D").unwrap();
        let mut c = ToleranceCounter::new();
        let tol = Decision::TolerateIdFailure;
        assert_eq!(apply_tolerance(&mut c, &d, 1, 2, tol, 30), tol);
        assert_eq!(apply_tolerance(&mut c, &d, 1, 2, tol, 30), tol);
        assert_eq!(
            apply_tolerance(&mut c, &d, 1, 2, tol, 30),
            Decision::TimedInterdiction { timeout_s: 30 }
        );
        // Other protocols count separately.
        assert_eq!(apply_tolerance(&mut c, &d, 6, 2, tol, 30), tol);
        let mut zero = ToleranceCounter::new();
        assert!(apply_tolerance(&mut zero, &d, 1, 0, tol, 30).is_interdiction());
        // Interdictions are not counted.
        let imm = Decision::immediate();
        assert_eq!(apply_tolerance(&mut zero, &d, 2, 0, imm, 30), imm);
        assert_eq!(zero.count(&d, 2), 0);
    }

    #[test]
    fn edge_list_header_and_forced_rows() {
        let text = export_edge_list();
        assert!(text.starts_with("state,event,next_state,color\n"));
        assert!(text.contains("FakeId,forced,ImmediateInterdiction,red\n"));
        assert!(text.contains("Surveillance,ObjectClassifiedAsDrone,DroneDetected,green\n"));
    }

    fn cooperative_registry() -> (Registry, RemoteIdMessage, GeoPoint) {
        let reg = Registry::new();
        reg.add_secret("k", b"s".to_vec());
        let id = DroneId::new("D1").unwrap();
        reg.register_drone(IdRecord {
            drone_id: id.clone(),
            operator_id: OperatorId::from_bytes([7; 8]),
            expiry: Timestamp(1_000_000),
            issuer_secret_ref: "k".into(),
            personally_identifiable: serde_json::Value::Null,
            tracking: vec![],
        })
        .unwrap();
        reg.insert_authorization(MissionAuthorization {
            auth_id: "a".into(),
            drone_id: id.clone(),
            operator_id: OperatorId::from_bytes([7; 8]),
            window: TimeWindow::from_millis(0, 10_000).unwrap(),
            area: Zone::square(10.0, 10.0, 0.01).unwrap(),
        })
        .unwrap();
        let pos = GeoPoint::new(10.0, 10.0, 50.0).unwrap();
        let rid = RemoteIdMessage {
            drone_id: id.clone(),
            position: pos,
            velocity: 5.0,
            station: pos,
            time_mark: Timestamp(100),
            emergency: false,
            auth_token: reg.issue_token(&id, "k").unwrap(),
        };
        (reg, rid, pos)
    }

    #[test]
    fn probe_walks_happy_path_then_faults() {
        let (reg, rid, pos) = cooperative_registry();
        let probe = |at: u64| Probe {
            registry: &reg,
            rid: Some(&rid),
            position: pos,
            at: Timestamp(at),
            level: AccessLevel::Officials,
            config: PostDetectConfig::default(),
        };
        let (end, path) = probe(100).classify(DroneState::DroneDetected);
        assert_eq!(end, DroneState::Compliant);
        assert!(path.iter().all(|(s, _)| s.color() == Color::Green));

        assert_eq!(probe(20_000).classify(DroneState::DroneDetected).0, DroneState::TimeViolation);

        reg.inject_fault(FaultKind::AuthDbMiss, rid.drone_id.clone());
        assert_eq!(probe(100).classify(DroneState::DroneDetected).0, DroneState::MissionNotAuthorized);
        reg.inject_fault(FaultKind::IdDbMiss, rid.drone_id.clone());
        assert_eq!(probe(100).classify(DroneState::DroneDetected).0, DroneState::UnknownId);
        reg.clear_fault(FaultKind::AuthDbMiss, &rid.drone_id);
        assert_eq!(probe(100).classify(DroneState::DroneDetected).0, DroneState::IdKnownButNoAuth);
    }
}
