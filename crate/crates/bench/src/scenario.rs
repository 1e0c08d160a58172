//! Scenario files: what the registry holds, how drones behave, and which
//! protocol cells to sweep.
//!
//! Drones are generated per cell from archetypes. Cell `(p, n)` holds `n`
//! drones, drone `i` built from archetype `i mod k` of protocol `p`, each on
//! its own slot of a north-south line so that no two drones share an
//! authorization area or a potential-operator search zone.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use cuas_core::clarify::{
    Authority, AuthorityConfig, RepairPolicy, RiskInputs, RiskPolicy, RiskRule,
};
use cuas_core::domain::{DroneId, GeoPoint, OperatorId, RiskLevel, TimeWindow, Timestamp, Zone};
use cuas_core::postdetect::protocol_trigger;
use cuas_core::registry::{FaultInjection, FaultKind, IdRecord, MissionAuthorization, Registry};
use cuas_netsim::{
    AuthorityAgent, ClockMode, CourtAgent, CuasAgent, CuasConfig, DelayModel, Detection,
    OperatorAgent, OperatorScript, RidScript, SimConfig, Simulation, Transport,
};
use serde::{Deserialize, Serialize};

use crate::BenchError;

pub const SCHEMA_VERSION: u32 = 1;
const HOUR: u64 = 3_600_000;
const MINUTE: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RidKind {
    Absent,
    Authentic,
    Fake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Absent,
    Valid,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthKind {
    Absent,
    /// Current window, drone inside the area.
    InArea,
    /// Current window, drone outside the area.
    OutOfArea,
    /// Window ended a minute before detection.
    Overrun,
}

/// Template for one scripted drone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    pub rid: RidKind,
    pub record: RecordKind,
    pub auth: AuthKind,
    #[serde(default)]
    pub faults: Vec<FaultKind>,
    #[serde(default)]
    pub operator: OperatorScript,
    #[serde(default)]
    pub repair: RepairPolicy,
    #[serde(default)]
    pub risk: RiskInputs,
    #[serde(default)]
    pub restores_rid: bool,
    #[serde(default)]
    pub returns_to_area: bool,
    #[serde(default)]
    pub stops_mission: bool,
    #[serde(default)]
    pub lost_after_ms: Option<u64>,
    /// Case the first decision should carry; checked after the run.
    #[serde(default)]
    pub expect_case: Option<String>,
}

impl Archetype {
    pub fn new(name: &str, rid: RidKind, record: RecordKind, auth: AuthKind) -> Self {
        Archetype {
            name: name.into(),
            rid,
            record,
            auth,
            faults: Vec::new(),
            operator: OperatorScript::default(),
            repair: RepairPolicy::Defer,
            risk: RiskInputs::default(),
            restores_rid: false,
            returns_to_area: false,
            stops_mission: false,
            lost_after_ms: None,
            expect_case: None,
        }
    }

    fn faults(mut self, f: &[FaultKind]) -> Self {
        self.faults = f.to_vec();
        self
    }

    fn reply(mut self, r: cuas_core::clarify::OperatorResponse) -> Self {
        self.operator = OperatorScript::always(r, None);
        self
    }

    fn repair(mut self, r: RepairPolicy) -> Self {
        self.repair = r;
        self
    }

    fn expect(mut self, case: &str) -> Self {
        self.expect_case = Some(case.into());
        self
    }
}

/// Fixed registry content loaded before the generated drones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrySeed {
    /// Issuer key id to secret.
    pub secrets: BTreeMap<String, String>,
    pub records: Vec<IdRecord>,
    pub authorizations: Vec<MissionAuthorization>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Layout {
    pub base_lat: f64,
    pub base_lon: f64,
    pub altitude: f64,
    /// Latitude step between drone slots, degrees.
    pub spacing_deg: f64,
    /// Half width of each authorized area, degrees.
    pub area_half_width_deg: f64,
    /// Detection time of drone `i` is `i * stagger_ms`.
    pub stagger_ms: u64,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            base_lat: 40.0,
            base_lon: 7.0,
            altitude: 50.0,
            spacing_deg: 0.01,
            area_half_width_deg: 0.002,
            stagger_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clock: ClockMode,
    #[serde(default)]
    pub transport: Transport,
    /// Wall-clock mode only: simulated milliseconds per real millisecond.
    #[serde(default = "one")]
    pub speedup: f64,
    pub counts: Vec<u32>,
    pub start_ms: u64,
    pub delays: DelayModel,
    #[serde(default)]
    pub authority: AuthorityConfig,
    #[serde(default)]
    pub cuas: CuasConfig,
    #[serde(default)]
    pub risk: RiskPolicy,
    #[serde(default)]
    pub registry: RegistrySeed,
    #[serde(default)]
    pub faults: FaultInjection,
    #[serde(default)]
    pub layout: Layout,
    /// Archetypes per protocol, used round-robin.
    pub protocols: BTreeMap<u8, Vec<Archetype>>,
}

fn one() -> f64 {
    1.0
}

/// Everything needed to run one (protocol, count) cell.
pub struct Cell {
    pub label: String,
    pub protocol: u8,
    pub count: u32,
    pub registry: Arc<Registry>,
    pub detections: Vec<Detection>,
    pub operators: Vec<(OperatorId, OperatorScript)>,
    pub repair: Vec<(DroneId, RepairPolicy)>,
    pub expected: Vec<Option<String>>,
}

pub fn cell_label(protocol: u8, count: u32) -> String {
    format!("p{protocol}n{count}")
}

/// Inverse of [`cell_label`].
pub fn parse_cell_label(label: &str) -> Option<(u8, u32)> {
    let rest = label.strip_prefix('p')?;
    let (p, n) = rest.split_once('n')?;
    Some((p.parse().ok()?, n.parse().ok()?))
}

fn invalid(msg: impl Into<String>) -> BenchError {
    BenchError::ScenarioInvalid(msg.into())
}

pub fn drone_id(i: u32) -> DroneId {
    DroneId::new(format!("UAS-{i:04}")).expect("short id")
}

fn operator_id(i: u32) -> OperatorId {
    let mut b = [0u8; 8];
    b[0] = 0x0f;
    b[4..].copy_from_slice(&i.to_be_bytes());
    OperatorId::from_bytes(b)
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        let s: Scenario = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn start(&self) -> Timestamp {
        Timestamp(self.start_ms)
    }

    /// Checks the scenario; the error names the first violated constraint.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("name is empty"));
        }
        if self.counts.is_empty() || self.counts.contains(&0) {
            return Err(invalid("counts must be a non-empty list of positive integers"));
        }
        if !(self.speedup.is_finite() && self.speedup > 0.0) {
            return Err(invalid("speedup must be positive"));
        }
        if self.start_ms < 2 * HOUR {
            return Err(invalid("start_ms must leave two hours of history"));
        }
        self.delays.validate().map_err(|e| invalid(format!("delays: {e}")))?;
        let l = &self.layout;
        let search = self.cuas.postdetect.search_half_width_deg;
        if !(l.area_half_width_deg > 0.0 && search > 0.0) {
            return Err(invalid("layout.area_half_width_deg and the search half width must be positive"));
        }
        // Out-of-area drones sit two half widths east of their area.
        if l.spacing_deg <= 2.0 * (l.area_half_width_deg + search) {
            return Err(invalid("layout.spacing_deg too small: neighbouring slots overlap"));
        }
        if self.protocols.is_empty() {
            return Err(invalid("protocols is empty"));
        }
        for (p, archs) in &self.protocols {
            if !(1..=8).contains(p) {
                return Err(invalid(format!("protocol {p} is not in 1..=8")));
            }
            if archs.is_empty() {
                return Err(invalid(format!("protocol {p} has no archetypes")));
            }
            let cell = self.cell_from(&cell_label(*p, 0), *p, archs, archs.len() as u32)?;
            for (det, a) in cell.detections.iter().zip(archs) {
                let state = det.classify(&cell.registry, self.start(), &self.cuas);
                if protocol_trigger(state) != Some(*p) {
                    return Err(invalid(format!(
                        "archetype {:?} under protocol {p} reaches {state} instead",
                        a.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(u8, u32)> {
        self.protocols
            .keys()
            .flat_map(|p| self.counts.iter().map(move |n| (*p, *n)))
            .collect()
    }

    pub fn cell(&self, protocol: u8, count: u32) -> Result<Cell, BenchError> {
        let archs = self
            .protocols
            .get(&protocol)
            .ok_or_else(|| invalid(format!("protocol {protocol} not in scenario")))?;
        self.cell_from(&cell_label(protocol, count), protocol, archs, count)
    }

    /// Builds `count` drones from `archs` round-robin on a fresh registry.
    pub fn cell_from(&self, label: &str, protocol: u8, archs: &[Archetype], count: u32) -> Result<Cell, BenchError> {
        let registry = Registry::new();
        for (k, secret) in &self.registry.secrets {
            registry.add_secret(k.clone(), secret.as_bytes().to_vec());
        }
        for r in &self.registry.records {
            registry.register_drone(r.clone()).map_err(|e| invalid(e.to_string()))?;
        }
        for a in &self.registry.authorizations {
            registry
                .insert_authorization(a.clone())
                .map_err(|e| invalid(e.to_string()))?;
        }
        let mut faults = self.faults.clone();
        let start = self.start();
        let l = &self.layout;
        let key = self
            .registry
            .secrets
            .keys()
            .next()
            .cloned()
            .ok_or_else(|| invalid("registry.secrets is empty"))?;

        let mut cell = Cell {
            label: label.to_string(),
            protocol,
            count,
            registry: Arc::new(Registry::new()),
            detections: Vec::new(),
            operators: Vec::new(),
            repair: Vec::new(),
            expected: Vec::new(),
        };
        for i in 0..count {
            let a = &archs[i as usize % archs.len()];
            let id = drone_id(i);
            let op = operator_id(i);
            let lat = l.base_lat + l.spacing_deg * f64::from(i);
            let home = GeoPoint::new(lat, l.base_lon, l.altitude).map_err(|e| invalid(e.to_string()))?;
            let expiry = match a.record {
                RecordKind::Absent => None,
                RecordKind::Valid => Some(start.plus_ms(24 * HOUR)),
                RecordKind::Expired => Some(Timestamp(start.0 - HOUR)),
            };
            if let Some(expiry) = expiry {
                registry
                    .register_drone(IdRecord {
                        drone_id: id.clone(),
                        operator_id: op,
                        expiry,
                        issuer_secret_ref: key.clone(),
                        personally_identifiable: serde_json::Value::Null,
                        tracking: Vec::new(),
                    })
                    .map_err(|e| invalid(e.to_string()))?;
            }
            let window = match a.auth {
                AuthKind::Absent => None,
                AuthKind::InArea | AuthKind::OutOfArea => Some((start.0 - HOUR, start.0 + HOUR)),
                AuthKind::Overrun => Some((start.0 - 2 * HOUR, start.0 - MINUTE)),
            };
            if let Some((from, to)) = window {
                registry
                    .insert_authorization(MissionAuthorization {
                        auth_id: format!("{label}-A{i}"),
                        drone_id: id.clone(),
                        operator_id: op,
                        window: TimeWindow::from_millis(from, to).expect("ordered window"),
                        area: Zone::square(lat, l.base_lon, l.area_half_width_deg)
                            .map_err(|e| invalid(e.to_string()))?,
                    })
                    .map_err(|e| invalid(e.to_string()))?;
            }
            for f in &a.faults {
                match f {
                    FaultKind::IdDbMiss => faults.id_db_miss.insert(id.clone()),
                    FaultKind::AuthDbMiss => faults.auth_db_miss.insert(id.clone()),
                    FaultKind::StaleExpiry => faults.stale_expiry.insert(id.clone()),
                };
            }
            let position = if a.auth == AuthKind::OutOfArea {
                GeoPoint::new(lat, l.base_lon + 2.0 * l.area_half_width_deg, l.altitude)
                    .map_err(|e| invalid(e.to_string()))?
            } else {
                home
            };
            let authentic = RidScript::Authentic { key: key.clone() };
            let rid = match a.rid {
                RidKind::Absent => RidScript::Absent,
                RidKind::Authentic => authentic.clone(),
                RidKind::Fake => RidScript::Fake,
            };
            cell.detections.push(Detection {
                drone_id: id.clone(),
                at_ms: l.stagger_ms * u64::from(i),
                position,
                rid,
                risk: a.risk.clone(),
                restores_rid: a.restores_rid.then_some(authentic),
                returns_to_area: a.returns_to_area,
                stops_mission: a.stops_mission,
                lost_after_ms: a.lost_after_ms,
            });
            cell.operators.push((op, a.operator.clone()));
            cell.repair.push((id, a.repair));
            cell.expected.push(a.expect_case.clone());
        }
        registry.set_faults(faults);
        cell.registry = Arc::new(registry);
        Ok(cell)
    }

    pub fn authority(&self, cell: &Cell) -> Authority {
        let mut a = Authority::new(Arc::clone(&cell.registry), self.authority.clone(), self.risk.clone());
        for (d, r) in &cell.repair {
            a.set_repair_policy(d.clone(), *r);
        }
        a
    }

    /// Agents of a cell other than the authority.
    pub fn clients(&self, cell: &Cell) -> Vec<cuas_netsim::Node> {
        let mut nodes: Vec<cuas_netsim::Node> = vec![
            CourtAgent::new(0).into(),
            CuasAgent::new(0, Arc::clone(&cell.registry), self.cuas.clone(), cell.detections.clone()).into(),
        ];
        for (i, (op, script)) in cell.operators.iter().enumerate() {
            nodes.push(OperatorAgent::new(i as u32, *op, script.clone(), self.delays.operator_think).into());
        }
        nodes
    }

    pub fn simulation(&self, cell: &Cell, seed: u64, transport: Transport, port: u16) -> Result<Simulation, BenchError> {
        let mut sim = Simulation::new(SimConfig {
            delays: self.delays.clone(),
            seed,
            transport,
            label: cell.label.clone(),
            start: self.start(),
            port,
            ..SimConfig::default()
        });
        sim.add(AuthorityAgent::new(self.authority(cell)))?;
        for n in self.clients(cell) {
            sim.add(n)?;
        }
        Ok(sim)
    }

    /// Desk-scale calibration: about 100 ms per hop, 200 ms of authority
    /// processing, 2 s operator think time, 5 s operator timeout.
    pub fn baseline() -> Self {
        use cuas_core::clarify::OperatorResponse as R;
        use AuthKind as A;
        use FaultKind::*;
        use RecordKind as Rec;
        use RidKind::*;
        let arch = Archetype::new;
        let p1 = |n| arch(n, Absent, Rec::Valid, A::InArea);
        let auth = |n| arch(n, Authentic, Rec::Valid, A::InArea);
        let mut restored = p1("p1-restored").reply(R::RestoredId).expect("CASE5");
        restored.restores_rid = true;
        let mut returned = arch("p7-returned", Authentic, Rec::Valid, A::OutOfArea)
            .reply(R::ReturnedToArea)
            .expect("CASE4");
        returned.returns_to_area = true;
        let mut stopped = arch("p8-stopped", Authentic, Rec::Valid, A::Overrun)
            .reply(R::StoppedMission)
            .expect("CASE4");
        stopped.stops_mission = true;
        let fix = RepairPolicy::Immediate;

        let mut protocols = BTreeMap::new();
        protocols.insert(1, vec![restored, p1("p1-silent").expect("CASE1")]);
        protocols.insert(
            2,
            vec![
                arch("p2-unknown", Authentic, Rec::Absent, A::Absent).expect("CASE1"),
                arch("p2-id-fault", Authentic, Rec::Valid, A::Absent)
                    .faults(&[IdDbMiss])
                    .expect("CASE2"),
            ],
        );
        protocols.insert(
            3,
            vec![
                auth("p3-deferred").faults(&[IdDbMiss]).expect("CASE1"),
                auth("p3-fixed").faults(&[IdDbMiss]).repair(fix).expect("CASE2"),
            ],
        );
        protocols.insert(
            4,
            vec![
                arch("p4-expired", Authentic, Rec::Expired, A::Absent).expect("CASE1"),
                auth("p4-fixed")
                    .faults(&[AuthDbMiss, StaleExpiry])
                    .repair(fix)
                    .expect("CASE3"),
            ],
        );
        protocols.insert(
            5,
            vec![
                auth("p5-tolerated").faults(&[StaleExpiry]).expect("CASE1"),
                auth("p5-fixed").faults(&[StaleExpiry]).repair(fix).expect("CASE2"),
            ],
        );
        protocols.insert(
            6,
            vec![
                auth("p6-resolved").faults(&[AuthDbMiss]).expect("CASE1"),
                arch("p6-unauthorized", Authentic, Rec::Valid, A::Absent).expect("CASE2"),
            ],
        );
        protocols.insert(
            7,
            vec![
                arch("p7-cannot-return", Authentic, Rec::Valid, A::OutOfArea)
                    .reply(R::CannotReturn)
                    .expect("CASE3"),
                returned,
            ],
        );
        protocols.insert(
            8,
            vec![
                arch("p8-cannot-stop", Authentic, Rec::Valid, A::Overrun)
                    .reply(R::CannotStop)
                    .expect("CASE3"),
                stopped,
            ],
        );

        let mut secrets = BTreeMap::new();
        secrets.insert("issuer-1".to_string(), "issuer secret".to_string());
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: "baseline".into(),
            seed: 2024,
            clock: ClockMode::Virtual,
            transport: Transport::InProc,
            speedup: 1.0,
            counts: vec![1, 50, 100, 150, 200, 250],
            start_ms: 10 * HOUR,
            delays: DelayModel::baseline(),
            authority: AuthorityConfig {
                operator_timeout_ms: 5_000,
                confirm_window_ms: 3_000,
                risk_assessment_ms: 100,
                fast_risk_assessment_ms: 50,
                ..AuthorityConfig::default()
            },
            cuas: CuasConfig {
                rid_acquire_ms: 500,
                rid_wait_ms: 1_000,
                db_query_ms: 100,
                ..CuasConfig::default()
            },
            risk: RiskPolicy {
                rules: vec![RiskRule {
                    mission_tag: Some("low-risk".into()),
                    level: Some(RiskLevel::Low),
                    ..RiskRule::default()
                }],
                default: RiskLevel::High,
            },
            registry: RegistrySeed {
                secrets,
                ..RegistrySeed::default()
            },
            faults: FaultInjection::default(),
            layout: Layout::default(),
            protocols,
        }
    }

    /// Drones scripted per cell, summed over all cells.
    pub fn scripted_sessions(&self) -> u64 {
        self.cells().iter().map(|(_, n)| u64::from(*n)).sum()
    }

    /// Protocols exercised.
    pub fn protocol_set(&self) -> BTreeSet<u8> {
        self.protocols.keys().copied().collect()
    }
}
