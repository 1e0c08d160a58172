#![allow(dead_code)]

use std::sync::Arc;

use cuas_core::clarify::{Authority, AuthorityConfig, RiskPolicy};
use cuas_core::domain::{DroneId, GeoPoint, OperatorId, TimeWindow, Timestamp, Zone};
use cuas_core::registry::{IdRecord, MissionAuthorization, Registry};
use cuas_netsim::{
    AuthorityAgent, CourtAgent, CuasAgent, CuasConfig, Detection, Dist, OperatorAgent,
    OperatorScript, RidScript, SimConfig, Simulation,
};

pub const START: Timestamp = Timestamp(10_000_000);
pub const KEY: &str = "issuer-1";
const HOUR: u64 = 3_600_000;

pub fn drone(i: u32) -> DroneId {
    DroneId::new(format!("UAS-{i:04}")).unwrap()
}

pub fn operator(i: u32) -> OperatorId {
    let mut b = [0u8; 8];
    b[4..].copy_from_slice(&(i + 1).to_be_bytes());
    OperatorId::from_bytes(b)
}

pub fn position(i: u32) -> GeoPoint {
    GeoPoint::new(40.0 + 0.01 * f64::from(i), 7.0, 50.0).unwrap()
}

fn outside(i: u32) -> GeoPoint {
    GeoPoint::new(40.0 + 0.01 * f64::from(i), 7.004, 50.0).unwrap()
}

/// What the registry and the sky look like for one drone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// Valid ID, flying where and when authorized.
    Compliant,
    /// No broadcast, authorization on file nearby.
    NoRid,
    /// Forged broadcast.
    Fake,
    /// Valid ID, outside its authorized area.
    OutOfArea,
}

pub struct Fleet {
    pub registry: Arc<Registry>,
    pub detections: Vec<Detection>,
    pub scripts: Vec<OperatorScript>,
}

impl Fleet {
    pub fn new() -> Self {
        let registry = Registry::new();
        registry.add_secret(KEY, b"issuer secret".to_vec());
        Fleet {
            registry: Arc::new(registry),
            detections: Vec::new(),
            scripts: Vec::new(),
        }
    }

    pub fn add(&mut self, kind: Kind, at_ms: u64, script: OperatorScript) -> u32 {
        let i = self.detections.len() as u32;
        let id = drone(i);
        self.registry
            .register_drone(IdRecord {
                drone_id: id.clone(),
                operator_id: operator(i),
                expiry: START.plus_ms(24 * HOUR),
                issuer_secret_ref: KEY.into(),
                personally_identifiable: serde_json::Value::Null,
                tracking: Vec::new(),
            })
            .unwrap();
        let p = position(i);
        self.registry
            .insert_authorization(MissionAuthorization {
                auth_id: format!("A-{i}"),
                drone_id: id.clone(),
                operator_id: operator(i),
                window: TimeWindow::new(Timestamp(START.0 - HOUR), START.plus_ms(HOUR)).unwrap(),
                area: Zone::square(p.lat(), p.lon(), 0.002).unwrap(),
            })
            .unwrap();
        let authentic = RidScript::Authentic { key: KEY.into() };
        let (rid, pos) = match kind {
            Kind::Compliant => (authentic.clone(), p),
            Kind::NoRid => (RidScript::Absent, p),
            Kind::Fake => (RidScript::Fake, p),
            Kind::OutOfArea => (authentic.clone(), outside(i)),
        };
        self.detections.push(Detection {
            drone_id: id,
            at_ms,
            position: pos,
            rid,
            risk: Default::default(),
            restores_rid: Some(authentic),
            returns_to_area: true,
            stops_mission: true,
            lost_after_ms: None,
        });
        self.scripts.push(script);
        i
    }

    pub fn sim(&self, authority: AuthorityConfig, cuas: CuasConfig, cfg: SimConfig) -> Simulation {
        let think = Dist::Constant { ms: 100 };
        let mut sim = Simulation::new(SimConfig { start: START, ..cfg });
        let engine = Authority::new(Arc::clone(&self.registry), authority, RiskPolicy::default());
        sim.add(AuthorityAgent::new(engine)).unwrap();
        sim.add(CourtAgent::new(0)).unwrap();
        sim.add(CuasAgent::new(0, Arc::clone(&self.registry), cuas, self.detections.clone()))
            .unwrap();
        for (i, s) in self.scripts.iter().enumerate() {
            let i = i as u32;
            sim.add(OperatorAgent::new(i, operator(i), s.clone(), think)).unwrap();
        }
        sim
    }
}
