//! Randomized liveness run: many drones with random worlds, answers,
//! risk, faults and timeouts, all through the network simulator.

use cuas_core::clarify::{ConfirmationMode, OperatorResponse, RepairPolicy, SessionStatus};
use cuas_core::registry::FaultKind;
use cuas_netsim::{OperatorScript, Transport};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::scenario::{Archetype, AuthKind, RecordKind, RidKind, Scenario};
use crate::BenchError;

#[derive(Debug, Default, Clone)]
pub struct LivenessReport {
    pub drones: usize,
    pub sessions: usize,
    pub decided: usize,
    pub escalated: usize,
    pub cancelled: usize,
    /// Sessions still open when the run went quiet.
    pub stuck: Vec<String>,
    /// Drones that opened a protocol and never got a decision.
    pub undecided_drones: Vec<String>,
}

fn random_archetype(rng: &mut ChaCha8Rng, i: usize) -> Archetype {
    let rid = *[RidKind::Absent, RidKind::Authentic, RidKind::Authentic, RidKind::Fake]
        .choose(rng)
        .expect("non-empty");
    let record = *[RecordKind::Absent, RecordKind::Valid, RecordKind::Expired].choose(rng).expect("non-empty");
    let auth = *[AuthKind::Absent, AuthKind::InArea, AuthKind::OutOfArea, AuthKind::Overrun]
        .choose(rng)
        .expect("non-empty");
    let mut a = Archetype::new(&format!("random-{i}"), rid, record, auth);
    for f in [FaultKind::IdDbMiss, FaultKind::AuthDbMiss, FaultKind::StaleExpiry] {
        if rng.gen_bool(0.3) {
            a.faults.push(f);
        }
    }
    // Any answer, legal or not, after a random think time.
    let r = *OperatorResponse::ALL.choose(rng).expect("non-empty");
    a.operator = OperatorScript::always(r, Some(rng.gen_range(0..15_000)));
    a.repair = *[RepairPolicy::Defer, RepairPolicy::Immediate, RepairPolicy::Ineffective]
        .choose(rng)
        .expect("non-empty");
    if rng.gen_bool(0.3) {
        a.risk.mission_tag = "low-risk".into();
    }
    a.restores_rid = rng.gen();
    a.returns_to_area = rng.gen();
    a.stops_mission = rng.gen();
    if rng.gen_bool(0.05) {
        a.lost_after_ms = Some(rng.gen_range(0..10_000));
    }
    a
}

/// Runs cells of `per_cell` random drones until at least `sessions`
/// protocol sessions have been opened.
pub fn liveness(sessions: usize, per_cell: u32, seed: u64) -> Result<LivenessReport, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LivenessReport::default();
    let mut cell_no = 0u64;
    while report.sessions < sessions {
        cell_no += 1;
        let mut s = Scenario::baseline();
        s.authority.operator_timeout_ms = rng.gen_range(1..20_000);
        s.authority.confirm_window_ms = rng.gen_range(1..10_000);
        s.authority.confirmation = if rng.gen() { ConfirmationMode::Explicit } else { ConfirmationMode::Implicit };
        s.cuas.confirmation = s.authority.confirmation;
        s.authority.interdiction_timeout_s = rng.gen_range(1..60);
        let archs: Vec<Archetype> = (0..per_cell as usize).map(|i| random_archetype(&mut rng, i)).collect();
        let cell = s.cell_from(&format!("live{cell_no}"), 0, &archs, per_cell)?;
        let out = s.simulation(&cell, seed ^ cell_no, Transport::InProc, 0)?.run()?;

        report.drones += cell.detections.len();
        let mut opened = std::collections::BTreeSet::new();
        for x in &out.sessions {
            report.sessions += 1;
            match &x.status {
                SessionStatus::Decided => report.decided += 1,
                SessionStatus::Escalated { .. } => report.escalated += 1,
                SessionStatus::Cancelled => report.cancelled += 1,
                SessionStatus::Open => report.stuck.push(format!("live{cell_no} {}", x.session_id)),
            }
            if x.escalated_from.is_none() {
                opened.insert(x.drone_id.clone());
            }
        }
        for (d, a) in cell.detections.iter().zip(&archs) {
            let sampled = out.samples.iter().any(|x| x.drone_id == d.drone_id);
            if opened.contains(&d.drone_id) && !sampled && a.lost_after_ms.is_none() {
                report.undecided_drones.push(format!("live{cell_no} {}", d.drone_id));
            }
        }
    }
    Ok(report)
}
