use std::collections::BTreeSet;

use cuas_core::domain::{windows_overlap, DroneId, GeoPoint, OperatorId, TimeWindow, Timestamp, Zone};
use cuas_core::registry::{
    AccessLevel, FaultInjection, FaultKind, IdRecord, IdValidity, MissionAuthorization, Registry, RegistryError,
};
use proptest::prelude::*;
use serde_json::json;

const LEVELS: [AccessLevel; 3] = [AccessLevel::Public, AccessLevel::Officials, AccessLevel::Authority];

fn drone(i: u8) -> DroneId {
    DroneId::new(format!("D{i}")).unwrap()
}

fn record(i: u8, expiry: u64) -> IdRecord {
    IdRecord {
        drone_id: drone(i),
        operator_id: OperatorId::from_bytes([i; 8]),
        expiry: Timestamp(expiry),
        issuer_secret_ref: "k".into(),
        personally_identifiable: json!({"name": format!("op{i}")}),
        tracking: vec![(Timestamp(1), GeoPoint::surface(1.0, 1.0).unwrap())],
    }
}

fn auth(n: usize, d: u8, start: u64, len: u64, lat: f64) -> MissionAuthorization {
    MissionAuthorization {
        auth_id: format!("A{n}"),
        drone_id: drone(d),
        operator_id: OperatorId::from_bytes([d; 8]),
        window: TimeWindow::from_millis(start, start + len).unwrap(),
        area: Zone::square(lat, 0.0, 0.5).unwrap(),
    }
}

#[derive(Debug, Clone)]
enum Op {
    Register(u8, u64),
    Fault(u8, u8),
    Clear(u8, u8),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..10, 0u64..2000).prop_map(|(d, e)| Op::Register(d, e)),
        (0u8..10, 0u8..3).prop_map(|(d, k)| Op::Fault(d, k)),
        (0u8..10, 0u8..3).prop_map(|(d, k)| Op::Clear(d, k)),
    ]
}

fn kind(k: u8) -> FaultKind {
    [FaultKind::IdDbMiss, FaultKind::AuthDbMiss, FaultKind::StaleExpiry][k as usize]
}

proptest! {
    #[test]
    fn id_db_is_append_only(ops in prop::collection::vec(op(), 1..40)) {
        let reg = Registry::new();
        let mut seen: BTreeSet<DroneId> = BTreeSet::new();
        for op in ops {
            match op {
                Op::Register(d, e) => {
                    let fresh = reg.raw_record(&drone(d)).is_none();
                    let res = reg.register_drone(record(d, e));
                    prop_assert_eq!(res.is_ok(), fresh);
                    if !fresh {
                        prop_assert!(matches!(res, Err(RegistryError::DuplicateId(_))));
                    }
                }
                Op::Fault(d, k) => reg.inject_fault(kind(k), drone(d)),
                Op::Clear(d, k) => { reg.clear_fault(kind(k), &drone(d)); }
            }
            // Faults hide rows but never remove them.
            let saved = reg.faults();
            reg.set_faults(FaultInjection::default());
            let now: BTreeSet<DroneId> = (0..10)
                .map(drone)
                .filter(|id| reg.lookup_id(id, AccessLevel::Authority).is_some())
                .collect();
            reg.set_faults(saved);
            prop_assert!(seen.is_subset(&now));
            seen = now;
        }
    }

    #[test]
    fn overlapping_authorization_rejected_iff_windows_overlap(
        a0 in 0u64..100, al in 1u64..50, b0 in 0u64..100, bl in 1u64..50,
    ) {
        let reg = Registry::new();
        reg.insert_authorization(auth(0, 1, a0, al, 0.0)).unwrap();
        let second = auth(1, 1, b0, bl, 0.0);
        let overlap = windows_overlap(&auth(0, 1, a0, al, 0.0).window, &second.window);
        let res = reg.insert_authorization(second);
        prop_assert_eq!(res.is_err(), overlap);
        // Other drones are unaffected.
        prop_assert!(reg.insert_authorization(auth(2, 2, b0, bl, 0.0)).is_ok());
    }

    #[test]
    fn access_is_monotone(d in 0u8..10, e in 0u64..5000) {
        let reg = Registry::new();
        reg.register_drone(record(d, e)).unwrap();
        let views: Vec<_> = LEVELS.iter().map(|&l| reg.lookup_id(&drone(d), l).unwrap()).collect();
        for (i, lo) in views.iter().enumerate() {
            for hi in &views[i..] {
                prop_assert_eq!(&lo.drone_id, &hi.drone_id);
                prop_assert!(lo.operator_id.is_none() || hi.operator_id == lo.operator_id);
                prop_assert!(lo.personally_identifiable.is_none() || hi.personally_identifiable == lo.personally_identifiable);
                prop_assert!(lo.expiry.is_none() || hi.expiry == lo.expiry);
                prop_assert!(lo.tracking.is_none() || hi.tracking == lo.tracking);
            }
        }
        prop_assert!(views[0].operator_id.is_none() && views[0].expiry.is_none());
        prop_assert!(views[1].tracking.is_none());
        prop_assert!(views[2].tracking.is_some());
    }

    #[test]
    fn cleared_faults_match_linear_scan(
        recs in prop::collection::btree_map(0u8..8, 0u64..2000, 0..8),
        auths in prop::collection::vec((0u8..8, 0u64..2000, 1u64..400, -2.0f64..2.0), 0..16),
        faults in prop::collection::vec((0u8..8, 0u8..3), 0..10),
        queries in prop::collection::vec((0u8..8, 0u64..2500, -3.0f64..3.0), 1..30),
    ) {
        let reg = Registry::new();
        for (&d, &e) in &recs {
            reg.register_drone(record(d, e)).unwrap();
        }
        for (n, &(d, s, l, lat)) in auths.iter().enumerate() {
            let _ = reg.insert_authorization(auth(n, d, s, l, lat));
        }
        for &(d, k) in &faults {
            reg.inject_fault(kind(k), drone(d));
        }
        reg.set_faults(FaultInjection::default());
        let rows = reg.all_records();
        let all = reg.all_authorizations();
        for (d, t, lat) in queries {
            let id = drone(d);
            let at = Timestamp(t);
            let p = GeoPoint::surface(lat, 0.0).unwrap();
            let scan_rec = rows.iter().find(|r| r.drone_id == id);
            prop_assert_eq!(
                reg.lookup_id(&id, AccessLevel::Authority).map(|v| v.expiry),
                scan_rec.map(|r| Some(r.expiry))
            );
            let expected_validity = match scan_rec {
                None => IdValidity::Missing,
                Some(r) if at < r.expiry => IdValidity::Valid,
                Some(_) => IdValidity::Expired,
            };
            prop_assert_eq!(reg.validity(&id, at, AccessLevel::Officials), expected_validity);
            let scan_auth = all.iter().find(|a| {
                a.drone_id == id
                    && a.window.contains(at)
                    && (lat - a.area.bounding_box().0) >= 0.0
                    && (a.area.bounding_box().2 - lat) >= 0.0
            });
            let found = reg.find_authorization(&id, at, &p);
            prop_assert_eq!(found.as_ref(), scan_auth);
        }
    }
}

#[test]
fn each_fault_hides_only_its_table() {
    let reg = Registry::new();
    reg.register_drone(record(1, 10_000)).unwrap();
    reg.insert_authorization(auth(0, 1, 0, 5_000, 0.0)).unwrap();
    let id = drone(1);
    let p = GeoPoint::surface(0.0, 0.0).unwrap();
    let at = Timestamp(100);
    let observe = |r: &Registry| {
        (
            r.lookup_id(&id, AccessLevel::Officials).is_some(),
            r.validity(&id, at, AccessLevel::Officials),
            r.find_authorization(&id, at, &p).is_some(),
        )
    };
    assert_eq!(observe(&reg), (true, IdValidity::Valid, true));
    for (k, expect) in [
        (FaultKind::IdDbMiss, (false, IdValidity::Missing, true)),
        (FaultKind::AuthDbMiss, (true, IdValidity::Valid, false)),
        (FaultKind::StaleExpiry, (true, IdValidity::Expired, true)),
    ] {
        reg.inject_fault(k, id.clone());
        assert_eq!(observe(&reg), expect, "{k:?}");
        assert!(reg.clear_fault(k, &id));
        assert_eq!(observe(&reg), (true, IdValidity::Valid, true));
    }
}
