use std::collections::BTreeSet;

use cuas_core::clarify::cases::{
    check_toggle, fault_toggles, oracle_row, play, Variant, WorldSpec,
};
use cuas_core::clarify::harness::{run_protocol, HarnessOutcome, WorldFacts};
use cuas_core::clarify::{ConfirmationMode, MsgType, OperatorResponse, RepairPolicy, RiskPolicy, SessionStatus};
use cuas_core::domain::{Decision, RiskLevel};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn opening_worlds() -> Vec<(WorldSpec, u8)> {
    WorldSpec::all()
        .into_iter()
        .filter_map(|w| w.build().protocol().map(|p| (w, p)))
        .collect()
}

fn assert_transcripts_well_formed(out: &HarnessOutcome) {
    let mut ids = BTreeSet::new();
    for s in &out.sessions {
        for e in &s.transcript {
            assert_eq!(e.correlation_id, s.session_id, "{}", e.to_json_line());
            assert!(ids.insert(e.msg_id.clone()), "{} recorded twice", e.msg_id);
        }
    }
}

fn assert_timed_pairs_with_stop(out: &HarnessOutcome) {
    for s in &out.sessions {
        if matches!(s.outcome, Some(Decision::TimedInterdiction { .. })) && s.operator_id.is_some() {
            assert!(
                s.transcript.iter().any(|e| e.msg_type == MsgType::StopMission),
                "{} timed without STOP MISSION",
                s.session_id
            );
        }
    }
}

#[test]
fn ten_thousand_random_sessions_all_decide() {
    let worlds = opening_worlds();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0A5);
    let mut decided = 0;
    for _ in 0..10_000 {
        let (world, protocol) = *worlds.choose(&mut rng).unwrap();
        let w = world.build();
        let mut setup = w.setup();
        // Any response, legal or not; illegal ones are rejected and the
        // session falls back on its timeout.
        let response = *OperatorResponse::ALL.choose(&mut rng).unwrap();
        setup.responder = Box::new(response);
        setup.risk = RiskPolicy::constant(if rng.gen() { RiskLevel::Low } else { RiskLevel::High });
        setup.repair = *[RepairPolicy::Defer, RepairPolicy::Immediate, RepairPolicy::Ineffective]
            .choose(&mut rng)
            .unwrap();
        setup.facts = WorldFacts {
            rid_restored: rng.gen(),
            back_in_area: rng.gen(),
            rid_ceased: rng.gen(),
        };
        setup.config.confirmation = if rng.gen() { ConfirmationMode::Explicit } else { ConfirmationMode::Implicit };
        setup.config.operator_timeout_ms = rng.gen_range(1..20_000);
        setup.config.confirm_window_ms = rng.gen_range(1..10_000);
        let out = run_protocol(protocol, setup).expect("session decides");
        for s in &out.sessions {
            assert!(
                matches!(s.status, SessionStatus::Decided | SessionStatus::Escalated { .. }),
                "stuck: {:?}",
                s.summary()
            );
            if s.status == SessionStatus::Decided {
                assert!(s.decided_at.unwrap() >= s.opened_at);
                assert!(s.outcome.is_some());
            }
        }
        assert_transcripts_well_formed(&out);
        assert_timed_pairs_with_stop(&out);
        decided += 1;
    }
    assert_eq!(decided, 10_000);
}

#[test]
fn illegal_responses_fall_back_to_timeout() {
    let worlds = opening_worlds();
    let (world, _) = worlds.iter().find(|(_, p)| *p == 7).unwrap();
    let out = play(world, 7, Variant::new(OperatorResponse::StoppedMission, RiskLevel::Low)).unwrap();
    assert_eq!(out.case_label, "CASE1");
    assert!(!out.errors.is_empty());
}

#[test]
fn risk_flip_changes_decision_not_case() {
    let cells: [(u8, OperatorResponse, bool); 7] = [
        (1, OperatorResponse::AlreadyTransmitting, false),
        (1, OperatorResponse::CannotRestore, false),
        (1, OperatorResponse::RestoredId, false),
        (7, OperatorResponse::AlreadyInAuthorizedArea, false),
        (7, OperatorResponse::CannotReturn, false),
        (8, OperatorResponse::NotExceedingTime, false),
        (8, OperatorResponse::CannotStop, false),
    ];
    let worlds = opening_worlds();
    for (p, response, truth) in cells {
        for (world, _) in worlds.iter().filter(|(_, q)| *q == p) {
            for mode in [ConfirmationMode::Explicit, ConfirmationMode::Implicit] {
                let v = |risk| Variant::new(response, risk).claims_hold(truth).confirmation(mode);
                let low = play(world, p, v(RiskLevel::Low)).unwrap();
                let high = play(world, p, v(RiskLevel::High)).unwrap();
                assert_eq!(low.case_label, high.case_label);
                assert!(low.decision.is_tolerance(), "{:?}", low.decision);
                assert!(matches!(high.decision, Decision::TimedInterdiction { .. }));
                assert_eq!(low.operator_orders, [MsgType::CompleteMission]);
                assert_eq!(high.operator_orders, [MsgType::StopMission]);
            }
        }
    }
}

#[test]
fn fault_toggles_flip_outcomes() {
    let toggles = fault_toggles();
    assert!(toggles.len() >= 6);
    for t in &toggles {
        check_toggle(t).unwrap_or_else(|e| panic!("{e}"));
        assert!(oracle_row(t.with_case.0, t.with_case.1).is_some());
        assert!(oracle_row(t.without_case.0, t.without_case.1).is_some());
    }
}

#[test]
fn implicit_invalidation_by_repeated_report() {
    let worlds = opening_worlds();
    let (world, _) = worlds.iter().find(|(_, p)| *p == 1).unwrap();
    let v = Variant::new(OperatorResponse::RestoredId, RiskLevel::Low).confirmation(ConfirmationMode::Implicit);
    let out = play(world, 1, v).unwrap();
    assert_eq!(out.case_label, "CASE6");
    let reports = out
        .delivered
        .iter()
        .filter(|e| e.msg_type == MsgType::NoIdButPotentialOperator)
        .count();
    assert_eq!(reports, 2);
    let out = play(world, 1, v.claims_hold(true)).unwrap();
    assert_eq!(out.case_label, "CASE5");
    assert_eq!(out.decision, Decision::RestorationConfirmed);
}

#[test]
fn decisions_are_reproducible() {
    for (world, p) in opening_worlds().into_iter().take(60) {
        for v in Variant::all_for(p).into_iter().step_by(5) {
            let a = play(&world, p, v).unwrap();
            let b = play(&world, p, v).unwrap();
            assert_eq!(a.delivered, b.delivered);
        }
    }
}
