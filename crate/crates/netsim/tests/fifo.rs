use cuas_core::clarify::{AgentId, Envelope, MsgType};
use cuas_core::domain::Timestamp;
use cuas_netsim::{DelayModel, Dist, VirtualBus};
use proptest::prelude::*;
use serde_json::json;

proptest! {
    /// Random per-message delays never reorder a link, and nothing arrives
    /// before its own delay has elapsed.
    #[test]
    fn links_stay_fifo(
        gaps in prop::collection::vec(0u64..40, 1..60),
        lo in 0u64..50,
        span in 0u64..200,
        seed in any::<u64>(),
    ) {
        let mut delays = DelayModel::zero();
        delays.default_edge = Dist::Uniform { lo, hi: lo + span };
        let bus = VirtualBus::new(delays, seed);
        let (a, b) = (AgentId::cuas(0), AgentId::AUTHORITY);
        bus.register(a).unwrap();
        bus.register(b).unwrap();
        let tx = bus.open_channel(a, b).unwrap();
        let rx = bus.open_channel(b, a).unwrap();

        let mut t = 0u64;
        let mut sent = Vec::new();
        for (k, g) in gaps.iter().enumerate() {
            t += g;
            bus.advance_to(Timestamp(t));
            let env = Envelope::new(a, b, MsgType::TrackLost, format!("m{k}"), json!({}));
            let at = tx.send(env);
            prop_assert!(at.0 >= t + lo);
            sent.push((format!("m{k}"), at));
        }
        let mut got = Vec::new();
        while let Some(next) = bus.next_delivery() {
            bus.advance_to(next);
            while let Some((at, env)) = rx.try_recv() {
                prop_assert!(at <= bus.now());
                got.push((env.correlation_id, at));
            }
        }
        prop_assert_eq!(got, sent);
    }
}
