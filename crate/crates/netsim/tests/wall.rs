mod common;

use std::sync::Arc;

use common::{Fleet, Kind, START};
use cuas_core::clarify::{AgentId, Authority, AuthorityConfig, MsgType, OperatorResponse, RiskPolicy};
use cuas_core::registry::Registry;
use cuas_netsim::codec;
use cuas_netsim::wall::{run_wall, Hub, WallConfig, WallTransport};
use cuas_netsim::{
    AuthorityAgent, CourtAgent, CuasAgent, CuasConfig, DelayModel, Dist, Node, OperatorAgent,
    OperatorScript, SimConfig, WallClock,
};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};

fn authority(registry: Arc<Registry>) -> AuthorityAgent {
    AuthorityAgent::new(Authority::new(registry, AuthorityConfig::default(), RiskPolicy::default()))
}

#[tokio::test]
async fn malformed_line_gets_error_and_connection_survives() {
    let clock = WallClock::new(START, 1.0);
    let hub = Hub::spawn(authority(Arc::new(Registry::new())), clock, DelayModel::zero(), 0);
    let (client, server) = tokio::io::duplex(4096);
    hub.attach(server);
    let (r, mut w) = tokio::io::split(client);
    let mut lines = BufReader::new(r).lines();
    let me = AgentId::cuas(0);
    w.write_all(codec::encode(&codec::hello(me)).as_bytes()).await.unwrap();

    for _ in 0..2 {
        w.write_all(b"{this is not json\n").await.unwrap();
        let line = lines.next_line().await.unwrap().unwrap();
        let env = codec::decode(&line).unwrap();
        assert_eq!(env.msg_type, MsgType::Error);
        assert_eq!(env.recipient, me);
    }
    let report = hub.stop().await.unwrap();
    assert_eq!(report.malformed, 2);
}

fn clients(f: &Fleet) -> Vec<Node> {
    let mut nodes: Vec<Node> = vec![
        CourtAgent::new(0).into(),
        CuasAgent::new(0, Arc::clone(&f.registry), CuasConfig::default(), f.detections.clone()).into(),
    ];
    for (i, s) in f.scripts.iter().enumerate() {
        let i = i as u32;
        nodes.push(OperatorAgent::new(i, common::operator(i), s.clone(), Dist::Constant { ms: 100 }).into());
    }
    nodes
}

fn fleet() -> Fleet {
    let mut f = Fleet::new();
    f.add(Kind::NoRid, 200, OperatorScript::always(OperatorResponse::RestoredId, Some(300)));
    f.add(Kind::OutOfArea, 200, OperatorScript::always(OperatorResponse::CannotReturn, Some(300)));
    f.add(Kind::Fake, 200, OperatorScript::default());
    f
}

fn cases(samples: &[cuas_netsim::ClarificationSample]) -> Vec<(String, u8, String)> {
    let mut v: Vec<_> = samples
        .iter()
        .map(|s| (s.drone_id.to_string(), s.protocol, s.case_label.clone()))
        .collect();
    v.sort();
    v
}

async fn wall_matches_virtual(transport: WallTransport) {
    let f = fleet();
    let virt = f
        .sim(AuthorityConfig::default(), CuasConfig::default(), SimConfig::default())
        .run()
        .unwrap();

    let f = fleet();
    let cfg = WallConfig {
        delays: DelayModel::constant_edges(20),
        speedup: 20.0,
        start: START,
        transport,
        grace_ms: 500,
        deadline_ms: 60_000,
        ..Default::default()
    };
    let (out, _) = run_wall(authority(Arc::clone(&f.registry)), clients(&f), cfg)
        .await
        .unwrap();
    assert_eq!(cases(&out.samples), cases(&virt.samples));
    assert_eq!(out.audit.len(), virt.audit.len());
    assert_eq!(out.errors, 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn wall_duplex_reaches_virtual_outcomes() {
    wall_matches_virtual(WallTransport::Duplex).await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn wall_tcp_reaches_virtual_outcomes() {
    wall_matches_virtual(WallTransport::Tcp).await;
}
