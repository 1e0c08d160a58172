//! Deterministic discrete-event engine.
//!
//! A message sent at `t` is delivered after its edge delay, never before
//! an earlier message on the same ordered pair. The recipient then queues
//! it behind its own backlog (`service_ms` each) and handles it after the
//! processing latency, again in FIFO order. Envelopes an agent sends to
//! itself are timers: handled at exactly their send time.
//!
//! The transcript records each envelope when its recipient handles it, so
//! it is also the order in which every agent saw its inputs. Each agent
//! draws from its own random stream; adding agents leaves the draws of
//! the others unchanged.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use cuas_core::clarify::{AgentId, AuditRecord, Envelope, MsgType, Role, SessionSummary};
use cuas_core::domain::Timestamp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{ClarificationSample, Ctx, Node, Scheduled};
use crate::bus::Links;
use crate::clock::VirtualClock;
use crate::delay::DelayModel;
use crate::socket::SocketRelay;
use crate::NetError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    #[default]
    InProc,
    Socket,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub delays: DelayModel,
    pub seed: u64,
    pub transport: Transport,
    /// Prefixed to every message id so ids stay unique across cells.
    pub label: String,
    pub start: Timestamp,
    pub max_events: usize,
    /// Loopback port for the socket transport; 0 picks one.
    pub port: u16,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            delays: DelayModel::zero(),
            seed: 0,
            transport: Transport::InProc,
            label: String::new(),
            start: Timestamp(0),
            max_events: 5_000_000,
            port: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimOutcome {
    /// Every envelope, in the order recipients handled them.
    pub transcript: Vec<Envelope>,
    pub samples: Vec<ClarificationSample>,
    pub sessions: Vec<SessionSummary>,
    pub audit: Vec<AuditRecord>,
    pub end: Timestamp,
    pub events: usize,
    /// ERROR envelopes sent.
    pub errors: usize,
}

enum Event {
    Deliver(Envelope),
    Handle(Envelope),
}

pub struct Simulation {
    cfg: SimConfig,
    nodes: BTreeMap<AgentId, Node>,
    rngs: BTreeMap<AgentId, ChaCha8Rng>,
    clock: VirtualClock,
    queue: BinaryHeap<Reverse<(Timestamp, u64)>>,
    events: BTreeMap<u64, Event>,
    seq: u64,
    links: Links,
    busy_until: BTreeMap<AgentId, Timestamp>,
    last_handle: BTreeMap<AgentId, Timestamp>,
    msg_seq: BTreeMap<AgentId, u64>,
    relay: Option<SocketRelay>,
    out: SimOutcome,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Self {
        Simulation {
            rngs: BTreeMap::new(),
            clock: VirtualClock::new(cfg.start),
            cfg,
            nodes: BTreeMap::new(),
            queue: BinaryHeap::new(),
            events: BTreeMap::new(),
            seq: 0,
            links: Links::default(),
            busy_until: BTreeMap::new(),
            last_handle: BTreeMap::new(),
            msg_seq: BTreeMap::new(),
            relay: None,
            out: SimOutcome::default(),
        }
    }

    pub fn add(&mut self, node: impl Into<Node>) -> Result<(), NetError> {
        let node = node.into();
        let id = node.id();
        if self.nodes.contains_key(&id) {
            return Err(NetError::DuplicateAgent(id));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(stream_of(id));
        self.rngs.insert(id, rng);
        self.nodes.insert(id, node);
        Ok(())
    }

    pub fn node(&self, id: AgentId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Runs until no event is left.
    pub fn run(&mut self) -> Result<SimOutcome, NetError> {
        if self.cfg.transport == Transport::Socket {
            let mut relay = SocketRelay::bind(self.cfg.port)?;
            for id in self.nodes.keys().filter(|id| **id != AgentId::AUTHORITY) {
                relay.connect(*id)?;
            }
            self.relay = Some(relay);
        }
        let start = self.clock.now();
        let ids: Vec<AgentId> = self.nodes.keys().copied().collect();
        for id in ids {
            let node = self.nodes.get_mut(&id).expect("listed node");
            let rng = self.rngs.get_mut(&id).expect("rng per node");
            let mut ctx = Ctx::new(start, rng);
            node.start(&mut ctx);
            let done = ctx.finish();
            self.emit(id, done)?;
        }

        let mut handled = 0usize;
        while let Some(Reverse((t, k))) = self.queue.pop() {
            handled += 1;
            if handled > self.cfg.max_events {
                return Err(NetError::EventLimit(self.cfg.max_events));
            }
            self.clock.advance_to(t);
            match self.events.remove(&k).expect("queued event") {
                Event::Deliver(env) => self.deliver(env, t)?,
                Event::Handle(env) => {
                    let id = env.recipient;
                    self.out.transcript.push(env.clone());
                    let node = self
                        .nodes
                        .get_mut(&id)
                        .ok_or(NetError::UnknownAgent(id))?;
                    let rng = self.rngs.get_mut(&id).expect("rng per node");
                    let mut ctx = Ctx::new(t, rng);
                    node.on_message(env, &mut ctx);
                    let done = ctx.finish();
                    self.emit(id, done)?;
                }
            }
        }

        let mut out = std::mem::take(&mut self.out);
        out.end = self.clock.now();
        out.events = handled;
        if let Some(Node::Authority(a)) = self.nodes.get(&AgentId::AUTHORITY) {
            out.sessions = a.engine().sessions().map(|s| s.summary()).collect();
            out.audit = a.engine().audit().to_vec();
        }
        Ok(out)
    }

    fn push(&mut self, at: Timestamp, ev: Event) {
        self.seq += 1;
        self.queue.push(Reverse((at, self.seq)));
        self.events.insert(self.seq, ev);
    }

    fn emit(
        &mut self,
        from: AgentId,
        (scheduled, samples): (Vec<Scheduled>, Vec<ClarificationSample>),
    ) -> Result<(), NetError> {
        self.out.samples.extend(samples);
        for Scheduled { mut env, at } in scheduled {
            if !self.nodes.contains_key(&env.recipient) {
                return Err(NetError::UnknownAgent(env.recipient));
            }
            env.sender = from;
            env.sent_at = at;
            if env.msg_id.is_empty() {
                let n = self.msg_seq.entry(from).or_insert(0);
                *n += 1;
                env.msg_id = format!("{from}#{n}");
            }
            if !self.cfg.label.is_empty() {
                env.msg_id = format!("{}/{}", self.cfg.label, env.msg_id);
            }
            if env.msg_type == MsgType::Error {
                self.out.errors += 1;
            }
            if env.recipient == from {
                self.push(at, Event::Handle(env));
            } else {
                let rng = self.rngs.get_mut(&from).expect("rng per node");
                let d = self.cfg.delays.edge(from.role, env.recipient.role).sample(rng);
                let deliver = self.links.deliver_at(from, env.recipient, at.plus_ms(d));
                self.push(deliver, Event::Deliver(env));
            }
        }
        Ok(())
    }

    fn deliver(&mut self, env: Envelope, t: Timestamp) -> Result<(), NetError> {
        let env = match self.relay.as_mut() {
            Some(r) => r.carry(&env)?,
            None => env,
        };
        let to = env.recipient;
        let proc = self.cfg.delays.processing(to.role);
        let busy = self.busy_until.entry(to).or_insert(Timestamp(0));
        let begin = t.max(*busy);
        *busy = begin.plus_ms(proc.service_ms);
        let served = *busy;
        let rng = self.rngs.get_mut(&to).ok_or(NetError::UnknownAgent(to))?;
        let ready = served.plus_ms(proc.latency.sample(rng));
        let last = self.last_handle.entry(to).or_insert(Timestamp(0));
        *last = (*last).max(ready);
        let at = *last;
        self.push(at, Event::Handle(env));
        Ok(())
    }
}

fn stream_of(id: AgentId) -> u64 {
    let role = Role::ALL.iter().position(|r| *r == id.role).unwrap_or(0) as u64;
    (role << 32) | u64::from(id.index)
}
