//! In-process message bus on a virtual clock.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::rc::Rc;

use cuas_core::clarify::{AgentId, Envelope};
use cuas_core::domain::Timestamp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clock::VirtualClock;
use crate::delay::DelayModel;
use crate::NetError;

/// Per ordered pair, the last delivery time handed out. Delivery never
/// precedes it, which keeps every link FIFO under random delays.
#[derive(Debug, Default, Clone)]
pub struct Links {
    last: BTreeMap<(AgentId, AgentId), Timestamp>,
}

impl Links {
    pub fn deliver_at(&mut self, from: AgentId, to: AgentId, earliest: Timestamp) -> Timestamp {
        let slot = self.last.entry((from, to)).or_insert(Timestamp(0));
        *slot = (*slot).max(earliest);
        *slot
    }
}

struct BusState {
    clock: VirtualClock,
    agents: BTreeSet<AgentId>,
    delays: DelayModel,
    rng: ChaCha8Rng,
    links: Links,
    seq: u64,
    queues: BTreeMap<(AgentId, AgentId), VecDeque<(Timestamp, Envelope)>>,
}

/// Registry of agents plus the shared clock. Cloning shares the bus.
#[derive(Clone)]
pub struct VirtualBus {
    state: Rc<RefCell<BusState>>,
}

impl VirtualBus {
    pub fn new(delays: DelayModel, seed: u64) -> Self {
        VirtualBus {
            state: Rc::new(RefCell::new(BusState {
                clock: VirtualClock::default(),
                agents: BTreeSet::new(),
                delays,
                rng: ChaCha8Rng::seed_from_u64(seed),
                links: Links::default(),
                seq: 0,
                queues: BTreeMap::new(),
            })),
        }
    }

    pub fn register(&self, agent: AgentId) -> Result<(), NetError> {
        if self.state.borrow_mut().agents.insert(agent) {
            Ok(())
        } else {
            Err(NetError::DuplicateAgent(agent))
        }
    }

    pub fn open_channel(&self, local: AgentId, remote: AgentId) -> Result<Channel, NetError> {
        let st = self.state.borrow();
        for a in [local, remote] {
            if !st.agents.contains(&a) {
                return Err(NetError::UnknownAgent(a));
            }
        }
        Ok(Channel {
            local,
            remote,
            state: Rc::clone(&self.state),
        })
    }

    pub fn now(&self) -> Timestamp {
        self.state.borrow().clock.now()
    }

    pub fn advance_to(&self, t: Timestamp) {
        self.state.borrow_mut().clock.advance_to(t);
    }

    /// Earliest pending delivery anywhere on the bus.
    pub fn next_delivery(&self) -> Option<Timestamp> {
        self.state
            .borrow()
            .queues
            .values()
            .filter_map(|q| q.front().map(|(t, _)| *t))
            .min()
    }
}

/// One end of a bidirectional link between two registered agents.
pub struct Channel {
    local: AgentId,
    remote: AgentId,
    state: Rc<RefCell<BusState>>,
}

impl Channel {
    pub fn local(&self) -> AgentId {
        self.local
    }

    pub fn remote(&self) -> AgentId {
        self.remote
    }

    /// Stamps and enqueues `env`; returns its delivery time.
    pub fn send(&self, mut env: Envelope) -> Timestamp {
        let mut st = self.state.borrow_mut();
        let st = &mut *st;
        let now = st.clock.now();
        st.seq += 1;
        env.sender = self.local;
        env.recipient = self.remote;
        env.sent_at = now;
        if env.msg_id.is_empty() {
            env.msg_id = format!("{}#{}", self.local, st.seq);
        }
        let d = st.delays.edge(self.local.role, self.remote.role).sample(&mut st.rng);
        let at = st.links.deliver_at(self.local, self.remote, now.plus_ms(d));
        st.queues
            .entry((self.local, self.remote))
            .or_default()
            .push_back((at, env));
        at
    }

    /// Next envelope from the remote end that has arrived by now.
    pub fn try_recv(&self) -> Option<(Timestamp, Envelope)> {
        let mut st = self.state.borrow_mut();
        let now = st.clock.now();
        let q = st.queues.get_mut(&(self.remote, self.local))?;
        match q.front() {
            Some((t, _)) if *t <= now => q.pop_front(),
            _ => None,
        }
    }
}
