//! Simulated participants. Each agent reacts to one envelope at a time and
//! returns the envelopes it wants sent; the engine decides when they
//! arrive.

mod authority;
mod court;
mod cuas;
mod operator;

pub use authority::AuthorityAgent;
pub use court::CourtAgent;
pub use cuas::{ClarificationSample, CuasAgent, CuasConfig, Detection, RidScript};
pub use operator::{OperatorAgent, OperatorScript, ScriptedReply};

use cuas_core::clarify::{AgentId, Envelope};
use cuas_core::domain::Timestamp;
use rand_chacha::ChaCha8Rng;

/// An envelope to put on the wire at `at`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduled {
    pub env: Envelope,
    pub at: Timestamp,
}

/// What an agent sees while handling one event.
pub struct Ctx<'a> {
    pub now: Timestamp,
    pub rng: &'a mut ChaCha8Rng,
    out: Vec<Scheduled>,
    samples: Vec<ClarificationSample>,
}

impl<'a> Ctx<'a> {
    pub fn new(now: Timestamp, rng: &'a mut ChaCha8Rng) -> Self {
        Ctx {
            now,
            rng,
            out: Vec::new(),
            samples: Vec::new(),
        }
    }

    /// Sends `env` at `at`, clamped to now.
    pub fn send_at(&mut self, env: Envelope, at: Timestamp) {
        self.out.push(Scheduled {
            env,
            at: at.max(self.now),
        });
    }

    pub fn send(&mut self, env: Envelope) {
        self.send_at(env, self.now);
    }

    pub fn record(&mut self, sample: ClarificationSample) {
        self.samples.push(sample);
    }

    pub fn finish(self) -> (Vec<Scheduled>, Vec<ClarificationSample>) {
        (self.out, self.samples)
    }
}

pub enum Node {
    Authority(Box<AuthorityAgent>),
    Cuas(CuasAgent),
    Operator(OperatorAgent),
    Court(CourtAgent),
}

impl Node {
    pub fn id(&self) -> AgentId {
        match self {
            Node::Authority(a) => a.id(),
            Node::Cuas(a) => a.id(),
            Node::Operator(a) => a.id(),
            Node::Court(a) => a.id(),
        }
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        match self {
            Node::Authority(_) => {}
            Node::Cuas(a) => a.start(ctx),
            Node::Operator(a) => a.start(ctx),
            Node::Court(a) => a.start(ctx),
        }
    }

    pub fn on_message(&mut self, env: Envelope, ctx: &mut Ctx) {
        match self {
            Node::Authority(a) => a.on_message(env, ctx),
            Node::Cuas(a) => a.on_message(env, ctx),
            Node::Operator(a) => a.on_message(env, ctx),
            Node::Court(a) => a.on_message(env, ctx),
        }
    }

    /// True once the agent expects no further work of its own.
    pub fn is_idle(&self) -> bool {
        match self {
            Node::Cuas(a) => a.is_done(),
            _ => true,
        }
    }
}

impl From<AuthorityAgent> for Node {
    fn from(a: AuthorityAgent) -> Self {
        Node::Authority(Box::new(a))
    }
}

impl From<CuasAgent> for Node {
    fn from(a: CuasAgent) -> Self {
        Node::Cuas(a)
    }
}

impl From<OperatorAgent> for Node {
    fn from(a: OperatorAgent) -> Self {
        Node::Operator(a)
    }
}

impl From<CourtAgent> for Node {
    fn from(a: CourtAgent) -> Self {
        Node::Court(a)
    }
}
