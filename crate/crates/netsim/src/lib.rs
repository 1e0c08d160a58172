//! Discrete-event network for the clarification protocols: agents,
//! delays, a virtual and a wall clock, and loopback socket transports.

pub mod agents;
pub mod bus;
pub mod clock;
pub mod codec;
pub mod delay;
pub mod sim;
pub mod socket;
pub mod wall;

use cuas_core::clarify::AgentId;
use thiserror::Error;

pub use agents::{
    AuthorityAgent, ClarificationSample, CourtAgent, CuasAgent, CuasConfig, Detection, Node,
    OperatorAgent, OperatorScript, RidScript, ScriptedReply,
};
pub use bus::{Channel, VirtualBus};
pub use clock::{ClockMode, VirtualClock, WallClock};
pub use delay::{DelayModel, Dist};
pub use sim::{SimConfig, SimOutcome, Simulation, Transport};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("agent {0} registered twice")]
    DuplicateAgent(AgentId),
    #[error("event limit of {0} reached")]
    EventLimit(usize),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("transport: {0}")]
    Transport(String),
}
