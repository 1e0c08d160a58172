use cuas_core::clarify::{AgentId, Envelope, MsgType};
use serde_json::json;

use super::Ctx;

/// Write-only audit sink.
pub struct CourtAgent {
    id: AgentId,
    received: Vec<Envelope>,
}

impl CourtAgent {
    pub fn new(index: u32) -> Self {
        CourtAgent {
            id: AgentId::court(index),
            received: Vec::new(),
        }
    }

    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn received(&self) -> &[Envelope] {
        &self.received
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        ctx.send(Envelope::new(self.id, AgentId::AUTHORITY, MsgType::Hello, "", json!({})));
    }

    pub fn on_message(&mut self, env: Envelope, _ctx: &mut Ctx) {
        self.received.push(env);
    }
}
