use std::collections::BTreeMap;

use cuas_core::clarify::{AgentId, Envelope, MsgType, OperatorResponse};
use cuas_core::domain::OperatorId;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Ctx;
use crate::delay::Dist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedReply {
    pub response: OperatorResponse,
    /// Overrides the model's think time.
    #[serde(default)]
    pub think_ms: Option<u64>,
}

/// Reply per incoming authority request. Unlisted requests get silence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatorScript {
    #[serde(default)]
    pub replies: BTreeMap<MsgType, ScriptedReply>,
}

impl OperatorScript {
    /// Same answer to every request.
    pub fn always(response: OperatorResponse, think_ms: Option<u64>) -> Self {
        let replies = [
            MsgType::CheckRestoreIdTransmission,
            MsgType::ReturnToAuthorizedArea,
            MsgType::StopMissionIfTimeExceeded,
        ]
        .into_iter()
        .map(|t| (t, ScriptedReply { response, think_ms }))
        .collect();
        OperatorScript { replies }
    }
}

pub struct OperatorAgent {
    id: AgentId,
    operator_id: OperatorId,
    script: OperatorScript,
    think: Dist,
    received: Vec<Envelope>,
}

impl OperatorAgent {
    pub fn new(index: u32, operator_id: OperatorId, script: OperatorScript, think: Dist) -> Self {
        OperatorAgent {
            id: AgentId::operator(index),
            operator_id,
            script,
            think,
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
        let hello = Envelope::new(
            self.id,
            AgentId::AUTHORITY,
            MsgType::Hello,
            "",
            json!({"operator_id": self.operator_id}),
        );
        ctx.send(hello);
    }

    pub fn on_message(&mut self, env: Envelope, ctx: &mut Ctx) {
        let reply = self.script.replies.get(&env.msg_type).copied();
        let correlation = env.correlation_id.clone();
        self.received.push(env);
        let Some(reply) = reply else { return };
        let Some(msg_type) = reply.response.msg_type() else {
            return;
        };
        let think = reply.think_ms.unwrap_or_else(|| self.think.sample(ctx.rng));
        let out = Envelope::new(self.id, AgentId::AUTHORITY, msg_type, correlation, json!({}));
        let at = ctx.now.plus_ms(think);
        ctx.send_at(out, at);
    }
}
