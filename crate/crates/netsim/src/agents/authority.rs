use cuas_core::clarify::{AgentId, Authority, Envelope};

use super::Ctx;

/// Serves the clarification engine. Failed dispatches are answered with
/// an ERROR envelope to the sender.
pub struct AuthorityAgent {
    engine: Authority,
    errors: usize,
}

impl AuthorityAgent {
    pub fn new(engine: Authority) -> Self {
        AuthorityAgent { engine, errors: 0 }
    }

    pub fn id(&self) -> AgentId {
        self.engine.id()
    }

    pub fn engine(&self) -> &Authority {
        &self.engine
    }

    pub fn errors(&self) -> usize {
        self.errors
    }

    pub fn on_message(&mut self, env: Envelope, ctx: &mut Ctx) {
        let reply_to = env.clone();
        match self.engine.dispatch(env, ctx.now) {
            Ok(outs) => {
                for o in outs {
                    let at = o.env.sent_at;
                    ctx.send_at(o.env, at);
                }
            }
            Err(e) => {
                self.errors += 1;
                let err = self.engine.error_reply(&reply_to, &e, ctx.now);
                ctx.send(err);
            }
        }
    }
}
