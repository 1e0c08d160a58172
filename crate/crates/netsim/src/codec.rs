//! Newline-delimited JSON framing. The first line on every connection is
//! a HELLO naming the connecting agent.

use cuas_core::clarify::{AgentId, Envelope, MsgType};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed envelope: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("expected HELLO, got {0}")]
    NotHello(MsgType),
}

pub fn encode(env: &Envelope) -> String {
    let mut line = env.to_json_line();
    line.push('\n');
    line
}

pub fn decode(line: &str) -> Result<Envelope, CodecError> {
    Ok(serde_json::from_str(line.trim_end_matches(['\r', '\n']))?)
}

pub fn hello(agent: AgentId) -> Envelope {
    let mut env = Envelope::new(agent, AgentId::AUTHORITY, MsgType::Hello, "", json!({}));
    env.msg_id = format!("{agent}#hello");
    env
}

/// Agent named by a HELLO line.
pub fn decode_hello(line: &str) -> Result<AgentId, CodecError> {
    let env = decode(line)?;
    match env.msg_type {
        MsgType::Hello => Ok(env.sender),
        other => Err(CodecError::NotHello(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let env = hello(AgentId::cuas(3));
        let line = encode(&env);
        assert!(line.ends_with('\n'));
        assert_eq!(decode(&line).unwrap(), env);
        assert_eq!(decode_hello(&line).unwrap(), AgentId::cuas(3));
    }

    #[test]
    fn rejects_garbage_and_non_hello() {
        assert!(matches!(decode("{nope"), Err(CodecError::Malformed(_))));
        let mut env = hello(AgentId::cuas(0));
        env.msg_type = MsgType::TrackLost;
        assert!(matches!(decode_hello(&encode(&env)), Err(CodecError::NotHello(_))));
    }
}
