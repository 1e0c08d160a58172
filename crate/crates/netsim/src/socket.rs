//! Loopback TCP relay for the virtual-clock engine. Each delivery makes a
//! real round trip through the kernel, so the JSON framing is exercised
//! while timing stays virtual.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};

use cuas_core::clarify::{AgentId, Envelope};

use crate::codec;
use crate::NetError;

struct Conn {
    client: TcpStream,
    client_rx: BufReader<TcpStream>,
    server: TcpStream,
    server_rx: BufReader<TcpStream>,
}

/// One connection per non-authority agent, hub side held by the relay.
pub struct SocketRelay {
    listener: TcpListener,
    conns: BTreeMap<AgentId, Conn>,
}

impl SocketRelay {
    /// Port 0 picks a free port.
    pub fn bind(port: u16) -> Result<Self, NetError> {
        let listener = TcpListener::bind(("127.0.0.1", port))?;
        Ok(SocketRelay {
            listener,
            conns: BTreeMap::new(),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, NetError> {
        Ok(self.listener.local_addr()?)
    }

    /// Opens a connection for `agent`; the hub side reads its HELLO first.
    pub fn connect(&mut self, agent: AgentId) -> Result<(), NetError> {
        let mut client = TcpStream::connect(self.local_addr()?)?;
        let (server, _) = self.listener.accept()?;
        client.set_nodelay(true)?;
        server.set_nodelay(true)?;
        client.write_all(codec::encode(&codec::hello(agent)).as_bytes())?;
        let mut server_rx = BufReader::new(server.try_clone()?);
        let mut line = String::new();
        server_rx.read_line(&mut line)?;
        let named = codec::decode_hello(&line)?;
        if named != agent {
            return Err(NetError::Transport(format!("HELLO from {named}, expected {agent}")));
        }
        let client_rx = BufReader::new(client.try_clone()?);
        self.conns.insert(
            agent,
            Conn {
                client,
                client_rx,
                server,
                server_rx,
            },
        );
        Ok(())
    }

    /// Sends `env` across the wire and returns what the far side decoded.
    pub fn carry(&mut self, env: &Envelope) -> Result<Envelope, NetError> {
        let line = codec::encode(env);
        let mut got = String::new();
        if env.sender == AgentId::AUTHORITY {
            let c = self
                .conns
                .get_mut(&env.recipient)
                .ok_or(NetError::UnknownAgent(env.recipient))?;
            c.server.write_all(line.as_bytes())?;
            c.client_rx.read_line(&mut got)?;
        } else {
            let c = self
                .conns
                .get_mut(&env.sender)
                .ok_or(NetError::UnknownAgent(env.sender))?;
            c.client.write_all(line.as_bytes())?;
            c.server_rx.read_line(&mut got)?;
        }
        Ok(codec::decode(&got)?)
    }
}
