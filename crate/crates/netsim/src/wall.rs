//! Wall-clock runtime on tokio. The authority runs as a hub that every
//! other agent connects to over loopback TCP or an in-memory duplex
//! stream, speaking newline-delimited JSON with a HELLO line first.
//!
//! Edge delays and agent-internal delays are slept for real, scaled by the
//! clock's speedup. Per-message processing latency is not modelled here;
//! the CPU time actually spent stands in for it.

use std::collections::BTreeMap;
use cuas_core::clarify::{AgentId, Envelope, MsgType};
use cuas_core::domain::Timestamp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use tokio::io::{AsyncBufReadExt, AsyncRead, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, watch};
use tokio::task::JoinHandle;

use crate::agents::{AuthorityAgent, ClarificationSample, Ctx, Node, Scheduled};
use crate::bus::Links;
use crate::clock::WallClock;
use crate::codec;
use crate::delay::DelayModel;
use crate::sim::SimOutcome;
use crate::NetError;

type Line = (Timestamp, String);

enum HubMsg {
    Register(AgentId, mpsc::UnboundedSender<Line>),
    Line(AgentId, String),
    Timer(Envelope),
    Stop,
}

/// Result of a hub once stopped.
pub struct HubReport {
    pub authority: AuthorityAgent,
    pub transcript: Vec<Envelope>,
    /// Lines that failed to decode.
    pub malformed: usize,
    pub errors: usize,
}

/// Handle on a running authority hub.
pub struct Hub {
    tx: mpsc::UnboundedSender<HubMsg>,
    clock: WallClock,
    task: JoinHandle<HubReport>,
    accept: Option<JoinHandle<()>>,
}

impl Hub {
    pub fn spawn(authority: AuthorityAgent, clock: WallClock, delays: DelayModel, seed: u64) -> Hub {
        let (tx, rx) = mpsc::unbounded_channel();
        let state = HubState {
            authority,
            clock,
            delays,
            rng: ChaCha8Rng::seed_from_u64(seed),
            links: Links::default(),
            routes: BTreeMap::new(),
            transcript: Vec::new(),
            malformed: 0,
            errors: 0,
            seq: 0,
            tx: tx.clone(),
        };
        let task = tokio::spawn(state.run(rx));
        Hub {
            tx,
            clock,
            task,
            accept: None,
        }
    }

    /// Serves one already-open connection.
    pub fn attach<S>(&self, stream: S)
    where
        S: AsyncRead + AsyncWrite + Send + 'static,
    {
        tokio::spawn(serve_conn(stream, self.tx.clone(), self.clock));
    }

    /// Accepts TCP connections until stopped.
    pub fn serve(&mut self, listener: TcpListener) {
        let tx = self.tx.clone();
        let clock = self.clock;
        self.accept = Some(tokio::spawn(async move {
            while let Ok((stream, _)) = listener.accept().await {
                let _ = stream.set_nodelay(true);
                tokio::spawn(serve_conn(stream, tx.clone(), clock));
            }
        }));
    }

    pub async fn stop(self) -> Result<HubReport, NetError> {
        if let Some(a) = self.accept {
            a.abort();
        }
        let _ = self.tx.send(HubMsg::Stop);
        self.task
            .await
            .map_err(|e| NetError::Transport(e.to_string()))
    }
}

/// Starts the authority hub on `listener`.
pub fn run_authority(
    listener: TcpListener,
    authority: AuthorityAgent,
    clock: WallClock,
    delays: DelayModel,
    seed: u64,
) -> Hub {
    let mut hub = Hub::spawn(authority, clock, delays, seed);
    hub.serve(listener);
    hub
}

struct HubState {
    authority: AuthorityAgent,
    clock: WallClock,
    delays: DelayModel,
    rng: ChaCha8Rng,
    links: Links,
    routes: BTreeMap<AgentId, mpsc::UnboundedSender<Line>>,
    transcript: Vec<Envelope>,
    malformed: usize,
    errors: usize,
    seq: u64,
    tx: mpsc::UnboundedSender<HubMsg>,
}

impl HubState {
    async fn run(mut self, mut rx: mpsc::UnboundedReceiver<HubMsg>) -> HubReport {
        while let Some(msg) = rx.recv().await {
            match msg {
                HubMsg::Register(agent, w) => {
                    self.routes.insert(agent, w);
                }
                HubMsg::Line(from, line) => match codec::decode(&line) {
                    Ok(env) => self.handle(env),
                    Err(e) => {
                        self.malformed += 1;
                        self.seq += 1;
                        let mut err = Envelope::new(
                            AgentId::AUTHORITY,
                            from,
                            MsgType::Error,
                            "",
                            json!({"error": e.to_string()}),
                        );
                        err.msg_id = format!("{}#err{}", AgentId::AUTHORITY, self.seq);
                        err.sent_at = self.clock.now();
                        self.send(err, self.clock.now());
                    }
                },
                HubMsg::Timer(env) => self.handle(env),
                HubMsg::Stop => break,
            }
        }
        HubReport {
            authority: self.authority,
            transcript: self.transcript,
            malformed: self.malformed,
            errors: self.errors,
        }
    }

    fn handle(&mut self, env: Envelope) {
        let now = self.clock.now();
        self.transcript.push(env.clone());
        let mut ctx = Ctx::new(now, &mut self.rng);
        self.authority.on_message(env, &mut ctx);
        let (out, _) = ctx.finish();
        for Scheduled { mut env, at } in out {
            env.sent_at = at;
            if env.msg_type == MsgType::Error {
                self.errors += 1;
            }
            if env.recipient == AgentId::AUTHORITY {
                let tx = self.tx.clone();
                let wait = self.clock.until(at);
                tokio::spawn(async move {
                    tokio::time::sleep(wait).await;
                    let _ = tx.send(HubMsg::Timer(env));
                });
            } else {
                self.send(env, at);
            }
        }
    }

    fn send(&mut self, env: Envelope, at: Timestamp) {
        let d = self.delays.edge(env.sender.role, env.recipient.role).sample(&mut self.rng);
        let deliver = self.links.deliver_at(env.sender, env.recipient, at.plus_ms(d));
        if let Some(w) = self.routes.get(&env.recipient) {
            self.transcript.push(env.clone());
            let _ = w.send((deliver, codec::encode(&env)));
        }
    }
}

/// Writes queued lines in order, each no earlier than its delivery time.
async fn write_lines<W>(mut w: W, mut rx: mpsc::UnboundedReceiver<Line>, clock: WallClock)
where
    W: AsyncWrite + Unpin,
{
    while let Some((at, line)) = rx.recv().await {
        tokio::time::sleep(clock.until(at)).await;
        if w.write_all(line.as_bytes()).await.is_err() {
            break;
        }
        let _ = w.flush().await;
    }
}

async fn serve_conn<S>(stream: S, hub: mpsc::UnboundedSender<HubMsg>, clock: WallClock)
where
    S: AsyncRead + AsyncWrite + Send + 'static,
{
    let (r, w) = tokio::io::split(stream);
    let mut lines = BufReader::new(r).lines();
    let (wtx, wrx) = mpsc::unbounded_channel();
    tokio::spawn(write_lines(w, wrx, clock));
    let agent = match lines.next_line().await {
        Ok(Some(l)) => match codec::decode_hello(&l) {
            Ok(a) => a,
            Err(e) => {
                let mut err = Envelope::new(AgentId::AUTHORITY, AgentId::AUTHORITY, MsgType::Error, "", json!({"error": e.to_string()}));
                err.msg_id = format!("{}#hello-error", AgentId::AUTHORITY);
                let _ = wtx.send((Timestamp(0), codec::encode(&err)));
                return;
            }
        },
        _ => return,
    };
    if hub.send(HubMsg::Register(agent, wtx)).is_err() {
        return;
    }
    while let Ok(Some(l)) = lines.next_line().await {
        if hub.send(HubMsg::Line(agent, l)).is_err() {
            break;
        }
    }
}

enum Local {
    Env(Envelope),
    Stop,
}

/// Runs one non-authority agent against the hub until told to stop.
async fn run_client<S>(
    mut node: Node,
    stream: S,
    clock: WallClock,
    delays: DelayModel,
    seed: u64,
    mut stop: watch::Receiver<bool>,
    idle: mpsc::UnboundedSender<AgentId>,
) -> (Node, Vec<ClarificationSample>)
where
    S: AsyncRead + AsyncWrite + Send + 'static,
{
    let id = node.id();
    let (r, mut w) = tokio::io::split(stream);
    let _ = w.write_all(codec::encode(&codec::hello(id)).as_bytes()).await;
    let (wtx, wrx) = mpsc::unbounded_channel::<Line>();
    tokio::spawn(write_lines(w, wrx, clock));

    let (ltx, mut lrx) = mpsc::unbounded_channel::<Local>();
    let reader_tx = ltx.clone();
    tokio::spawn(async move {
        let mut lines = BufReader::new(r).lines();
        while let Ok(Some(l)) = lines.next_line().await {
            if let Ok(env) = codec::decode(&l) {
                let _ = reader_tx.send(Local::Env(env));
            }
        }
    });
    let stop_tx = ltx.clone();
    tokio::spawn(async move {
        let _ = stop.wait_for(|s| *s).await;
        let _ = stop_tx.send(Local::Stop);
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Links::default();
    let mut seq = 0u64;
    let mut samples = Vec::new();
    let mut reported = false;

    let mut pending: Option<Envelope> = None;
    loop {
        let now = clock.now();
        let mut ctx = Ctx::new(now, &mut rng);
        match pending.take() {
            None if seq == 0 => node.start(&mut ctx),
            None => {}
            Some(env) => node.on_message(env, &mut ctx),
        }
        let (out, s) = ctx.finish();
        samples.extend(s);
        for Scheduled { mut env, at } in out {
            seq += 1;
            env.sender = id;
            env.sent_at = at;
            if env.msg_id.is_empty() {
                env.msg_id = format!("{id}#{seq}");
            }
            if env.recipient == id {
                let tx = ltx.clone();
                let wait = clock.until(at);
                tokio::spawn(async move {
                    tokio::time::sleep(wait).await;
                    let _ = tx.send(Local::Env(env));
                });
            } else {
                let d = delays.edge(id.role, env.recipient.role).sample(&mut rng);
                let deliver = links.deliver_at(id, env.recipient, at.plus_ms(d));
                let _ = wtx.send((deliver, codec::encode(&env)));
            }
        }
        seq = seq.max(1);
        if !reported && node.is_idle() {
            reported = true;
            let _ = idle.send(id);
        }
        match lrx.recv().await {
            Some(Local::Env(env)) => pending = Some(env),
            Some(Local::Stop) | None => break,
        }
    }
    (node, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallTransport {
    Tcp,
    Duplex,
}

#[derive(Debug, Clone)]
pub struct WallConfig {
    pub delays: DelayModel,
    pub seed: u64,
    pub speedup: f64,
    pub start: Timestamp,
    pub transport: WallTransport,
    /// TCP port for the hub; 0 picks one.
    pub port: u16,
    /// Simulated time to keep running after every CUAS is idle.
    pub grace_ms: u64,
    /// Hard stop in simulated time.
    pub deadline_ms: u64,
}

impl Default for WallConfig {
    fn default() -> Self {
        WallConfig {
            delays: DelayModel::zero(),
            seed: 0,
            speedup: 1.0,
            start: Timestamp(0),
            transport: WallTransport::Duplex,
            port: 0,
            grace_ms: 1_000,
            deadline_ms: 3_600_000,
        }
    }
}

/// Runs `authority` and `clients` on real time until every CUAS is idle.
pub async fn run_wall(
    authority: AuthorityAgent,
    clients: Vec<Node>,
    cfg: WallConfig,
) -> Result<(SimOutcome, Vec<Node>), NetError> {
    let clock = WallClock::new(cfg.start, cfg.speedup);
    let mut hub = Hub::spawn(authority, clock, cfg.delays.clone(), cfg.seed);
    let addr = if cfg.transport == WallTransport::Tcp {
        let listener = TcpListener::bind(("127.0.0.1", cfg.port)).await?;
        let addr = listener.local_addr()?;
        hub.serve(listener);
        Some(addr)
    } else {
        None
    };

    let (stop_tx, stop_rx) = watch::channel(false);
    let (idle_tx, mut idle_rx) = mpsc::unbounded_channel();
    let cuas: Vec<AgentId> = clients
        .iter()
        .filter(|n| matches!(n, Node::Cuas(_)))
        .map(Node::id)
        .collect();
    let mut samples = Vec::new();
    let mut tasks = Vec::new();
    for (i, node) in clients.into_iter().enumerate() {
        let seed = cfg.seed.wrapping_add(1 + i as u64);
        let (delays, stop, idle) = (cfg.delays.clone(), stop_rx.clone(), idle_tx.clone());
        let task = match addr {
            Some(addr) => {
                let stream = TcpStream::connect(addr).await?;
                stream.set_nodelay(true)?;
                tokio::spawn(run_client(node, stream, clock, delays, seed, stop, idle))
            }
            None => {
                let (a, b) = tokio::io::duplex(1 << 16);
                hub.attach(b);
                tokio::spawn(run_client(node, a, clock, delays, seed, stop, idle))
            }
        };
        tasks.push(task);
    }
    drop(idle_tx);

    let wait_idle = async {
        let mut left: Vec<AgentId> = cuas.clone();
        while !left.is_empty() {
            match idle_rx.recv().await {
                Some(a) => left.retain(|c| *c != a),
                None => break,
            }
        }
    };
    let deadline = clock.until(cfg.start.plus_ms(cfg.deadline_ms));
    let _ = tokio::time::timeout(deadline, wait_idle).await;
    tokio::time::sleep(clock.until(clock.now().plus_ms(cfg.grace_ms))).await;
    let _ = stop_tx.send(true);

    let mut nodes = Vec::new();
    for t in tasks {
        let (node, s) = t.await.map_err(|e| NetError::Transport(e.to_string()))?;
        samples.extend(s);
        nodes.push(node);
    }
    let end = clock.now();
    let report = hub.stop().await?;
    let engine = report.authority.engine();
    let out = SimOutcome {
        transcript: report.transcript,
        samples,
        sessions: engine.sessions().map(|s| s.summary()).collect(),
        audit: engine.audit().to_vec(),
        end,
        events: 0,
        errors: report.errors + report.malformed,
    };
    Ok((out, nodes))
}
