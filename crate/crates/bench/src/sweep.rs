//! Runs every (protocol, count) cell of a scenario and aggregates
//! clarification times.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use cuas_core::domain::Timestamp;
use cuas_netsim::wall::{run_wall, WallConfig, WallTransport};
use cuas_netsim::{AuthorityAgent, ClarificationSample, ClockMode, SimOutcome, Transport};
use serde::Serialize;

use crate::scenario::{Cell, Scenario};
use crate::stats::{summarize, to_csv, StatsSummary};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub transport: Transport,
    pub clock: ClockMode,
    pub seed: u64,
    /// Socket port; 0 picks a free one per cell.
    pub port: u16,
    /// Worker threads for virtual-clock cells.
    pub threads: usize,
}

impl SweepOptions {
    pub fn from_scenario(s: &Scenario) -> Self {
        SweepOptions {
            transport: s.transport,
            clock: s.clock,
            seed: s.seed,
            port: 0,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

pub struct CellRun {
    pub label: String,
    pub protocol: u8,
    pub count: u32,
    pub outcome: SimOutcome,
    /// Drones whose first decision carried another case than scripted.
    pub case_mismatches: Vec<String>,
}

impl CellRun {
    pub fn deltas(&self) -> Vec<u64> {
        self.outcome.samples.iter().map(|s| s.delta_ms).collect()
    }

    /// From the first detection to the last first decision.
    pub fn duration_ms(&self) -> u64 {
        let s = &self.outcome.samples;
        let first = s.iter().map(|x| x.detected_at).min();
        let last = s.iter().map(|x| x.decided_at).max();
        match (first, last) {
            (Some(a), Some(b)) => b.saturating_sub(a),
            _ => 0,
        }
    }

    pub fn stats(&self) -> Option<StatsSummary> {
        summarize(self.protocol, self.count, &self.deltas())
    }
}

pub struct SweepReport {
    pub cells: Vec<CellRun>,
    pub stats: Vec<StatsSummary>,
    pub elapsed: Duration,
}

impl SweepReport {
    pub fn cell(&self, protocol: u8, count: u32) -> Option<&CellRun> {
        self.cells.iter().find(|c| c.protocol == protocol && c.count == count)
    }

    pub fn csv(&self) -> String {
        to_csv(&self.stats)
    }
}

fn check_cases(cell: &Cell, samples: &[ClarificationSample]) -> Vec<String> {
    let mut out = Vec::new();
    for s in samples {
        let Some(i) = cell.detections.iter().position(|d| d.drone_id == s.drone_id) else {
            continue;
        };
        if let Some(want) = &cell.expected[i] {
            if *want != s.case_label {
                out.push(format!("{} {}: expected {want}, got {}", cell.label, s.drone_id, s.case_label));
            }
        }
    }
    out
}

pub fn run_cell(s: &Scenario, protocol: u8, count: u32, opts: &SweepOptions) -> Result<CellRun, BenchError> {
    let cell = s.cell(protocol, count)?;
    let outcome = match opts.clock {
        ClockMode::Virtual => s.simulation(&cell, opts.seed, opts.transport, opts.port)?.run()?,
        ClockMode::Wall => {
            let cfg = WallConfig {
                delays: s.delays.clone(),
                seed: opts.seed,
                speedup: s.speedup,
                start: Timestamp(s.start_ms),
                transport: match opts.transport {
                    Transport::Socket => WallTransport::Tcp,
                    Transport::InProc => WallTransport::Duplex,
                },
                port: opts.port,
                grace_ms: 1_000,
                deadline_ms: 600_000,
            };
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            let authority = AuthorityAgent::new(s.authority(&cell));
            rt.block_on(run_wall(authority, s.clients(&cell), cfg))?.0
        }
    };
    let case_mismatches = check_cases(&cell, &outcome.samples);
    Ok(CellRun {
        label: cell.label,
        protocol,
        count,
        outcome,
        case_mismatches,
    })
}

/// Runs all cells. Virtual-clock cells run in parallel; results keep the
/// scenario's cell order either way.
pub fn run_sweep(s: &Scenario, opts: &SweepOptions) -> Result<SweepReport, BenchError> {
    s.validate()?;
    let began = Instant::now();
    let cells = s.cells();
    let parallel = opts.clock == ClockMode::Virtual && (opts.port == 0 || opts.transport == Transport::InProc);
    let workers = if parallel { opts.threads.max(1).min(cells.len()) } else { 1 };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<CellRun, BenchError>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(p, n)) = cells.get(k) else { break };
                let r = run_cell(s, p, n, opts);
                results.lock().expect("no poisoned worker")[k] = Some(r);
            });
        }
    });
    let mut runs = Vec::with_capacity(cells.len());
    for r in results.into_inner().expect("workers joined") {
        runs.push(r.expect("every cell ran")?);
    }
    let stats = runs.iter().filter_map(CellRun::stats).collect();
    Ok(SweepReport {
        cells: runs,
        stats,
        elapsed: began.elapsed(),
    })
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    cell: &'a str,
    #[serde(flatten)]
    row: &'a T,
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl Iterator<Item = (String, T)>) -> Result<(), BenchError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for (cell, row) in rows {
        serde_json::to_writer(&mut f, &Tagged { cell: &cell, row: &row })?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

/// Writes `results.csv`, `transcript.jsonl`, `sessions.jsonl`,
/// `audit.jsonl`, `samples.jsonl` and the effective `scenario.json`.
pub fn write_outputs(report: &SweepReport, s: &Scenario, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), report.csv())?;
    let mut t = std::io::BufWriter::new(fs::File::create(dir.join("transcript.jsonl"))?);
    for c in &report.cells {
        for e in &c.outcome.transcript {
            t.write_all(e.to_json_line().as_bytes())?;
            t.write_all(b"\n")?;
        }
    }
    t.flush()?;
    let each = |f: fn(&CellRun) -> Vec<serde_json::Value>| {
        report
            .cells
            .iter()
            .flat_map(move |c| f(c).into_iter().map(move |v| (c.label.clone(), v)))
    };
    write_jsonl(
        &dir.join("sessions.jsonl"),
        each(|c| c.outcome.sessions.iter().map(|x| serde_json::to_value(x).expect("serializes")).collect()),
    )?;
    write_jsonl(
        &dir.join("audit.jsonl"),
        each(|c| c.outcome.audit.iter().map(|x| serde_json::to_value(x).expect("serializes")).collect()),
    )?;
    write_jsonl(
        &dir.join("samples.jsonl"),
        each(|c| c.outcome.samples.iter().map(|x| serde_json::to_value(x).expect("serializes")).collect()),
    )?;
    fs::write(dir.join("scenario.json"), s.to_json())?;
    Ok(())
}
