use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use cuas_bench::replay::replay_file;
use cuas_bench::sweep::{run_sweep, write_outputs, SweepOptions};
use cuas_bench::{delay_budget, Scenario};
use cuas_core::clarify::cases::{check_row, enumerate, ORACLE};
use cuas_core::postdetect::export_edge_list;
use cuas_netsim::{ClockMode, Transport};

#[derive(Parser)]
#[command(name = "cuasim", version, about = "Drone clarification simulator and experiment runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Inproc,
    Socket,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Virtual,
    Wall,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every (protocol, count) cell of a scenario and write results.
    Run {
        /// Scenario file (JSON).
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum)]
        transport: Option<TransportArg>,
        #[arg(long, value_enum)]
        clock: Option<ClockArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Authority port in socket mode; 0 picks a free one.
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
    /// Re-run the authority against a recorded transcript.
    Replay {
        transcript: PathBuf,
        /// Defaults to scenario.json next to the transcript.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Print the post-detection transition table as an edge list.
    FsmExport {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every protocol case against the engine.
    Cases,
    /// Share of the reaction time spent on clarification.
    Budget {
        #[arg(long)]
        detect: f64,
        #[arg(long)]
        clarify: f64,
        #[arg(long, default_value_t = 0.0)]
        timeout: f64,
        #[arg(long, default_value_t = 0.0)]
        interdict: f64,
        #[arg(long)]
        tolerated: bool,
    },
    /// Write the built-in baseline scenario.
    Preset {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { file, scenario, transport, clock, seed, out, port } => {
            let Some(path) = file.or(scenario) else {
                return fail("a scenario file is required");
            };
            let s = match Scenario::load(&path) {
                Ok(s) => s,
                Err(e) => return fail(format!("{}: {e}", path.display())),
            };
            let mut opts = SweepOptions::from_scenario(&s);
            if let Some(t) = transport {
                opts.transport = match t {
                    TransportArg::Inproc => Transport::InProc,
                    TransportArg::Socket => Transport::Socket,
                };
            }
            if let Some(c) = clock {
                opts.clock = match c {
                    ClockArg::Virtual => ClockMode::Virtual,
                    ClockArg::Wall => ClockMode::Wall,
                };
            }
            if let Some(seed) = seed {
                opts.seed = seed;
            }
            opts.port = port;
            let report = match run_sweep(&s, &opts) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            if let Err(e) = write_outputs(&report, &s, &out) {
                return fail(e);
            }
            print!("{}", report.csv());
            eprintln!("{} cells in {:.2?}, written to {}", report.cells.len(), report.elapsed, out.display());
            let mismatches: Vec<_> = report.cells.iter().flat_map(|c| &c.case_mismatches).collect();
            let errors: usize = report.cells.iter().map(|c| c.outcome.errors).sum();
            for m in &mismatches {
                eprintln!("case mismatch: {m}");
            }
            if !mismatches.is_empty() {
                return fail(format!("{} drones ended in an unscripted case", mismatches.len()));
            }
            if errors > 0 {
                eprintln!("{errors} messages were rejected by the authority");
            }
            ExitCode::SUCCESS
        }
        Cmd::Replay { transcript, scenario } => {
            let started = Instant::now();
            match replay_file(&transcript, scenario.as_deref()) {
                Ok(r) => {
                    for m in &r.mismatches {
                        println!("MISMATCH {m}");
                    }
                    println!(
                        "{} cells, {} inputs, {} outputs, {} sessions checked in {:.2?}",
                        r.cells,
                        r.inputs,
                        r.outputs,
                        r.sessions_checked,
                        started.elapsed()
                    );
                    if r.ok() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => fail(e),
            }
        }
        Cmd::FsmExport { out } => {
            let text = export_edge_list();
            match out {
                Some(p) => match fs::write(&p, text) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(format!("{}: {e}", p.display())),
                },
                None => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
            }
        }
        Cmd::Cases => {
            let mut failed = 0;
            for row in &ORACLE {
                match check_row(row) {
                    Ok(()) => println!("PASS P{} {} {}", row.protocol, row.case, row.description),
                    Err(e) => {
                        failed += 1;
                        println!("FAIL P{} {} {e}", row.protocol, row.case);
                    }
                }
            }
            let report = enumerate();
            for m in &report.mismatches {
                println!("FAIL enumeration: {m}");
            }
            let uncovered = report.uncovered();
            for (p, c) in &uncovered {
                println!("FAIL enumeration never reached P{p} {c}");
            }
            eprintln!(
                "{} worlds, {} runs, {} of {} cases reached",
                report.worlds,
                report.runs,
                report.covered.len(),
                ORACLE.len()
            );
            if failed == 0 && report.mismatches.is_empty() && uncovered.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Cmd::Budget { detect, clarify, timeout, interdict, tolerated } => {
            match delay_budget(detect, clarify, timeout, interdict, tolerated) {
                Ok(f) => {
                    println!("{f:.4} ({:.1}%)", f * 100.0);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Cmd::Preset { out } => {
            let text = Scenario::baseline().to_json();
            match out {
                Some(p) => match fs::write(&p, text) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(format!("{}: {e}", p.display())),
                },
                None => {
                    println!("{text}");
                    ExitCode::SUCCESS
                }
            }
        }
    }
}
