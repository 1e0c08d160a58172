//! One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cuas_bench::liveness::liveness;
use cuas_bench::sweep::{run_sweep, write_outputs, SweepOptions, SweepReport};
use cuas_bench::{delay_budget, Scenario};
use cuas_core::clarify::cases::{check_row, check_toggle, enumerate, fault_toggles, ORACLE};
use cuas_core::postdetect::{
    orange_reachability, successor, worst_case_runs_to_red, Color, DroneState as S, EventTag as E,
};
use cuas_netsim::Transport;

type Check = Result<String, String>;

fn oracle() -> Check {
    let began = Instant::now();
    let failed: Vec<String> = ORACLE.iter().filter_map(|r| check_row(r).err()).collect();
    let report = enumerate();
    let elapsed = began.elapsed();
    if !failed.is_empty() {
        return Err(format!("{} rows failed, first: {}", failed.len(), failed[0]));
    }
    if ORACLE.len() != 29 {
        return Err(format!("{} rows in the oracle", ORACLE.len()));
    }
    if let Some(m) = report.mismatches.first() {
        return Err(format!("{} enumeration mismatches, first: {m}", report.mismatches.len()));
    }
    if !report.uncovered().is_empty() {
        return Err(format!("never reached: {:?}", report.uncovered()));
    }
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("took {elapsed:.2?}"));
    }
    Ok(format!("29/29 rows, {} runs over {} worlds in {elapsed:.2?}", report.runs, report.worlds))
}

fn fsm() -> Check {
    for (s, green, red) in orange_reachability() {
        if !(green && red) {
            return Err(format!("{s}: reaches green={green} red={red}"));
        }
    }
    let path = [
        E::RidReceived,
        E::AuthenticityOk,
        E::IdDbHit,
        E::IdValid,
        E::AuthDbHit,
        E::AreaOk,
        E::TimeOk,
        E::ObjectClassifiedAsDrone,
    ];
    let mut s = S::DroneDetected;
    for e in path {
        if s.color() != Color::Green {
            return Err(format!("green loop passes through {s}"));
        }
        s = successor(s, e).ok_or_else(|| format!("green loop broken at {s} on {}", e.name()))?;
    }
    if s != S::DroneDetected {
        return Err(format!("green loop ends in {s}"));
    }
    for n in [0, 1, 2, 5] {
        match worst_case_runs_to_red(n) {
            Some(k) if k <= n + 1 => {}
            other => return Err(format!("threshold {n}: interdiction after {other:?} runs")),
        }
    }
    Ok("every orange state reaches green and red; green loop closed; interdiction within N+1 for N in {0,1,2,5}".into())
}

fn budget() -> Check {
    let a = delay_budget(1.16, 2.5, 0.0, 0.0, false).map_err(|e| e.to_string())?;
    let b = delay_budget(1.16, 2.5, 25.0, 0.0, false).map_err(|e| e.to_string())?;
    let c = delay_budget(1.16, 2.5, 25.0, 0.0, true).map_err(|e| e.to_string())?;
    let ok = (a * 100.0 - 68.0).abs() <= 0.5 && (b * 100.0 - 9.0).abs() <= 0.5 && c == 0.0;
    let line = format!("{:.2}%, {:.2}%, {}%", a * 100.0, b * 100.0, c * 100.0);
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn transcript(s: &Scenario) -> Result<Vec<u8>, String> {
    let r = run_sweep(s, &SweepOptions::from_scenario(s)).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_outputs(&r, s, dir.path()).map_err(|e| e.to_string())?;
    std::fs::read(dir.path().join("transcript.jsonl")).map_err(|e| e.to_string())
}

fn determinism(s: &Scenario) -> Check {
    let a = transcript(s)?;
    let b = transcript(s)?;
    if a.is_empty() || a != b {
        return Err(format!("transcripts differ ({} vs {} bytes)", a.len(), b.len()));
    }
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn outcomes(r: &SweepReport) -> Vec<String> {
    let mut v: Vec<String> = r
        .cells
        .iter()
        .flat_map(|c| {
            let sessions = c.outcome.sessions.iter().map(move |x| {
                format!("{} {} P{} {:?} {:?} {:?}", c.label, x.session_id, x.protocol, x.case_label, x.outcome, x.status)
            });
            let samples = c
                .outcome
                .samples
                .iter()
                .map(move |x| format!("{} {} P{} {}", c.label, x.drone_id, x.protocol, x.case_label));
            sessions.chain(samples)
        })
        .collect();
    v.sort();
    v
}

fn transports(s: &Scenario) -> Check {
    let mut opts = SweepOptions::from_scenario(s);
    opts.transport = Transport::InProc;
    let a = run_sweep(s, &opts).map_err(|e| e.to_string())?;
    opts.transport = Transport::Socket;
    let b = run_sweep(s, &opts).map_err(|e| e.to_string())?;
    let (a, b) = (outcomes(&a), outcomes(&b));
    if a != b {
        let first = a.iter().zip(&b).find(|(x, y)| x != y);
        return Err(format!("outcomes differ: {first:?}"));
    }
    Ok(format!("{} session outcomes and case labels identical", a.len()))
}

fn experiment(s: &Scenario) -> Vec<(&'static str, Check)> {
    let r = match run_sweep(s, &SweepOptions::from_scenario(s)) {
        Ok(r) => r,
        Err(e) => return vec![("6", Err(e.to_string()))],
    };
    let single: Vec<u64> = r.cells.iter().filter(|c| c.count == 1).flat_map(|c| c.deltas()).collect();
    let mean = single.iter().sum::<u64>() as f64 / single.len().max(1) as f64;
    let a = if !single.is_empty() && (1_000.0..=5_000.0).contains(&mean) {
        Ok(format!("single-drone mean {:.3} s", mean / 1000.0))
    } else {
        Err(format!("single-drone mean {:.3} s over {} samples", mean / 1000.0, single.len()))
    };

    let mut b = Ok("mean non-decreasing 1 to 250 for all 8 protocols".to_string());
    for p in s.protocol_set() {
        let means: Vec<f64> = s
            .counts
            .iter()
            .map(|n| r.cell(p, *n).and_then(|c| c.stats()).map_or(f64::NAN, |x| x.mean))
            .collect();
        if !means.windows(2).all(|w| w[0] <= w[1]) {
            b = Err(format!("P{p} means {means:?}"));
            break;
        }
    }

    let c = match (r.cell(3, 1), r.cell(3, 50)) {
        (Some(one), Some(fifty)) => {
            let (d1, d50) = (one.duration_ms(), fifty.duration_ms());
            if d1 > 0 && d50 < 50 * d1 {
                Ok(format!("50 P3 drones {d50} ms vs 50 x {d1} ms"))
            } else {
                Err(format!("50 P3 drones {d50} ms vs 50 x {d1} ms"))
            }
        }
        _ => Err("P3 cells missing".into()),
    };

    let cells = s.cells().len();
    let complete = r.stats.len() == cells
        && r.stats.iter().all(|x| {
            x.n == x.count as usize
                && [x.q1, x.median, x.q3, x.max].iter().all(|v| v.is_finite())
                && x.min <= x.q1
                && x.q1 <= x.median
                && x.median <= x.q3
                && x.q3 <= x.max
        });
    let header = r.csv().lines().next().unwrap_or_default() == "protocol,count,n,mean,min,q1,median,q3,max";
    let d = if complete && header && r.elapsed < Duration::from_secs(600) {
        Ok(format!("{cells} cells with q1/median/q3/max, sweep took {:.2?}", r.elapsed))
    } else {
        Err(format!("{} of {cells} cells summarized, header ok {header}, took {:.2?}", r.stats.len(), r.elapsed))
    };
    vec![("6a", a), ("6b", b), ("6c", c), ("6d", d)]
}

fn toggles() -> Check {
    let all = fault_toggles();
    for t in &all {
        check_toggle(t)?;
    }
    Ok(format!("{} toggles flip as prescribed", all.len()))
}

fn live() -> Check {
    let r = liveness(10_000, 50, 0x5eed).map_err(|e| e.to_string())?;
    if r.sessions < 10_000 || !r.stuck.is_empty() || !r.undecided_drones.is_empty() {
        return Err(format!(
            "{} sessions, {} stuck, {} drones undecided",
            r.sessions,
            r.stuck.len(),
            r.undecided_drones.len()
        ));
    }
    Ok(format!(
        "{} sessions over {} drones: {} decided, {} escalated, {} cancelled, 0 stuck",
        r.sessions, r.drones, r.decided, r.escalated, r.cancelled
    ))
}

fn main() -> ExitCode {
    let baseline = Scenario::baseline();
    let mut results: Vec<(&'static str, &'static str, Check)> = vec![
        ("1", "case oracle", oracle()),
        ("2", "fsm reachability", fsm()),
        ("3", "delay budget", budget()),
        ("4", "determinism", determinism(&baseline)),
        ("5", "transport equivalence", transports(&baseline)),
    ];
    for (id, check) in experiment(&baseline) {
        results.push((id, "experiment shape", check));
    }
    results.push(("7", "fault toggles", toggles()));
    results.push(("8", "liveness", live()));

    let mut failed = 0;
    for (id, name, r) in &results {
        match r {
            Ok(m) => println!("PASS {id} {name}: {m}"),
            Err(m) => {
                failed += 1;
                println!("FAIL {id} {name}: {m}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
