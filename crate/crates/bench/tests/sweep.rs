use std::collections::BTreeMap;
use std::fs;

use cuas_bench::scenario::Scenario;
use cuas_bench::sweep::{run_cell, run_sweep, write_outputs, SweepOptions};
use cuas_bench::BenchError;
use cuas_netsim::{DelayModel, Dist, Transport};
use serde::Deserialize;

fn only(protocol: u8, counts: Vec<u32>) -> Scenario {
    let mut s = Scenario::baseline();
    s.protocols.retain(|p, _| *p == protocol);
    s.counts = counts;
    s
}

#[test]
fn zero_delay_p3_mean_is_the_path_sum() {
    let mut s = only(3, vec![1]);
    s.delays = DelayModel::zero();
    s.cuas.rid_acquire_ms = 517;
    s.cuas.rid_wait_ms = 9_001;
    s.cuas.db_query_ms = 73;
    s.authority.diagnosis_ms = 29;
    s.authority.risk_assessment_ms = 1_000;
    // RID acquired, ID-DB miss, AUTH-DB hit, then the authority diagnoses
    // the ID-DB fault and tolerates.
    let want = 517 + 73 + 73 + 29;
    let r = run_sweep(&s, &SweepOptions::from_scenario(&s)).unwrap();
    let st = &r.stats[0];
    assert_eq!((st.protocol, st.count, st.n), (3, 1, 1));
    assert_eq!(st.mean, want as f64);
    assert_eq!(st.min, st.max);
}

#[derive(Deserialize)]
struct SampleRow {
    cell: String,
    protocol: u8,
    delta_ms: u64,
}

/// Quartiles by the median-of-halves rule on integer data, kept in
/// doubled units so no float is involved until the end.
fn halves(sorted: &[u64]) -> (f64, f64, f64) {
    fn med2(v: &[u64]) -> u64 {
        let n = v.len();
        if n % 2 == 1 {
            2 * v[n / 2]
        } else {
            v[n / 2 - 1] + v[n / 2]
        }
    }
    let n = sorted.len();
    if n == 1 {
        let x = sorted[0] as f64;
        return (x, x, x);
    }
    let lower = &sorted[..n / 2];
    let upper = &sorted[n.div_ceil(2)..];
    (med2(lower) as f64 / 2.0, med2(sorted) as f64 / 2.0, med2(upper) as f64 / 2.0)
}

#[test]
fn csv_matches_an_independent_pass_over_raw_samples() {
    let mut s = Scenario::baseline();
    s.counts = vec![1, 7, 50];
    let r = run_sweep(&s, &SweepOptions::from_scenario(&s)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&r, &s, dir.path()).unwrap();

    let mut raw: BTreeMap<String, (u8, Vec<u64>)> = BTreeMap::new();
    for line in fs::read_to_string(dir.path().join("samples.jsonl")).unwrap().lines() {
        let row: SampleRow = serde_json::from_str(line).unwrap();
        let e = raw.entry(row.cell).or_insert((row.protocol, Vec::new()));
        e.1.push(row.delta_ms);
    }
    let mut rdr = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["protocol", "count", "n", "mean", "min", "q1", "median", "q3", "max"]
    );
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (p, n): (u8, u32) = (rec[0].parse().unwrap(), rec[1].parse().unwrap());
        let (_, mut v) = raw.remove(&format!("p{p}n{n}")).expect("samples for every csv row");
        assert_eq!(v.len(), n as usize, "one sample per scripted drone");
        v.sort_unstable();
        let sum: u64 = v.iter().sum();
        let (q1, med, q3) = halves(&v);
        let want = [
            format!("{}", v.len()),
            format!("{:.3}", sum as f64 / v.len() as f64),
            format!("{:.3}", v[0] as f64),
            format!("{q1:.3}"),
            format!("{med:.3}"),
            format!("{q3:.3}"),
            format!("{:.3}", *v.last().unwrap() as f64),
        ];
        assert_eq!(rec.iter().skip(2).collect::<Vec<_>>(), want, "p{p}n{n}");
        rows += 1;
    }
    assert!(raw.is_empty());
    assert_eq!(rows, s.cells().len());
}

#[test]
fn concurrent_sessions_beat_serial_time() {
    let mut s = only(3, vec![1, 2, 5, 50]);
    s.delays.default_edge = Dist::Constant { ms: 100 };
    s.delays.operator_think = Dist::Constant { ms: 2_000 };
    let opts = SweepOptions::from_scenario(&s);
    let r = run_sweep(&s, &opts).unwrap();
    let one = r.cell(3, 1).unwrap().duration_ms();
    assert!(one > 0);
    for n in [2, 5, 50] {
        let d = r.cell(3, n).unwrap().duration_ms();
        assert!(d < u64::from(n) * one, "n={n}: {d} ms vs {one} ms single");
    }
}

#[test]
fn baseline_sweep_shape() {
    let s = Scenario::baseline();
    let r = run_sweep(&s, &SweepOptions::from_scenario(&s)).unwrap();
    let mismatches: Vec<_> = r.cells.iter().flat_map(|c| c.case_mismatches.clone()).collect();
    assert!(mismatches.is_empty(), "{mismatches:?}");
    assert_eq!(r.stats.len(), 8 * s.counts.len());
    for st in &r.stats {
        assert_eq!(st.n, st.count as usize);
        assert!(st.min <= st.q1 && st.q1 <= st.median && st.median <= st.q3 && st.q3 <= st.max);
    }
    for p in 1..=8 {
        let means: Vec<f64> = s.counts.iter().map(|n| r.cell(p, *n).unwrap().stats().unwrap().mean).collect();
        assert!(means.windows(2).all(|w| w[0] <= w[1]), "P{p} means {means:?}");
    }
    let p3 = r.cell(3, 50).unwrap().stats().unwrap();
    assert!((330.0..=33_000.0).contains(&p3.mean), "P3 x50 mean {}", p3.mean);
    let p1 = r.cell(1, 250).unwrap().stats().unwrap();
    assert!(p1.q3 < p1.max, "P1 x250 {p1:?}");
}

#[test]
fn socket_transport_gives_the_same_outcomes() {
    let s = only(7, vec![4]);
    let mut opts = SweepOptions::from_scenario(&s);
    let a = run_cell(&s, 7, 4, &opts).unwrap();
    opts.transport = Transport::Socket;
    let b = run_cell(&s, 7, 4, &opts).unwrap();
    let key = |c: &cuas_bench::sweep::CellRun| {
        let mut v: Vec<_> = c
            .outcome
            .sessions
            .iter()
            .map(|x| (x.session_id.clone(), x.case_label.clone(), format!("{:?}", x.outcome)))
            .collect();
        v.sort();
        v
    };
    assert_eq!(key(&a), key(&b));
}

#[test]
fn wall_clock_cell_lands_in_the_scripted_cases() {
    let mut s = only(1, vec![2]);
    s.speedup = 50.0;
    let mut opts = SweepOptions::from_scenario(&s);
    opts.clock = cuas_netsim::ClockMode::Wall;
    let c = run_cell(&s, 1, 2, &opts).unwrap();
    assert_eq!(c.outcome.samples.len(), 2);
    assert!(c.case_mismatches.is_empty(), "{:?}", c.case_mismatches);
}

#[test]
fn shipped_baseline_file_matches_the_builtin_preset() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/baseline.json");
    let s = Scenario::load(std::path::Path::new(path)).unwrap();
    assert_eq!(s, Scenario::baseline());
}

fn invalid(s: &Scenario) -> String {
    match s.validate() {
        Err(BenchError::ScenarioInvalid(m)) => m,
        other => panic!("expected ScenarioInvalid, got {other:?}"),
    }
}

#[test]
fn validation_names_the_first_violation() {
    let base = Scenario::baseline();
    base.validate().unwrap();

    let mut s = base.clone();
    s.schema_version = 2;
    assert!(invalid(&s).contains("schema_version"));

    let mut s = base.clone();
    s.counts.clear();
    assert!(invalid(&s).contains("counts"));

    let mut s = base.clone();
    s.counts.push(0);
    assert!(invalid(&s).contains("counts"));

    let mut s = base.clone();
    s.protocols.insert(9, s.protocols[&1].clone());
    assert!(invalid(&s).contains("protocol 9"));

    let mut s = base.clone();
    let p7 = s.protocols[&7].clone();
    s.protocols.insert(2, p7);
    assert!(invalid(&s).contains("under protocol 2"));

    let mut s = base.clone();
    s.delays.default_edge = Dist::Uniform { lo: 10, hi: 5 };
    assert!(invalid(&s).contains("delays"));

    let mut s = base;
    s.start_ms = 1_000;
    assert!(invalid(&s).contains("start_ms"));
}

#[test]
fn loading_reports_missing_and_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(Scenario::load(&dir.path().join("nope.json")), Err(BenchError::Io(_))));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"schema_version\": 1}").unwrap();
    assert!(matches!(Scenario::load(&bad), Err(BenchError::ScenarioInvalid(_))));
}
