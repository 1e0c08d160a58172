use std::time::Instant;

use cuas_core::clarify::cases::{check_row, enumerate, ORACLE};

#[test]
fn oracle_has_29_distinct_cases() {
    let mut keys: Vec<_> = ORACLE.iter().map(|r| (r.protocol, r.case)).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 29);
    let per_protocol: Vec<usize> = (1..=8)
        .map(|p| ORACLE.iter().filter(|r| r.protocol == p).count())
        .collect();
    assert_eq!(per_protocol, [6, 3, 2, 3, 2, 3, 5, 5]);
}

#[test]
fn every_canonical_scenario_lands_in_its_case() {
    for row in &ORACLE {
        check_row(row).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn enumeration_reaches_every_case_without_mismatch() {
    let t = Instant::now();
    let report = enumerate();
    let elapsed = t.elapsed();
    assert!(report.mismatches.is_empty(), "{:#?}", &report.mismatches[..report.mismatches.len().min(10)]);
    assert_eq!(report.uncovered(), Vec::<(u8, &str)>::new());
    assert_eq!(report.protocols_opened, (1..=8).collect());
    assert!(report.runs > 1000, "only {} runs", report.runs);
    // Generous bound for debug builds.
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
}
