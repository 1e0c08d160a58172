//! Summary statistics of clarification times.
//!
//! Quartiles use the median-of-halves convention: sort, take the median;
//! the lower half is the first `n / 2` values and the upper half the last
//! `n / 2` (the middle value of an odd-sized sample belongs to neither);
//! `q1` and `q3` are the medians of the halves. A single value is its own
//! quartiles. All figures are milliseconds.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub protocol: u8,
    pub count: u32,
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub const CSV_HEADER: [&str; 9] = ["protocol", "count", "n", "mean", "min", "q1", "median", "q3", "max"];

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// `(q1, median, q3)` of an ascending, non-empty slice.
pub fn quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    let n = sorted.len();
    if n == 1 {
        return (sorted[0], sorted[0], sorted[0]);
    }
    let half = n / 2;
    (median(&sorted[..half]), median(sorted), median(&sorted[n - half..]))
}

/// `None` for an empty sample.
pub fn summarize(protocol: u8, count: u32, values_ms: &[u64]) -> Option<StatsSummary> {
    if values_ms.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values_ms.iter().map(|&x| x as f64).collect();
    v.sort_by(f64::total_cmp);
    let sum: u64 = values_ms.iter().sum();
    let (q1, med, q3) = quartiles(&v);
    Some(StatsSummary {
        protocol,
        count,
        n: v.len(),
        mean: sum as f64 / v.len() as f64,
        min: v[0],
        q1,
        median: med,
        q3,
        max: v[v.len() - 1],
    })
}

impl StatsSummary {
    pub fn record(&self) -> [String; 9] {
        let f = |x: f64| format!("{x:.3}");
        [
            self.protocol.to_string(),
            self.count.to_string(),
            self.n.to_string(),
            f(self.mean),
            f(self.min),
            f(self.q1),
            f(self.median),
            f(self.q3),
            f(self.max),
        ]
    }
}

pub fn to_csv(stats: &[StatsSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for s in stats {
        w.write_record(s.record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii csv")
}
