//! Re-runs the authority of each cell against its recorded inputs and
//! checks it says the same things again.
//!
//! Inputs are fed in transcript order with `now` set to each envelope's
//! send time. Outputs are compared as multisets, ignoring message ids and
//! send times. Session outcomes are compared against `sessions.jsonl`
//! when it is given.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cuas_core::clarify::{AgentId, Envelope, SessionSummary};
use serde::Deserialize;

use crate::scenario::{parse_cell_label, Scenario};
use crate::BenchError;

#[derive(Debug, Default)]
pub struct ReplayReport {
    pub cells: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub sessions_checked: usize,
    pub mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn key(e: &Envelope) -> String {
    serde_json::json!([e.sender, e.recipient, e.msg_type, e.correlation_id, e.payload]).to_string()
}

#[derive(Deserialize)]
struct SessionRow {
    cell: String,
    #[serde(flatten)]
    summary: SessionSummary,
}

fn outcome_key(s: &SessionSummary) -> String {
    serde_json::json!([s.session_id, s.protocol, s.case_label, s.outcome, s.status]).to_string()
}

pub fn replay(transcript: &str, scenario: &Scenario, sessions: Option<&str>) -> Result<ReplayReport, BenchError> {
    let mut cells: Vec<(String, Vec<Envelope>)> = Vec::new();
    for (n, line) in transcript.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let env: Envelope = serde_json::from_str(line)
            .map_err(|e| BenchError::Replay(format!("line {}: {e}", n + 1)))?;
        let (label, _) = env
            .msg_id
            .split_once('/')
            .ok_or_else(|| BenchError::Replay(format!("line {}: message id without cell label", n + 1)))?;
        match cells.last_mut() {
            Some((l, v)) if l == label => v.push(env),
            _ => cells.push((label.to_string(), vec![env])),
        }
    }

    let mut recorded: BTreeMap<String, Vec<String>> = BTreeMap::new();
    if let Some(text) = sessions {
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let row: SessionRow = serde_json::from_str(line)?;
            recorded.entry(row.cell).or_default().push(outcome_key(&row.summary));
        }
    }

    let mut report = ReplayReport::default();
    for (label, envs) in &cells {
        let (p, n) = parse_cell_label(label)
            .ok_or_else(|| BenchError::Replay(format!("bad cell label {label:?}")))?;
        let cell = scenario.cell(p, n)?;
        let mut authority = scenario.authority(&cell);
        let mut produced = Vec::new();
        for env in envs.iter().filter(|e| e.recipient == AgentId::AUTHORITY) {
            report.inputs += 1;
            match authority.dispatch(env.clone(), env.sent_at) {
                Ok(outs) => produced.extend(outs.into_iter().map(|o| key(&o.env))),
                Err(e) => produced.push(key(&authority.error_reply(env, &e, env.sent_at))),
            }
        }
        let mut expected: Vec<String> = envs
            .iter()
            .filter(|e| e.sender == AgentId::AUTHORITY)
            .map(key)
            .collect();
        report.outputs += expected.len();
        expected.sort();
        produced.sort();
        if expected != produced {
            let missing = expected.iter().filter(|k| !produced.contains(k)).count();
            let extra = produced.iter().filter(|k| !expected.contains(k)).count();
            report.mismatches.push(format!(
                "{label}: {} recorded vs {} replayed outputs ({missing} missing, {extra} unexpected)",
                expected.len(),
                produced.len()
            ));
        }
        if sessions.is_some() {
            let mut want = recorded.remove(label).unwrap_or_default();
            let mut got: Vec<String> = authority.sessions().map(|s| outcome_key(&s.summary())).collect();
            want.sort();
            got.sort();
            report.sessions_checked += got.len();
            if want != got {
                report
                    .mismatches
                    .push(format!("{label}: session outcomes differ from sessions.jsonl"));
            }
        }
        report.cells += 1;
    }
    for label in recorded.keys() {
        report.mismatches.push(format!("{label}: sessions recorded but no transcript"));
    }
    Ok(report)
}

/// Replays `transcript`, taking `scenario.json` and `sessions.jsonl` from
/// the same directory unless a scenario is given.
pub fn replay_file(transcript: &Path, scenario: Option<&Path>) -> Result<ReplayReport, BenchError> {
    let dir = transcript.parent().unwrap_or(Path::new("."));
    let scenario_path = scenario.map(Path::to_path_buf).unwrap_or_else(|| dir.join("scenario.json"));
    let s = Scenario::load(&scenario_path)?;
    let text = fs::read_to_string(transcript)?;
    let sessions = fs::read_to_string(dir.join("sessions.jsonl")).ok();
    replay(&text, &s, sessions.as_deref())
}
