//! Latency, processing and think-time model.

use std::collections::BTreeMap;

use cuas_core::clarify::Role;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Delay distribution in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dist {
    Constant { ms: u64 },
    /// Uniform over `lo..=hi`.
    Uniform { lo: u64, hi: u64 },
}

impl Default for Dist {
    fn default() -> Self {
        Dist::Constant { ms: 0 }
    }
}

impl Dist {
    pub const ZERO: Dist = Dist::Constant { ms: 0 };

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Dist::Constant { ms } => ms,
            Dist::Uniform { lo, hi } => rng.gen_range(lo..=hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Dist::Constant { ms } => ms as f64,
            Dist::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
        }
    }

    fn validate(&self) -> Result<(), DelayError> {
        match *self {
            Dist::Uniform { lo, hi } if lo > hi => Err(DelayError::EmptyRange { lo, hi }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelayError {
    #[error("uniform range {lo}..={hi} is empty")]
    EmptyRange { lo: u64, hi: u64 },
}

/// Per-agent processing. `service_ms` occupies the agent and queues later
/// messages behind it; `latency` delays the handler without blocking
/// the agent, like an awaited I/O call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcDelay {
    pub service_ms: u64,
    pub latency: Dist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDelay {
    pub from: Role,
    pub to: Role,
    pub delay: Dist,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayModel {
    /// Overrides for specific role pairs, first match wins.
    pub edges: Vec<EdgeDelay>,
    pub default_edge: Dist,
    pub processing: BTreeMap<Role, ProcDelay>,
    pub operator_think: Dist,
}

impl DelayModel {
    /// Everything instantaneous.
    pub fn zero() -> Self {
        DelayModel::default()
    }

    /// Same constant delay on every edge, nothing else.
    pub fn constant_edges(ms: u64) -> Self {
        DelayModel {
            default_edge: Dist::Constant { ms },
            ..DelayModel::default()
        }
    }

    /// Desk-scale calibration: about 100 ms per hop, 200 ms of authority
    /// work per message and about 2 s of operator think time.
    pub fn baseline() -> Self {
        let mut processing = BTreeMap::new();
        processing.insert(
            Role::Authority,
            ProcDelay {
                service_ms: 4,
                latency: Dist::Constant { ms: 200 },
            },
        );
        processing.insert(
            Role::Cuas,
            ProcDelay {
                service_ms: 2,
                latency: Dist::Constant { ms: 100 },
            },
        );
        DelayModel {
            edges: Vec::new(),
            default_edge: Dist::Uniform { lo: 80, hi: 120 },
            processing,
            operator_think: Dist::Uniform { lo: 1500, hi: 2500 },
        }
    }

    pub fn edge(&self, from: Role, to: Role) -> Dist {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to)
            .map_or(self.default_edge, |e| e.delay)
    }

    pub fn processing(&self, role: Role) -> ProcDelay {
        self.processing.get(&role).copied().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), DelayError> {
        self.default_edge.validate()?;
        self.operator_think.validate()?;
        for e in &self.edges {
            e.delay.validate()?;
        }
        for p in self.processing.values() {
            p.latency.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Dist::Uniform { lo: 80, hi: 120 };
        for _ in 0..1000 {
            let x = d.sample(&mut rng);
            assert!((80..=120).contains(&x));
        }
        assert_eq!(d.mean(), 100.0);
    }

    #[test]
    fn edge_override_then_default() {
        let mut m = DelayModel::constant_edges(50);
        m.edges.push(EdgeDelay {
            from: Role::Cuas,
            to: Role::Authority,
            delay: Dist::Constant { ms: 7 },
        });
        assert_eq!(m.edge(Role::Cuas, Role::Authority), Dist::Constant { ms: 7 });
        assert_eq!(m.edge(Role::Authority, Role::Cuas), Dist::Constant { ms: 50 });
    }

    #[test]
    fn json_shape() {
        let m: DelayModel = serde_json::from_str(
            r#"{"default_edge":{"kind":"uniform","lo":1,"hi":2},
                "processing":{"authority":{"service_ms":4,"latency":{"kind":"constant","ms":200}}}}"#,
        )
        .unwrap();
        assert_eq!(m.processing(Role::Authority).service_ms, 4);
        assert_eq!(m.processing(Role::Cuas), ProcDelay::default());
        let bad = DelayModel {
            operator_think: Dist::Uniform { lo: 5, hi: 1 },
            ..DelayModel::default()
        };
        assert!(bad.validate().is_err());
    }
}
