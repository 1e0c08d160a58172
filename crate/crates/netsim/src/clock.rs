//! Simulation clocks.

use std::time::{Duration, Instant};

use cuas_core::domain::Timestamp;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    #[default]
    Virtual,
    Wall,
}

/// Time that moves only when told to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VirtualClock {
    now: Timestamp,
}

impl VirtualClock {
    pub fn new(start: Timestamp) -> Self {
        VirtualClock { now: start }
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    /// Moves to `t`. Never goes backwards.
    pub fn advance_to(&mut self, t: Timestamp) {
        self.now = self.now.max(t);
    }

    pub fn advance(&mut self, ms: u64) {
        self.now = self.now.plus_ms(ms);
    }
}

/// Monotone wall time mapped onto simulated milliseconds. With `speedup`
/// of 10, one real millisecond counts as ten simulated ones.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    origin: Instant,
    start: Timestamp,
    speedup: f64,
}

impl WallClock {
    pub fn new(start: Timestamp, speedup: f64) -> Self {
        assert!(speedup.is_finite() && speedup > 0.0, "speedup must be positive");
        WallClock {
            origin: Instant::now(),
            start,
            speedup,
        }
    }

    pub fn now(&self) -> Timestamp {
        let sim = self.origin.elapsed().as_secs_f64() * 1000.0 * self.speedup;
        self.start.plus_ms(sim as u64)
    }

    /// Real time left until simulated instant `t`.
    pub fn until(&self, t: Timestamp) -> Duration {
        let ms = t.saturating_sub(self.now()) as f64 / self.speedup;
        Duration::from_secs_f64(ms / 1000.0)
    }

    pub fn speedup(&self) -> f64 {
        self.speedup
    }
}
