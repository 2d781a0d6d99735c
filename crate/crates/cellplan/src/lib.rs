//! Command-line front end and file formats for the cell-decomposition planner.

pub mod bench;
pub mod cli;
pub mod formats;

use std::time::{Duration, Instant};

use cellplan_core::search::Clock;

/// Wall clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for StdClock {
    fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }
}
