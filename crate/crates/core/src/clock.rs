//! Time sources shared by the simulator, the replayer and the pipeline.
//!
//! In virtual mode time only moves when somebody sleeps, which makes every
//! run of the pipeline against the simulator fully deterministic.

use std::fmt::Debug;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

pub const NANOS_PER_SEC: u64 = 1_000_000_000;
pub const NANOS_PER_MS: u64 = 1_000_000;

pub trait Clock: Send + Sync + Debug {
    /// Nanoseconds since the clock's epoch. Never decreases.
    fn now_ns(&self) -> u64;

    /// Block until `now_ns() >= deadline_ns`. Returns immediately if the
    /// deadline has already passed.
    fn sleep_until_ns(&self, deadline_ns: u64);

    fn sleep(&self, duration: Duration) {
        let deadline = self.now_ns().saturating_add(duration.as_nanos() as u64);
        self.sleep_until_ns(deadline);
    }

    fn is_virtual(&self) -> bool {
        false
    }
}

/// Wall clock measured from construction.
#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }

    fn sleep_until_ns(&self, deadline_ns: u64) {
        let now = self.now_ns();
        if deadline_ns > now {
            std::thread::sleep(Duration::from_nanos(deadline_ns - now));
        }
    }
}

/// A clock that advances only when slept on.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now_ns: AtomicU64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at_ns(now_ns: u64) -> Self {
        Self {
            now_ns: AtomicU64::new(now_ns),
        }
    }

    pub fn advance(&self, by: Duration) {
        self.now_ns
            .fetch_add(by.as_nanos() as u64, Ordering::SeqCst);
    }
}

impl Clock for VirtualClock {
    fn now_ns(&self) -> u64 {
        self.now_ns.load(Ordering::SeqCst)
    }

    fn sleep_until_ns(&self, deadline_ns: u64) {
        self.now_ns.fetch_max(deadline_ns, Ordering::SeqCst);
    }

    fn is_virtual(&self) -> bool {
        true
    }
}
