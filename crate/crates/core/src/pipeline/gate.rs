use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::clock::NANOS_PER_SEC;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub rest_band_percent: [f64; 2],
    pub rest_duration_s: f64,
    pub sample_period_s: f64,
    pub gate_timeout_s: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            rest_band_percent: [0.0, 5.0],
            rest_duration_s: 15.0,
            sample_period_s: 5.0,
            gate_timeout_s: 300.0,
        }
    }
}

fn secs_ns(s: f64) -> u64 {
    (s * NANOS_PER_SEC as f64).round() as u64
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.rest_band_percent;
        if !(0.0 <= lo && lo < hi && hi <= 100.0) {
            return Err(PipelineError::Config(format!("rest band [{lo}, {hi}] must satisfy 0 <= low < high <= 100")));
        }
        if !(self.sample_period_s > 0.0) {
            return Err(PipelineError::Config("sample_period_s must be positive".into()));
        }
        if !(self.rest_duration_s >= self.sample_period_s) {
            return Err(PipelineError::Config("rest_duration_s must be at least sample_period_s".into()));
        }
        if !(self.gate_timeout_s > 0.0) {
            return Err(PipelineError::Config("gate_timeout_s must be positive".into()));
        }
        Ok(())
    }

    pub fn in_band(&self, percent: f64) -> bool {
        let [lo, hi] = self.rest_band_percent;
        (lo..=hi).contains(&percent)
    }

    pub fn sample_period_ns(&self) -> u64 {
        secs_ns(self.sample_period_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateStatus {
    Waiting,
    Open(u64),
    TimedOut,
}

/// Watches CPU samples for a rest period.
///
/// The gate opens at the first sample `t` such that every sample since the
/// start of the current in-band run is in band and `t` is at least
/// `rest_duration_s` after that start.
#[derive(Debug, Clone)]
pub struct GateTracker {
    config: GateConfig,
    started_ns: u64,
    run_start: Option<u64>,
}

impl GateTracker {
    pub fn new(config: GateConfig, started_ns: u64) -> Self {
        Self {
            config,
            started_ns,
            run_start: None,
        }
    }

    pub fn observe(&mut self, ts_ns: u64, percent: f64) -> GateStatus {
        if self.config.in_band(percent) {
            let start = *self.run_start.get_or_insert(ts_ns);
            if ts_ns - start >= secs_ns(self.config.rest_duration_s) {
                return GateStatus::Open(ts_ns);
            }
        } else {
            self.run_start = None;
        }
        if ts_ns.saturating_sub(self.started_ns) >= secs_ns(self.config.gate_timeout_s) {
            return GateStatus::TimedOut;
        }
        GateStatus::Waiting
    }
}

/// Produces timestamped CPU utilization samples, blocking until each is due.
pub trait CpuSampler {
    fn next_sample(&mut self) -> Result<(u64, f64)>;
}

/// Blocks until the CPU has rested; returns the gate-open timestamp.
pub fn wait_for_rest(gate: &GateConfig, started_ns: u64, sampler: &mut dyn CpuSampler) -> Result<u64> {
    gate.validate()?;
    let mut tracker = GateTracker::new(*gate, started_ns);
    loop {
        let (ts, percent) = sampler.next_sample()?;
        log::trace!("gate sample {ts} ns: {percent:.2}%");
        match tracker.observe(ts, percent) {
            GateStatus::Waiting => {}
            GateStatus::Open(t) => return Ok(t),
            GateStatus::TimedOut => {
                return Err(PipelineError::GateTimeout {
                    waited_s: (ts - started_ns) as f64 / 1e9,
                })
            }
        }
    }
}
