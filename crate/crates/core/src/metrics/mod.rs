//! Samples, parsers and aggregation for battery, CPU and network metrics.

mod battery;
mod net;
mod procstat;
mod report;
mod stats;

pub use battery::{integrate_discharge, trim_window, BatteryMeter};
pub use net::{bandwidth_total, parse_proc_net_dev, InterfaceFilter, InterfaceTotals};
pub use procstat::{parse_meminfo_available, parse_proc_stat, utilization, utilization_series};
pub use report::{
    aggregate, emit_aggregate, emit_cdf, emit_run, read_battery_csv, read_cpu_csv, read_net_csv,
    write_battery_csv, write_cpu_csv, write_mem_csv, write_net_csv, AggregateReport, BrowserAggregate, Format,
    RunLogs, RunReport,
};
pub use stats::{empirical_cdf, mean, population_std, CdfPoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("malformed /proc/stat: {0}")]
    MalformedStat(String),
    #[error("malformed /proc/net/dev: {0}")]
    MalformedNetDev(String),
    #[error("counter wrap on {counter} between samples {index} and {next}", next = index + 1)]
    CounterWrap { counter: String, index: usize },
    #[error("timestamps not strictly increasing at sample {0}")]
    NonMonotonicTimestamps(usize),
    #[error("battery meter: {0}")]
    Meter(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySample {
    pub ts_ns: u64,
    #[serde(rename = "current_mA")]
    pub current_ma: f64,
    #[serde(rename = "voltage_mV")]
    pub voltage_mv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpuSample {
    pub ts_ns: u64,
    pub busy_jiffies: u64,
    pub total_jiffies: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSample {
    pub ts_ns: u64,
    pub rx_bytes: u64,
    pub tx_bytes: u64,
}

/// Recorded but not analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemSample {
    pub ts_ns: u64,
    pub available_kb: u64,
}

fn require(got: usize, needed: usize) -> Result<()> {
    if got < needed {
        Err(MetricsError::TooFewSamples { needed, got })
    } else {
        Ok(())
    }
}
