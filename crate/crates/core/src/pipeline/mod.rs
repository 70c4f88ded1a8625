//! Benchmark jobs: device setup, browser preparation, CPU rest gating,
//! workload execution and per-run reports.

mod gate;
mod job;
mod runner;
mod sampler;
mod setup;
mod workload;

use thiserror::Error;

use crate::adb::AdbError;
use crate::automation::AutomationError;
use crate::metrics::MetricsError;

pub use gate::{wait_for_rest, CpuSampler, GateConfig, GateStatus, GateTracker};
pub use job::{AutomationEntry, BenchJob, BrowserSpec, OpenUrl, WorkloadRef};
pub use runner::{
    open_url_command, prepare_browser, profile_from_device, run_job, run_test, BenchContext, JobOutcome, PageTrace,
    RunFailure, TestTrace, SCROLL_DURATION_MS,
};
pub use sampler::Pacer;
pub use setup::{cleanup, device_setup, DeviceStatus, SavedSetting, SETUP_SETTINGS};
pub use workload::{OpenMode, WorkloadSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no automation {label:?} stored for {app_id}")]
    MissingAutomation { app_id: String, label: String },
    #[error("CPU did not rest within {waited_s:.0} s")]
    GateTimeout { waited_s: f64 },
    #[error("page {index} ({url}): {source}")]
    Page {
        index: usize,
        url: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error(transparent)]
    Adb(#[from] AdbError),
    #[error(transparent)]
    Automation(#[from] AutomationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
