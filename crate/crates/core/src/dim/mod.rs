//! Event-driven screen dimming: the brightness policy, the controller that
//! applies it while the user waits on the browser, and the telemetry
//! analysis that estimates battery savings from recorded dim intervals.

mod analysis;
mod controller;
mod events;
mod intervals;
mod policy;

pub use analysis::{
    brightness_cdf, dim_fraction_cdf, estimate_savings, savings_table, write_savings_table, Grouping, SavingsRow,
};
pub use controller::{
    controller_step, AdbBrightness, BrightnessAccessor, Controller, ControllerMode, ControllerState, DimAction,
};
pub use events::{parse_event_line, read_event_stream, AttentionEvent, AttentionKind, Phase, StreamRecord};
pub use intervals::{
    device_key, intervals_from_log, read_telemetry_csv, sessions_from_stream, write_telemetry_csv, DimInterval,
    IntervalState, Session, TelemetryRow,
};
pub use policy::DimmingPolicy;

use thiserror::Error;

use crate::adb::AdbError;
use crate::sim::PowerModelError;

#[derive(Debug, Error)]
pub enum DimError {
    #[error("{kind} end at {ts_ms} ms without a matching start")]
    UnmatchedEnd { kind: AttentionKind, ts_ms: u64 },
    #[error("malformed log at {location}: {reason}")]
    MalformedLog { location: String, reason: String },
    #[error("invalid dimming policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    BrightnessOutOfModel(#[from] PowerModelError),
    #[error(transparent)]
    Adb(#[from] AdbError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DimError {
    pub(crate) fn malformed(location: impl Into<String>, reason: impl Into<String>) -> Self {
        DimError::MalformedLog {
            location: location.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = DimError> = std::result::Result<T, E>;
