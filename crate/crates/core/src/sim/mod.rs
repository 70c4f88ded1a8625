//! A simulated Android device behind an ADB-compatible TCP endpoint.
//!
//! Battery current follows a [`PowerModel`]: the screen term interpolates
//! measured currents per brightness level, plus linear CPU and network
//! terms. CPU and network counters are synthesized from the same timeline,
//! so `/proc/stat`, `/proc/net/dev` and the battery stream stay consistent.

pub mod config;
mod device;
pub mod power;
pub mod procfs;
pub mod screen;
mod server;
pub mod timeline;

pub use config::{j7duo, smj337a, ActivityModel, AppLoad, BrightnessMode, Burst, SimDeviceConfig};
pub use device::{LogEntry, PageOpen, ShellOutcome, SimDevice, SimSnapshot};
pub use power::{BrightnessPoint, LoadState, PowerModel, PowerModelError, MAX_BRIGHTNESS};
pub use server::{serve, serve_on, ServerHandle, SimBatteryMeter, SimDeviceHandle};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid device config: {0}")]
    Config(String),
    #[error("failed to bind {addr}: {source}")]
    BindFailed {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate device serial {0}")]
    DuplicateSerial(String),
}
