//! Client side of the ADB server smart-socket protocol.
//!
//! Only the host services needed by the benchmark pipeline are implemented:
//! `host:version`, `host:devices`, `host:transport:<serial>` and
//! `shell:<command>`. Package installation, profile cleaning and app launch
//! are expressed as shell commands so the same code drives a real ADB server
//! and the bundled simulator.

mod client;
mod types;
pub mod wire;

pub use client::{connect, Connection, DeviceState, PackageSource, DEFAULT_ADB_PORT, DEFAULT_TIMEOUT};
pub use types::{DeviceProfile, DeviceSerial, ProfileError, ShellResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdbError {
    #[error("connection refused by {0}")]
    ConnectionRefused(String),
    #[error("protocol error: {message}")]
    Protocol { message: String },
    #[error("no such device: {0}")]
    NoSuchDevice(String),
    #[error("timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("install failed: {0}")]
    InstallFailed(String),
    #[error("no such package: {0}")]
    NoSuchPackage(String),
    #[error("launch failed: {0}")]
    LaunchFailed(String),
    #[error("invalid device serial {0:?}")]
    InvalidSerial(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AdbError {
    pub(crate) fn protocol(message: impl Into<String>) -> Self {
        AdbError::Protocol {
            message: message.into(),
        }
    }
}

pub type Result<T, E = AdbError> = std::result::Result<T, E>;
