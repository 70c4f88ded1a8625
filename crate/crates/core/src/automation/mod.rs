//! Device-independent input automation.
//!
//! Raw pixel events recorded on one device are turned into
//! [`NormalizedCommand`]s whose coordinates are ratios of the usable screen
//! area, then turned back into `input` shell commands for any other device.

mod command;
mod normalize;
mod replay;
mod store;

pub use command::{AutomationScript, NormalizedCommand, MAX_DURATION_MS, NOOP_LABEL};
pub use normalize::{
    denormalize, denormalize_point, escape_input_text, normalize, normalize_batch, NormalizeConfig, RawAction,
    RawInputEvent,
};
pub use replay::{replay, replay_commands, ReplayReport};
pub use store::AutomationStore;

use thiserror::Error;

use crate::adb::AdbError;

#[derive(Debug, Error)]
pub enum AutomationError {
    #[error("unpaired pointer event at index {index}: {reason}")]
    UnpairedPointerEvent { index: usize, reason: String },
    #[error("event {index}: coordinate ({x}, {y}) outside the {width}x{height} screen")]
    CoordinateOutOfBounds {
        index: usize,
        x: i64,
        y: i64,
        width: u32,
        height: u32,
    },
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("no automation {label:?} for app {app_id:?}")]
    NotFound { app_id: String, label: String },
    #[error("invalid store key {0:?}")]
    InvalidName(String),
    #[error("command {index} failed: {source}")]
    Replay {
        index: usize,
        #[source]
        source: AdbError,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AutomationError> = std::result::Result<T, E>;
