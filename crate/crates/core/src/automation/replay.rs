use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::command::{AutomationScript, NormalizedCommand};
use super::normalize::denormalize;
use super::{AutomationError, Result};
use crate::adb::{Connection, DeviceProfile, DeviceSerial};
use crate::clock::{Clock, NANOS_PER_MS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub commands_sent: usize,
    pub duration_ms: u64,
}

/// Replays `script` on `target`, honouring waits on `clock`.
pub fn replay(
    conn: &Connection,
    serial: &DeviceSerial,
    script: &AutomationScript,
    target: &DeviceProfile,
    clock: &dyn Clock,
) -> Result<ReplayReport> {
    replay_commands(conn, serial, &script.commands, target, clock)
}

pub fn replay_commands(
    conn: &Connection,
    serial: &DeviceSerial,
    commands: &[NormalizedCommand],
    target: &DeviceProfile,
    clock: &dyn Clock,
) -> Result<ReplayReport> {
    let started = clock.now_ns();
    for (index, cmd) in commands.iter().enumerate() {
        match cmd {
            NormalizedCommand::Wait { duration_ms } => clock.sleep(Duration::from_millis(*duration_ms)),
            other => {
                let shell = denormalize(other, target).expect("only waits have no shell form");
                log::debug!("replay {index}: {shell}");
                conn.shell(serial, &shell)
                    .map_err(|source| AutomationError::Replay { index, source })?;
            }
        }
    }
    Ok(ReplayReport {
        commands_sent: commands.len(),
        duration_ms: (clock.now_ns() - started) / NANOS_PER_MS,
    })
}
