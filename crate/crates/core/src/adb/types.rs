use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AdbError;

/// Identifier of an attached device as reported by `host:devices`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DeviceSerial(String);

impl DeviceSerial {
    pub const MAX_LEN: usize = 64;

    pub fn new(serial: impl Into<String>) -> Result<Self, AdbError> {
        let serial = serial.into();
        let valid = !serial.is_empty()
            && serial.len() <= Self::MAX_LEN
            && serial.bytes().all(|b| b.is_ascii_graphic());
        if valid {
            Ok(Self(serial))
        } else {
            Err(AdbError::InvalidSerial(serial))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for DeviceSerial {
    type Error = AdbError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<DeviceSerial> for String {
    fn from(value: DeviceSerial) -> Self {
        value.0
    }
}

impl fmt::Display for DeviceSerial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for DeviceSerial {
    type Err = AdbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellResult {
    pub stdout: Vec<u8>,
    pub duration: Duration,
}

impl ShellResult {
    pub fn stdout_lossy(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("screen dimensions must be positive")]
    EmptyScreen,
    #[error("usable dimensions must be positive")]
    EmptyUsableArea,
    #[error("usable rectangle {0} exceeds the screen")]
    UsableOutsideScreen(String),
}

/// Screen geometry of a device. The usable rectangle excludes on-screen
/// toolbars such as the status and navigation bars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct DeviceProfile {
    serial: DeviceSerial,
    screen_width_px: u32,
    screen_height_px: u32,
    usable_origin_x_px: u32,
    usable_origin_y_px: u32,
    usable_width_px: u32,
    usable_height_px: u32,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    serial: DeviceSerial,
    screen_width_px: u32,
    screen_height_px: u32,
    usable_origin_x_px: u32,
    usable_origin_y_px: u32,
    usable_width_px: u32,
    usable_height_px: u32,
}

impl TryFrom<RawProfile> for DeviceProfile {
    type Error = ProfileError;

    fn try_from(r: RawProfile) -> Result<Self, Self::Error> {
        DeviceProfile::new(
            r.serial,
            (r.screen_width_px, r.screen_height_px),
            (r.usable_origin_x_px, r.usable_origin_y_px),
            (r.usable_width_px, r.usable_height_px),
        )
    }
}

impl From<DeviceProfile> for RawProfile {
    fn from(p: DeviceProfile) -> Self {
        RawProfile {
            serial: p.serial,
            screen_width_px: p.screen_width_px,
            screen_height_px: p.screen_height_px,
            usable_origin_x_px: p.usable_origin_x_px,
            usable_origin_y_px: p.usable_origin_y_px,
            usable_width_px: p.usable_width_px,
            usable_height_px: p.usable_height_px,
        }
    }
}

impl DeviceProfile {
    pub fn new(
        serial: DeviceSerial,
        (screen_width_px, screen_height_px): (u32, u32),
        (usable_origin_x_px, usable_origin_y_px): (u32, u32),
        (usable_width_px, usable_height_px): (u32, u32),
    ) -> Result<Self, ProfileError> {
        if screen_width_px == 0 || screen_height_px == 0 {
            return Err(ProfileError::EmptyScreen);
        }
        if usable_width_px == 0 || usable_height_px == 0 {
            return Err(ProfileError::EmptyUsableArea);
        }
        let right = u64::from(usable_origin_x_px) + u64::from(usable_width_px);
        let bottom = u64::from(usable_origin_y_px) + u64::from(usable_height_px);
        if right > u64::from(screen_width_px) || bottom > u64::from(screen_height_px) {
            return Err(ProfileError::UsableOutsideScreen(format!(
                "({usable_origin_x_px},{usable_origin_y_px}) {usable_width_px}x{usable_height_px}"
            )));
        }
        Ok(Self {
            serial,
            screen_width_px,
            screen_height_px,
            usable_origin_x_px,
            usable_origin_y_px,
            usable_width_px,
            usable_height_px,
        })
    }

    /// A profile whose usable area is the whole screen.
    pub fn full_screen(serial: DeviceSerial, width: u32, height: u32) -> Result<Self, ProfileError> {
        Self::new(serial, (width, height), (0, 0), (width, height))
    }

    pub fn serial(&self) -> &DeviceSerial {
        &self.serial
    }

    pub fn with_serial(mut self, serial: DeviceSerial) -> Self {
        self.serial = serial;
        self
    }

    pub fn screen_size(&self) -> (u32, u32) {
        (self.screen_width_px, self.screen_height_px)
    }

    pub fn usable_origin(&self) -> (u32, u32) {
        (self.usable_origin_x_px, self.usable_origin_y_px)
    }

    pub fn usable_size(&self) -> (u32, u32) {
        (self.usable_width_px, self.usable_height_px)
    }

    pub fn contains_screen_point(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < i64::from(self.screen_width_px) && y < i64::from(self.screen_height_px)
    }
}
