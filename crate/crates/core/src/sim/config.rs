use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::power::{PowerModel, MAX_BRIGHTNESS};
use super::SimError;
use crate::adb::DeviceProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BrightnessMode {
    Auto,
    Manual,
}

impl BrightnessMode {
    /// Value stored under `system screen_brightness_mode`.
    pub fn setting_value(self) -> &'static str {
        match self {
            BrightnessMode::Manual => "0",
            BrightnessMode::Auto => "1",
        }
    }

    pub fn from_setting(value: &str) -> Option<Self> {
        match value.trim() {
            "0" => Some(BrightnessMode::Manual),
            "1" => Some(BrightnessMode::Auto),
            _ => None,
        }
    }
}

/// Load an app puts on the device while it is showing pages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppLoad {
    pub cpu_percent: f64,
    pub bandwidth_mb_per_page: f64,
}

/// A short CPU spike caused by a device operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    pub cpu_percent: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityModel {
    /// Seconds over which a page's bytes are transferred.
    pub page_load_s: f64,
    pub install: Burst,
    pub clear: Burst,
    pub launch: Burst,
    pub input: Burst,
}

impl Default for ActivityModel {
    fn default() -> Self {
        Self {
            page_load_s: 5.0,
            install: Burst { cpu_percent: 60.0, duration_s: 20.0 },
            clear: Burst { cpu_percent: 30.0, duration_s: 2.0 },
            launch: Burst { cpu_percent: 45.0, duration_s: 3.0 },
            input: Burst { cpu_percent: 12.0, duration_s: 0.5 },
        }
    }
}

fn default_cores() -> u32 {
    8
}

fn default_voltage() -> f64 {
    3850.0
}

fn default_state() -> String {
    "device".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDeviceConfig {
    #[serde(default)]
    pub name: String,
    pub profile: DeviceProfile,
    pub power: PowerModel,
    pub brightness: u16,
    pub brightness_mode: BrightnessMode,
    /// Brightness the OS picks while in auto mode. Defaults to `brightness`.
    #[serde(default)]
    pub auto_brightness: Option<u16>,
    #[serde(default)]
    pub installed: BTreeSet<String>,
    pub rest_cpu_percent: f64,
    #[serde(default)]
    pub apps: BTreeMap<String, AppLoad>,
    #[serde(default)]
    pub activity: ActivityModel,
    #[serde(default = "default_cores")]
    pub cores: u32,
    #[serde(default = "default_voltage")]
    pub voltage_mv: f64,
    /// State reported by `host:devices`.
    #[serde(default = "default_state")]
    pub state: String,
}

impl SimDeviceConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: Self = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Loads a bundled profile by name (`j7duo`, `smj337a`, with or without
    /// the `.json` suffix).
    pub fn bundled(name: &str) -> Option<Self> {
        match name.trim_end_matches(".json") {
            "j7duo" => Some(j7duo()),
            "smj337a" => Some(smj337a()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if self.brightness > MAX_BRIGHTNESS {
            return fail(format!("brightness {} exceeds {MAX_BRIGHTNESS}", self.brightness));
        }
        if let Some(b) = self.auto_brightness.filter(|b| *b > MAX_BRIGHTNESS) {
            return fail(format!("auto brightness {b} exceeds {MAX_BRIGHTNESS}"));
        }
        if !(0.0..=5.0).contains(&self.rest_cpu_percent) {
            return fail(format!("rest_cpu_percent {} outside [0,5]", self.rest_cpu_percent));
        }
        if self.cores == 0 {
            return fail("cores must be positive".into());
        }
        if !(self.voltage_mv > 0.0) {
            return fail("voltage_mv must be positive".into());
        }
        for (pkg, load) in &self.apps {
            if !(0.0..=100.0).contains(&load.cpu_percent) || !(load.bandwidth_mb_per_page >= 0.0) {
                return fail(format!("invalid load model for {pkg}"));
            }
        }
        if !(self.activity.page_load_s > 0.0) {
            return fail("page_load_s must be positive".into());
        }
        Ok(())
    }

    pub fn with_serial(mut self, serial: crate::adb::DeviceSerial) -> Self {
        self.profile = self.profile.with_serial(serial);
        self
    }
}

pub fn j7duo() -> SimDeviceConfig {
    SimDeviceConfig::from_json(include_str!("../../profiles/j7duo.json")).expect("bundled j7duo profile")
}

pub fn smj337a() -> SimDeviceConfig {
    SimDeviceConfig::from_json(include_str!("../../profiles/smj337a.json")).expect("bundled smj337a profile")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_profiles_load() {
        assert_eq!(j7duo().profile.serial().as_str(), "J7DUO");
        assert_eq!(smj337a().power.points().len(), 6);
        assert!(SimDeviceConfig::bundled("smj337a.json").is_some());
        assert!(SimDeviceConfig::bundled("pixel").is_none());
    }

    #[test]
    fn rest_band_is_enforced() {
        let mut c = j7duo();
        c.rest_cpu_percent = 6.0;
        assert!(c.validate().is_err());
        c.rest_cpu_percent = 5.0;
        assert!(c.validate().is_ok());
        c.brightness = 251;
        assert!(c.validate().is_err());
    }
}
