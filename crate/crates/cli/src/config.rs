use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use wattbench_core::adb::DEFAULT_ADB_PORT;
use wattbench_core::sim::{PowerModel, SimDeviceConfig};

/// Invalid input from the user: bad flags, unreadable or malformed files.
/// Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Optional TOML settings; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub adb_server: Option<String>,
    pub store: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub log_level: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }
}

/// Resolved settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub adb_server: String,
    pub store: PathBuf,
    pub output: PathBuf,
    /// Directory searched for device profiles given by name.
    pub profiles: PathBuf,
    pub log_level: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            adb_server: format!("127.0.0.1:{DEFAULT_ADB_PORT}"),
            store: PathBuf::from("automations"),
            output: PathBuf::from("out"),
            profiles: PathBuf::from("profiles"),
            log_level: "info".into(),
        }
    }
}

impl Config {
    /// Layers the file config, then any flag overrides, over the defaults.
    pub fn resolve(file: FileConfig, overrides: FileConfig) -> Self {
        let d = Self::default();
        Self {
            adb_server: overrides.adb_server.or(file.adb_server).unwrap_or(d.adb_server),
            store: overrides.store.or(file.store).unwrap_or(d.store),
            output: overrides.output.or(file.output).unwrap_or(d.output),
            profiles: overrides.profiles.or(file.profiles).unwrap_or(d.profiles),
            log_level: overrides.log_level.or(file.log_level).unwrap_or(d.log_level),
        }
    }

    /// A bundled profile name (`j7duo`, `smj337a`), a path, or a file in
    /// the profiles directory.
    pub fn device_config(&self, spec: &str) -> anyhow::Result<SimDeviceConfig> {
        if let Some(c) = SimDeviceConfig::bundled(spec) {
            return Ok(c);
        }
        let path = self.profile_path(spec)?;
        SimDeviceConfig::load(&path).map_err(|e| config_error(e.to_string()))
    }

    /// The power model inside a device profile, or a bare power model file.
    pub fn power_model(&self, spec: &str) -> anyhow::Result<PowerModel> {
        if let Some(c) = SimDeviceConfig::bundled(spec) {
            return Ok(c.power);
        }
        let path = self.profile_path(spec)?;
        let text = std::fs::read_to_string(&path).with_context(|| path.display().to_string())?;
        if let Ok(c) = SimDeviceConfig::from_json(&text) {
            return Ok(c.power);
        }
        serde_json::from_str(&text).map_err(|e| config_error(format!("{}: not a profile or power model: {e}", path.display())))
    }

    fn profile_path(&self, spec: &str) -> anyhow::Result<PathBuf> {
        let direct = PathBuf::from(spec);
        if direct.is_file() {
            return Ok(direct);
        }
        for candidate in [self.profiles.join(spec), self.profiles.join(format!("{spec}.json"))] {
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
        Err(config_error(format!("no device profile {spec:?} (not bundled, not a file, not in {})", self.profiles.display())))
    }
}
