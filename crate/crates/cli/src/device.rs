use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use wattbench_core::adb::{connect, Connection, DeviceProfile, DeviceSerial, DeviceState};
use wattbench_core::pipeline::profile_from_device;
use wattbench_core::sim::{self, ServerHandle, SimDeviceConfig};
use wattbench_core::{Clock, SystemClock, VirtualClock};

use crate::config::{config_error, Config};

/// A connection to one device: a real one behind the ADB server, or an
/// in-process simulator.
#[derive(Debug)]
pub struct DeviceLink {
    pub conn: Connection,
    pub serial: DeviceSerial,
    pub clock: Arc<dyn Clock>,
    pub sim: Option<(ServerHandle, SimDeviceConfig)>,
}

pub fn parse_serial(s: &str) -> anyhow::Result<DeviceSerial> {
    DeviceSerial::new(s).map_err(|e| config_error(e.to_string()))
}

impl DeviceLink {
    /// Starts a simulator for `profile`, optionally renamed to `serial`.
    pub fn simulated(cfg: &Config, profile: &str, serial: Option<&str>, virtual_clock: bool) -> anyhow::Result<Self> {
        let mut device = cfg.device_config(profile)?;
        if let Some(s) = serial {
            device = device.with_serial(parse_serial(s)?);
        }
        let clock: Arc<dyn Clock> = if virtual_clock {
            Arc::new(VirtualClock::new())
        } else {
            Arc::new(SystemClock::new())
        };
        let server = sim::serve(device.clone(), clock.clone())?;
        let conn = connect(server.addr())?;
        Ok(Self {
            conn,
            serial: device.profile.serial().clone(),
            clock,
            sim: Some((server, device)),
        })
    }

    /// Connects through the configured ADB server. Without a serial, the
    /// only attached device is used.
    pub fn adb(cfg: &Config, serial: Option<&str>) -> anyhow::Result<Self> {
        let conn = connect(cfg.adb_server.as_str()).with_context(|| format!("ADB server at {}", cfg.adb_server))?;
        let serial = match serial {
            Some(s) => parse_serial(s)?,
            None => {
                let online: Vec<DeviceSerial> = conn
                    .list_devices()?
                    .into_iter()
                    .filter(|(_, state)| *state == DeviceState::Device)
                    .map(|(s, _)| s)
                    .collect();
                match online.as_slice() {
                    [one] => one.clone(),
                    [] => anyhow::bail!("no device attached to {}", cfg.adb_server),
                    _ => return Err(config_error("several devices attached; pass --serial")),
                }
            }
        };
        Ok(Self {
            conn,
            serial,
            clock: Arc::new(SystemClock::new()),
            sim: None,
        })
    }

    pub fn open(cfg: &Config, sim: Option<&str>, serial: Option<&str>, virtual_clock: bool) -> anyhow::Result<Self> {
        match sim {
            Some(profile) => Self::simulated(cfg, profile, serial, virtual_clock),
            None => Self::adb(cfg, serial),
        }
    }

    /// `explicit` is a DeviceProfile JSON file or a device profile name;
    /// otherwise the simulator's geometry or `wm size` is used.
    pub fn profile(&self, cfg: &Config, explicit: Option<&str>) -> anyhow::Result<DeviceProfile> {
        if let Some(spec) = explicit {
            let path = Path::new(spec);
            if path.is_file() {
                let text = std::fs::read_to_string(path)?;
                if let Ok(p) = serde_json::from_str::<DeviceProfile>(&text) {
                    return Ok(p.with_serial(self.serial.clone()));
                }
            }
            return Ok(cfg.device_config(spec)?.profile.with_serial(self.serial.clone()));
        }
        if let Some((_, device)) = &self.sim {
            return Ok(device.profile.clone());
        }
        Ok(profile_from_device(&self.conn, &self.serial)?)
    }
}
