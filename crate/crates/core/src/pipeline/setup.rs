use serde::{Deserialize, Serialize};

use super::Result;
use crate::adb::{Connection, DeviceSerial};

/// `(namespace, key, value)` settings applied before a job. The brightness
/// entry is added separately.
pub const SETUP_SETTINGS: &[(&str, &str, &str)] = &[
    ("global", "heads_up_notifications_enabled", "0"),
    ("global", "zen_mode", "2"),
    ("global", "background_process_limit", "0"),
    ("global", "stay_on_while_plugged_in", "7"),
    ("system", "screen_off_timeout", "1800000"),
    ("system", "screen_brightness_mode", "0"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavedSetting {
    pub namespace: String,
    pub key: String,
    /// `None` when the setting did not exist.
    pub value: Option<String>,
}

/// Settings as they were before [`device_setup`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeviceStatus {
    pub saved: Vec<SavedSetting>,
}

fn planned(brightness: Option<u16>) -> Vec<(&'static str, &'static str, String)> {
    let mut out: Vec<_> = SETUP_SETTINGS
        .iter()
        .map(|(ns, k, v)| (*ns, *k, v.to_string()))
        .collect();
    if let Some(b) = brightness {
        out.push(("system", "screen_brightness", b.to_string()));
    }
    out
}

/// Mutes notifications, disables background processes, keeps the screen
/// on and fixes the brightness, then kills background apps. Returns the
/// prior values for [`cleanup`].
pub fn device_setup(conn: &Connection, serial: &DeviceSerial, brightness: Option<u16>) -> Result<DeviceStatus> {
    let mut status = DeviceStatus::default();
    for (ns, key, value) in planned(brightness) {
        let prior = conn.get_setting(serial, ns, key)?;
        status.saved.push(SavedSetting {
            namespace: ns.to_string(),
            key: key.to_string(),
            value: prior,
        });
        conn.put_setting(serial, ns, key, &value)?;
    }
    conn.shell(serial, "am kill-all")?;
    Ok(status)
}

/// Restores every setting captured by [`device_setup`], in reverse order.
pub fn cleanup(conn: &Connection, serial: &DeviceSerial, status: &DeviceStatus) -> Result<()> {
    for s in status.saved.iter().rev() {
        match &s.value {
            Some(v) => conn.put_setting(serial, &s.namespace, &s.key, v)?,
            None => conn.delete_setting(serial, &s.namespace, &s.key)?,
        }
    }
    Ok(())
}
