use serde::{Deserialize, Serialize};

use super::events::{AttentionEvent, AttentionKind, Phase};
use super::policy::DimmingPolicy;
use super::{DimError, Result};
use crate::adb::{Connection, DeviceSerial};
use crate::sim::BrightnessMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    Idle,
    Dimmed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerState {
    pub mode: ControllerMode,
    pub saved_brightness: u16,
    pub saved_mode: BrightnessMode,
    pub active_events: u32,
    active: [bool; 3],
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            mode: ControllerMode::Idle,
            saved_brightness: 0,
            saved_mode: BrightnessMode::Manual,
            active_events: 0,
            active: [false; 3],
        }
    }
}

impl ControllerState {
    pub fn is_active(&self, kind: AttentionKind) -> bool {
        self.active[kind.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "brightness", rename_all = "snake_case")]
pub enum DimAction {
    None,
    SetBrightness(u16),
    RestoreManual(u16),
    RestoreAuto,
}

/// Reads and writes the device's brightness settings.
pub trait BrightnessAccessor {
    fn current(&mut self) -> Result<(u16, BrightnessMode)>;
    /// Switches to manual mode at `brightness`.
    fn set_manual(&mut self, brightness: u16) -> Result<()>;
    fn set_auto(&mut self) -> Result<()>;

    fn apply(&mut self, action: DimAction) -> Result<()> {
        match action {
            DimAction::None => Ok(()),
            DimAction::SetBrightness(b) | DimAction::RestoreManual(b) => self.set_manual(b),
            DimAction::RestoreAuto => self.set_auto(),
        }
    }
}

/// One transition of the dimming state machine.
///
/// Each event kind counts at most once: a repeated start of an already
/// active kind is ignored, and the screen is restored when the last active
/// kind ends. The brightness is read only on the transition out of idle.
pub fn controller_step(
    state: ControllerState,
    event: &AttentionEvent,
    policy: &DimmingPolicy,
    device: &mut dyn BrightnessAccessor,
) -> Result<(ControllerState, DimAction)> {
    let mut next = state;
    let slot = event.kind.index();
    match event.phase {
        Phase::Start => {
            if next.active[slot] {
                return Ok((next, DimAction::None));
            }
            next.active[slot] = true;
            next.active_events += 1;
            if state.mode == ControllerMode::Idle {
                let (brightness, mode) = device.current()?;
                next.mode = ControllerMode::Dimmed;
                next.saved_brightness = brightness;
                next.saved_mode = mode;
                return Ok((next, DimAction::SetBrightness(policy.dim_target(brightness))));
            }
            Ok((next, DimAction::None))
        }
        Phase::End => {
            if !next.active[slot] {
                return Err(DimError::UnmatchedEnd {
                    kind: event.kind,
                    ts_ms: event.ts_ms,
                });
            }
            next.active[slot] = false;
            next.active_events -= 1;
            if next.active_events > 0 {
                return Ok((next, DimAction::None));
            }
            let action = match state.saved_mode {
                BrightnessMode::Manual => DimAction::RestoreManual(state.saved_brightness),
                BrightnessMode::Auto => DimAction::RestoreAuto,
            };
            Ok((ControllerState::default(), action))
        }
    }
}

/// Drives the state machine and applies its actions to a device.
#[derive(Debug)]
pub struct Controller<A> {
    policy: DimmingPolicy,
    state: ControllerState,
    device: A,
}

impl<A: BrightnessAccessor> Controller<A> {
    pub fn new(policy: DimmingPolicy, device: A) -> Self {
        Self {
            policy,
            state: ControllerState::default(),
            device,
        }
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn device(&self) -> &A {
        &self.device
    }

    pub fn handle(&mut self, event: &AttentionEvent) -> Result<DimAction> {
        let (next, action) = controller_step(self.state, event, &self.policy, &mut self.device)?;
        self.device.apply(action)?;
        self.state = next;
        Ok(action)
    }

    pub fn into_device(self) -> A {
        self.device
    }
}

/// Brightness settings over ADB.
#[derive(Debug)]
pub struct AdbBrightness<'a> {
    conn: &'a Connection,
    serial: DeviceSerial,
}

impl<'a> AdbBrightness<'a> {
    pub fn new(conn: &'a Connection, serial: DeviceSerial) -> Self {
        Self { conn, serial }
    }
}

impl BrightnessAccessor for AdbBrightness<'_> {
    fn current(&mut self) -> Result<(u16, BrightnessMode)> {
        let brightness = self
            .conn
            .get_setting(&self.serial, "system", "screen_brightness")?
            .and_then(|v| v.trim().parse::<u16>().ok())
            .unwrap_or(0);
        let mode = self
            .conn
            .get_setting(&self.serial, "system", "screen_brightness_mode")?
            .and_then(|v| BrightnessMode::from_setting(v.trim()))
            .unwrap_or(BrightnessMode::Manual);
        Ok((brightness, mode))
    }

    fn set_manual(&mut self, brightness: u16) -> Result<()> {
        self.conn
            .put_setting(&self.serial, "system", "screen_brightness_mode", BrightnessMode::Manual.setting_value())?;
        self.conn
            .put_setting(&self.serial, "system", "screen_brightness", &brightness.to_string())?;
        Ok(())
    }

    fn set_auto(&mut self) -> Result<()> {
        self.conn
            .put_setting(&self.serial, "system", "screen_brightness_mode", BrightnessMode::Auto.setting_value())?;
        Ok(())
    }
}
