//! Brightness to current mapping plus linear CPU and network terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_BRIGHTNESS: u16 = 250;

#[derive(Debug, Error, PartialEq)]
pub enum PowerModelError {
    #[error("power model needs at least two brightness points")]
    TooFewPoints,
    #[error("brightness points must be strictly increasing (at {0})")]
    BrightnessNotIncreasing(u16),
    #[error("currents must be positive and strictly increasing with brightness (at {0})")]
    CurrentNotIncreasing(u16),
    #[error("brightness points must cover 0 and {MAX_BRIGHTNESS}")]
    IncompleteCoverage,
    #[error("coefficients must be finite and non-negative")]
    NegativeCoefficient,
    #[error("brightness {0} is outside the model's range")]
    BrightnessOutOfModel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessPoint {
    pub brightness: u16,
    pub current_ma: f64,
}

/// Whole-device current draw. The brightness curve is the median draw of
/// the idle device at each brightness; CPU load above the rest level and
/// network throughput add linearly on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPowerModel", into = "RawPowerModel")]
pub struct PowerModel {
    points: Vec<BrightnessPoint>,
    cpu_coeff_ma_per_percent: f64,
    network_coeff_ma_per_mbps: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPowerModel {
    brightness_points: Vec<BrightnessPoint>,
    #[serde(default)]
    cpu_coeff_ma_per_percent: f64,
    #[serde(default)]
    network_coeff_ma_per_mbps: f64,
}

impl TryFrom<RawPowerModel> for PowerModel {
    type Error = PowerModelError;

    fn try_from(raw: RawPowerModel) -> Result<Self, Self::Error> {
        PowerModel::new(raw.brightness_points, raw.cpu_coeff_ma_per_percent, raw.network_coeff_ma_per_mbps)
    }
}

impl From<PowerModel> for RawPowerModel {
    fn from(m: PowerModel) -> Self {
        RawPowerModel {
            brightness_points: m.points,
            cpu_coeff_ma_per_percent: m.cpu_coeff_ma_per_percent,
            network_coeff_ma_per_mbps: m.network_coeff_ma_per_mbps,
        }
    }
}

impl PowerModel {
    pub fn new(
        points: Vec<BrightnessPoint>,
        cpu_coeff_ma_per_percent: f64,
        network_coeff_ma_per_mbps: f64,
    ) -> Result<Self, PowerModelError> {
        if points.len() < 2 {
            return Err(PowerModelError::TooFewPoints);
        }
        for w in points.windows(2) {
            if w[1].brightness <= w[0].brightness {
                return Err(PowerModelError::BrightnessNotIncreasing(w[1].brightness));
            }
            if !(w[1].current_ma > w[0].current_ma) {
                return Err(PowerModelError::CurrentNotIncreasing(w[1].brightness));
            }
        }
        if !(points[0].current_ma > 0.0) || !points.iter().all(|p| p.current_ma.is_finite()) {
            return Err(PowerModelError::CurrentNotIncreasing(points[0].brightness));
        }
        if points[0].brightness != 0 || points[points.len() - 1].brightness != MAX_BRIGHTNESS {
            return Err(PowerModelError::IncompleteCoverage);
        }
        let coeff_ok = |c: f64| c.is_finite() && c >= 0.0;
        if !coeff_ok(cpu_coeff_ma_per_percent) || !coeff_ok(network_coeff_ma_per_mbps) {
            return Err(PowerModelError::NegativeCoefficient);
        }
        Ok(Self {
            points,
            cpu_coeff_ma_per_percent,
            network_coeff_ma_per_mbps,
        })
    }

    /// Screen-only model built from `(brightness, current)` pairs.
    pub fn from_table(rows: &[(u16, f64)]) -> Result<Self, PowerModelError> {
        let points = rows
            .iter()
            .map(|&(brightness, current_ma)| BrightnessPoint { brightness, current_ma })
            .collect();
        Self::new(points, 0.0, 0.0)
    }

    pub fn points(&self) -> &[BrightnessPoint] {
        &self.points
    }

    pub fn cpu_coeff_ma_per_percent(&self) -> f64 {
        self.cpu_coeff_ma_per_percent
    }

    pub fn network_coeff_ma_per_mbps(&self) -> f64 {
        self.network_coeff_ma_per_mbps
    }

    /// Piecewise-linear interpolation of the brightness curve.
    pub fn screen_current_ma(&self, brightness: f64) -> Result<f64, PowerModelError> {
        let first = &self.points[0];
        let last = &self.points[self.points.len() - 1];
        if !(brightness >= f64::from(first.brightness) && brightness <= f64::from(last.brightness)) {
            return Err(PowerModelError::BrightnessOutOfModel(brightness));
        }
        let idx = self
            .points
            .partition_point(|p| f64::from(p.brightness) <= brightness);
        if idx >= self.points.len() {
            return Ok(last.current_ma);
        }
        let (lo, hi) = (&self.points[idx - 1], &self.points[idx]);
        let span = f64::from(hi.brightness - lo.brightness);
        let frac = (brightness - f64::from(lo.brightness)) / span;
        Ok(lo.current_ma + frac * (hi.current_ma - lo.current_ma))
    }

    /// Current for a device state.
    pub fn current_ma(&self, load: &LoadState) -> Result<f64, PowerModelError> {
        Ok(self.screen_current_ma(f64::from(load.brightness))?
            + self.cpu_coeff_ma_per_percent * load.cpu_load_percent.max(0.0)
            + self.network_coeff_ma_per_mbps * load.throughput_mbps.max(0.0))
    }
}

/// Inputs of the current model at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoadState {
    pub brightness: u16,
    /// CPU utilisation above the device's rest level, in percent.
    pub cpu_load_percent: f64,
    /// Network throughput in MB/s (10^6 bytes).
    pub throughput_mbps: f64,
}

impl LoadState {
    pub fn idle(brightness: u16) -> Self {
        Self {
            brightness,
            ..Self::default()
        }
    }
}
