use serde::{Deserialize, Serialize};

use super::{DimError, Result};
use crate::sim::MAX_BRIGHTNESS;

/// Maps the user's brightness to the dimmed brightness.
///
/// Low values (`<= low_max`) go to zero, mid values are halved, high values
/// (`>= high_min`) go to a fixed `high_target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy")]
pub struct DimmingPolicy {
    low_max: u16,
    high_min: u16,
    high_target: u16,
}

#[derive(Deserialize)]
struct RawPolicy {
    low_max: u16,
    high_min: u16,
    high_target: u16,
}

impl TryFrom<RawPolicy> for DimmingPolicy {
    type Error = DimError;

    fn try_from(r: RawPolicy) -> Result<Self> {
        DimmingPolicy::new(r.low_max, r.high_min, r.high_target)
    }
}

impl Default for DimmingPolicy {
    fn default() -> Self {
        Self {
            low_max: 100,
            high_min: 200,
            high_target: 150,
        }
    }
}

impl DimmingPolicy {
    pub fn new(low_max: u16, high_min: u16, high_target: u16) -> Result<Self> {
        if !(0 < low_max && low_max < high_min && high_min <= MAX_BRIGHTNESS) {
            return Err(DimError::InvalidPolicy(format!(
                "need 0 < low_max ({low_max}) < high_min ({high_min}) <= {MAX_BRIGHTNESS}"
            )));
        }
        if high_target >= high_min {
            return Err(DimError::InvalidPolicy(format!(
                "high_target ({high_target}) must be below high_min ({high_min})"
            )));
        }
        Ok(Self {
            low_max,
            high_min,
            high_target,
        })
    }

    pub fn low_max(&self) -> u16 {
        self.low_max
    }

    pub fn high_min(&self) -> u16 {
        self.high_min
    }

    pub fn high_target(&self) -> u16 {
        self.high_target
    }

    pub fn dim_target(&self, brightness: u16) -> u16 {
        if brightness <= self.low_max {
            0
        } else if brightness < self.high_min {
            // Half, rounding .5 up.
            brightness.div_ceil(2)
        } else {
            self.high_target
        }
    }
}
