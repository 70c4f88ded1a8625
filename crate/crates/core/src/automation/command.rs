use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{AutomationError, Result};
use crate::adb::DeviceProfile;

pub const MAX_DURATION_MS: u64 = 60_000;

/// The only label allowed to carry an empty command list.
pub const NOOP_LABEL: &str = "noop";

const MIN_SIGNIFICANT_DIGITS: usize = 6;

/// Shortest round-trip decimal, zero-padded to at least six significant
/// digits (`0.5` becomes `0.500000`).
pub(crate) fn format_ratio(v: f64) -> String {
    let mut text = format!("{v}");
    let digits = text.trim_start_matches('-').replace('.', "");
    let significant = digits.trim_start_matches('0').len();
    let significant = if significant == 0 { 1 } else { significant };
    if significant < MIN_SIGNIFICANT_DIGITS {
        if !text.contains('.') {
            text.push('.');
        }
        let pad = if digits.trim_start_matches('0').is_empty() {
            // All zeros: count the zeros after the point as the digits.
            MIN_SIGNIFICANT_DIGITS - 1 - text.split('.').nth(1).map_or(0, str::len).min(MIN_SIGNIFICANT_DIGITS - 1)
        } else {
            MIN_SIGNIFICANT_DIGITS - significant
        };
        text.extend(std::iter::repeat_n('0', pad));
    }
    text
}

fn ser_ratio<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return Err(S::Error::custom("ratio must be finite"));
    }
    RawValue::from_string(format_ratio(*v))
        .map_err(S::Error::custom)?
        .serialize(s)
}

fn de_ratio<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    let v = f64::deserialize(d)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(D::Error::custom(format!("ratio {v} outside [0, 1]")));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormalizedCommand {
    Tap {
        #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
        x_ratio: f64,
        #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
        y_ratio: f64,
    },
    Swipe {
        #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
        x_ratio: f64,
        #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
        y_ratio: f64,
        #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
        x2_ratio: f64,
        #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
        y2_ratio: f64,
        duration_ms: u64,
    },
    Text {
        text: String,
    },
    Key {
        keycode: i32,
    },
    Wait {
        duration_ms: u64,
    },
}

impl NormalizedCommand {
    pub fn tap(x_ratio: f64, y_ratio: f64) -> Self {
        NormalizedCommand::Tap { x_ratio, y_ratio }
    }

    pub fn swipe(from: (f64, f64), to: (f64, f64), duration_ms: u64) -> Self {
        NormalizedCommand::Swipe {
            x_ratio: from.0,
            y_ratio: from.1,
            x2_ratio: to.0,
            y2_ratio: to.1,
            duration_ms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ratio_ok = |r: f64| (0.0..=1.0).contains(&r);
        let bad = |msg: String| Err(AutomationError::InvalidCommand(msg));
        match self {
            NormalizedCommand::Tap { x_ratio, y_ratio } => {
                if !ratio_ok(*x_ratio) || !ratio_ok(*y_ratio) {
                    return bad(format!("tap ratio outside [0,1]: ({x_ratio}, {y_ratio})"));
                }
            }
            NormalizedCommand::Swipe {
                x_ratio,
                y_ratio,
                x2_ratio,
                y2_ratio,
                duration_ms,
            } => {
                if ![x_ratio, y_ratio, x2_ratio, y2_ratio].iter().all(|r| ratio_ok(**r)) {
                    return bad("swipe ratio outside [0,1]".into());
                }
                if *duration_ms > MAX_DURATION_MS {
                    return bad(format!("swipe duration {duration_ms} ms exceeds {MAX_DURATION_MS}"));
                }
            }
            NormalizedCommand::Wait { duration_ms } if *duration_ms > MAX_DURATION_MS => {
                return bad(format!("wait of {duration_ms} ms exceeds {MAX_DURATION_MS}"));
            }
            NormalizedCommand::Text { text } if text.is_empty() => return bad("empty text".into()),
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomationScript {
    pub app_id: String,
    pub label: String,
    pub source_profile: DeviceProfile,
    pub commands: Vec<NormalizedCommand>,
}

impl AutomationScript {
    pub fn validate(&self) -> Result<()> {
        if self.app_id.is_empty() {
            return Err(AutomationError::InvalidScript("empty app_id".into()));
        }
        if self.label.is_empty() {
            return Err(AutomationError::InvalidScript("empty label".into()));
        }
        if self.commands.is_empty() && self.label != NOOP_LABEL {
            return Err(AutomationError::InvalidScript(format!(
                "script {:?} has no commands",
                self.label
            )));
        }
        self.commands.iter().try_for_each(NormalizedCommand::validate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let script: Self = serde_json::from_str(text)?;
        script.validate()?;
        Ok(script)
    }
}
