use serde::{Deserialize, Serialize};

use super::command::{NormalizedCommand, MAX_DURATION_MS};
use super::{AutomationError, Result};
use crate::adb::DeviceProfile;
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeConfig {
    /// Pointer displacement (source pixels) below which a gesture is a tap.
    pub tap_threshold_px: f64,
    /// Idle time between gestures at or above which a wait is recorded.
    pub gap_threshold_ms: u64,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self {
            tap_threshold_px: 24.0,
            gap_threshold_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawAction {
    PointerDown { x_px: i64, y_px: i64 },
    PointerUp { x_px: i64, y_px: i64 },
    PointerMove { x_px: i64, y_px: i64 },
    Text { text: String },
    Key { keycode: i32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInputEvent {
    pub ts_ms: u64,
    #[serde(flatten)]
    pub action: RawAction,
}

impl RawInputEvent {
    pub fn new(ts_ms: u64, action: RawAction) -> Self {
        Self { ts_ms, action }
    }
}

fn ratio(px: i64, origin: u32, extent: u32) -> f64 {
    ((px - i64::from(origin)) as f64 / f64::from(extent)).clamp(0.0, 1.0)
}

fn ratios(profile: &DeviceProfile, x: i64, y: i64) -> (f64, f64) {
    let (ox, oy) = profile.usable_origin();
    let (w, h) = profile.usable_size();
    (ratio(x, ox, w), ratio(y, oy, h))
}

/// Collapses raw pointer, text and key events into normalized commands.
///
/// Pointer moves only matter between a down and its up; the gesture's end
/// point is taken from the up event. Points outside the usable area but on
/// the screen are clamped to its edge.
pub fn normalize(events: &[RawInputEvent], profile: &DeviceProfile, config: &NormalizeConfig) -> Result<Vec<NormalizedCommand>> {
    let (width, height) = profile.screen_size();
    let check = |index: usize, x: i64, y: i64| {
        if profile.contains_screen_point(x, y) {
            Ok(())
        } else {
            Err(AutomationError::CoordinateOutOfBounds {
                index,
                x,
                y,
                width,
                height,
            })
        }
    };

    let mut out = Vec::new();
    let mut down: Option<(u64, i64, i64)> = None;
    let mut last_end: Option<u64> = None;

    let gap = |out: &mut Vec<NormalizedCommand>, last_end: Option<u64>, ts: u64| {
        if let Some(end) = last_end {
            let mut idle = ts.saturating_sub(end);
            if idle >= config.gap_threshold_ms {
                while idle > 0 {
                    let chunk = idle.min(MAX_DURATION_MS);
                    out.push(NormalizedCommand::Wait { duration_ms: chunk });
                    idle -= chunk;
                }
            }
        }
    };

    let mut prev_ts = 0;
    for (index, event) in events.iter().enumerate() {
        if event.ts_ms < prev_ts {
            return Err(AutomationError::InvalidCommand(format!(
                "event {index}: timestamp {} precedes {prev_ts}",
                event.ts_ms
            )));
        }
        prev_ts = event.ts_ms;
        let unpaired = |reason: &str| AutomationError::UnpairedPointerEvent {
            index,
            reason: reason.to_string(),
        };
        match event.action {
            RawAction::PointerDown { x_px, y_px } => {
                check(index, x_px, y_px)?;
                if down.is_some() {
                    return Err(unpaired("pointer down while already down"));
                }
                gap(&mut out, last_end, event.ts_ms);
                down = Some((event.ts_ms, x_px, y_px));
            }
            RawAction::PointerMove { x_px, y_px } => {
                if down.is_some() {
                    check(index, x_px, y_px)?;
                }
            }
            RawAction::PointerUp { x_px, y_px } => {
                check(index, x_px, y_px)?;
                let (t0, x0, y0) = down.take().ok_or_else(|| unpaired("pointer up without down"))?;
                let displacement = ((x_px - x0) as f64).hypot((y_px - y0) as f64);
                let from = ratios(profile, x0, y0);
                if displacement < config.tap_threshold_px {
                    out.push(NormalizedCommand::tap(from.0, from.1));
                } else {
                    let to = ratios(profile, x_px, y_px);
                    let duration = (event.ts_ms - t0).min(MAX_DURATION_MS);
                    out.push(NormalizedCommand::swipe(from, to, duration));
                }
                last_end = Some(event.ts_ms);
            }
            RawAction::Text { ref text } => {
                if down.is_some() {
                    return Err(unpaired("text entered during a pointer gesture"));
                }
                if text.is_empty() {
                    continue;
                }
                gap(&mut out, last_end, event.ts_ms);
                out.push(NormalizedCommand::Text { text: text.clone() });
                last_end = Some(event.ts_ms);
            }
            RawAction::Key { keycode } => {
                if down.is_some() {
                    return Err(unpaired("key pressed during a pointer gesture"));
                }
                gap(&mut out, last_end, event.ts_ms);
                out.push(NormalizedCommand::Key { keycode });
                last_end = Some(event.ts_ms);
            }
        }
    }
    if down.is_some() {
        return Err(AutomationError::UnpairedPointerEvent {
            index: events.len(),
            reason: "recording ended with the pointer down".into(),
        });
    }
    Ok(out)
}

/// Normalizes many recordings against one profile.
pub fn normalize_batch(
    recordings: &[Vec<RawInputEvent>],
    profile: &DeviceProfile,
    config: &NormalizeConfig,
    exec: Execution,
) -> Vec<Result<Vec<NormalizedCommand>>> {
    exec.map_slice(recordings, |events| normalize(events, profile, config))
}

fn pixel(ratio: f64, origin: u32, extent: u32) -> i64 {
    let lo = i64::from(origin);
    let hi = lo + i64::from(extent) - 1;
    ((lo as f64 + ratio * f64::from(extent)).round() as i64).clamp(lo, hi)
}

/// Screen pixel for a ratio pair on `target`.
pub fn denormalize_point(target: &DeviceProfile, x_ratio: f64, y_ratio: f64) -> (i64, i64) {
    let (ox, oy) = target.usable_origin();
    let (w, h) = target.usable_size();
    (pixel(x_ratio, ox, w), pixel(y_ratio, oy, h))
}

/// Escapes text for `input text` through the device shell: spaces become
/// `%s`, shell metacharacters get a backslash.
pub fn escape_input_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            ' ' => out.push_str("%s"),
            '\\' | '\'' | '"' | '`' | '$' | '&' | '|' | ';' | '<' | '>' | '(' | ')' | '*' | '?' | '~' | '!' | '#'
            | '[' | ']' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

/// The `input` shell command for `cmd`, or `None` for a wait.
pub fn denormalize(cmd: &NormalizedCommand, target: &DeviceProfile) -> Option<String> {
    match *cmd {
        NormalizedCommand::Tap { x_ratio, y_ratio } => {
            let (x, y) = denormalize_point(target, x_ratio, y_ratio);
            Some(format!("input tap {x} {y}"))
        }
        NormalizedCommand::Swipe {
            x_ratio,
            y_ratio,
            x2_ratio,
            y2_ratio,
            duration_ms,
        } => {
            let (x1, y1) = denormalize_point(target, x_ratio, y_ratio);
            let (x2, y2) = denormalize_point(target, x2_ratio, y2_ratio);
            Some(format!("input swipe {x1} {y1} {x2} {y2} {duration_ms}"))
        }
        NormalizedCommand::Text { ref text } => Some(format!("input text {}", escape_input_text(text))),
        NormalizedCommand::Key { keycode } => Some(format!("input keyevent {keycode}")),
        NormalizedCommand::Wait { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adb::DeviceSerial;
    use proptest::prelude::*;

    fn serial() -> DeviceSerial {
        DeviceSerial::new("T").unwrap()
    }

    fn full(w: u32, h: u32) -> DeviceProfile {
        DeviceProfile::full_screen(serial(), w, h).unwrap()
    }

    fn down(ts: u64, x: i64, y: i64) -> RawInputEvent {
        RawInputEvent::new(ts, RawAction::PointerDown { x_px: x, y_px: y })
    }

    fn up(ts: u64, x: i64, y: i64) -> RawInputEvent {
        RawInputEvent::new(ts, RawAction::PointerUp { x_px: x, y_px: y })
    }

    #[test]
    fn centre_tap() {
        let cmds = normalize(&[down(0, 540, 1110), up(80, 540, 1110)], &full(1080, 2220), &NormalizeConfig::default()).unwrap();
        assert_eq!(cmds, vec![NormalizedCommand::tap(0.5, 0.5)]);
    }

    #[test]
    fn toolbar_offset() {
        let p = DeviceProfile::new(serial(), (1080, 2220), (0, 96), (1080, 2124)).unwrap();
        let cmds = normalize(&[down(0, 540, 1158), up(80, 540, 1158)], &p, &NormalizeConfig::default()).unwrap();
        assert_eq!(cmds, vec![NormalizedCommand::tap(0.5, 0.5)]);
    }

    #[test]
    fn swipe_duration() {
        let p = full(1080, 2220);
        let cmds = normalize(&[down(0, 100, 1800), up(300, 100, 600)], &p, &NormalizeConfig::default()).unwrap();
        match cmds.as_slice() {
            [NormalizedCommand::Swipe { duration_ms, .. }] => assert_eq!(*duration_ms, 300),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn waits_split_at_limit() {
        let p = full(720, 1280);
        let events = [down(0, 1, 1), up(10, 1, 1), down(10 + 130_000, 1, 1), up(130_020, 1, 1)];
        let cmds = normalize(&events, &p, &NormalizeConfig::default()).unwrap();
        let waits: Vec<u64> = cmds
            .iter()
            .filter_map(|c| match c {
                NormalizedCommand::Wait { duration_ms } => Some(*duration_ms),
                _ => None,
            })
            .collect();
        assert_eq!(waits, vec![60_000, 60_000, 10_000]);
        let short = [down(0, 1, 1), up(10, 1, 1), down(1009, 1, 1), up(1010, 1, 1)];
        assert_eq!(normalize(&short, &p, &NormalizeConfig::default()).unwrap().len(), 2);
    }

    #[test]
    fn errors() {
        let p = full(720, 1280);
        let cfg = NormalizeConfig::default();
        assert!(matches!(
            normalize(&[up(0, 1, 1)], &p, &cfg),
            Err(AutomationError::UnpairedPointerEvent { index: 0, .. })
        ));
        assert!(matches!(
            normalize(&[down(0, 1, 1)], &p, &cfg),
            Err(AutomationError::UnpairedPointerEvent { index: 1, .. })
        ));
        assert!(matches!(
            normalize(&[down(0, 1, 1), down(1, 1, 1)], &p, &cfg),
            Err(AutomationError::UnpairedPointerEvent { index: 1, .. })
        ));
        assert!(matches!(
            normalize(&[down(0, 720, 1)], &p, &cfg),
            Err(AutomationError::CoordinateOutOfBounds { index: 0, x: 720, .. })
        ));
    }

    #[test]
    fn denormalize_examples() {
        let t = NormalizedCommand::tap(0.5, 0.5);
        assert_eq!(denormalize(&t, &full(720, 1280)).unwrap(), "input tap 360 640");
        assert_eq!(denormalize(&t, &full(1080, 2220)).unwrap(), "input tap 540 1110");
        assert_eq!(
            denormalize(&NormalizedCommand::Text { text: "news.com".into() }, &full(720, 1280)).unwrap(),
            "input text news.com"
        );
        assert_eq!(escape_input_text("a b&c"), "a%sb\\&c");
        assert_eq!(denormalize(&NormalizedCommand::tap(1.0, 1.0), &full(720, 1280)).unwrap(), "input tap 719 1279");
        assert!(denormalize(&NormalizedCommand::Wait { duration_ms: 5 }, &full(720, 1280)).is_none());
    }

    #[test]
    fn raw_event_json() {
        let e: RawInputEvent = serde_json::from_str(r#"{"ts_ms":5,"kind":"pointer_down","x_px":1,"y_px":2}"#).unwrap();
        assert_eq!(e, down(5, 1, 2));
        let t: RawInputEvent = serde_json::from_str(r#"{"ts_ms":6,"kind":"text","text":"hi"}"#).unwrap();
        assert_eq!(t.action, RawAction::Text { text: "hi".into() });
    }

    proptest! {
        #[test]
        fn tap_round_trip(w in 1u32..3000, h in 1u32..3000, ox in 0u32..200, oy in 0u32..200, fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
            let p = DeviceProfile::new(serial(), (w + ox, h + oy), (ox, oy), (w, h)).unwrap();
            let x = i64::from(ox) + (fx * f64::from(w)).floor() as i64;
            let y = i64::from(oy) + (fy * f64::from(h)).floor() as i64;
            let cmds = normalize(&[down(0, x, y), up(1, x, y)], &p, &NormalizeConfig::default()).unwrap();
            let NormalizedCommand::Tap { x_ratio, y_ratio } = cmds[0] else { unreachable!() };
            let (rx, ry) = denormalize_point(&p, x_ratio, y_ratio);
            prop_assert!((rx - x).abs() <= 1 && (ry - y).abs() <= 1);
        }
    }
}
