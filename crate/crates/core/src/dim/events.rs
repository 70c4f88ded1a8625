use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DimError, Result};
use crate::sim::{BrightnessMode, MAX_BRIGHTNESS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionKind {
    UrlTyping,
    MenuSettings,
    PageLoading,
}

impl AttentionKind {
    pub const ALL: [AttentionKind; 3] = [
        AttentionKind::UrlTyping,
        AttentionKind::MenuSettings,
        AttentionKind::PageLoading,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttentionKind::UrlTyping => "url_typing",
            AttentionKind::MenuSettings => "menu_settings",
            AttentionKind::PageLoading => "page_loading",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AttentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        AttentionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Start,
    End,
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "start" => Ok(Phase::Start),
            "end" => Ok(Phase::End),
            other => Err(format!("unknown phase {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionEvent {
    pub ts_ms: u64,
    pub kind: AttentionKind,
    pub phase: Phase,
    /// Screen brightness and mode observed when the event fired, if logged.
    pub brightness: Option<u16>,
    pub mode: Option<BrightnessMode>,
}

impl AttentionEvent {
    pub fn new(ts_ms: u64, kind: AttentionKind, phase: Phase) -> Self {
        Self {
            ts_ms,
            kind,
            phase,
            brightness: None,
            mode: None,
        }
    }

    pub fn with_brightness(mut self, brightness: u16, mode: BrightnessMode) -> Self {
        self.brightness = Some(brightness);
        self.mode = Some(mode);
        self
    }
}

/// One line of an event stream. Browser launches and closes appear as
/// `session` records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRecord {
    Event(AttentionEvent),
    Session { ts_ms: u64, phase: Phase },
}

/// Parses `ts_ms kind phase [brightness mode]`. Blank lines and `#`
/// comments yield `None`.
pub fn parse_event_line(line: &str, location: &str) -> Result<Option<StreamRecord>> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let bad = |reason: String| DimError::malformed(location, reason);
    let fields: Vec<&str> = line.split_whitespace().collect();
    if !(fields.len() == 3 || fields.len() == 5) {
        return Err(bad(format!("expected 3 or 5 fields, found {}", fields.len())));
    }
    let ts_ms: u64 = fields[0].parse().map_err(|_| bad(format!("bad timestamp {:?}", fields[0])))?;
    let phase: Phase = fields[2].parse().map_err(bad)?;
    if fields[1] == "session" {
        if fields.len() != 3 {
            return Err(bad("session records take no brightness".into()));
        }
        return Ok(Some(StreamRecord::Session { ts_ms, phase }));
    }
    let kind: AttentionKind = fields[1].parse().map_err(bad)?;
    let mut event = AttentionEvent::new(ts_ms, kind, phase);
    if fields.len() == 5 {
        let b: u16 = fields[3].parse().map_err(|_| bad(format!("bad brightness {:?}", fields[3])))?;
        if b > MAX_BRIGHTNESS {
            return Err(bad(format!("brightness {b} above {MAX_BRIGHTNESS}")));
        }
        let mode = match fields[4] {
            "auto" | "1" => BrightnessMode::Auto,
            "manual" | "0" => BrightnessMode::Manual,
            other => return Err(bad(format!("bad brightness mode {other:?}"))),
        };
        event = event.with_brightness(b, mode);
    }
    Ok(Some(StreamRecord::Event(event)))
}

pub fn read_event_stream(input: impl BufRead, name: &str) -> Result<Vec<StreamRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        if let Some(record) = parse_event_line(&line?, &format!("{name}:{}", i + 1))? {
            out.push(record);
        }
    }
    Ok(out)
}
