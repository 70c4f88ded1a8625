use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::events::{AttentionEvent, Phase, StreamRecord};
use super::{DimError, Result};
use crate::sim::MAX_BRIGHTNESS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalState {
    Dim,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimInterval {
    pub ts_start_ms: u64,
    pub ts_end_ms: u64,
    pub state: IntervalState,
    /// The user's brightness when the interval started (before dimming).
    pub brightness: u16,
}

impl DimInterval {
    pub fn duration_ms(&self) -> u64 {
        self.ts_end_ms - self.ts_start_ms
    }
}

/// One browser session: from launch to close.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub session_id: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub events: Vec<AttentionEvent>,
}

/// One line of the telemetry log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub session_id: String,
    pub ts_start_ms: u64,
    pub ts_end_ms: u64,
    pub state: IntervalState,
    pub brightness: u16,
}

impl TelemetryRow {
    pub fn new(session_id: &str, interval: DimInterval) -> Self {
        Self {
            session_id: session_id.to_string(),
            ts_start_ms: interval.ts_start_ms,
            ts_end_ms: interval.ts_end_ms,
            state: interval.state,
            brightness: interval.brightness,
        }
    }

    pub fn interval(&self) -> DimInterval {
        DimInterval {
            ts_start_ms: self.ts_start_ms,
            ts_end_ms: self.ts_end_ms,
            state: self.state,
            brightness: self.brightness,
        }
    }
}

/// Device part of a session id (`device:session`), or the whole id.
pub fn device_key(session_id: &str) -> &str {
    session_id.split_once(':').map_or(session_id, |(d, _)| d)
}

/// Alternating active/dim intervals covering one session.
///
/// A dim interval spans the time at least one event kind is in progress;
/// the gaps are active. A dim still open at session close is cut there.
/// Sessions without events produce nothing.
pub fn intervals_from_log(session: &Session) -> Result<Vec<DimInterval>> {
    if session.events.is_empty() {
        return Ok(Vec::new());
    }
    let at = |ts: u64| format!("session {} at {ts} ms", session.session_id);
    if session.end_ms < session.start_ms {
        return Err(DimError::malformed(at(session.end_ms), "session ends before it starts"));
    }

    // (start, end, brightness) of each dim period.
    let mut dims: Vec<(u64, u64, u16)> = Vec::new();
    let mut active = [false; 3];
    let mut open: Option<(u64, u16)> = None;
    let mut last_brightness: Option<u16> = None;
    let mut prev_ts = session.start_ms;
    for e in &session.events {
        if e.ts_ms < prev_ts || e.ts_ms > session.end_ms {
            return Err(DimError::malformed(at(e.ts_ms), "event out of order or outside the session"));
        }
        prev_ts = e.ts_ms;
        if let Some(b) = e.brightness {
            last_brightness = Some(b);
        }
        let slot = e.kind.index();
        match e.phase {
            Phase::Start => {
                if active[slot] {
                    continue;
                }
                active[slot] = true;
                if open.is_none() {
                    let b = last_brightness
                        .ok_or_else(|| DimError::malformed(at(e.ts_ms), "dim start without a known brightness"))?;
                    open = Some((e.ts_ms, b));
                }
            }
            Phase::End => {
                if !active[slot] {
                    return Err(DimError::malformed(at(e.ts_ms), format!("{} end without start", e.kind)));
                }
                active[slot] = false;
                if active.iter().all(|a| !a) {
                    let (start, b) = open.take().expect("a dim is open while any kind is active");
                    dims.push((start, e.ts_ms, b));
                }
            }
        }
    }
    if let Some((start, b)) = open {
        dims.push((start, session.end_ms, b));
    }

    let mut out: Vec<DimInterval> = Vec::new();
    let mut cursor = session.start_ms;
    for (i, &(start, end, b)) in dims.iter().enumerate() {
        if end == start {
            continue;
        }
        if start > cursor {
            let brightness = if i == 0 { b } else { dims[i - 1].2 };
            out.push(DimInterval {
                ts_start_ms: cursor,
                ts_end_ms: start,
                state: IntervalState::Active,
                brightness,
            });
        }
        match out.last_mut() {
            // Back-to-back dims merge into one.
            Some(prev) if prev.state == IntervalState::Dim && prev.ts_end_ms == start => prev.ts_end_ms = end,
            _ => out.push(DimInterval {
                ts_start_ms: start,
                ts_end_ms: end,
                state: IntervalState::Dim,
                brightness: b,
            }),
        }
        cursor = end;
    }
    if cursor < session.end_ms {
        let brightness = dims
            .last()
            .map(|d| d.2)
            .or(last_brightness)
            .ok_or_else(|| DimError::malformed(at(cursor), "no brightness recorded in session"))?;
        out.push(DimInterval {
            ts_start_ms: cursor,
            ts_end_ms: session.end_ms,
            state: IntervalState::Active,
            brightness,
        });
    }
    Ok(out)
}

/// Splits a stream into sessions named `<device>:<n>`, numbered from 0.
pub fn sessions_from_stream(records: &[StreamRecord], device: &str) -> Result<Vec<Session>> {
    let mut sessions = Vec::new();
    let mut current: Option<Session> = None;
    for record in records {
        match *record {
            StreamRecord::Session { ts_ms, phase: Phase::Start } => {
                if current.is_some() {
                    return Err(DimError::malformed(format!("{ts_ms} ms"), "session start inside a session"));
                }
                current = Some(Session {
                    session_id: format!("{device}:{}", sessions.len()),
                    start_ms: ts_ms,
                    end_ms: ts_ms,
                    events: Vec::new(),
                });
            }
            StreamRecord::Session { ts_ms, phase: Phase::End } => {
                let mut s = current
                    .take()
                    .ok_or_else(|| DimError::malformed(format!("{ts_ms} ms"), "session end outside a session"))?;
                s.end_ms = ts_ms;
                sessions.push(s);
            }
            StreamRecord::Event(e) => current
                .as_mut()
                .ok_or_else(|| DimError::malformed(format!("{} ms", e.ts_ms), "event outside a session"))?
                .events
                .push(e),
        }
    }
    if let Some(s) = current {
        return Err(DimError::malformed(s.session_id, "session never closed"));
    }
    Ok(sessions)
}

pub fn write_telemetry_csv(out: impl Write, rows: &[TelemetryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["session_id", "ts_start_ms", "ts_end_ms", "state", "brightness"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates a telemetry log: positive durations, brightness in
/// range, alternating states within each session.
pub fn read_telemetry_csv(input: impl Read) -> Result<Vec<TelemetryRow>> {
    let mut rows: Vec<TelemetryRow> = Vec::new();
    for (i, row) in csv::Reader::from_reader(input).deserialize::<TelemetryRow>().enumerate() {
        let line = format!("line {}", i + 2);
        let row = row.map_err(|e| DimError::malformed(line.clone(), e.to_string()))?;
        if row.ts_end_ms <= row.ts_start_ms {
            return Err(DimError::malformed(line, "interval must have positive duration"));
        }
        if row.brightness > MAX_BRIGHTNESS {
            return Err(DimError::malformed(line, format!("brightness {} above {MAX_BRIGHTNESS}", row.brightness)));
        }
        if let Some(prev) = rows.last().filter(|p| p.session_id == row.session_id) {
            if prev.state == row.state {
                return Err(DimError::malformed(line, "states must alternate within a session"));
            }
            if row.ts_start_ms < prev.ts_end_ms {
                return Err(DimError::malformed(line, "intervals overlap"));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
