use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use wattbench_core::clock::NANOS_PER_MS;
use wattbench_core::dim::{
    brightness_cdf, dim_fraction_cdf, estimate_savings, intervals_from_log, read_event_stream, read_telemetry_csv,
    savings_table, sessions_from_stream, write_savings_table, write_telemetry_csv, AdbBrightness, AttentionEvent,
    Controller, DimAction, DimmingPolicy, Grouping, StreamRecord, TelemetryRow,
};
use wattbench_core::metrics::CdfPoint;

use crate::config::{config_error, Config};
use crate::device::DeviceLink;

/// `low_max,high_min,high_target`, e.g. `100,200,150`.
pub fn parse_policy(s: &str) -> anyhow::Result<DimmingPolicy> {
    let parts: Vec<u16> = s
        .split(',')
        .map(|p| p.trim().parse::<u16>())
        .collect::<Result<_, _>>()
        .map_err(|e| config_error(format!("policy {s:?}: {e}")))?;
    match parts.as_slice() {
        [a, b, c] => DimmingPolicy::new(*a, *b, *c).map_err(|e| config_error(e.to_string())),
        _ => Err(config_error(format!("policy {s:?}: expected low_max,high_min,high_target"))),
    }
}

/// The savings table CSV for the given models, in order.
pub fn table(cfg: &Config, models: &[String], policy: &DimmingPolicy) -> anyhow::Result<Vec<u8>> {
    if models.is_empty() {
        return Err(config_error("dim table needs at least one model"));
    }
    let models = models.iter().map(|m| cfg.power_model(m)).collect::<anyhow::Result<Vec<_>>>()?;
    let refs: Vec<_> = models.iter().collect();
    let rows = savings_table(&refs, policy)?;
    let mut out = Vec::new();
    write_savings_table(&mut out, &rows)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCdf {
    pub group: String,
    pub points: Vec<CdfPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub savings: f64,
    pub rows: usize,
    pub dim_fraction_cdf: Vec<GroupCdf>,
    pub brightness_cdf: Vec<GroupCdf>,
}

fn group_cdfs(v: Vec<(String, Vec<CdfPoint>)>) -> Vec<GroupCdf> {
    v.into_iter().map(|(group, points)| GroupCdf { group, points }).collect()
}

pub fn read_telemetry(path: &Path) -> anyhow::Result<Vec<TelemetryRow>> {
    let file = File::open(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    Ok(read_telemetry_csv(BufReader::new(file))?)
}

pub fn estimate(
    cfg: &Config,
    telemetry: &Path,
    model: &str,
    policy: &DimmingPolicy,
    grouping: Grouping,
) -> anyhow::Result<Estimate> {
    let rows = read_telemetry(telemetry)?;
    let power = cfg.power_model(model)?;
    Ok(Estimate {
        savings: estimate_savings(&rows, &power, policy)?,
        rows: rows.len(),
        dim_fraction_cdf: group_cdfs(dim_fraction_cdf(&rows, grouping)),
        brightness_cdf: group_cdfs(brightness_cdf(&rows, grouping)),
    })
}

/// Writes `group,value,fraction` rows for each CDF.
pub fn write_cdf_csv(out: impl Write, cdfs: &[GroupCdf]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "value", "fraction"])?;
    for c in cdfs {
        for p in &c.points {
            w.write_record([c.group.clone(), p.value.to_string(), p.fraction.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_events(path: &Path) -> anyhow::Result<Vec<StreamRecord>> {
    let file = File::open(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    Ok(read_event_stream(BufReader::new(file), &path.display().to_string())?)
}

/// Converts an attention-event stream into telemetry rows.
pub fn telemetry(events: &Path, device: &str, out: impl Write) -> anyhow::Result<usize> {
    let records = read_events(events)?;
    let sessions = sessions_from_stream(&records, device)?;
    let mut rows = Vec::new();
    for s in &sessions {
        rows.extend(intervals_from_log(s)?.into_iter().map(|i| TelemetryRow::new(&s.session_id, i)));
    }
    write_telemetry_csv(out, &rows)?;
    Ok(rows.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ControlStep {
    pub event: AttentionEvent,
    pub action: DimAction,
}

/// Drives the dimming controller over an event stream against a device,
/// sleeping until each event's timestamp (relative to the first event).
pub fn control(link: &DeviceLink, events: &Path, policy: DimmingPolicy) -> anyhow::Result<Vec<ControlStep>> {
    let records = read_events(events)?;
    let mut controller = Controller::new(policy, AdbBrightness::new(&link.conn, link.serial.clone()));
    let origin_ns = link.clock.now_ns();
    let mut first_ms = None;
    let mut steps = Vec::new();
    for record in records {
        let StreamRecord::Event(event) = record else { continue };
        let base = *first_ms.get_or_insert(event.ts_ms);
        link.clock
            .sleep_until_ns(origin_ns + event.ts_ms.saturating_sub(base) * NANOS_PER_MS);
        let action = controller
            .handle(&event)
            .with_context(|| format!("event at {} ms", event.ts_ms))?;
        steps.push(ControlStep { event, action });
    }
    Ok(steps)
}
