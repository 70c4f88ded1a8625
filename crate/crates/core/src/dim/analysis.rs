use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::intervals::{device_key, IntervalState, TelemetryRow};
use super::policy::DimmingPolicy;
use super::Result;
use crate::metrics::{empirical_cdf, CdfPoint};
use crate::sim::PowerModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// One CDF over every row, keyed `all`.
    Pooled,
    /// One CDF per device (session id prefix).
    PerDevice,
}

fn group_key(grouping: Grouping, session_id: &str) -> String {
    match grouping {
        Grouping::Pooled => "all".to_string(),
        Grouping::PerDevice => device_key(session_id).to_string(),
    }
}

fn cdfs(values: BTreeMap<String, Vec<f64>>) -> Vec<(String, Vec<CdfPoint>)> {
    values.into_iter().map(|(k, v)| (k, empirical_cdf(&v))).collect()
}

/// CDF of the share of time spent dimmed. Each dim interval is paired with
/// the active interval right before it in the same session, if any.
pub fn dim_fraction_cdf(rows: &[TelemetryRow], grouping: Grouping) -> Vec<(String, Vec<CdfPoint>)> {
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        if row.state != IntervalState::Dim {
            continue;
        }
        let dim = row.interval().duration_ms() as f64;
        let active = i
            .checked_sub(1)
            .map(|j| &rows[j])
            .filter(|p| p.session_id == row.session_id && p.state == IntervalState::Active)
            .map_or(0.0, |p| p.interval().duration_ms() as f64);
        values
            .entry(group_key(grouping, &row.session_id))
            .or_default()
            .push(dim / (dim + active));
    }
    cdfs(values)
}

/// CDF of the user's brightness at the start of each dim interval.
pub fn brightness_cdf(rows: &[TelemetryRow], grouping: Grouping) -> Vec<(String, Vec<CdfPoint>)> {
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.state == IntervalState::Dim) {
        values
            .entry(group_key(grouping, &row.session_id))
            .or_default()
            .push(f64::from(row.brightness));
    }
    cdfs(values)
}

/// Fraction of screen-attributed charge saved by dimming:
/// `sum_dim (I(B) - I(dim(B))) dt / sum_all I(B) dt`.
///
/// Sums run over all rows, so each device weighs in by its logged time.
pub fn estimate_savings(rows: &[TelemetryRow], power: &PowerModel, policy: &DimmingPolicy) -> Result<f64> {
    let mut saved = 0.0;
    let mut total = 0.0;
    for row in rows {
        let dt = row.interval().duration_ms() as f64;
        let full = power.screen_current_ma(f64::from(row.brightness))?;
        total += full * dt;
        if row.state == IntervalState::Dim {
            let dimmed = power.screen_current_ma(f64::from(policy.dim_target(row.brightness)))?;
            saved += (full - dimmed) * dt;
        }
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((saved / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SavingsRow {
    pub brightness: u16,
    /// One entry per model, in the order given.
    pub current_ma: Vec<f64>,
    pub aggressive: Vec<f64>,
    pub conservative: Vec<f64>,
}

impl SavingsRow {
    pub fn aggressive_percent(&self) -> Vec<i64> {
        self.aggressive.iter().map(|f| percent(*f)).collect()
    }

    pub fn conservative_percent(&self) -> Vec<i64> {
        self.conservative.iter().map(|f| percent(*f)).collect()
    }
}

fn percent(fraction: f64) -> i64 {
    (fraction * 100.0).round() as i64
}

/// Savings from dimming to zero (aggressive) and to the policy target
/// (conservative), at every brightness level measured in any model.
pub fn savings_table(models: &[&PowerModel], policy: &DimmingPolicy) -> Result<Vec<SavingsRow>> {
    let mut levels: Vec<u16> = models
        .iter()
        .flat_map(|m| m.points().iter().map(|p| p.brightness))
        .collect();
    levels.sort_unstable();
    levels.dedup();
    levels
        .into_iter()
        .map(|b| {
            let mut row = SavingsRow {
                brightness: b,
                current_ma: Vec::new(),
                aggressive: Vec::new(),
                conservative: Vec::new(),
            };
            for m in models {
                let full = m.screen_current_ma(f64::from(b))?;
                let zero = m.screen_current_ma(0.0)?;
                let target = m.screen_current_ma(f64::from(policy.dim_target(b)))?;
                row.current_ma.push(full);
                row.aggressive.push(1.0 - zero / full);
                row.conservative.push(1.0 - target / full);
            }
            Ok(row)
        })
        .collect()
}

/// `brightness,current_ma,savings_aggressive,savings_conservative` with the
/// per-model values joined by `/`, e.g. `150,299/201,52/46%,28/29%`.
pub fn write_savings_table(out: impl Write, rows: &[SavingsRow]) -> Result<()> {
    let join = |v: Vec<String>| v.join("/");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["brightness", "current_ma", "savings_aggressive", "savings_conservative"])?;
    for r in rows {
        w.write_record([
            r.brightness.to_string(),
            join(r.current_ma.iter().map(|c| format!("{}", c.round())).collect()),
            format!("{}%", join(r.aggressive_percent().iter().map(i64::to_string).collect())),
            format!("{}%", join(r.conservative_percent().iter().map(i64::to_string).collect())),
        ])?;
    }
    w.flush()?;
    Ok(())
}
