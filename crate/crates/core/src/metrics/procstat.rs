use super::{require, CpuSample, MetricsError, Result};

/// `(busy, total)` jiffies from the aggregate `cpu ` line.
pub fn parse_proc_stat(text: &str) -> Result<(u64, u64)> {
    let line = text
        .lines()
        .find(|l| l.split_whitespace().next() == Some("cpu"))
        .ok_or_else(|| MetricsError::MalformedStat("no aggregate cpu line".into()))?;
    let fields = line
        .split_whitespace()
        .skip(1)
        .map(|f| {
            f.parse::<u64>()
                .map_err(|_| MetricsError::MalformedStat(format!("non-numeric field {f:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if fields.len() < 7 {
        return Err(MetricsError::MalformedStat(format!(
            "expected at least 7 fields, found {}",
            fields.len()
        )));
    }
    let total = fields
        .iter()
        .try_fold(0u64, |acc, &f| acc.checked_add(f))
        .ok_or_else(|| MetricsError::MalformedStat("counter overflow".into()))?;
    let idle = fields[3] + fields[4];
    Ok((total - idle, total))
}

/// Utilization in percent between two counter reads, clamped to `[0, 100]`.
/// A zero total delta gives 0.
pub fn utilization(a: &CpuSample, b: &CpuSample) -> f64 {
    let d_total = b.total_jiffies as f64 - a.total_jiffies as f64;
    let d_busy = b.busy_jiffies as f64 - a.busy_jiffies as f64;
    if d_total <= 0.0 {
        return 0.0;
    }
    (100.0 * d_busy / d_total).clamp(0.0, 100.0)
}

pub fn utilization_series(samples: &[CpuSample]) -> Result<Vec<f64>> {
    require(samples.len(), 2)?;
    Ok(samples.windows(2).map(|w| utilization(&w[0], &w[1])).collect())
}

/// `MemAvailable` in kB, if present.
pub fn parse_meminfo_available(text: &str) -> Option<u64> {
    text.lines()
        .find_map(|l| l.strip_prefix("MemAvailable:"))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|v| v.parse().ok())
}
