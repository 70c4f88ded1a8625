use serde::{Deserialize, Serialize};

/// One step of an empirical CDF: the fraction of observations `<= value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    pub fraction: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Sorted distinct values with their cumulative fraction. NaNs are dropped.
pub fn empirical_cdf(values: &[f64]) -> Vec<CdfPoint> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n as f64;
        match out.last_mut() {
            Some(last) if last.value == *v => last.fraction = fraction,
            _ => out.push(CdfPoint { value: *v, fraction }),
        }
    }
    if let Some(last) = out.last_mut() {
        last.fraction = 1.0;
    }
    out
}
