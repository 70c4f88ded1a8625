use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{
    bandwidth_total, empirical_cdf, integrate_discharge, mean, population_std, utilization_series, BatterySample,
    CdfPoint, CpuSample, MemSample, NetSample, Result,
};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Raw samples collected during one run, restricted to the measurement
/// window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLogs {
    pub battery: Vec<BatterySample>,
    pub cpu: Vec<CpuSample>,
    pub net: Vec<NetSample>,
    pub mem: Vec<MemSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub browser: String,
    pub device: String,
    pub workload_name: String,
    pub run_index: u32,
    #[serde(rename = "discharge_mAh")]
    pub discharge_mah: f64,
    #[serde(rename = "bandwidth_MBytes")]
    pub bandwidth_mbytes: f64,
    pub cpu_percent_series: Vec<f64>,
    pub duration_s: f64,
    pub gate_open_ns: u64,
    pub test_end_ns: u64,
}

impl RunReport {
    /// Computes the run metrics from its logs. The window is
    /// `[gate_open_ns, test_end_ns]`.
    pub fn from_logs(
        browser: &str,
        device: &str,
        workload_name: &str,
        run_index: u32,
        window: (u64, u64),
        logs: &RunLogs,
        exec: Execution,
    ) -> Result<Self> {
        Ok(RunReport {
            browser: browser.to_string(),
            device: device.to_string(),
            workload_name: workload_name.to_string(),
            run_index,
            discharge_mah: integrate_discharge(&logs.battery, exec)?,
            bandwidth_mbytes: bandwidth_total(&logs.net)?,
            cpu_percent_series: utilization_series(&logs.cpu)?,
            duration_s: (window.1 - window.0) as f64 / 1e9,
            gate_open_ns: window.0,
            test_end_ns: window.1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrowserAggregate {
    pub browser: String,
    pub runs: usize,
    #[serde(rename = "discharge_mean_mAh")]
    pub discharge_mean_mah: f64,
    #[serde(rename = "discharge_std_mAh")]
    pub discharge_std_mah: f64,
    #[serde(rename = "bandwidth_mean_MBytes")]
    pub bandwidth_mean_mbytes: f64,
    #[serde(rename = "bandwidth_std_MBytes")]
    pub bandwidth_std_mbytes: f64,
    pub cpu_cdf: Vec<CdfPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub browsers: Vec<BrowserAggregate>,
}

impl AggregateReport {
    pub fn browser(&self, name: &str) -> Option<&BrowserAggregate> {
        self.browsers.iter().find(|b| b.browser == name)
    }
}

/// Per-browser statistics, browsers in order of first appearance.
pub fn aggregate(reports: &[RunReport]) -> AggregateReport {
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        if !names.contains(&r.browser.as_str()) {
            names.push(&r.browser);
        }
    }
    let browsers = names
        .into_iter()
        .map(|name| {
            let runs: Vec<&RunReport> = reports.iter().filter(|r| r.browser == name).collect();
            let discharge: Vec<f64> = runs.iter().map(|r| r.discharge_mah).collect();
            let bandwidth: Vec<f64> = runs.iter().map(|r| r.bandwidth_mbytes).collect();
            let pooled: Vec<f64> = runs.iter().flat_map(|r| r.cpu_percent_series.iter().copied()).collect();
            BrowserAggregate {
                browser: name.to_string(),
                runs: runs.len(),
                discharge_mean_mah: mean(&discharge),
                discharge_std_mah: population_std(&discharge),
                bandwidth_mean_mbytes: mean(&bandwidth),
                bandwidth_std_mbytes: population_std(&bandwidth),
                cpu_cdf: empirical_cdf(&pooled),
            }
        })
        .collect();
    AggregateReport { browsers }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn emit_run(report: &RunReport, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => json_bytes(report),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "browser",
                "device",
                "workload_name",
                "run_index",
                "discharge_mAh",
                "bandwidth_MBytes",
                "duration_s",
                "gate_open_ns",
                "test_end_ns",
                "cpu_percent_series",
            ])?;
            let series: Vec<String> = report.cpu_percent_series.iter().map(f64::to_string).collect();
            w.write_record([
                report.browser.clone(),
                report.device.clone(),
                report.workload_name.clone(),
                report.run_index.to_string(),
                report.discharge_mah.to_string(),
                report.bandwidth_mbytes.to_string(),
                report.duration_s.to_string(),
                report.gate_open_ns.to_string(),
                report.test_end_ns.to_string(),
                series.join(";"),
            ])?;
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
    }
}

/// JSON carries the CDFs; CSV has one row per browser and leaves them to
/// [`emit_cdf`].
pub fn emit_aggregate(report: &AggregateReport, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => json_bytes(report),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "browser",
                "runs",
                "discharge_mean_mAh",
                "discharge_std_mAh",
                "bandwidth_mean_MBytes",
                "bandwidth_std_MBytes",
            ])?;
            for b in &report.browsers {
                w.write_record([
                    b.browser.clone(),
                    b.runs.to_string(),
                    b.discharge_mean_mah.to_string(),
                    b.discharge_std_mah.to_string(),
                    b.bandwidth_mean_mbytes.to_string(),
                    b.bandwidth_std_mbytes.to_string(),
                ])?;
            }
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
    }
}

/// Long-format CDF table: `browser,cpu_percent,fraction`.
pub fn emit_cdf(report: &AggregateReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["browser", "cpu_percent", "fraction"])?;
    for b in &report.browsers {
        for p in &b.cpu_cdf {
            w.write_record([b.browser.clone(), p.value.to_string(), p.fraction.to_string()])?;
        }
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn write_rows<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(input: impl Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

/// `ts_ns,current_mA,voltage_mV`
pub fn write_battery_csv(out: impl Write, samples: &[BatterySample]) -> Result<()> {
    if samples.is_empty() {
        let mut out = out;
        out.write_all(b"ts_ns,current_mA,voltage_mV\n")?;
        return Ok(());
    }
    write_rows(out, samples)
}

pub fn read_battery_csv(input: impl Read) -> Result<Vec<BatterySample>> {
    read_rows(input)
}

/// `ts_ns,busy_jiffies,total_jiffies`
pub fn write_cpu_csv(out: impl Write, samples: &[CpuSample]) -> Result<()> {
    write_rows(out, samples)
}

pub fn read_cpu_csv(input: impl Read) -> Result<Vec<CpuSample>> {
    read_rows(input)
}

/// `ts_ns,rx_bytes,tx_bytes`
pub fn write_net_csv(out: impl Write, samples: &[NetSample]) -> Result<()> {
    write_rows(out, samples)
}

pub fn read_net_csv(input: impl Read) -> Result<Vec<NetSample>> {
    read_rows(input)
}

/// `ts_ns,available_kb`
pub fn write_mem_csv(out: impl Write, samples: &[MemSample]) -> Result<()> {
    write_rows(out, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(browser: &str, idx: u32, mah: f64, mb: f64, series: Vec<f64>) -> RunReport {
        RunReport {
            browser: browser.into(),
            device: "SIM".into(),
            workload_name: "news".into(),
            run_index: idx,
            discharge_mah: mah,
            bandwidth_mbytes: mb,
            cpu_percent_series: series,
            duration_s: 10.0,
            gate_open_ns: 0,
            test_end_ns: 10_000_000_000,
        }
    }

    #[test]
    fn aggregates_per_browser() {
        let reports = vec![
            report("a", 0, 100.0, 1.0, vec![10.0, 20.0]),
            report("b", 0, 50.0, 2.0, vec![5.0]),
            report("a", 1, 110.0, 1.0, vec![20.0]),
            report("a", 2, 120.0, 1.0, vec![30.0]),
        ];
        let agg = aggregate(&reports);
        assert_eq!(agg.browsers.len(), 2);
        let a = agg.browser("a").unwrap();
        assert_eq!(a.runs, 3);
        assert_eq!(a.discharge_mean_mah, 110.0);
        assert!((a.discharge_std_mah - 8.16496580927726).abs() < 1e-9);
        assert_eq!(a.bandwidth_std_mbytes, 0.0);
        let cdf: Vec<(f64, f64)> = a.cpu_cdf.iter().map(|p| (p.value, p.fraction)).collect();
        assert_eq!(cdf, vec![(10.0, 0.25), (20.0, 0.75), (30.0, 1.0)]);
        assert_eq!(agg.browser("b").unwrap().discharge_std_mah, 0.0);
    }

    #[test]
    fn run_json_round_trip() {
        let r = report("a", 3, 12.345678901, 0.1, vec![1.0 / 3.0]);
        let bytes = emit_run(&r, Format::Json).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.find("\"browser\"").unwrap() < text.find("\"discharge_mAh\"").unwrap());
        let back: RunReport = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_outputs() {
        let agg = aggregate(&[report("a", 0, 1.5, 2.5, vec![3.0])]);
        let csv = String::from_utf8(emit_aggregate(&agg, Format::Csv).unwrap()).unwrap();
        assert_eq!(
            csv,
            "browser,runs,discharge_mean_mAh,discharge_std_mAh,bandwidth_mean_MBytes,bandwidth_std_MBytes\na,1,1.5,0,2.5,0\n"
        );
        let cdf = String::from_utf8(emit_cdf(&agg).unwrap()).unwrap();
        assert_eq!(cdf, "browser,cpu_percent,fraction\na,3,1\n");
        let run = String::from_utf8(emit_run(&report("a", 0, 1.0, 2.0, vec![1.0, 2.5]), Format::Csv).unwrap()).unwrap();
        assert!(run.lines().nth(1).unwrap().ends_with("1;2.5"));
    }

    #[test]
    fn log_csv_round_trip() {
        let battery = vec![
            BatterySample {
                ts_ns: 1,
                current_ma: 0.1 + 0.2,
                voltage_mv: 3850.0,
            },
            BatterySample {
                ts_ns: 2,
                current_ma: 417.0,
                voltage_mv: 3850.0,
            },
        ];
        let mut buf = Vec::new();
        write_battery_csv(&mut buf, &battery).unwrap();
        assert!(buf.starts_with(b"ts_ns,current_mA,voltage_mV\n"));
        assert_eq!(read_battery_csv(buf.as_slice()).unwrap(), battery);

        let cpu = vec![CpuSample {
            ts_ns: 5,
            busy_jiffies: 6,
            total_jiffies: 7,
        }];
        let mut buf = Vec::new();
        write_cpu_csv(&mut buf, &cpu).unwrap();
        assert_eq!(read_cpu_csv(buf.as_slice()).unwrap(), cpu);

        let net = vec![NetSample {
            ts_ns: 5,
            rx_bytes: 6,
            tx_bytes: 7,
        }];
        let mut buf = Vec::new();
        write_net_csv(&mut buf, &net).unwrap();
        assert_eq!(read_net_csv(buf.as_slice()).unwrap(), net);
    }
}
