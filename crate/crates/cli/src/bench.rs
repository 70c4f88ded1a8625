use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use wattbench_core::automation::AutomationStore;
use wattbench_core::metrics::{
    aggregate, emit_aggregate, emit_cdf, emit_run, read_battery_csv, read_cpu_csv, read_net_csv, write_battery_csv,
    write_cpu_csv, write_mem_csv, write_net_csv, AggregateReport, Format, RunLogs, RunReport,
};
use wattbench_core::pipeline::{run_job, BenchContext, BenchJob, JobOutcome};
use wattbench_core::sim::SimBatteryMeter;
use wattbench_core::Execution;

use crate::config::{config_error, Config};
use crate::device::DeviceLink;

pub const RUNS_DIR: &str = "runs";
pub const LOGS_DIR: &str = "logs";

/// File stem for the `seq`-th report: `003_brave_1`. The sequence prefix
/// keeps directory order equal to run order.
pub fn run_stem(seq: usize, report: &RunReport) -> String {
    let browser: String = report
        .browser
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("{seq:03}_{browser}_{}", report.run_index)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Writes `aggregate.{csv,json}` and `cdf.csv` into `out`.
pub fn write_aggregate(out: &Path, agg: &AggregateReport) -> anyhow::Result<()> {
    fs::create_dir_all(out)?;
    write_bytes(&out.join("aggregate.csv"), &emit_aggregate(agg, Format::Csv)?)?;
    write_bytes(&out.join("aggregate.json"), &emit_aggregate(agg, Format::Json)?)?;
    write_bytes(&out.join("cdf.csv"), &emit_cdf(agg)?)?;
    Ok(())
}

/// Lays out a job's results under `out`:
/// `runs/<stem>.json`, `logs/<stem>/{battery,cpu,net,mem}.csv`, the
/// aggregate files and `failures.json`.
pub fn write_outcome(out: &Path, outcome: &JobOutcome) -> anyhow::Result<AggregateReport> {
    let runs = out.join(RUNS_DIR);
    fs::create_dir_all(&runs)?;
    for (seq, (report, logs)) in outcome.reports.iter().zip(&outcome.logs).enumerate() {
        let stem = run_stem(seq, report);
        write_bytes(&runs.join(format!("{stem}.json")), &emit_run(report, Format::Json)?)?;
        let dir = out.join(LOGS_DIR).join(&stem);
        fs::create_dir_all(&dir)?;
        write_battery_csv(create(&dir.join("battery.csv"))?, &logs.battery)?;
        write_cpu_csv(create(&dir.join("cpu.csv"))?, &logs.cpu)?;
        write_net_csv(create(&dir.join("net.csv"))?, &logs.net)?;
        write_mem_csv(create(&dir.join("mem.csv"))?, &logs.mem)?;
    }
    let agg = aggregate(&outcome.reports);
    write_aggregate(out, &agg)?;
    write_bytes(&out.join("failures.json"), &serde_json::to_vec_pretty(&outcome.failures)?)?;
    Ok(agg)
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub job: PathBuf,
    pub out: PathBuf,
    /// Simulated device profile; required until a hardware meter exists.
    pub sim: Option<String>,
    pub wall_clock: bool,
}

/// Runs a job; returns `true` when every browser completed.
pub fn run(cfg: &Config, args: &RunArgs) -> anyhow::Result<bool> {
    let job = BenchJob::load(&args.job)?;
    job.validate(None)?;
    let Some(profile) = &args.sim else {
        return Err(config_error(
            "no battery meter for real devices; pass --sim <profile> to run against the simulator",
        ));
    };
    let link = DeviceLink::simulated(cfg, profile, Some(job.device.as_str()), !args.wall_clock)?;
    let store = AutomationStore::new(&cfg.store);
    let exec = Execution::default();
    let ctx = BenchContext {
        conn: &link.conn,
        store: &store,
        clock: link.clock.clone(),
        exec,
    };
    let (server, _) = link.sim.as_ref().expect("simulated link");
    let handle = server.device(job.device.as_str()).expect("simulator serves the job's device");
    let mut meter = SimBatteryMeter::new(handle, job.battery_rate_hz).with_execution(exec);
    let outcome = run_job(&ctx, &job, &mut meter)?;
    let agg = write_outcome(&args.out, &outcome)?;
    for b in &agg.browsers {
        println!(
            "{}: {} runs, discharge {:.3} ± {:.3} mAh, bandwidth {:.3} ± {:.3} MB",
            b.browser, b.runs, b.discharge_mean_mah, b.discharge_std_mah, b.bandwidth_mean_mbytes, b.bandwidth_std_mbytes
        );
    }
    for f in &outcome.failures {
        eprintln!("{} run {} failed: {}", f.browser, f.run_index, f.error);
    }
    Ok(outcome.is_complete())
}

fn read_logs(dir: &Path) -> anyhow::Result<RunLogs> {
    let open = |name: &str| {
        let p = dir.join(name);
        File::open(&p).with_context(|| format!("opening {}", p.display()))
    };
    Ok(RunLogs {
        battery: read_battery_csv(open("battery.csv")?)?,
        cpu: read_cpu_csv(open("cpu.csv")?)?,
        net: read_net_csv(open("net.csv")?)?,
        mem: Vec::new(),
    })
}

/// Recomputes every run report from its stored logs and rebuilds the
/// aggregate files in `out`.
pub fn analyze(runs_root: &Path, out: &Path) -> anyhow::Result<AggregateReport> {
    let runs = runs_root.join(RUNS_DIR);
    let mut files: Vec<PathBuf> = fs::read_dir(&runs)
        .map_err(|e| config_error(format!("{}: {e}", runs.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(config_error(format!("no run reports in {}", runs.display())));
    }
    let mut reports = Vec::with_capacity(files.len());
    for path in files {
        let stored: RunReport =
            serde_json::from_slice(&fs::read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
        let stem = path.file_stem().expect("json file has a stem");
        let logs = read_logs(&runs_root.join(LOGS_DIR).join(stem))?;
        let report = RunReport::from_logs(
            &stored.browser,
            &stored.device,
            &stored.workload_name,
            stored.run_index,
            (stored.gate_open_ns, stored.test_end_ns),
            &logs,
            Execution::default(),
        )?;
        if report != stored {
            log::warn!("{}: stored report differs from its logs", path.display());
        }
        reports.push(report);
    }
    let agg = aggregate(&reports);
    write_aggregate(out, &agg)?;
    Ok(agg)
}
