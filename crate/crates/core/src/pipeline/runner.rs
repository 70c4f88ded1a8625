use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gate::wait_for_rest;
use super::job::{BenchJob, BrowserSpec, OpenUrl};
use super::sampler::Pacer;
use super::setup::{cleanup, device_setup};
use super::workload::WorkloadSpec;
use super::{PipelineError, Result};
use crate::adb::{AdbError, Connection, DeviceProfile, DeviceSerial};
use crate::automation::{denormalize, escape_input_text, AutomationError, AutomationStore, NormalizedCommand};
use crate::clock::{Clock, NANOS_PER_MS, NANOS_PER_SEC};
use crate::exec::Execution;
use crate::metrics::{trim_window, BatteryMeter, RunLogs, RunReport};

pub const SCROLL_DURATION_MS: u64 = 300;
const KEYCODE_ENTER: i32 = 66;

/// Everything a run needs besides the job itself.
#[derive(Debug, Clone)]
pub struct BenchContext<'a> {
    pub conn: &'a Connection,
    pub store: &'a AutomationStore,
    pub clock: Arc<dyn Clock>,
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageTrace {
    pub index: usize,
    pub url: String,
    pub start_ns: u64,
    pub end_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestTrace {
    pub start_ns: u64,
    pub end_ns: u64,
    pub pages: Vec<PageTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub browser: String,
    pub run_index: u32,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct JobOutcome {
    pub reports: Vec<RunReport>,
    /// Raw logs per report, in the same order.
    pub logs: Vec<RunLogs>,
    pub traces: Vec<TestTrace>,
    pub failures: Vec<RunFailure>,
}

impl JobOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Reads the screen size with `wm size`; the whole screen is usable.
pub fn profile_from_device(conn: &Connection, serial: &DeviceSerial) -> Result<DeviceProfile> {
    let out = conn.shell(serial, "wm size")?.stdout_lossy();
    let size = out
        .lines()
        .rev()
        .find_map(|l| l.split_once("size:").map(|(_, s)| s.trim().to_string()))
        .ok_or_else(|| AdbError::protocol(format!("unexpected wm size output {out:?}")))?;
    let (w, h) = size
        .split_once('x')
        .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
        .ok_or_else(|| AdbError::protocol(format!("unexpected wm size output {out:?}")))?;
    DeviceProfile::full_screen(serial.clone(), w, h).map_err(|e| PipelineError::Config(e.to_string()))
}

/// The shell command that opens `url` in a new tab, for the intent and
/// template methods. `None` for automation-driven browsers.
pub fn open_url_command(browser: &BrowserSpec, url: &str) -> Option<String> {
    let quoted = shlex::try_quote(url).map(|q| q.into_owned()).unwrap_or_else(|_| url.to_string());
    match &browser.open_url {
        OpenUrl::Intent => Some(format!(
            "am start -a android.intent.action.VIEW -d {quoted} -p {} --ez create_new_tab true",
            browser.package_id
        )),
        OpenUrl::Template { command } => Some(command.replace("{url}", &quoted).replace("{package}", &browser.package_id)),
        OpenUrl::Automation { .. } => None,
    }
}

/// Sends `commands`, routing waits through the pacer so sampling continues.
fn replay_paced(
    conn: &Connection,
    serial: &DeviceSerial,
    commands: &[NormalizedCommand],
    profile: &DeviceProfile,
    pacer: Option<&mut Pacer<'_>>,
    clock: &dyn Clock,
) -> Result<()> {
    let mut pacer = pacer;
    for (index, cmd) in commands.iter().enumerate() {
        match (cmd, pacer.as_deref_mut()) {
            (NormalizedCommand::Wait { duration_ms }, Some(p)) => {
                let deadline = p.now_ns() + duration_ms * NANOS_PER_MS;
                p.sleep_until(deadline)?;
            }
            (NormalizedCommand::Wait { duration_ms }, None) => {
                clock.sleep_until_ns(clock.now_ns() + duration_ms * NANOS_PER_MS)
            }
            (other, _) => {
                let shell = denormalize(other, profile).expect("only waits have no shell form");
                conn.shell(serial, &shell)
                    .map_err(|source| AutomationError::Replay { index, source })?;
            }
        }
    }
    Ok(())
}

fn replay_label(
    ctx: &BenchContext<'_>,
    serial: &DeviceSerial,
    profile: &DeviceProfile,
    app_id: &str,
    label: &str,
    pacer: Option<&mut Pacer<'_>>,
) -> Result<()> {
    let script = match ctx.store.get(app_id, label) {
        Ok(s) => s,
        Err(AutomationError::NotFound { app_id, label }) => {
            return Err(PipelineError::MissingAutomation { app_id, label })
        }
        Err(e) => return Err(e.into()),
    };
    log::debug!("replaying {app_id}/{label} ({} commands)", script.commands.len());
    replay_paced(ctx.conn, serial, &script.commands, profile, pacer, ctx.clock.as_ref())
}

/// Installs, cleans and launches the browser, then replays its onboarding
/// and settings automations.
pub fn prepare_browser(
    ctx: &BenchContext<'_>,
    job: &BenchJob,
    browser: &BrowserSpec,
    profile: &DeviceProfile,
) -> Result<()> {
    for label in job.labels_for(browser) {
        if !ctx.store.contains(&browser.package_id, &label) {
            return Err(PipelineError::MissingAutomation {
                app_id: browser.package_id.clone(),
                label,
            });
        }
    }
    let serial = &job.device;
    if !ctx.conn.is_installed(serial, &browser.package_id)? {
        ctx.conn.install(serial, &browser.package_source())?;
    }
    ctx.conn.clean(serial, &browser.package_id)?;
    ctx.conn.launch(serial, &browser.package_id, &browser.launch_activity)?;
    let entry = job.automation_for(&browser.name);
    for label in entry.onboarding.iter().chain(&entry.settings) {
        replay_label(ctx, serial, profile, &browser.package_id, label, None)?;
    }
    Ok(())
}

fn scroll(profile: &DeviceProfile, down: bool) -> String {
    // Finger moves up the screen to scroll the page down.
    let (from, to) = if down { ((0.5, 0.7), (0.5, 0.3)) } else { ((0.5, 0.3), (0.5, 0.7)) };
    let cmd = NormalizedCommand::swipe(from, to, SCROLL_DURATION_MS);
    denormalize(&cmd, profile).expect("swipes have a shell form")
}

fn open_page(
    ctx: &BenchContext<'_>,
    serial: &DeviceSerial,
    profile: &DeviceProfile,
    browser: &BrowserSpec,
    url: &str,
    pacer: &mut Pacer<'_>,
) -> Result<()> {
    match open_url_command(browser, url) {
        Some(cmd) => {
            ctx.conn.shell(serial, &cmd)?;
        }
        None => {
            let OpenUrl::Automation { label } = &browser.open_url else {
                unreachable!("only automation has no command")
            };
            replay_label(ctx, serial, profile, &browser.package_id, label, Some(pacer))?;
            ctx.conn.shell(serial, &format!("input text {}", escape_input_text(url)))?;
            ctx.conn.shell(serial, &format!("input keyevent {KEYCODE_ENTER}"))?;
        }
    }
    Ok(())
}

/// Visits every page of the workload: open in a new tab, dwell, then spread
/// the scrolls evenly over the interaction window.
pub fn run_test(
    ctx: &BenchContext<'_>,
    serial: &DeviceSerial,
    profile: &DeviceProfile,
    browser: &BrowserSpec,
    workload: &WorkloadSpec,
    pacer: &mut Pacer<'_>,
) -> Result<TestTrace> {
    let secs = |s: f64| (s * NANOS_PER_SEC as f64).round() as u64;
    let mut trace = TestTrace {
        start_ns: pacer.now_ns(),
        ..TestTrace::default()
    };
    let down = workload.scroll_down;
    let swipes = workload.swipes_per_page();
    for (index, url) in workload.pages.iter().enumerate() {
        let page = |e: PipelineError| PipelineError::Page {
            index,
            url: url.clone(),
            source: Box::new(e),
        };
        let start = pacer.now_ns();
        open_page(ctx, serial, profile, browser, url, pacer).map_err(page)?;
        let interaction_start = start + secs(workload.dwell_s);
        pacer.sleep_until(interaction_start).map_err(page)?;
        if swipes > 0 {
            let spacing = secs(workload.interaction_s) / u64::from(swipes);
            for i in 0..swipes {
                pacer.sleep_until(interaction_start + u64::from(i) * spacing).map_err(page)?;
                ctx.conn.shell(serial, &scroll(profile, i < down)).map_err(|e| page(e.into()))?;
            }
        }
        pacer.sleep_until(start + secs(workload.page_duration_s())).map_err(page)?;
        trace.pages.push(PageTrace {
            index,
            url: url.clone(),
            start_ns: start,
            end_ns: pacer.now_ns(),
        });
    }
    trace.end_ns = pacer.now_ns();
    Ok(trace)
}

struct RunOutput {
    report: RunReport,
    logs: RunLogs,
    trace: TestTrace,
}

fn run_once(
    ctx: &BenchContext<'_>,
    job: &BenchJob,
    browser: &BrowserSpec,
    workload: &WorkloadSpec,
    profile: &DeviceProfile,
    meter: &mut dyn BatteryMeter,
    run_index: u32,
) -> Result<RunOutput> {
    prepare_browser(ctx, job, browser, profile)?;
    meter.start()?;
    let mut pacer = Pacer::start(
        ctx.conn,
        job.device.clone(),
        ctx.clock.clone(),
        job.gate.sample_period_ns(),
        job.interfaces.clone(),
    )?;
    let started = pacer.now_ns();
    let measured = (|| {
        let gate = wait_for_rest(&job.gate, started, &mut pacer)?;
        log::info!("{} run {run_index}: gate open after {:.1} s", browser.name, (gate - started) as f64 / 1e9);
        let trace = run_test(ctx, &job.device, profile, browser, workload, &mut pacer)?;
        pacer.sample_now()?;
        Ok::<_, PipelineError>((gate, trace))
    })();
    let battery = meter.stop()?;
    let (gate, trace) = measured?;
    let end = trace.end_ns;
    let in_window = |ts: u64| (gate..=end).contains(&ts);
    let logs = RunLogs {
        battery: trim_window(&battery, gate, end).to_vec(),
        cpu: pacer.cpu.iter().copied().filter(|s| in_window(s.ts_ns)).collect(),
        net: pacer.net.iter().copied().filter(|s| in_window(s.ts_ns)).collect(),
        mem: pacer.mem.iter().copied().filter(|s| in_window(s.ts_ns)).collect(),
    };
    let report = RunReport::from_logs(
        &browser.name,
        job.device.as_str(),
        &workload.name,
        run_index,
        (gate, end),
        &logs,
        ctx.exec,
    )?;
    Ok(RunOutput { report, logs, trace })
}

/// Runs every browser `job.runs` times. A failing run is recorded and the
/// browser's remaining runs are skipped; other browsers still run. Device
/// settings are restored at the end.
pub fn run_job(ctx: &BenchContext<'_>, job: &BenchJob, meter: &mut dyn BatteryMeter) -> Result<JobOutcome> {
    job.validate(None)?;
    let workload = job.workload()?;
    let profile = match &job.profile {
        Some(p) => p.clone().with_serial(job.device.clone()),
        None => profile_from_device(ctx.conn, &job.device)?,
    };
    let status = device_setup(ctx.conn, &job.device, Some(job.brightness))?;
    let mut outcome = JobOutcome::default();
    for browser in &job.browsers {
        for run_index in 0..job.runs {
            let result = run_once(ctx, job, browser, &workload, &profile, meter, run_index);
            if let Err(e) = ctx.conn.force_stop(&job.device, &browser.package_id) {
                log::warn!("force-stop {}: {e}", browser.package_id);
            }
            match result {
                Ok(out) => {
                    log::info!(
                        "{} run {run_index}: {:.3} mAh, {:.3} MB",
                        browser.name,
                        out.report.discharge_mah,
                        out.report.bandwidth_mbytes
                    );
                    outcome.reports.push(out.report);
                    outcome.logs.push(out.logs);
                    outcome.traces.push(out.trace);
                }
                Err(e) => {
                    log::error!("{} run {run_index} failed: {e}", browser.name);
                    outcome.failures.push(RunFailure {
                        browser: browser.name.clone(),
                        run_index,
                        error: e.to_string(),
                    });
                    break;
                }
            }
        }
    }
    cleanup(ctx.conn, &job.device, &status)?;
    Ok(outcome)
}
