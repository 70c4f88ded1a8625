use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;

use super::config::{BrightnessMode, Burst, SimDeviceConfig};
use super::power::{LoadState, MAX_BRIGHTNESS};
use super::procfs::{self, CpuCounters, InterfaceCounters, USER_HZ};
use super::screen;
use super::timeline::Timeline;
use crate::clock::{Clock, NANOS_PER_SEC};
use crate::exec::Execution;
use crate::metrics::BatterySample;

/// Uptime the device reports at the moment the simulation starts.
const BOOT_UPTIME_S: u64 = 3600;
const BOOT_EPOCH_S: u64 = 1_590_000_000;
const WLAN_RX_BOOT: u64 = 48_512_331;
const WLAN_TX_BOOT: u64 = 3_904_117;
const LOOPBACK_BYTES_PER_S: f64 = 240.0;
const RX_SHARE: f64 = 0.96;

const KEYCODE_HOME: i64 = 3;
const KEYCODE_ENTER: i64 = 66;

/// Result of one shell command on the simulated device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShellOutcome {
    Output(Vec<u8>),
    /// Reported to the client as a protocol-level `FAIL`.
    Fail(String),
}

impl ShellOutcome {
    fn text(s: impl Into<String>) -> Self {
        ShellOutcome::Output(s.into().into_bytes())
    }

    fn empty() -> Self {
        ShellOutcome::Output(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogEntry {
    pub ts_ns: u64,
    pub command: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageOpen {
    pub ts_ns: u64,
    pub package_id: String,
    pub url: String,
}

/// Observable device state, for assertions and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSnapshot {
    pub brightness: u16,
    pub brightness_mode: BrightnessMode,
    pub settings: BTreeMap<String, String>,
    pub installed: BTreeSet<String>,
    pub foreground: Option<String>,
    pub background_disabled: bool,
    pub data_clears: BTreeMap<String, u32>,
}

#[derive(Debug)]
pub struct SimDevice {
    config: SimDeviceConfig,
    clock: Arc<dyn Clock>,
    origin_ns: u64,
    timeline: Timeline,
    settings: BTreeMap<(String, String), String>,
    installed: BTreeSet<String>,
    foreground: Option<String>,
    pending_text: String,
    data_clears: BTreeMap<String, u32>,
    command_log: Vec<LogEntry>,
    input_log: Vec<LogEntry>,
    page_log: Vec<PageOpen>,
    screen_cache: Option<(Option<String>, Vec<u8>)>,
}

fn secs_to_ns(s: f64) -> u64 {
    (s * NANOS_PER_SEC as f64).round() as u64
}

impl SimDevice {
    pub fn new(config: SimDeviceConfig, clock: Arc<dyn Clock>) -> Self {
        let origin_ns = clock.now_ns();
        let mut settings = BTreeMap::new();
        settings.insert(
            ("system".to_string(), "screen_brightness".to_string()),
            config.brightness.to_string(),
        );
        settings.insert(
            ("system".to_string(), "screen_brightness_mode".to_string()),
            config.brightness_mode.setting_value().to_string(),
        );
        let mut device = Self {
            timeline: Timeline::new(origin_ns, 0, config.rest_cpu_percent),
            installed: config.installed.clone(),
            config,
            clock,
            origin_ns,
            settings,
            foreground: None,
            pending_text: String::new(),
            data_clears: BTreeMap::new(),
            command_log: Vec::new(),
            input_log: Vec::new(),
            page_log: Vec::new(),
            screen_cache: None,
        };
        let b = device.brightness();
        device.timeline.set_brightness(origin_ns, b);
        device
    }

    pub fn config(&self) -> &SimDeviceConfig {
        &self.config
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn now_ns(&self) -> u64 {
        self.clock.now_ns()
    }

    fn setting(&self, ns: &str, key: &str) -> Option<&str> {
        self.settings
            .get(&(ns.to_string(), key.to_string()))
            .map(String::as_str)
    }

    pub fn brightness_mode(&self) -> BrightnessMode {
        self.setting("system", "screen_brightness_mode")
            .and_then(BrightnessMode::from_setting)
            .unwrap_or(BrightnessMode::Manual)
    }

    /// Effective screen brightness.
    pub fn brightness(&self) -> u16 {
        match self.brightness_mode() {
            BrightnessMode::Auto => self.config.auto_brightness.unwrap_or(self.config.brightness),
            BrightnessMode::Manual => self
                .setting("system", "screen_brightness")
                .and_then(|v| v.trim().parse::<u16>().ok())
                .map(|b| b.min(MAX_BRIGHTNESS))
                .unwrap_or(self.config.brightness),
        }
    }

    pub fn snapshot(&self) -> SimSnapshot {
        SimSnapshot {
            brightness: self.brightness(),
            brightness_mode: self.brightness_mode(),
            settings: self
                .settings
                .iter()
                .map(|((ns, k), v)| (format!("{ns}/{k}"), v.clone()))
                .collect(),
            installed: self.installed.clone(),
            foreground: self.foreground.clone(),
            background_disabled: self.setting("global", "background_process_limit") == Some("0"),
            data_clears: self.data_clears.clone(),
        }
    }

    pub fn command_log(&self) -> &[LogEntry] {
        &self.command_log
    }

    /// Every `input ...` command received, verbatim.
    pub fn input_log(&self) -> &[LogEntry] {
        &self.input_log
    }

    pub fn page_log(&self) -> &[PageOpen] {
        &self.page_log
    }

    // ---- power model ------------------------------------------------------

    fn load_state(&self, state: &super::timeline::Snapshot) -> LoadState {
        LoadState {
            brightness: state.brightness,
            cpu_load_percent: (state.cpu_percent - self.config.rest_cpu_percent).max(0.0),
            throughput_mbps: state.bytes_per_sec / 1e6,
        }
    }

    fn current_for(&self, state: &super::timeline::Snapshot) -> f64 {
        self.config
            .power
            .current_ma(&self.load_state(state))
            .expect("effective brightness is clamped into the model range")
    }

    /// Current drawn at time `t_ns`.
    pub fn current_at(&self, t_ns: u64) -> f64 {
        self.current_for(&self.timeline.at(t_ns))
    }

    /// Current drawn right now.
    pub fn instantaneous_current(&self) -> f64 {
        self.current_at(self.now_ns())
    }

    /// Exact time integral of the current over `[t0, t1)`, in mA·s.
    pub fn charge_ma_s(&self, t0: u64, t1: u64) -> f64 {
        self.timeline
            .segments(t0, t1)
            .iter()
            .map(|s| self.current_for(&s.state) * (s.end - s.start) as f64 / 1e9)
            .sum()
    }

    /// `count` battery samples starting at `start_ns`, spaced `1/rate_hz`.
    pub fn battery_samples(&self, start_ns: u64, count: usize, rate_hz: f64, exec: Execution) -> Vec<BatterySample> {
        if count == 0 {
            return Vec::new();
        }
        let ts = |k: usize| start_ns + (k as f64 * 1e9 / rate_hz).round() as u64;
        let last = ts(count - 1);
        let steps: Vec<(u64, f64)> = self
            .timeline
            .segments(start_ns, last + 1)
            .iter()
            .map(|s| (s.start, self.current_for(&s.state)))
            .collect();
        let voltage = self.config.voltage_mv;
        exec.map_range(0..count, |k| {
            let t = ts(k);
            let idx = steps.partition_point(|(s, _)| *s <= t).saturating_sub(1);
            BatterySample {
                ts_ns: t,
                current_ma: steps[idx].1,
                voltage_mv: voltage,
            }
        })
    }

    /// Samples over the half-open window `[start_ns, start_ns + duration)`.
    pub fn battery_stream(&self, start_ns: u64, duration: Duration, rate_hz: f64, exec: Execution) -> Vec<BatterySample> {
        let count = (duration.as_secs_f64() * rate_hz).round() as usize;
        self.battery_samples(start_ns, count, rate_hz, exec)
    }

    /// Samples over the closed window `[start_ns, end_ns]`; the last sample
    /// is placed exactly at `end_ns`.
    pub fn battery_window(&self, start_ns: u64, end_ns: u64, rate_hz: f64, exec: Execution) -> Vec<BatterySample> {
        if end_ns < start_ns {
            return Vec::new();
        }
        let span_s = (end_ns - start_ns) as f64 / 1e9;
        let regular = (span_s * rate_hz).floor() as usize + 1;
        let mut samples = self.battery_samples(start_ns, regular, rate_hz, exec);
        if samples.last().is_some_and(|s| s.ts_ns < end_ns) {
            samples.push(BatterySample {
                ts_ns: end_ns,
                current_ma: self.current_at(end_ns),
                voltage_mv: self.config.voltage_mv,
            });
        }
        samples
    }

    // ---- /proc ------------------------------------------------------------

    fn elapsed_ns(&self) -> u64 {
        self.now_ns() - self.origin_ns
    }

    pub fn cpu_counters(&mut self) -> CpuCounters {
        let now = self.now_ns();
        let cores = f64::from(self.config.cores);
        let elapsed_s = (now - self.origin_ns) as f64 / 1e9;
        let total = (BOOT_UPTIME_S as f64 + elapsed_s) * USER_HZ * cores;
        let boot_busy = BOOT_UPTIME_S as f64 * USER_HZ * cores * self.config.rest_cpu_percent / 100.0;
        let busy = boot_busy + self.timeline.cpu_percent_ns(now) / 100.0 / 1e9 * USER_HZ * cores;
        CpuCounters::split(busy, total - busy)
    }

    pub fn proc_stat(&mut self) -> String {
        let counters = self.cpu_counters();
        let uptime = BOOT_UPTIME_S + self.elapsed_ns() / NANOS_PER_SEC;
        procfs::render_proc_stat(&counters, self.config.cores, uptime, BOOT_EPOCH_S)
    }

    pub fn interface_counters(&mut self) -> Vec<InterfaceCounters> {
        let now = self.now_ns();
        let bytes = self.timeline.bytes_transferred(now);
        let lo = ((now - self.origin_ns) as f64 / 1e9 * LOOPBACK_BYTES_PER_S).floor() as u64;
        vec![
            InterfaceCounters {
                name: "lo".into(),
                rx_bytes: lo,
                tx_bytes: lo,
            },
            InterfaceCounters {
                name: "wlan0".into(),
                rx_bytes: WLAN_RX_BOOT + (bytes * RX_SHARE).floor() as u64,
                tx_bytes: WLAN_TX_BOOT + (bytes * (1.0 - RX_SHARE)).floor() as u64,
            },
            InterfaceCounters {
                name: "rmnet_data0".into(),
                rx_bytes: 0,
                tx_bytes: 0,
            },
        ]
    }

    pub fn proc_net_dev(&mut self) -> String {
        procfs::render_proc_net_dev(&self.interface_counters())
    }

    fn meminfo(&self) -> String {
        let total = 3_720_000;
        let used_by_app = if self.foreground.is_some() { 420_000 } else { 0 };
        procfs::render_meminfo(total, 1_900_000 - used_by_app)
    }

    // ---- state transitions ------------------------------------------------

    fn burst(&mut self, burst: Burst) {
        let now = self.now_ns();
        self.timeline
            .add_burst(now, secs_to_ns(burst.duration_s), burst.cpu_percent);
    }

    fn refresh_brightness(&mut self) {
        let now = self.now_ns();
        let b = self.brightness();
        self.timeline.set_brightness(now, b);
        self.screen_cache = None;
    }

    fn stop_foreground(&mut self) {
        self.foreground = None;
        self.pending_text.clear();
        let now = self.now_ns();
        self.timeline.set_base_cpu(now, self.config.rest_cpu_percent);
    }

    fn launch(&mut self, package: &str) {
        self.foreground = Some(package.to_string());
        let now = self.now_ns();
        self.timeline.set_base_cpu(now, self.config.rest_cpu_percent);
        self.burst(self.config.activity.launch);
    }

    fn open_page(&mut self, package: &str, url: &str) {
        let now = self.now_ns();
        self.foreground = Some(package.to_string());
        let load = self.config.apps.get(package).copied();
        let cpu = load.map_or(self.config.rest_cpu_percent, |l| l.cpu_percent.max(self.config.rest_cpu_percent));
        self.timeline.set_base_cpu(now, cpu);
        if let Some(load) = load.filter(|l| l.bandwidth_mb_per_page > 0.0) {
            self.timeline.add_transfer(
                now,
                secs_to_ns(self.config.activity.page_load_s),
                load.bandwidth_mb_per_page * 1e6,
            );
        }
        self.page_log.push(PageOpen {
            ts_ns: now,
            package_id: package.to_string(),
            url: url.to_string(),
        });
    }

    // ---- shell ------------------------------------------------------------

    pub fn execute(&mut self, command: &str) -> ShellOutcome {
        let now = self.now_ns();
        self.command_log.push(LogEntry {
            ts_ns: now,
            command: command.to_string(),
        });
        let Some(args) = shlex::split(command) else {
            return ShellOutcome::text("/system/bin/sh: syntax error: unterminated quoted string\n");
        };
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        match args.as_slice() {
            [] => ShellOutcome::empty(),
            ["echo", rest @ ..] => ShellOutcome::text(format!("{}\n", rest.join(" "))),
            ["cat", path] => self.cat(path),
            ["input", rest @ ..] => {
                let outcome = self.input(rest);
                if matches!(outcome, ShellOutcome::Output(_)) {
                    self.input_log.push(LogEntry {
                        ts_ns: now,
                        command: command.to_string(),
                    });
                    self.burst(self.config.activity.input);
                }
                outcome
            }
            ["settings", rest @ ..] => self.settings_cmd(rest),
            ["pm", rest @ ..] => self.pm(rest),
            ["am", rest @ ..] => self.am(rest),
            ["wm", "size"] => {
                let (w, h) = self.config.profile.screen_size();
                ShellOutcome::text(format!("Physical size: {w}x{h}\n"))
            }
            ["screencap", ..] => ShellOutcome::Output(self.screencap()),
            ["sleep", secs] => match secs.parse::<f64>() {
                Ok(s) if s >= 0.0 && s.is_finite() => {
                    self.clock.sleep(Duration::from_secs_f64(s));
                    ShellOutcome::empty()
                }
                _ => ShellOutcome::text("sleep: invalid number\n"),
            },
            [other, ..] => ShellOutcome::text(format!("/system/bin/sh: {other}: inaccessible or not found\n")),
        }
    }

    fn cat(&mut self, path: &str) -> ShellOutcome {
        match path {
            "/proc/stat" => ShellOutcome::text(self.proc_stat()),
            "/proc/net/dev" => ShellOutcome::text(self.proc_net_dev()),
            "/proc/meminfo" => ShellOutcome::text(self.meminfo()),
            other => ShellOutcome::text(format!("cat: {other}: No such file or directory\n")),
        }
    }

    fn point(&self, x: &str, y: &str) -> Option<(i64, i64)> {
        let x = x.parse::<f64>().ok()?;
        let y = y.parse::<f64>().ok()?;
        if x.fract() != 0.0 || y.fract() != 0.0 {
            return None;
        }
        let (x, y) = (x as i64, y as i64);
        self.config.profile.contains_screen_point(x, y).then_some((x, y))
    }

    fn input(&mut self, args: &[&str]) -> ShellOutcome {
        let bad = || ShellOutcome::Fail("bad coordinates".into());
        match args {
            ["tap", x, y] => match self.point(x, y) {
                Some(_) => ShellOutcome::empty(),
                None => bad(),
            },
            ["swipe", x1, y1, x2, y2, rest @ ..] if rest.len() <= 1 => {
                if self.point(x1, y1).is_none() || self.point(x2, y2).is_none() {
                    return bad();
                }
                match rest.first().map(|d| d.parse::<u64>()) {
                    Some(Err(_)) => ShellOutcome::Fail("bad duration".into()),
                    _ => ShellOutcome::empty(),
                }
            }
            ["motionevent", action, x, y] => {
                if !matches!(action.to_ascii_uppercase().as_str(), "DOWN" | "UP" | "MOVE" | "CANCEL") {
                    return ShellOutcome::Fail(format!("unknown motion action {action}"));
                }
                match self.point(x, y) {
                    Some(_) => ShellOutcome::empty(),
                    None => bad(),
                }
            }
            ["text", text] => {
                self.pending_text.push_str(&text.replace("%s", " "));
                ShellOutcome::empty()
            }
            ["keyevent", code] => {
                let code = match code.parse::<i64>() {
                    Ok(c) => c,
                    Err(_) => match *code {
                        "KEYCODE_HOME" => KEYCODE_HOME,
                        "KEYCODE_ENTER" => KEYCODE_ENTER,
                        c if c.starts_with("KEYCODE_") => 0,
                        _ => return ShellOutcome::Fail(format!("bad keycode {code}")),
                    },
                };
                match code {
                    KEYCODE_HOME => self.stop_foreground(),
                    KEYCODE_ENTER => {
                        let url = std::mem::take(&mut self.pending_text);
                        if let Some(pkg) = self.foreground.clone() {
                            if !url.is_empty() {
                                self.open_page(&pkg, &url);
                            }
                        }
                    }
                    _ => {}
                }
                ShellOutcome::empty()
            }
            _ => ShellOutcome::text("usage: input [text|keyevent|tap|swipe|motionevent] ...\n"),
        }
    }

    fn settings_cmd(&mut self, args: &[&str]) -> ShellOutcome {
        let valid_ns = |ns: &str| matches!(ns, "system" | "secure" | "global");
        match args {
            ["get", ns, key] if valid_ns(ns) => {
                let value = self.setting(ns, key).unwrap_or("null").to_string();
                ShellOutcome::text(format!("{value}\n"))
            }
            ["put", ns, key, value] if valid_ns(ns) => {
                if *ns == "system" && *key == "screen_brightness" {
                    match value.parse::<u16>() {
                        Ok(b) if b <= MAX_BRIGHTNESS => {}
                        _ => return ShellOutcome::Fail(format!("bad brightness {value}")),
                    }
                }
                if *ns == "system" && *key == "screen_brightness_mode" && BrightnessMode::from_setting(value).is_none() {
                    return ShellOutcome::Fail(format!("bad brightness mode {value}"));
                }
                self.settings
                    .insert((ns.to_string(), key.to_string()), value.to_string());
                self.refresh_brightness();
                ShellOutcome::empty()
            }
            ["delete", ns, key] if valid_ns(ns) => {
                let removed = self.settings.remove(&(ns.to_string(), key.to_string()));
                self.refresh_brightness();
                ShellOutcome::text(format!("Deleted {} rows\n", usize::from(removed.is_some())))
            }
            _ => ShellOutcome::text("usage: settings [get|put|delete] NAMESPACE KEY [VALUE]\n"),
        }
    }

    fn package_from_source(source: &str) -> Result<String, &'static str> {
        if let Some(id) = source.strip_prefix("market://details?id=") {
            return if id.contains('.') { Ok(id.to_string()) } else { Err("INSTALL_FAILED_INVALID_URI") };
        }
        if let Some(stem) = source.strip_suffix(".apk") {
            let name = stem.rsplit('/').next().unwrap_or(stem);
            return if name.contains('.') { Ok(name.to_string()) } else { Err("INSTALL_FAILED_INVALID_APK") };
        }
        Err("INSTALL_FAILED_INVALID_URI")
    }

    fn pm(&mut self, args: &[&str]) -> ShellOutcome {
        match args {
            ["install", rest @ ..] if !rest.is_empty() => {
                let source = rest[rest.len() - 1];
                match Self::package_from_source(source) {
                    Ok(pkg) => {
                        self.installed.insert(pkg);
                        self.burst(self.config.activity.install);
                        ShellOutcome::text("Success\n")
                    }
                    Err(reason) => ShellOutcome::text(format!("Failure [{reason}]\n")),
                }
            }
            ["clear", pkg] => {
                if !self.installed.contains(*pkg) {
                    return ShellOutcome::text("Failed\n");
                }
                *self.data_clears.entry(pkg.to_string()).or_default() += 1;
                if self.foreground.as_deref() == Some(*pkg) {
                    self.stop_foreground();
                }
                self.burst(self.config.activity.clear);
                ShellOutcome::text("Success\n")
            }
            ["list", "packages", filter @ ..] => {
                let filter = filter.first().copied().unwrap_or("");
                let out: String = self
                    .installed
                    .iter()
                    .filter(|p| p.contains(filter))
                    .map(|p| format!("package:{p}\n"))
                    .collect();
                ShellOutcome::text(out)
            }
            _ => ShellOutcome::text("usage: pm [install|clear|list packages] ...\n"),
        }
    }

    fn am(&mut self, args: &[&str]) -> ShellOutcome {
        match args {
            ["start", rest @ ..] => self.am_start(rest),
            ["force-stop", pkg] => {
                if self.foreground.as_deref() == Some(*pkg) {
                    self.stop_foreground();
                }
                ShellOutcome::empty()
            }
            ["kill-all"] => ShellOutcome::empty(),
            _ => ShellOutcome::text("usage: am [start|force-stop|kill-all] ...\n"),
        }
    }

    fn am_start(&mut self, args: &[&str]) -> ShellOutcome {
        let mut component = None;
        let mut data = None;
        let mut package = None;
        let mut action = None;
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            match *arg {
                "-n" => component = it.next().copied(),
                "-d" => data = it.next().copied(),
                "-p" => package = it.next().copied(),
                "-a" => action = it.next().copied(),
                "--ez" | "--es" | "--ei" => {
                    it.next();
                    it.next();
                }
                "-W" | "-S" => {}
                other => return ShellOutcome::text(format!("Error: unknown option {other}\n")),
            }
        }

        let (comp_pkg, activity) = match component.map(|c| c.split_once('/')) {
            Some(Some((p, a))) => (Some(p), Some(a)),
            Some(None) => return ShellOutcome::text("Error: bad component name\n"),
            None => (None, None),
        };
        let pkg = comp_pkg.or(package);

        if let Some(url) = data {
            let Some(pkg) = pkg.map(str::to_string).or_else(|| self.foreground.clone()) else {
                return ShellOutcome::text(format!(
                    "Error: Activity not started, unable to resolve Intent {{ act={} dat={url} }}\n",
                    action.unwrap_or("android.intent.action.VIEW")
                ));
            };
            if !self.installed.contains(&pkg) {
                return ShellOutcome::text(format!(
                    "Error: Activity not started, unable to resolve Intent {{ dat={url} pkg={pkg} }}\n"
                ));
            }
            self.open_page(&pkg, url);
            return ShellOutcome::text(format!(
                "Starting: Intent {{ act={} dat={url} pkg={pkg} }}\n",
                action.unwrap_or("android.intent.action.VIEW")
            ));
        }

        match (pkg, activity) {
            (Some(pkg), Some(activity)) => {
                let plausible = !activity.is_empty() && activity.contains('.');
                if !self.installed.contains(pkg) || !plausible {
                    return ShellOutcome::text(format!(
                        "Error type 3\nError: Activity class {{{pkg}/{activity}}} does not exist.\n"
                    ));
                }
                self.launch(pkg);
                ShellOutcome::text(format!("Starting: Intent {{ cmp={pkg}/{activity} }}\n"))
            }
            _ => ShellOutcome::text("Error: no component or data given\n"),
        }
    }

    fn screencap(&mut self) -> Vec<u8> {
        if let Some((fg, png)) = &self.screen_cache {
            if *fg == self.foreground {
                return png.clone();
            }
        }
        let (w, h) = self.config.profile.screen_size();
        let (ox, oy) = self.config.profile.usable_origin();
        let (uw, uh) = self.config.profile.usable_size();
        let png = screen::placeholder_png(w, h, (ox, oy, uw, uh), self.foreground.as_deref());
        self.screen_cache = Some((self.foreground.clone(), png.clone()));
        png
    }
}
