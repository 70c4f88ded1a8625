//! Text renderers for the `/proc` files the benchmark pipeline samples.

use std::fmt::Write;

/// Jiffies per second as exposed to user space.
pub const USER_HZ: f64 = 100.0;

/// Cumulative CPU time split across the ten `/proc/stat` fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CpuCounters {
    pub user: u64,
    pub nice: u64,
    pub system: u64,
    pub idle: u64,
    pub iowait: u64,
    pub irq: u64,
    pub softirq: u64,
    pub steal: u64,
    pub guest: u64,
    pub guest_nice: u64,
}

impl CpuCounters {
    /// Splits exact busy and idle jiffy totals into fields. Each field is
    /// the floor of a fixed share of a monotone total, so every field is
    /// itself monotone over time.
    pub fn split(busy_jiffies: f64, idle_jiffies: f64) -> Self {
        let f = |x: f64| x.max(0.0).floor() as u64;
        Self {
            user: f(busy_jiffies * 0.65),
            nice: f(busy_jiffies * 0.02),
            system: f(busy_jiffies * 0.25),
            irq: f(busy_jiffies * 0.03),
            softirq: f(busy_jiffies * 0.05),
            idle: f(idle_jiffies * 0.985),
            iowait: f(idle_jiffies * 0.015),
            steal: 0,
            guest: 0,
            guest_nice: 0,
        }
    }

    fn fields(&self) -> [u64; 10] {
        [
            self.user,
            self.nice,
            self.system,
            self.idle,
            self.iowait,
            self.irq,
            self.softirq,
            self.steal,
            self.guest,
            self.guest_nice,
        ]
    }

    fn per_core(&self, cores: u64) -> Self {
        let [user, nice, system, idle, iowait, irq, softirq, steal, guest, guest_nice] =
            self.fields().map(|v| v / cores);
        Self {
            user,
            nice,
            system,
            idle,
            iowait,
            irq,
            softirq,
            steal,
            guest,
            guest_nice,
        }
    }
}

pub fn render_proc_stat(total: &CpuCounters, cores: u32, uptime_s: u64, boot_time: u64) -> String {
    let mut out = String::new();
    let line = |out: &mut String, name: &str, c: &CpuCounters| {
        let fields = c.fields().map(|v| v.to_string()).join(" ");
        let _ = writeln!(out, "{name} {fields}");
    };
    line(&mut out, "cpu ", total);
    let core = total.per_core(u64::from(cores.max(1)));
    for i in 0..cores {
        line(&mut out, &format!("cpu{i}"), &core);
    }
    let _ = writeln!(out, "intr {} 0 0 0", uptime_s * 350);
    let _ = writeln!(out, "ctxt {}", uptime_s * 900);
    let _ = writeln!(out, "btime {boot_time}");
    let _ = writeln!(out, "processes {}", 1200 + uptime_s / 10);
    let _ = writeln!(out, "procs_running 1");
    let _ = writeln!(out, "procs_blocked 0");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceCounters {
    pub name: String,
    pub rx_bytes: u64,
    pub tx_bytes: u64,
}

pub fn render_proc_net_dev(interfaces: &[InterfaceCounters]) -> String {
    let mut out = String::from(
        "Inter-|   Receive                                                |  Transmit\n \
         face |bytes    packets errs drop fifo frame compressed multicast|bytes    packets errs drop fifo colls carrier compressed\n",
    );
    for i in interfaces {
        let _ = writeln!(
            out,
            "{:>6}: {:>8} {:>7}    0    0    0     0          0         0 {:>8} {:>7}    0    0    0     0       0          0",
            i.name,
            i.rx_bytes,
            i.rx_bytes / 1400,
            i.tx_bytes,
            i.tx_bytes / 1400
        );
    }
    out
}

pub fn render_meminfo(total_kb: u64, available_kb: u64) -> String {
    format!(
        "MemTotal:       {total_kb:>8} kB\nMemFree:        {:>8} kB\nMemAvailable:   {available_kb:>8} kB\nBuffers:        {:>8} kB\nCached:         {:>8} kB\n",
        available_kb / 2,
        available_kb / 20,
        available_kb / 3
    )
}
