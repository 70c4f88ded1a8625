use std::sync::Arc;

use super::gate::CpuSampler;
use super::Result;
use crate::adb::{Connection, DeviceSerial};
use crate::clock::Clock;
use crate::metrics::{
    parse_meminfo_available, parse_proc_net_dev, parse_proc_stat, utilization, CpuSample, InterfaceFilter, MemSample,
    NetSample,
};

/// Periodic `/proc` sampler driven by the pipeline's own sleeps.
///
/// Every wait in the pipeline goes through [`Pacer::sleep_until`], which
/// takes each sample that falls due before the deadline at its scheduled
/// time. Samples are appended to logs that are read after the run.
#[derive(Debug)]
pub struct Pacer<'a> {
    conn: &'a Connection,
    serial: DeviceSerial,
    clock: Arc<dyn Clock>,
    period_ns: u64,
    next_due: u64,
    interfaces: InterfaceFilter,
    pub cpu: Vec<CpuSample>,
    pub net: Vec<NetSample>,
    pub mem: Vec<MemSample>,
}

impl<'a> Pacer<'a> {
    /// Takes the first sample immediately.
    pub fn start(
        conn: &'a Connection,
        serial: DeviceSerial,
        clock: Arc<dyn Clock>,
        period_ns: u64,
        interfaces: InterfaceFilter,
    ) -> Result<Self> {
        let now = clock.now_ns();
        let mut pacer = Self {
            conn,
            serial,
            clock,
            period_ns: period_ns.max(1),
            next_due: now,
            interfaces,
            cpu: Vec::new(),
            net: Vec::new(),
            mem: Vec::new(),
        };
        pacer.sample_due()?;
        Ok(pacer)
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn now_ns(&self) -> u64 {
        self.clock.now_ns()
    }

    /// Reads all counters, stamped `ts_ns`.
    fn sample_at(&mut self, ts_ns: u64) -> Result<()> {
        let stat = self.conn.shell(&self.serial, "cat /proc/stat")?.stdout_lossy();
        let (busy, total) = parse_proc_stat(&stat)?;
        let net = self.conn.shell(&self.serial, "cat /proc/net/dev")?.stdout_lossy();
        let ifaces = parse_proc_net_dev(&net, &self.interfaces)?;
        let mem = self.conn.shell(&self.serial, "cat /proc/meminfo")?.stdout_lossy();
        self.cpu.push(CpuSample {
            ts_ns,
            busy_jiffies: busy,
            total_jiffies: total,
        });
        self.net.push(NetSample::from_interfaces(ts_ns, &ifaces));
        if let Some(kb) = parse_meminfo_available(&mem) {
            self.mem.push(MemSample {
                ts_ns,
                available_kb: kb,
            });
        }
        Ok(())
    }

    /// Samples at the current instant and schedules the next tick. Ticks
    /// missed while the caller was busy are skipped, not back-filled.
    fn sample_due(&mut self) -> Result<()> {
        let now = self.clock.now_ns();
        self.sample_at(now)?;
        while self.next_due <= now {
            self.next_due += self.period_ns;
        }
        Ok(())
    }

    /// Sleeps until `deadline_ns`, sampling on schedule along the way.
    pub fn sleep_until(&mut self, deadline_ns: u64) -> Result<()> {
        while self.next_due <= deadline_ns {
            self.clock.sleep_until_ns(self.next_due);
            self.sample_due()?;
        }
        self.clock.sleep_until_ns(deadline_ns);
        Ok(())
    }

    /// Samples at the current instant unless the last sample already has
    /// this timestamp.
    pub fn sample_now(&mut self) -> Result<()> {
        let now = self.clock.now_ns();
        if self.cpu.last().is_some_and(|s| s.ts_ns == now) {
            return Ok(());
        }
        self.sample_at(now)
    }
}

impl CpuSampler for Pacer<'_> {
    fn next_sample(&mut self) -> Result<(u64, f64)> {
        let due = self.next_due;
        self.sleep_until(due)?;
        let n = self.cpu.len();
        let last = self.cpu[n - 1];
        let percent = if n >= 2 { utilization(&self.cpu[n - 2], &last) } else { 0.0 };
        Ok((last.ts_ns, percent))
    }
}
