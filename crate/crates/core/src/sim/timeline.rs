//! Piecewise-constant record of everything that drives power, CPU and
//! network counters on the simulated device.
//!
//! Mutations only ever happen at the current time, so the past is immutable
//! and integrals up to "now" can be cached.

#[derive(Debug, Clone)]
struct Step<T> {
    changes: Vec<(u64, T)>,
}

impl<T: Copy + PartialEq> Step<T> {
    fn new(t0: u64, value: T) -> Self {
        Self {
            changes: vec![(t0, value)],
        }
    }

    fn at(&self, t: u64) -> T {
        let idx = self.changes.partition_point(|(s, _)| *s <= t);
        self.changes[idx.saturating_sub(1)].1
    }

    fn set(&mut self, t: u64, value: T) {
        let last = self.changes.last_mut().expect("step has an initial value");
        debug_assert!(t >= last.0, "timeline mutated in the past");
        if last.1 == value {
            return;
        }
        if last.0 == t {
            last.1 = value;
        } else {
            self.changes.push((t, value));
        }
    }

    fn changes_in(&self, t0: u64, t1: u64) -> impl Iterator<Item = u64> + '_ {
        let lo = self.changes.partition_point(|(s, _)| *s <= t0);
        let hi = self.changes.partition_point(|(s, _)| *s < t1);
        self.changes[lo..hi.max(lo)].iter().map(|(s, _)| *s)
    }
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: u64,
    end: u64,
    level: f64,
}

#[derive(Debug, Clone, Default)]
struct Spans {
    spans: Vec<Span>,
    longest: u64,
}

impl Spans {
    fn push(&mut self, start: u64, duration: u64, level: f64) {
        if duration == 0 {
            return;
        }
        debug_assert!(self.spans.last().is_none_or(|s| s.start <= start));
        self.longest = self.longest.max(duration);
        self.spans.push(Span {
            start,
            end: start + duration,
            level,
        });
    }

    /// Spans that may overlap `[t0, t1)`.
    fn overlapping(&self, t0: u64, t1: u64) -> impl Iterator<Item = &Span> + '_ {
        let from = t0.saturating_sub(self.longest);
        let lo = self.spans.partition_point(|s| s.start < from);
        let hi = self.spans.partition_point(|s| s.start < t1);
        self.spans[lo..hi.max(lo)]
            .iter()
            .filter(move |s| s.end > t0 && s.start < t1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub brightness: u16,
    pub cpu_percent: f64,
    pub bytes_per_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: u64,
    pub end: u64,
    pub state: Snapshot,
}

#[derive(Debug, Clone)]
pub struct Timeline {
    brightness: Step<u16>,
    base_cpu: Step<f64>,
    bursts: Spans,
    /// Level is total bytes of the transfer.
    transfers: Spans,
    cpu_cache: (u64, f64),
    bytes_cache: (u64, f64),
}

impl Timeline {
    pub fn new(t0: u64, brightness: u16, base_cpu: f64) -> Self {
        Self {
            brightness: Step::new(t0, brightness),
            base_cpu: Step::new(t0, base_cpu),
            bursts: Spans::default(),
            transfers: Spans::default(),
            cpu_cache: (t0, 0.0),
            bytes_cache: (t0, 0.0),
        }
    }

    pub fn set_brightness(&mut self, t: u64, brightness: u16) {
        self.brightness.set(t, brightness);
    }

    pub fn set_base_cpu(&mut self, t: u64, percent: f64) {
        self.base_cpu.set(t, percent);
    }

    pub fn add_burst(&mut self, t: u64, duration_ns: u64, percent: f64) {
        self.bursts.push(t, duration_ns, percent);
    }

    pub fn add_transfer(&mut self, t: u64, duration_ns: u64, bytes: f64) {
        self.transfers.push(t, duration_ns, bytes);
    }

    pub fn at(&self, t: u64) -> Snapshot {
        let burst = self
            .bursts
            .overlapping(t, t + 1)
            .map(|s| s.level)
            .fold(0.0, f64::max);
        let bytes_per_sec = self
            .transfers
            .overlapping(t, t + 1)
            .map(|s| s.level / ((s.end - s.start) as f64 / 1e9))
            .sum();
        Snapshot {
            brightness: self.brightness.at(t),
            cpu_percent: self.base_cpu.at(t).max(burst).min(100.0),
            bytes_per_sec,
        }
    }

    /// Constant-state segments covering `[t0, t1)`.
    pub fn segments(&self, t0: u64, t1: u64) -> Vec<Segment> {
        if t1 <= t0 {
            return Vec::new();
        }
        let mut cuts: Vec<u64> = vec![t0, t1];
        cuts.extend(self.brightness.changes_in(t0, t1));
        cuts.extend(self.base_cpu.changes_in(t0, t1));
        for s in self.bursts.overlapping(t0, t1).chain(self.transfers.overlapping(t0, t1)) {
            cuts.extend([s.start, s.end].into_iter().filter(|c| *c > t0 && *c < t1));
        }
        cuts.sort_unstable();
        cuts.dedup();
        cuts.windows(2)
            .map(|w| Segment {
                start: w[0],
                end: w[1],
                state: self.at(w[0]),
            })
            .collect()
    }

    /// Integral of CPU percent over time from the timeline origin to `t`,
    /// in percent-nanoseconds.
    pub fn cpu_percent_ns(&mut self, t: u64) -> f64 {
        let (at, acc) = self.cpu_cache;
        if t < at {
            return self.cpu_integral(self.brightness.changes[0].0, t);
        }
        let total = acc + self.cpu_integral(at, t);
        self.cpu_cache = (t, total);
        total
    }

    fn cpu_integral(&self, t0: u64, t1: u64) -> f64 {
        self.segments(t0, t1)
            .iter()
            .map(|s| s.state.cpu_percent * (s.end - s.start) as f64)
            .sum()
    }

    /// Bytes transferred from the timeline origin up to `t`.
    pub fn bytes_transferred(&mut self, t: u64) -> f64 {
        let (at, acc) = self.bytes_cache;
        if t < at {
            return self.bytes_between(self.brightness.changes[0].0, t);
        }
        let total = acc + self.bytes_between(at, t);
        self.bytes_cache = (t, total);
        total
    }

    fn bytes_between(&self, t0: u64, t1: u64) -> f64 {
        self.transfers
            .overlapping(t0, t1)
            .map(|s| {
                let overlap = s.end.min(t1) - s.start.max(t0);
                s.level * overlap as f64 / (s.end - s.start) as f64
            })
            .sum()
    }
}
