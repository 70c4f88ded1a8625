use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use wattbench_tests::{ensure, Outcome, Runner};
use wattbench_core::adb::{connect, wire, AdbError, DeviceProfile, DeviceSerial};
use wattbench_core::automation::{
    denormalize, normalize, AutomationStore, NormalizeConfig, RawAction, RawInputEvent,
};
use wattbench_core::clock::{VirtualClock, NANOS_PER_SEC};
use wattbench_core::dim::{
    brightness_cdf, dim_fraction_cdf, estimate_savings, read_telemetry_csv, savings_table, write_telemetry_csv,
    DimInterval, DimmingPolicy, Grouping, IntervalState, TelemetryRow,
};
use wattbench_core::metrics::{aggregate, integrate_discharge, mean, BatterySample, CdfPoint};
use wattbench_core::pipeline::{
    run_job, wait_for_rest, BenchContext, BenchJob, CpuSampler, GateConfig, PipelineError, WorkloadSpec,
};
use wattbench_core::sim::{self, AppLoad, SimBatteryMeter};
use wattbench_core::Execution;

fn main() {
    let mut r = Runner::new();
    r.check("dimming table reproduction", dimming_table);
    r.check("policy mapping", policy_mapping);
    r.check("discharge integration", discharge_integration);
    r.check("gating", gating);
    r.check("normalization round-trip", normalization_round_trip);
    r.check("end-to-end pipeline", end_to_end);
    r.check("attention analysis chain", analysis_chain);
    r.check("protocol conformance", protocol_conformance);
    std::process::exit(r.finish());
}

// ---- dimming table --------------------------------------------------------

/// Printed `(brightness, aggressive J7DUO/SMJ337A, conservative J7DUO/SMJ337A)`
/// percentages.
const PRINTED: [(u16, [f64; 2], [f64; 2]); 6] = [
    (0, [0.0, 0.0], [0.0, 0.0]),
    (50, [23.0, 17.0], [23.0, 17.0]),
    (100, [39.0, 31.0], [39.0, 31.0]),
    (150, [51.0, 46.0], [28.0, 28.0]),
    (200, [61.0, 55.0], [21.0, 17.0]),
    (250, [65.0, 56.0], [28.0, 17.0]),
];

fn dimming_table() -> Outcome {
    let started = Instant::now();
    let (j7, smj) = (sim::j7duo().power, sim::smj337a().power);
    let rows = savings_table(&[&j7, &smj], &DimmingPolicy::default()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(rows.len() == PRINTED.len(), || format!("{} rows", rows.len()))?;
    let mut worst = (0.0f64, String::new());
    for (row, (b, aggressive, conservative)) in rows.iter().zip(PRINTED) {
        ensure(row.brightness == b, || format!("row for {} where {b} expected", row.brightness))?;
        for dev in 0..2 {
            for (kind, got, want) in [
                ("aggressive", row.aggressive[dev], aggressive[dev]),
                ("conservative", row.conservative[dev], conservative[dev]),
            ] {
                let diff = (got * 100.0 - want).abs();
                if diff > worst.0 {
                    worst = (diff, format!("B={b} dev{dev} {kind} {:.1}% vs {want}%", got * 100.0));
                }
            }
        }
    }
    ensure(worst.0 <= 2.0, || format!("off by {:.2} pp at {}", worst.0, worst.1))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    let c150 = rows[3].conservative[0] * 100.0;
    ensure(c150.round() == 28.0, || format!("J7DUO B=150 conservative {c150:.2}%"))?;
    Ok(format!("24/24 cells within 2 pp, largest gap {:.2} pp ({})", worst.0, worst.1))
}

// ---- policy ---------------------------------------------------------------

fn policy_mapping() -> Outcome {
    let p = DimmingPolicy::default();
    for (b, want) in [(0, 0), (50, 0), (100, 0), (150, 75), (200, 150), (250, 150)] {
        ensure(p.dim_target(b) == want, || format!("dim_target({b}) = {} not {want}", p.dim_target(b)))?;
    }
    for b in 0..=250u16 {
        let d = p.dim_target(b);
        ensure(d <= b, || format!("dim_target({b}) = {d} exceeds input"))?;
        if b > 0 {
            let prev = p.dim_target(b - 1);
            ensure(prev <= d, || format!("not monotone at {b}: {prev} > {d}"))?;
        }
    }
    let broken: Vec<u16> = (0..=250u16)
        .filter(|&b| p.dim_target(p.dim_target(b)) != p.dim_target(b))
        .collect();
    ensure(broken.is_empty(), || {
        let b = broken[broken.len() - 1];
        format!(
            "table exact, bound and monotone hold; idempotence fails for {} of 251 inputs, \
             e.g. dim_target(dim_target({b})) = {} but dim_target({b}) = {}",
            broken.len(),
            p.dim_target(p.dim_target(b)),
            p.dim_target(b)
        )
    })?;
    Ok("table exact; idempotent, bounded and monotone over 0..=250".into())
}

// ---- discharge ------------------------------------------------------------

fn grid(rate_hz: f64, seconds: f64, current: impl Fn(f64) -> f64) -> Vec<BatterySample> {
    let n = (rate_hz * seconds).round() as u64;
    (0..=n)
        .map(|i| {
            let ts_ns = (i as f64 * 1e9 / rate_hz).round() as u64;
            BatterySample {
                ts_ns,
                current_ma: current(ts_ns as f64 / 1e9),
                voltage_mv: 3850.0,
            }
        })
        .collect()
}

fn discharge_integration() -> Outcome {
    let mut details = Vec::new();
    for exec in [Execution::Sequential, Execution::default()] {
        let flat = grid(1500.0, 3600.0, |_| 150.0);
        let got = integrate_discharge(&flat, exec).map_err(|e| e.to_string())?;
        let rel = (got - 150.0).abs() / 150.0;
        ensure(rel <= 1e-6, || format!("{exec:?} constant: {got} mAh, rel err {rel:e}"))?;

        // I(t) = 100 + 0.05 t mA over an hour: 100 + 0.05 * 3600 / 2 = 190 mAh.
        let ramp = grid(1500.0, 3600.0, |t| 100.0 + 0.05 * t);
        let want = (100.0 * 3600.0 + 0.05 * 3600.0 * 3600.0 / 2.0) / 3600.0;
        let got_r = integrate_discharge(&ramp, exec).map_err(|e| e.to_string())?;
        let rel_r = (got_r - want).abs() / want;
        ensure(rel_r <= 1e-6, || format!("{exec:?} ramp: {got_r} vs {want}, rel err {rel_r:e}"))?;
        details.push(format!("{exec:?}: {got:.9}/{got_r:.9} mAh"));
    }
    Ok(details.join("; "))
}

// ---- gating ---------------------------------------------------------------

struct Scripted {
    values: Vec<f64>,
    cycle: bool,
    next: usize,
}

impl CpuSampler for Scripted {
    fn next_sample(&mut self) -> Result<(u64, f64), PipelineError> {
        let i = self.next;
        self.next += 1;
        let v = if self.cycle {
            self.values[i % self.values.len()]
        } else {
            *self.values.get(i).ok_or_else(|| PipelineError::Config("trace exhausted".into()))?
        };
        Ok((i as u64 * 5 * NANOS_PER_SEC, v))
    }
}

fn gating() -> Outcome {
    let gate = GateConfig::default();
    let mut trace = Scripted {
        values: vec![12.0, 4.0, 3.0, 2.0, 1.0],
        cycle: false,
        next: 0,
    };
    let open = wait_for_rest(&gate, 0, &mut trace).map_err(|e| e.to_string())?;
    ensure(open == 20 * NANOS_PER_SEC, || format!("gate opened at {open} ns"))?;
    let mut osc = Scripted {
        values: vec![4.0, 6.0],
        cycle: true,
        next: 0,
    };
    match wait_for_rest(&gate, 0, &mut osc) {
        Err(PipelineError::GateTimeout { waited_s }) => Ok(format!("opens at 20 s; oscillation times out after {waited_s} s")),
        other => Err(format!("oscillating trace gave {other:?}")),
    }
}

// ---- normalization --------------------------------------------------------

fn profile(serial: &str, screen: (u32, u32), origin: (u32, u32), usable: (u32, u32)) -> DeviceProfile {
    DeviceProfile::new(DeviceSerial::new(serial).unwrap(), screen, origin, usable).unwrap()
}

fn random_point(rng: &mut StdRng, p: &DeviceProfile) -> (i64, i64) {
    let (ox, oy) = p.usable_origin();
    let (w, h) = p.usable_size();
    (
        i64::from(ox) + rng.random_range(0..i64::from(w)),
        i64::from(oy) + rng.random_range(0..i64::from(h)),
    )
}

/// Exact rational image of a source pixel on the target.
fn oracle(v: i64, src_origin: u32, src_extent: u32, dst_origin: u32, dst_extent: u32) -> f64 {
    f64::from(dst_origin) + (v - i64::from(src_origin)) as f64 * f64::from(dst_extent) / f64::from(src_extent)
}

fn normalization_round_trip() -> Outcome {
    let j7 = sim::j7duo().profile;
    // Status bar on top and a navigation toolbar on the left.
    let samsung = profile("SAMSUNG", (1080, 2220), (96, 72), (984, 2004));
    let tablet = profile("TAB", (1600, 2560), (0, 0), (1600, 2560));
    let pairs = [(&j7, &samsung), (&samsung, &j7), (&tablet, &samsung), (&samsung, &tablet)];
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let cfg = NormalizeConfig::default();
    let mut worst = 0.0f64;
    let mut gestures = 0;
    for i in 0..1000 {
        let (src, dst) = pairs[i % pairs.len()];
        let from = random_point(&mut rng, src);
        let swipe = rng.random_bool(0.5);
        let to = if swipe {
            loop {
                let p = random_point(&mut rng, src);
                if ((p.0 - from.0) as f64).hypot((p.1 - from.1) as f64) >= cfg.tap_threshold_px {
                    break p;
                }
            }
        } else {
            (from.0 + rng.random_range(-3..=3), from.1 + rng.random_range(-3..=3))
        };
        let to = clamp_usable(src, to);
        let events = vec![
            RawInputEvent::new(0, RawAction::PointerDown { x_px: from.0, y_px: from.1 }),
            RawInputEvent::new(120, RawAction::PointerMove { x_px: to.0, y_px: to.1 }),
            RawInputEvent::new(250, RawAction::PointerUp { x_px: to.0, y_px: to.1 }),
        ];
        let cmds = normalize(&events, src, &cfg).map_err(|e| format!("recording {i}: {e}"))?;
        ensure(cmds.len() == 1, || format!("recording {i}: {} commands", cmds.len()))?;
        let shell = denormalize(&cmds[0], dst).ok_or("wait produced")?;
        let nums: Vec<i64> = shell.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        let mut points = vec![from];
        if swipe {
            points.push(to);
        }
        ensure(nums.len() >= points.len() * 2, || format!("recording {i}: unexpected {shell:?}"))?;
        let (so, se, dox, de) = (src.usable_origin(), src.usable_size(), dst.usable_origin(), dst.usable_size());
        for (k, &(x, y)) in points.iter().enumerate() {
            let ex = oracle(x, so.0, se.0, dox.0, de.0);
            let ey = oracle(y, so.1, se.1, dox.1, de.1);
            let dx = (nums[2 * k] as f64 - ex).abs();
            let dy = (nums[2 * k + 1] as f64 - ey).abs();
            worst = worst.max(dx).max(dy);
            ensure(dx <= 1.0 && dy <= 1.0, || {
                format!("recording {i}: {shell:?} vs target ({ex:.2}, {ey:.2}) from ({x}, {y})")
            })?;
            ensure(dst.contains_screen_point(nums[2 * k], nums[2 * k + 1]), || {
                format!("recording {i}: {shell:?} off screen")
            })?;
        }
        gestures += 1;
    }
    Ok(format!("{gestures} recordings over 4 profile pairs, max deviation {worst:.3} px"))
}

fn clamp_usable(p: &DeviceProfile, (x, y): (i64, i64)) -> (i64, i64) {
    let (ox, oy) = p.usable_origin();
    let (w, h) = p.usable_size();
    (
        x.clamp(i64::from(ox), i64::from(ox + w - 1)),
        y.clamp(i64::from(oy), i64::from(oy + h - 1)),
    )
}

// ---- end to end -----------------------------------------------------------

const E2E_JOB: &str = r#"{
    "device": "J7DUO",
    "browsers": [
        {"name": "A", "package_id": "org.example.browser.a", "launch_activity": "org.example.browser.a.Main"},
        {"name": "B", "package_id": "org.example.browser.b", "launch_activity": "org.example.browser.b.Main"}
    ],
    "workload_dict": "news",
    "runs": 5
}"#;

fn end_to_end() -> Outcome {
    let started = Instant::now();
    let mut config = sim::j7duo();
    config.apps = BTreeMap::from([
        ("org.example.browser.a".to_string(), AppLoad { cpu_percent: 30.0, bandwidth_mb_per_page: 10.0 }),
        ("org.example.browser.b".to_string(), AppLoad { cpu_percent: 10.0, bandwidth_mb_per_page: 7.0 }),
    ]);
    let clock = Arc::new(VirtualClock::new());
    let server = sim::serve(config, clock.clone()).map_err(|e| e.to_string())?;
    let conn = connect(server.addr()).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = AutomationStore::new(dir.path());
    let job = BenchJob::from_json(E2E_JOB).map_err(|e| e.to_string())?;
    ensure(job.workload().map_err(|e| e.to_string())? == WorkloadSpec::bundled("news").unwrap(), || {
        "workload is not news".into()
    })?;
    let ctx = BenchContext {
        conn: &conn,
        store: &store,
        clock: clock.clone(),
        exec: Execution::default(),
    };
    let mut meter = SimBatteryMeter::new(server.device("J7DUO").unwrap(), job.battery_rate_hz);
    let out = run_job(&ctx, &job, &mut meter).map_err(|e| e.to_string())?;
    ensure(out.failures.is_empty(), || format!("failures: {:?}", out.failures))?;
    ensure(out.reports.len() == 10, || format!("{} reports", out.reports.len()))?;

    let agg = aggregate(&out.reports);
    let (a, b) = (agg.browser("A").unwrap(), agg.browser("B").unwrap());
    ensure(b.discharge_mean_mah < a.discharge_mean_mah, || {
        format!("discharge A {:.3} mAh, B {:.3} mAh", a.discharge_mean_mah, b.discharge_mean_mah)
    })?;
    // wlan0 rx and tx are each floored to whole bytes at both ends of a run.
    let granularity_mb = 4.0 / 1e6;
    let gap = (b.bandwidth_mean_mbytes - 0.7 * a.bandwidth_mean_mbytes).abs();
    ensure(gap <= granularity_mb * 1.7, || {
        format!(
            "bandwidth A {} MB, B {} MB, B/A = {}",
            a.bandwidth_mean_mbytes,
            b.bandwidth_mean_mbytes,
            b.bandwidth_mean_mbytes / a.bandwidth_mean_mbytes
        )
    })?;
    let cpu = |name: &str| {
        let series: Vec<f64> = out
            .reports
            .iter()
            .filter(|r| r.browser == name)
            .flat_map(|r| r.cpu_percent_series.iter().copied())
            .collect();
        mean(&series)
    };
    let elapsed = started.elapsed();
    ensure(elapsed.as_secs_f64() < 60.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "discharge {:.2} vs {:.2} mAh, bandwidth {:.3} vs {:.3} MB (ratio {:.6}), CPU {:.1} vs {:.1}%, {:.1} s wall",
        a.discharge_mean_mah,
        b.discharge_mean_mah,
        a.bandwidth_mean_mbytes,
        b.bandwidth_mean_mbytes,
        b.bandwidth_mean_mbytes / a.bandwidth_mean_mbytes,
        cpu("A"),
        cpu("B"),
        elapsed.as_secs_f64()
    ))
}

// ---- analysis chain -------------------------------------------------------

fn pair(rows: &mut Vec<TelemetryRow>, session: &str, t: &mut u64, active_ms: u64, dim_ms: u64, b: u16) {
    for (state, d) in [(IntervalState::Active, active_ms), (IntervalState::Dim, dim_ms)] {
        rows.push(TelemetryRow::new(
            session,
            DimInterval {
                ts_start_ms: *t,
                ts_end_ms: *t + d,
                state,
                brightness: b,
            },
        ));
        *t += d;
    }
}

fn cdf_eq(got: &[CdfPoint], want: &[(f64, f64)]) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(p, &(v, f))| p.value == v && p.fraction == f)
}

fn analysis_chain() -> Outcome {
    // Dim fractions 0.25, 0.5, 0.5, 0.75 at brightness 50, 100, 100, 200.
    let mut rows = Vec::new();
    let mut t = 0;
    pair(&mut rows, "devA:0", &mut t, 3000, 1000, 50);
    pair(&mut rows, "devA:0", &mut t, 2000, 2000, 100);
    let mut t = 0;
    pair(&mut rows, "devB:0", &mut t, 500, 500, 100);
    pair(&mut rows, "devB:0", &mut t, 1000, 3000, 200);

    let mut csv = Vec::new();
    write_telemetry_csv(&mut csv, &rows).map_err(|e| e.to_string())?;
    let rows = read_telemetry_csv(csv.as_slice()).map_err(|e| e.to_string())?;

    let frac = dim_fraction_cdf(&rows, Grouping::Pooled);
    ensure(frac.len() == 1 && cdf_eq(&frac[0].1, &[(0.25, 0.25), (0.5, 0.75), (0.75, 1.0)]), || {
        format!("pooled dim fraction CDF {frac:?}")
    })?;
    let per = dim_fraction_cdf(&rows, Grouping::PerDevice);
    ensure(
        per.len() == 2
            && per[0].0 == "devA"
            && cdf_eq(&per[0].1, &[(0.25, 0.5), (0.5, 1.0)])
            && cdf_eq(&per[1].1, &[(0.5, 0.5), (0.75, 1.0)]),
        || format!("per-device dim fraction CDF {per:?}"),
    )?;
    let bright = brightness_cdf(&rows, Grouping::Pooled);
    ensure(cdf_eq(&bright[0].1, &[(50.0, 0.25), (100.0, 0.75), (200.0, 1.0)]), || {
        format!("brightness CDF {bright:?}")
    })?;

    // Half the time dimmed at B=100: 0.5 * (239 - 145) / 239.
    let half = vec![
        TelemetryRow::new("d:0", DimInterval { ts_start_ms: 0, ts_end_ms: 60_000, state: IntervalState::Active, brightness: 100 }),
        TelemetryRow::new("d:0", DimInterval { ts_start_ms: 60_000, ts_end_ms: 120_000, state: IntervalState::Dim, brightness: 100 }),
    ];
    let s = estimate_savings(&half, &sim::j7duo().power, &DimmingPolicy::default()).map_err(|e| e.to_string())?;
    ensure((s - 0.1967).abs() <= 1e-4, || format!("closed-form savings {s}"))?;
    Ok(format!("CDFs exact; closed-form savings {s:.6}"))
}

// ---- protocol -------------------------------------------------------------

fn protocol_conformance() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut total = 0usize;
    for i in 0..500 {
        let len = match i {
            0 => 0,
            1 => wire::MAX_PAYLOAD,
            _ => rng.random_range(0..4096),
        };
        let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let mut buf = Vec::new();
        wire::write_frame(&mut buf, &payload).map_err(|e| e.to_string())?;
        ensure(buf[..4] == *format!("{len:04x}").as_bytes(), || format!("prefix {:?}", &buf[..4]))?;
        let back = wire::read_frame(&mut Cursor::new(&buf)).map_err(|e| e.to_string())?;
        ensure(back == payload, || format!("payload {i} of {len} bytes changed"))?;
        total += len;
    }
    ensure(wire::encode(&vec![0u8; wire::MAX_PAYLOAD + 1]).is_err(), || "oversized frame accepted".into())?;

    // A server that answers the version handshake, then refuses the
    // transport with a recorded FAIL.
    let transcript: [(&[u8], &[u8]); 2] = [
        (b"000chost:version", b"OKAY00040029"),
        (b"0013host:transport:R58M", b"FAIL000edevice offline"),
    ];
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    let server = std::thread::spawn(move || -> Result<(), String> {
        for (request, reply) in transcript {
            let (mut s, _) = listener.accept().map_err(|e| e.to_string())?;
            let mut got = vec![0u8; request.len()];
            s.read_exact(&mut got).map_err(|e| e.to_string())?;
            if got != request {
                return Err(format!("unexpected request {:?}", String::from_utf8_lossy(&got)));
            }
            s.write_all(reply).map_err(|e| e.to_string())?;
        }
        Ok(())
    });
    let conn = connect(addr).map_err(|e| e.to_string())?;
    ensure(conn.server_version() == 0x29, || format!("version {}", conn.server_version()))?;
    let err = conn.shell(&DeviceSerial::new("R58M").unwrap(), "echo hi");
    server.join().map_err(|_| "transcript server panicked".to_string())??;
    match err {
        Err(AdbError::Protocol { message }) if message == "device offline" => Ok(format!(
            "500 frames ({total} bytes) round-tripped; FAIL carried {message:?}"
        )),
        other => Err(format!("expected protocol error, got {other:?}")),
    }
}
