use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wattbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wattbench"))
        .args(args)
        .current_dir(cwd)
        .env_remove("WATTBENCH_ADB_SERVER")
        .env_remove("WATTBENCH_CONFIG")
        .output()
        .expect("binary runs")
}

fn write_job(dir: &Path, extra_browser: &str) {
    let job = format!(
        r#"{{
        "device": "J7DUO",
        "browsers": [
            {{"name": "chrome", "package_id": "com.android.chrome", "launch_activity": "com.google.android.apps.chrome.Main"}}
            {extra_browser}
        ],
        "workload_dict": "short.json",
        "runs": 2,
        "battery_rate_hz": 20
    }}"#
    );
    fs::write(dir.join("job.json"), job).unwrap();
    fs::write(
        dir.join("short.json"),
        r#"{"name": "short", "pages": ["https://a.example", "https://b.example"], "dwell_s": 5, "interaction_s": 12}"#,
    )
    .unwrap();
}

const BRAVE: &str = r#", {"name": "brave", "package_id": "com.brave.browser", "launch_activity": "com.brave.browser.ChromeTabbedActivity"}"#;

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn bench_run_is_deterministic_and_analyze_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    write_job(dir.path(), BRAVE);
    for out in ["o1", "o2"] {
        let o = wattbench(&["bench", "run", "--job", "job.json", "--out", out, "--sim", "j7duo"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(o.status.code(), Some(0));
    }
    let (o1, o2) = (dir.path().join("o1"), dir.path().join("o2"));
    for f in ["aggregate.csv", "aggregate.json", "cdf.csv", "runs/000_chrome_0.json", "logs/003_brave_1/battery.csv"] {
        assert_eq!(read(&o1.join(f)), read(&o2.join(f)), "{f} differs between runs");
    }
    assert_eq!(fs::read_dir(o1.join("runs")).unwrap().count(), 4);

    let o = wattbench(&["analyze", "--runs", "o1", "--out", "re"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["aggregate.csv", "aggregate.json", "cdf.csv"] {
        assert_eq!(read(&o1.join(f)), read(&dir.path().join("re").join(f)), "{f} not reproduced");
    }
    let agg = String::from_utf8(read(&o1.join("aggregate.csv"))).unwrap();
    let mut lines = agg.lines().skip(1);
    assert!(lines.next().unwrap().starts_with("chrome,2,"));
    assert!(lines.next().unwrap().starts_with("brave,2,"));
}

#[test]
fn partial_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let broken = r#", {"name": "brave", "package_id": "com.brave.browser", "launch_activity": "com.brave.browser.ChromeTabbedActivity",
        "open_url": {"kind": "automation", "label": "newTab"}}"#;
    write_job(dir.path(), broken);
    let o = wattbench(&["bench", "run", "--job", "job.json", "--out", "o", "--sim", "j7duo"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let failures: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("o/failures.json"))).unwrap();
    assert_eq!(failures.as_array().unwrap().len(), 1);
    assert_eq!(failures[0]["browser"], "brave");
    assert_eq!(fs::read_dir(dir.path().join("o/runs")).unwrap().count(), 2);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write_job(dir.path(), "");
    let no_sim = wattbench(&["bench", "run", "--job", "job.json", "--out", "o"], dir.path());
    assert_eq!(no_sim.status.code(), Some(2));
    fs::write(dir.path().join("bad.json"), r#"{"device": "X"}"#).unwrap();
    let bad = wattbench(&["bench", "run", "--job", "bad.json", "--sim", "j7duo"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    let profile = wattbench(&["dim", "table", "--models", "nokia"], dir.path());
    assert_eq!(profile.status.code(), Some(2));
    let flags = wattbench(&["bench", "run"], dir.path());
    assert_eq!(flags.status.code(), Some(2));
    fs::write(dir.path().join("c.toml"), "bogus = 1\n").unwrap();
    let cfg = wattbench(&["--config", "c.toml", "dim", "table", "--models", "j7duo"], dir.path());
    assert_eq!(cfg.status.code(), Some(2));
}

#[test]
fn dim_table_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let o = wattbench(&["dim", "table", "--models", "j7duo", "smj337a"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().nth(4), Some("150,299/201,52/46%,28/29%"));

    fs::write(
        dir.path().join("events.log"),
        "0 session start\n1000 url_typing start 100 manual\n2000 url_typing end\n4000 session end\n",
    )
    .unwrap();
    let o = wattbench(&["dim", "telemetry", "--events", "events.log", "--device", "p1", "--out", "t.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = wattbench(
        &["dim", "estimate", "--telemetry", "t.csv", "--model", "j7duo", "--cdf-out", "cdf"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let est: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(est["savings"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("cdf/dim_fraction_cdf.csv").is_file());
}

#[test]
fn dim_control_on_simulator() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("events.log"),
        "0 page_loading start\n500 url_typing start\n900 page_loading end\n2000 url_typing end\n",
    )
    .unwrap();
    let o = wattbench(&["dim", "control", "--events", "events.log", "--sim", "j7duo"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let steps: Vec<serde_json::Value> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(steps.len(), 4);
    assert_eq!(steps[0]["action"], serde_json::json!({"action": "set_brightness", "brightness": 0}));
    assert_eq!(steps[1]["action"], serde_json::json!({"action": "none"}));
    assert_eq!(steps[3]["action"], serde_json::json!({"action": "restore_manual", "brightness": 100}));
}

#[test]
fn replay_on_simulator() {
    let dir = tempfile::tempdir().unwrap();
    let script = serde_json::json!({
        "app_id": "com.android.chrome",
        "label": "onboarding",
        "source_profile": {
            "serial": "J7DUO", "screen_width_px": 720, "screen_height_px": 1480,
            "usable_origin_x_px": 0, "usable_origin_y_px": 48, "usable_width_px": 720, "usable_height_px": 1336
        },
        "commands": [{"kind": "tap", "x_ratio": 0.5, "y_ratio": 0.5}, {"kind": "key", "keycode": 4}]
    });
    let store = dir.path().join("automations/com.android.chrome");
    fs::create_dir_all(&store).unwrap();
    fs::write(store.join("onboarding.json"), script.to_string()).unwrap();
    let o = wattbench(
        &["replay", "--app", "com.android.chrome", "--label", "onboarding", "--sim", "smj337a"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["commands_sent"], 2);
    let missing = wattbench(&["replay", "--app", "x.y", "--label", "none", "--sim", "j7duo"], dir.path());
    assert_ne!(missing.status.code(), Some(0));
}
