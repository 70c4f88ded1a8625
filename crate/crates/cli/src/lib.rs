//! The `wattbench` command line.

pub mod bench;
pub mod config;
pub mod device;
pub mod dim;
pub mod record;

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use wattbench_core::automation::{replay, AutomationStore};
use wattbench_core::dim::{DimmingPolicy, Grouping};
use wattbench_core::pipeline::PipelineError;
use wattbench_core::sim::{self, SimError};
use wattbench_core::{Clock, SystemClock, VirtualClock};

use crate::config::{Config, ConfigError, FileConfig};
use crate::device::DeviceLink;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARTIAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "wattbench", version, about = "Energy benchmarking for Android browsers")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = "WATTBENCH_CONFIG")]
    pub config: Option<PathBuf>,
    /// ADB server address.
    #[arg(long, global = true, env = "WATTBENCH_ADB_SERVER")]
    pub adb_server: Option<String>,
    /// Automation store directory.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Directory searched for device profiles given by name.
    #[arg(long, global = true)]
    pub profiles: Option<PathBuf>,
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulated device.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Benchmark jobs.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Replays a stored automation script.
    Replay(ReplayArgs),
    /// Recorder backend.
    #[command(subcommand)]
    Record(RecordCommand),
    /// Attention-driven screen dimming.
    #[command(subcommand)]
    Dim(DimCommand),
    /// Recomputes aggregates and CDFs from stored run logs.
    Analyze {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Serves simulated devices over the ADB smart-socket protocol.
    Serve {
        /// Bundled name or profile file; repeat for several devices.
        #[arg(long, required = true)]
        profile: Vec<String>,
        /// Time advances only when a client sleeps.
        #[arg(long)]
        virtual_clock: bool,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Runs a job file and writes reports and logs.
    Run {
        #[arg(long)]
        job: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run against an in-process simulator with this profile.
        #[arg(long)]
        sim: Option<String>,
        /// Use the system clock with `--sim` instead of virtual time.
        #[arg(long)]
        wall_clock: bool,
    },
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub app: String,
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub serial: Option<String>,
    /// DeviceProfile JSON or profile name for the target geometry.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub sim: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum RecordCommand {
    /// Serves the recorder HTTP API and UI bundle.
    Serve {
        #[arg(long)]
        serial: Option<String>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        profile: Option<String>,
        /// Static UI bundle served at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long)]
        sim: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupingArg {
    Pooled,
    Device,
}

impl From<GroupingArg> for Grouping {
    fn from(g: GroupingArg) -> Self {
        match g {
            GroupingArg::Pooled => Grouping::Pooled,
            GroupingArg::Device => Grouping::PerDevice,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum DimCommand {
    /// Estimates savings from a telemetry log.
    Estimate {
        #[arg(long)]
        telemetry: PathBuf,
        #[arg(long)]
        model: String,
        /// `low_max,high_min,high_target`.
        #[arg(long, default_value = "100,200,150")]
        policy: String,
        #[arg(long, value_enum, default_value_t = GroupingArg::Pooled)]
        grouping: GroupingArg,
        /// Also write `dim_fraction_cdf.csv` and `brightness_cdf.csv` here.
        #[arg(long)]
        cdf_out: Option<PathBuf>,
    },
    /// Prints the brightness savings table for one or more models.
    Table {
        #[arg(long, num_args = 1.., required = true)]
        models: Vec<String>,
        #[arg(long, default_value = "100,200,150")]
        policy: String,
    },
    /// Converts an attention-event stream into a telemetry log.
    Telemetry {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        device: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drives the dimming controller on a device from an event stream.
    Control {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        serial: Option<String>,
        #[arg(long)]
        sim: Option<String>,
        #[arg(long, default_value = "100,200,150")]
        policy: String,
    },
}

/// Exit code for an error: configuration problems are 2, the rest 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        e.downcast_ref::<ConfigError>().is_some()
            || matches!(
                e.downcast_ref::<PipelineError>(),
                Some(PipelineError::Config(_) | PipelineError::MissingAutomation { .. })
            )
            || matches!(e.downcast_ref::<SimError>(), Some(SimError::Config(_)))
    });
    if config {
        EXIT_CONFIG
    } else {
        EXIT_PARTIAL
    }
}

pub fn resolve_config(cli: &Cli) -> anyhow::Result<Config> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        adb_server: cli.adb_server.clone(),
        store: cli.store.clone(),
        output: None,
        profiles: cli.profiles.clone(),
        log_level: cli.log_level.clone(),
    };
    Ok(Config::resolve(file, flags))
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn wait_for_ctrl_c() -> anyhow::Result<()> {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(tokio::signal::ctrl_c())?;
    Ok(())
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<u8> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Sim(SimCommand::Serve {
            profile,
            virtual_clock,
            host,
            port,
        }) => {
            let devices = profile.iter().map(|p| cfg.device_config(p)).collect::<anyhow::Result<Vec<_>>>()?;
            let clock: Arc<dyn Clock> = if virtual_clock {
                Arc::new(VirtualClock::new())
            } else {
                Arc::new(SystemClock::new())
            };
            let serials: Vec<String> = devices.iter().map(|d| d.profile.serial().to_string()).collect();
            let server = sim::serve_on(format!("{host}:{port}"), devices, clock)?;
            println!("listening on {} ({})", server.addr(), serials.join(", "));
            std::io::stdout().flush()?;
            wait_for_ctrl_c()?;
            server.shutdown();
            Ok(EXIT_OK)
        }
        Command::Bench(BenchCommand::Run {
            job,
            out,
            sim,
            wall_clock,
        }) => {
            let args = bench::RunArgs {
                job,
                out: out.unwrap_or_else(|| cfg.output.clone()),
                sim,
                wall_clock,
            };
            let complete = bench::run(&cfg, &args)?;
            Ok(if complete { EXIT_OK } else { EXIT_PARTIAL })
        }
        Command::Replay(args) => {
            let link = DeviceLink::open(&cfg, args.sim.as_deref(), args.serial.as_deref(), false)?;
            let profile = link.profile(&cfg, args.profile.as_deref())?;
            let store = AutomationStore::new(&cfg.store);
            let script = store.get(&args.app, &args.label)?;
            let report = replay(&link.conn, &link.serial, &script, &profile, link.clock.as_ref())?;
            print_json(&report)?;
            Ok(EXIT_OK)
        }
        Command::Record(RecordCommand::Serve {
            serial,
            port,
            host,
            profile,
            ui_dir,
            sim,
        }) => {
            let link = DeviceLink::open(&cfg, sim.as_deref(), serial.as_deref(), false)?;
            let profile = link.profile(&cfg, profile.as_deref())?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| config::config_error(format!("{host}:{port}: {e}")))?;
            let DeviceLink { conn, serial, clock, sim } = link;
            let state = Arc::new(record::Recorder::new(conn, serial, profile, AutomationStore::new(&cfg.store), clock));
            let app = record::router(state, ui_dir);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
                println!("recorder on http://{}", listener.local_addr()?);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
            drop(sim);
            Ok(EXIT_OK)
        }
        Command::Dim(cmd) => run_dim(&cfg, cmd),
        Command::Analyze { runs, out } => {
            let out = out.unwrap_or_else(|| runs.clone());
            let agg = bench::analyze(&runs, &out)?;
            println!("{} browsers, {} runs", agg.browsers.len(), agg.browsers.iter().map(|b| b.runs).sum::<usize>());
            Ok(EXIT_OK)
        }
    }
}

fn run_dim(cfg: &Config, cmd: DimCommand) -> anyhow::Result<u8> {
    match cmd {
        DimCommand::Estimate {
            telemetry,
            model,
            policy,
            grouping,
            cdf_out,
        } => {
            let policy = dim::parse_policy(&policy)?;
            let est = dim::estimate(cfg, &telemetry, &model, &policy, grouping.into())?;
            if let Some(dir) = cdf_out {
                std::fs::create_dir_all(&dir)?;
                dim::write_cdf_csv(std::fs::File::create(dir.join("dim_fraction_cdf.csv"))?, &est.dim_fraction_cdf)?;
                dim::write_cdf_csv(std::fs::File::create(dir.join("brightness_cdf.csv"))?, &est.brightness_cdf)?;
            }
            print_json(&est)?;
        }
        DimCommand::Table { models, policy } => {
            let csv = dim::table(cfg, &models, &dim::parse_policy(&policy)?)?;
            std::io::stdout().write_all(&csv)?;
        }
        DimCommand::Telemetry { events, device, out } => {
            let n = match out {
                Some(path) => dim::telemetry(&events, &device, std::fs::File::create(&path)?)?,
                None => dim::telemetry(&events, &device, std::io::stdout().lock())?,
            };
            log::info!("{n} telemetry rows");
        }
        DimCommand::Control {
            events,
            serial,
            sim,
            policy,
        } => {
            let policy: DimmingPolicy = dim::parse_policy(&policy)?;
            let link = DeviceLink::open(cfg, sim.as_deref(), serial.as_deref(), true)?;
            for step in dim::control(&link, &events, policy)? {
                println!("{}", serde_json::to_string(&step)?);
            }
        }
    }
    Ok(EXIT_OK)
}
