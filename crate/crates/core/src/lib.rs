#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

//! Energy benchmarking for Android browsers and other third-party apps.
//!
//! The crate is organised around the measurement pipeline:
//!
//! * [`adb`] talks the ADB server smart-socket protocol (shell, install,
//!   clean, launch).
//! * [`sim`] is a simulated device that speaks the same protocol and models
//!   battery current, `/proc/stat` and `/proc/net/dev`.
//! * [`automation`] records raw input as resolution-independent commands and
//!   replays them on any device.
//! * [`pipeline`] runs benchmark jobs: device setup, browser preparation,
//!   CPU rest gating, workload execution and metric collection.
//! * [`metrics`] parses and aggregates the collected samples.
//! * [`dim`] implements the event-driven screen dimming policy, its
//!   controller, and the telemetry savings analysis.
//!
//! Batch numerics (battery synthesis, quadrature, batch normalisation) run on
//! rayon when the `parallel` feature is enabled and fall back to a sequential
//! path otherwise; see [`exec`].

pub mod adb;
pub mod automation;
pub mod clock;
pub mod dim;
pub mod exec;
pub mod metrics;
pub mod pipeline;
pub mod sim;

pub use adb::{AdbError, Connection, DeviceProfile, DeviceSerial};
pub use clock::{Clock, SystemClock, VirtualClock};
pub use exec::Execution;
