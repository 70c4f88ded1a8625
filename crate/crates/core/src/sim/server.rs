use std::io::{ErrorKind, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::Duration;

use super::device::{ShellOutcome, SimDevice};
use super::{SimDeviceConfig, SimError};
use crate::adb::{wire, DeviceSerial};
use crate::clock::Clock;
use crate::exec::Execution;
use crate::metrics::{self, BatteryMeter, BatterySample, MetricsError};

/// Protocol version reported by `host:version`.
const SERVER_VERSION: &str = "0029";
const IO_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct SimDeviceHandle(Arc<Mutex<SimDevice>>);

impl SimDeviceHandle {
    pub fn new(device: SimDevice) -> Self {
        Self(Arc::new(Mutex::new(device)))
    }

    /// Locks the device. Poisoning is ignored: the device state stays
    /// usable after a panicking command handler.
    pub fn lock(&self) -> MutexGuard<'_, SimDevice> {
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn serial(&self) -> DeviceSerial {
        self.lock().config().profile.serial().clone()
    }
}

#[derive(Debug)]
struct Shared {
    devices: Vec<(DeviceSerial, SimDeviceHandle)>,
    stop: AtomicBool,
}

impl Shared {
    fn find(&self, serial: &str) -> Option<&SimDeviceHandle> {
        self.devices.iter().find(|(s, _)| s.as_str() == serial).map(|(_, d)| d)
    }
}

#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn device(&self, serial: &str) -> Option<SimDeviceHandle> {
        self.shared.find(serial).cloned()
    }

    pub fn devices(&self) -> Vec<SimDeviceHandle> {
        self.shared.devices.iter().map(|(_, d)| d.clone()).collect()
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(handle) = self.accept.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop();
        }
    }
}

/// Serves one device on an ephemeral loopback port.
pub fn serve(config: SimDeviceConfig, clock: Arc<dyn Clock>) -> Result<ServerHandle, SimError> {
    serve_on("127.0.0.1:0", vec![config], clock)
}

/// Serves any number of devices (possibly none) on `addr`. Devices are
/// listed by `host:devices` in the given order.
pub fn serve_on(
    addr: impl ToSocketAddrs + std::fmt::Debug,
    configs: Vec<SimDeviceConfig>,
    clock: Arc<dyn Clock>,
) -> Result<ServerHandle, SimError> {
    let mut devices: Vec<(DeviceSerial, SimDeviceHandle)> = Vec::new();
    for config in configs {
        config.validate()?;
        let serial = config.profile.serial().clone();
        if devices.iter().any(|(s, _)| *s == serial) {
            return Err(SimError::DuplicateSerial(serial.to_string()));
        }
        devices.push((serial, SimDeviceHandle::new(SimDevice::new(config, clock.clone()))));
    }
    let shown = format!("{addr:?}");
    let listener = TcpListener::bind(addr).map_err(|source| SimError::BindFailed { addr: shown.clone(), source })?;
    let local = listener
        .local_addr()
        .map_err(|source| SimError::BindFailed { addr: shown, source })?;
    let shared = Arc::new(Shared {
        devices,
        stop: AtomicBool::new(false),
    });
    let accept_shared = shared.clone();
    let accept = std::thread::Builder::new()
        .name("sim-accept".into())
        .spawn(move || accept_loop(listener, accept_shared))
        .expect("spawn accept thread");
    log::info!("device simulator listening on {local}");
    Ok(ServerHandle {
        addr: local,
        shared,
        accept: Some(accept),
    })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    for stream in listener.incoming() {
        if shared.stop.load(Ordering::SeqCst) {
            break;
        }
        match stream {
            Ok(stream) => {
                let shared = shared.clone();
                let _ = std::thread::Builder::new()
                    .name("sim-conn".into())
                    .spawn(move || {
                        if let Err(e) = handle_connection(stream, &shared) {
                            log::debug!("sim connection ended: {e}");
                        }
                    });
            }
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => log::warn!("accept failed: {e}"),
        }
    }
}

fn handle_connection(mut stream: TcpStream, shared: &Shared) -> crate::adb::Result<()> {
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    stream.set_write_timeout(Some(IO_TIMEOUT))?;
    stream.set_nodelay(true)?;
    let mut transport: Option<&SimDeviceHandle> = None;
    loop {
        let request = match wire::read_frame(&mut stream) {
            Ok(r) => r,
            // A client that connects and leaves without a request.
            Err(crate::adb::AdbError::Protocol { .. }) if shared.stop.load(Ordering::SeqCst) => return Ok(()),
            Err(e) => return Err(e),
        };
        let request = String::from_utf8_lossy(&request).into_owned();
        match (transport, request.as_str()) {
            (None, "host:version") => {
                wire::write_okay(&mut stream)?;
                wire::write_frame(&mut stream, SERVER_VERSION.as_bytes())?;
                return Ok(());
            }
            (None, "host:devices") | (None, "host:devices-l") => {
                let listing: String = shared
                    .devices
                    .iter()
                    .map(|(s, d)| format!("{s}\t{}\n", d.lock().config().state))
                    .collect();
                wire::write_okay(&mut stream)?;
                wire::write_frame(&mut stream, listing.as_bytes())?;
                return Ok(());
            }
            (None, r) if r.starts_with("host:transport:") => {
                let serial = &r["host:transport:".len()..];
                match shared.find(serial) {
                    None => {
                        wire::write_fail(&mut stream, &format!("device '{serial}' not found"))?;
                        return Ok(());
                    }
                    Some(d) if d.lock().config().state != "device" => {
                        let state = d.lock().config().state.clone();
                        wire::write_fail(&mut stream, &format!("device {state}"))?;
                        return Ok(());
                    }
                    Some(d) => {
                        wire::write_okay(&mut stream)?;
                        transport = Some(d);
                    }
                }
            }
            (Some(device), r) if r.starts_with("shell:") => {
                let outcome = device.lock().execute(&r["shell:".len()..]);
                match outcome {
                    ShellOutcome::Output(bytes) => {
                        wire::write_okay(&mut stream)?;
                        stream.write_all(&bytes)?;
                    }
                    ShellOutcome::Fail(message) => wire::write_fail(&mut stream, &message)?,
                }
                stream.flush()?;
                let _ = stream.shutdown(Shutdown::Write);
                return Ok(());
            }
            (_, other) => {
                wire::write_fail(&mut stream, &format!("unknown host service '{other}'"))?;
                return Ok(());
            }
        }
    }
}

/// Battery meter reading the simulator's current model directly. The log
/// runs from `start` to `stop` inclusive on a fixed-rate grid anchored at
/// the start time.
#[derive(Debug)]
pub struct SimBatteryMeter {
    device: SimDeviceHandle,
    rate_hz: f64,
    exec: Execution,
    started_ns: Option<u64>,
}

impl SimBatteryMeter {
    pub fn new(device: SimDeviceHandle, rate_hz: f64) -> Self {
        Self {
            device,
            rate_hz,
            exec: Execution::default(),
            started_ns: None,
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

impl BatteryMeter for SimBatteryMeter {
    fn start(&mut self) -> metrics::Result<()> {
        if !(self.rate_hz > 0.0) {
            return Err(MetricsError::Meter(format!("rate must be positive, got {}", self.rate_hz)));
        }
        self.started_ns = Some(self.device.lock().now_ns());
        Ok(())
    }

    fn stop(&mut self) -> metrics::Result<Vec<BatterySample>> {
        let start = self
            .started_ns
            .take()
            .ok_or_else(|| MetricsError::Meter("stop without start".into()))?;
        let device = self.device.lock();
        Ok(device.battery_window(start, device.now_ns(), self.rate_hz, self.exec))
    }
}
