use std::io::{ErrorKind, Read};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use super::types::{DeviceSerial, ShellResult};
use super::wire::{self, Status};
use super::{AdbError, Result};

pub const DEFAULT_ADB_PORT: u16 = 5037;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviceState {
    Device,
    Offline,
    Unauthorized,
    Other(String),
}

impl DeviceState {
    fn parse(s: &str) -> Self {
        match s {
            "device" => DeviceState::Device,
            "offline" => DeviceState::Offline,
            "unauthorized" => DeviceState::Unauthorized,
            other => DeviceState::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            DeviceState::Device => "device",
            DeviceState::Offline => "offline",
            DeviceState::Unauthorized => "unauthorized",
            DeviceState::Other(s) => s,
        }
    }
}

/// Where `install` gets a package from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PackageSource {
    /// Store listing identified by package id.
    Store(String),
    /// An `.apk` already reachable from the device shell.
    File(String),
}

impl PackageSource {
    /// `store:<id>` or a path; anything ending in `.apk` is a file.
    pub fn parse(s: &str) -> Self {
        if let Some(id) = s.strip_prefix("store:") {
            PackageSource::Store(id.to_string())
        } else if s.ends_with(".apk") || s.contains('/') {
            PackageSource::File(s.to_string())
        } else {
            PackageSource::Store(s.to_string())
        }
    }

    fn install_argument(&self) -> String {
        match self {
            PackageSource::Store(id) => format!("market://details?id={id}"),
            PackageSource::File(path) => path.clone(),
        }
    }
}

/// A handle on an ADB server. Each service invocation opens its own TCP
/// connection, matching the server's one-service-per-socket contract.
#[derive(Debug, Clone)]
pub struct Connection {
    addr: SocketAddr,
    timeout: Duration,
    server_version: u32,
}

/// Connects to an ADB server and performs the `host:version` handshake.
pub fn connect(addr: impl ToSocketAddrs) -> Result<Connection> {
    let addr = addr
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| AdbError::ConnectionRefused("no address".into()))?;
    let mut conn = Connection {
        addr,
        timeout: DEFAULT_TIMEOUT,
        server_version: 0,
    };
    conn.server_version = conn.version()?;
    Ok(conn)
}

impl Connection {
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn server_version(&self) -> u32 {
        self.server_version
    }

    fn open(&self) -> Result<TcpStream> {
        let stream = TcpStream::connect_timeout(&self.addr, self.timeout).map_err(|e| match e.kind() {
            ErrorKind::ConnectionRefused => AdbError::ConnectionRefused(self.addr.to_string()),
            ErrorKind::TimedOut | ErrorKind::WouldBlock => AdbError::Timeout(self.timeout),
            _ => AdbError::Io(e),
        })?;
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;
        stream.set_nodelay(true)?;
        Ok(stream)
    }

    fn request(&self, stream: &mut TcpStream, service: &str) -> Result<()> {
        wire::write_frame(stream, service.as_bytes()).map_err(|e| self.map_timeout(e))?;
        match wire::read_status(stream).map_err(|e| self.map_timeout(e))? {
            Status::Okay => Ok(()),
            Status::Fail(message) => Err(AdbError::protocol(message)),
        }
    }

    fn map_timeout(&self, err: AdbError) -> AdbError {
        match err {
            AdbError::Io(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                AdbError::Timeout(self.timeout)
            }
            other => other,
        }
    }

    /// Protocol version reported by the server.
    pub fn version(&self) -> Result<u32> {
        let mut stream = self.open()?;
        self.request(&mut stream, "host:version")?;
        let payload = wire::read_frame(&mut stream).map_err(|e| self.map_timeout(e))?;
        let text = String::from_utf8_lossy(&payload);
        u32::from_str_radix(text.trim(), 16)
            .map_err(|_| AdbError::protocol(format!("bad version payload {text:?}")))
    }

    pub fn list_devices(&self) -> Result<Vec<(DeviceSerial, DeviceState)>> {
        let mut stream = self.open()?;
        self.request(&mut stream, "host:devices")?;
        let payload = wire::read_frame(&mut stream).map_err(|e| self.map_timeout(e))?;
        let text = String::from_utf8_lossy(&payload);
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let (serial, state) = line
                    .split_once('\t')
                    .ok_or_else(|| AdbError::protocol(format!("bad device line {line:?}")))?;
                Ok((DeviceSerial::new(serial)?, DeviceState::parse(state.trim())))
            })
            .collect()
    }

    /// Runs `command` in the device shell and returns everything written
    /// before the stream closes.
    pub fn shell(&self, serial: &DeviceSerial, command: &str) -> Result<ShellResult> {
        let started = Instant::now();
        let mut stream = self.open()?;
        match self.request(&mut stream, &format!("host:transport:{serial}")) {
            Ok(()) => {}
            Err(AdbError::Protocol { message }) if message.contains("not found") => {
                return Err(AdbError::NoSuchDevice(serial.to_string()))
            }
            Err(e) => return Err(e),
        }
        self.request(&mut stream, &format!("shell:{command}"))?;

        let deadline = started + self.timeout;
        let mut stdout = Vec::new();
        let mut buf = [0u8; 16 * 1024];
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(AdbError::Timeout(self.timeout));
            }
            stream.set_read_timeout(Some(remaining))?;
            match stream.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => stdout.extend_from_slice(&buf[..n]),
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    return Err(AdbError::Timeout(self.timeout))
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(ShellResult {
            stdout,
            duration: started.elapsed(),
        })
    }

    fn shell_text(&self, serial: &DeviceSerial, command: &str) -> Result<String> {
        Ok(self.shell(serial, command)?.stdout_lossy())
    }

    pub fn is_installed(&self, serial: &DeviceSerial, package_id: &str) -> Result<bool> {
        let out = self.shell_text(serial, &format!("pm list packages {package_id}"))?;
        Ok(out
            .lines()
            .any(|l| l.trim().strip_prefix("package:") == Some(package_id)))
    }

    /// Installs (or reinstalls) a package.
    pub fn install(&self, serial: &DeviceSerial, source: &PackageSource) -> Result<()> {
        let out = self.shell_text(serial, &format!("pm install -r {}", source.install_argument()))?;
        if out.lines().any(|l| l.trim() == "Success") {
            Ok(())
        } else {
            Err(AdbError::InstallFailed(out.trim().to_string()))
        }
    }

    /// Resets the package's data, cache and profile.
    pub fn clean(&self, serial: &DeviceSerial, package_id: &str) -> Result<()> {
        let out = self.shell_text(serial, &format!("pm clear {package_id}"))?;
        if out.trim() == "Success" {
            Ok(())
        } else {
            Err(AdbError::NoSuchPackage(package_id.to_string()))
        }
    }

    pub fn launch(&self, serial: &DeviceSerial, package_id: &str, activity: &str) -> Result<()> {
        if !self.is_installed(serial, package_id)? {
            return Err(AdbError::NoSuchPackage(package_id.to_string()));
        }
        let out = self.shell_text(serial, &format!("am start -n {package_id}/{activity}"))?;
        if out.lines().any(|l| l.starts_with("Error")) {
            Err(AdbError::LaunchFailed(out.trim().to_string()))
        } else {
            Ok(())
        }
    }

    pub fn force_stop(&self, serial: &DeviceSerial, package_id: &str) -> Result<()> {
        self.shell(serial, &format!("am force-stop {package_id}"))?;
        Ok(())
    }

    /// `settings get`; `None` when the key is unset.
    pub fn get_setting(&self, serial: &DeviceSerial, namespace: &str, key: &str) -> Result<Option<String>> {
        let out = self.shell_text(serial, &format!("settings get {namespace} {key}"))?;
        let value = out.trim();
        Ok((value != "null").then(|| value.to_string()))
    }

    pub fn put_setting(&self, serial: &DeviceSerial, namespace: &str, key: &str, value: &str) -> Result<()> {
        self.shell(serial, &format!("settings put {namespace} {key} {value}"))?;
        Ok(())
    }

    pub fn delete_setting(&self, serial: &DeviceSerial, namespace: &str, key: &str) -> Result<()> {
        self.shell(serial, &format!("settings delete {namespace} {key}"))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn package_source_parsing() {
        assert_eq!(PackageSource::parse("com.brave.browser"), PackageSource::Store("com.brave.browser".into()));
        assert_eq!(PackageSource::parse("store:org.mozilla.firefox"), PackageSource::Store("org.mozilla.firefox".into()));
        assert_eq!(
            PackageSource::parse("/data/local/tmp/com.kiwibrowser.browser.apk"),
            PackageSource::File("/data/local/tmp/com.kiwibrowser.browser.apk".into())
        );
        assert_eq!(
            PackageSource::Store("a.b".into()).install_argument(),
            "market://details?id=a.b"
        );
    }

    #[test]
    fn closed_port_is_refused() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        assert!(matches!(connect(addr), Err(AdbError::ConnectionRefused(_))));
    }
}
