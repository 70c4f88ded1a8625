use serde::{Deserialize, Serialize};

use super::{require, MetricsError, NetSample, Result};

/// Which interfaces count towards bandwidth.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceFilter {
    /// Every interface except `lo`.
    #[default]
    NonLoopback,
    All,
    Only(Vec<String>),
}

impl InterfaceFilter {
    pub fn accepts(&self, name: &str) -> bool {
        match self {
            InterfaceFilter::NonLoopback => name != "lo",
            InterfaceFilter::All => true,
            InterfaceFilter::Only(names) => names.iter().any(|n| n == name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceTotals {
    pub name: String,
    pub rx_bytes: u64,
    pub tx_bytes: u64,
}

/// Per-interface byte counters from `/proc/net/dev`, in file order, keeping
/// only interfaces accepted by `filter`.
pub fn parse_proc_net_dev(text: &str, filter: &InterfaceFilter) -> Result<Vec<InterfaceTotals>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let Some((name, counters)) = line.split_once(':') else {
            continue;
        };
        let name = name.trim();
        if name.is_empty() || name.contains('|') {
            continue;
        }
        let fields: Vec<&str> = counters.split_whitespace().collect();
        if fields.len() < 16 {
            return Err(MetricsError::MalformedNetDev(format!(
                "interface {name}: expected 16 counters, found {}",
                fields.len()
            )));
        }
        let num = |i: usize| {
            fields[i]
                .parse::<u64>()
                .map_err(|_| MetricsError::MalformedNetDev(format!("interface {name}: bad counter {:?}", fields[i])))
        };
        let totals = InterfaceTotals {
            name: name.to_string(),
            rx_bytes: num(0)?,
            tx_bytes: num(8)?,
        };
        if filter.accepts(name) {
            out.push(totals);
        }
    }
    Ok(out)
}

impl NetSample {
    /// Sums the accepted interfaces into one sample.
    pub fn from_interfaces(ts_ns: u64, interfaces: &[InterfaceTotals]) -> Self {
        NetSample {
            ts_ns,
            rx_bytes: interfaces.iter().map(|i| i.rx_bytes).sum(),
            tx_bytes: interfaces.iter().map(|i| i.tx_bytes).sum(),
        }
    }
}

/// MBytes (10^6 bytes) moved between the first and last sample. Any
/// decreasing counter between consecutive samples is reported as a wrap.
pub fn bandwidth_total(samples: &[NetSample]) -> Result<f64> {
    require(samples.len(), 2)?;
    for (index, w) in samples.windows(2).enumerate() {
        let counter = if w[1].rx_bytes < w[0].rx_bytes {
            "rx_bytes"
        } else if w[1].tx_bytes < w[0].tx_bytes {
            "tx_bytes"
        } else {
            continue;
        };
        return Err(MetricsError::CounterWrap {
            counter: counter.into(),
            index,
        });
    }
    let (first, last) = (samples[0], samples[samples.len() - 1]);
    let bytes = (last.rx_bytes - first.rx_bytes) + (last.tx_bytes - first.tx_bytes);
    Ok(bytes as f64 / 1e6)
}
