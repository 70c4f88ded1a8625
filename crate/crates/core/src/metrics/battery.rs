use super::{require, BatterySample, MetricsError, Result};
use crate::exec::Execution;

const NS_PER_HOUR: f64 = 3.6e12;

/// A source of battery samples, such as a hardware power meter or the
/// simulator.
pub trait BatteryMeter: Send {
    fn start(&mut self) -> Result<()>;

    /// Ends recording and returns every sample taken since `start`.
    fn stop(&mut self) -> Result<Vec<BatterySample>>;
}

/// Trapezoidal integral of current over time, in mAh.
pub fn integrate_discharge(samples: &[BatterySample], exec: Execution) -> Result<f64> {
    require(samples.len(), 2)?;
    if let Some(i) = samples.windows(2).position(|w| w[1].ts_ns <= w[0].ts_ns) {
        return Err(MetricsError::NonMonotonicTimestamps(i + 1));
    }
    let ma_ns = exec.chunked_sum(0..samples.len() - 1, |i| {
        let (a, b) = (&samples[i], &samples[i + 1]);
        0.5 * (a.current_ma + b.current_ma) * (b.ts_ns - a.ts_ns) as f64
    });
    Ok(ma_ns / NS_PER_HOUR)
}

/// Samples whose timestamps fall in the closed window `[from_ns, to_ns]`.
pub fn trim_window(samples: &[BatterySample], from_ns: u64, to_ns: u64) -> &[BatterySample] {
    let lo = samples.partition_point(|s| s.ts_ns < from_ns);
    let hi = samples.partition_point(|s| s.ts_ns <= to_ns);
    &samples[lo..hi.max(lo)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn constant(ma: f64, secs: u64, hz: u64) -> Vec<BatterySample> {
        let step = 1_000_000_000 / hz;
        (0..=secs * hz)
            .map(|k| BatterySample {
                ts_ns: k * step,
                current_ma: ma,
                voltage_mv: 3850.0,
            })
            .collect()
    }

    #[test]
    fn constant_current() {
        let mah = integrate_discharge(&constant(150.0, 3600, 10), Execution::default()).unwrap();
        assert_relative_eq!(mah, 150.0, max_relative = 1e-12);
        let mah = integrate_discharge(&constant(360.0, 600, 10), Execution::default()).unwrap();
        assert_relative_eq!(mah, 60.0, max_relative = 1e-12);
    }

    #[test]
    fn linear_ramp() {
        let n = 36_000u64;
        let samples: Vec<_> = (0..=n)
            .map(|k| BatterySample {
                ts_ns: k * 100_000_000,
                current_ma: 100.0 * k as f64 / n as f64,
                voltage_mv: 3850.0,
            })
            .collect();
        let mah = integrate_discharge(&samples, Execution::Sequential).unwrap();
        assert_relative_eq!(mah, 50.0, max_relative = 1e-9);
    }

    #[test]
    fn too_few_and_unordered() {
        let one = constant(1.0, 0, 1);
        assert!(matches!(
            integrate_discharge(&one, Execution::default()),
            Err(MetricsError::TooFewSamples { needed: 2, got: 1 })
        ));
        let mut s = constant(1.0, 2, 1);
        s[2].ts_ns = s[1].ts_ns;
        assert!(matches!(
            integrate_discharge(&s, Execution::default()),
            Err(MetricsError::NonMonotonicTimestamps(2))
        ));
    }

    #[test]
    fn trim_is_closed() {
        let s = constant(1.0, 10, 1);
        let w = trim_window(&s, 2_000_000_000, 5_000_000_000);
        assert_eq!(w.len(), 4);
        assert_eq!(w[0].ts_ns, 2_000_000_000);
        assert!(trim_window(&s, 20_000_000_000, 30_000_000_000).is_empty());
    }

    proptest! {
        #[test]
        fn split_reintegrates(currents in prop::collection::vec(0.0f64..2000.0, 3..400), cut in 1usize..1000) {
            let samples: Vec<_> = currents
                .iter()
                .enumerate()
                .map(|(k, &c)| BatterySample { ts_ns: k as u64 * 666_667, current_ma: c, voltage_mv: 3850.0 })
                .collect();
            let k = 1 + cut % (samples.len() - 2);
            let whole = integrate_discharge(&samples, Execution::default()).unwrap();
            let parts = integrate_discharge(&samples[..=k], Execution::default()).unwrap()
                + integrate_discharge(&samples[k..], Execution::default()).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-9 * whole.abs().max(1e-12));
        }
    }
}
