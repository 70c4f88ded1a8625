use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gate::GateConfig;
use super::workload::WorkloadSpec;
use super::{PipelineError, Result};
use crate::adb::{DeviceProfile, DeviceSerial, PackageSource};
use crate::automation::AutomationStore;
use crate::metrics::InterfaceFilter;
use crate::sim::MAX_BRIGHTNESS;

/// How a browser is told to open a URL in a new tab.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpenUrl {
    /// `am start -a android.intent.action.VIEW -d <url> -p <package>`.
    #[default]
    Intent,
    /// A shell command with `{url}` and `{package}` placeholders. The URL
    /// is shell-quoted before substitution.
    Template { command: String },
    /// Replays a stored script that focuses a new tab's address bar, then
    /// types the URL and presses enter.
    Automation { label: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrowserSpec {
    pub name: String,
    pub package_id: String,
    pub launch_activity: String,
    /// Store id (`store:<id>`) or APK path. Defaults to the store listing of
    /// `package_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default)]
    pub open_url: OpenUrl,
}

impl BrowserSpec {
    pub fn package_source(&self) -> PackageSource {
        match &self.source {
            Some(s) => PackageSource::parse(s),
            None => PackageSource::Store(self.package_id.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomationEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onboarding: Option<String>,
    #[serde(default)]
    pub settings: Vec<String>,
}

/// Bundled name, file path, or inline spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorkloadRef {
    Named(String),
    Inline(WorkloadSpec),
}

fn default_runs() -> u32 {
    5
}

fn default_rate() -> f64 {
    1500.0
}

fn default_brightness() -> u16 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchJob {
    pub device: DeviceSerial,
    /// Screen geometry; queried from the device when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DeviceProfile>,
    pub browsers: Vec<BrowserSpec>,
    #[serde(default)]
    pub automation_dict: BTreeMap<String, AutomationEntry>,
    pub workload_dict: WorkloadRef,
    #[serde(default)]
    pub gate: GateConfig,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default = "default_rate")]
    pub battery_rate_hz: f64,
    #[serde(default = "default_brightness")]
    pub brightness: u16,
    #[serde(default)]
    pub interfaces: InterfaceFilter,
}

impl BenchJob {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("job: {e}")))
    }

    /// Loads a job file; a workload path is resolved against the job's
    /// directory and inlined.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut job = Self::from_json(&text)?;
        if let WorkloadRef::Named(name) = &job.workload_dict {
            if WorkloadSpec::bundled(name).is_none() {
                let base = path.parent().unwrap_or(Path::new("."));
                job.workload_dict = WorkloadRef::Inline(WorkloadSpec::load(&base.join(name))?);
            }
        }
        Ok(job)
    }

    pub fn workload(&self) -> Result<WorkloadSpec> {
        match &self.workload_dict {
            WorkloadRef::Inline(w) => {
                w.validate()?;
                Ok(w.clone())
            }
            WorkloadRef::Named(name) => match WorkloadSpec::bundled(name) {
                Some(w) => Ok(w),
                None => WorkloadSpec::load(Path::new(name)),
            },
        }
    }

    pub fn automation_for(&self, browser: &str) -> AutomationEntry {
        self.automation_dict.get(browser).cloned().unwrap_or_default()
    }

    /// Every label the job will replay for `browser`.
    pub fn labels_for(&self, browser: &BrowserSpec) -> Vec<String> {
        let entry = self.automation_for(&browser.name);
        let mut labels: Vec<String> = entry.onboarding.into_iter().chain(entry.settings).collect();
        if let OpenUrl::Automation { label } = &browser.open_url {
            labels.push(label.clone());
        }
        labels
    }

    /// Static checks, plus label resolution when a store is given.
    pub fn validate(&self, store: Option<&AutomationStore>) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.browsers.is_empty() {
            return fail("job lists no browsers".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if !(self.battery_rate_hz > 0.0) {
            return fail("battery_rate_hz must be positive".into());
        }
        if self.brightness > MAX_BRIGHTNESS {
            return fail(format!("brightness {} above {MAX_BRIGHTNESS}", self.brightness));
        }
        let mut names: Vec<&str> = self.browsers.iter().map(|b| b.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return fail("browser names must be unique".into());
        }
        for key in self.automation_dict.keys() {
            if !names.contains(&key.as_str()) {
                return fail(format!("automation_dict entry {key:?} matches no browser"));
            }
        }
        self.gate.validate()?;
        self.workload()?;
        if let Some(store) = store {
            for browser in &self.browsers {
                for label in self.labels_for(browser) {
                    if !store.contains(&browser.package_id, &label) {
                        return Err(PipelineError::MissingAutomation {
                            app_id: browser.package_id.clone(),
                            label,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}
