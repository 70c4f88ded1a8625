use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenMode {
    #[default]
    NewTab,
}

fn default_name() -> String {
    "custom".into()
}

fn default_dwell() -> f64 {
    10.0
}

fn default_down() -> u32 {
    4
}

fn default_interaction() -> f64 {
    30.0
}

/// Pages to visit and how to interact with each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub pages: Vec<String>,
    #[serde(default = "default_dwell")]
    pub dwell_s: f64,
    #[serde(default = "default_down")]
    pub scroll_down: u32,
    /// Defaults to `scroll_down / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scroll_up: Option<u32>,
    #[serde(default = "default_interaction")]
    pub interaction_s: f64,
    #[serde(default)]
    pub open_mode: OpenMode,
}

impl WorkloadSpec {
    pub fn new(name: &str, pages: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            pages,
            dwell_s: default_dwell(),
            scroll_down: default_down(),
            scroll_up: None,
            interaction_s: default_interaction(),
            open_mode: OpenMode::NewTab,
        }
    }

    pub fn scroll_up(&self) -> u32 {
        self.scroll_up.unwrap_or(self.scroll_down / 2)
    }

    pub fn swipes_per_page(&self) -> u32 {
        self.scroll_down + self.scroll_up()
    }

    /// Time spent on one page: dwell plus the interaction window, or dwell
    /// alone when there are no swipes.
    pub fn page_duration_s(&self) -> f64 {
        if self.swipes_per_page() == 0 {
            self.dwell_s
        } else {
            self.dwell_s + self.interaction_s
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Config(format!("workload {:?}: {m}", self.name)));
        if self.pages.is_empty() {
            return fail("no pages".into());
        }
        if !(self.dwell_s > 0.0 && self.dwell_s.is_finite()) {
            return fail(format!("dwell_s must be positive, got {}", self.dwell_s));
        }
        if !(self.interaction_s >= 0.0 && self.interaction_s.is_finite()) {
            return fail(format!("interaction_s must be non-negative, got {}", self.interaction_s));
        }
        if self.swipes_per_page() > 0 && self.interaction_s == 0.0 {
            return fail("swipes need a positive interaction_s".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("workload: {e}")))?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `news` or `ads-free`.
    pub fn bundled(name: &str) -> Option<Self> {
        let text = match name.trim_end_matches(".json") {
            "news" => include_str!("../../workloads/news.json"),
            "ads-free" => include_str!("../../workloads/ads-free.json"),
            _ => return None,
        };
        Some(Self::from_json(text).expect("bundled workloads are valid"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists() {
        let news = WorkloadSpec::bundled("news").unwrap();
        assert_eq!(news.pages.len(), 10);
        assert_eq!(news.pages[0], "https://theblaze.com");
        assert_eq!(news.pages[9], "https://cnet.com");
        assert_eq!(news.scroll_up(), 2);
        assert_eq!(news.page_duration_s(), 40.0);
        let ads = WorkloadSpec::bundled("ads-free.json").unwrap();
        assert_eq!(ads.pages[8], "https://www.sarzamindownload.com/");
        assert!(WorkloadSpec::bundled("other").is_none());
    }

    #[test]
    fn defaults_and_overrides() {
        let w = WorkloadSpec::from_json(r#"{"pages":["https://a"],"scroll_down":5}"#).unwrap();
        assert_eq!((w.dwell_s, w.scroll_up(), w.interaction_s), (10.0, 2, 30.0));
        let w = WorkloadSpec::from_json(r#"{"pages":["https://a"],"scroll_down":0}"#).unwrap();
        assert_eq!(w.page_duration_s(), 10.0);
        let w = WorkloadSpec::from_json(r#"{"pages":["https://a"],"scroll_up":3}"#).unwrap();
        assert_eq!(w.scroll_up(), 3);
    }

    #[test]
    fn invalid() {
        assert!(WorkloadSpec::from_json(r#"{"pages":[]}"#).is_err());
        assert!(WorkloadSpec::from_json(r#"{"pages":["a"],"dwell_s":0}"#).is_err());
        assert!(WorkloadSpec::from_json(r#"{"pages":["a"],"interaction_s":0}"#).is_err());
        assert!(WorkloadSpec::from_json(r#"{"pages":["a"],"bogus":1}"#).is_err());
    }
}
