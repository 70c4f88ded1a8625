use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use super::command::AutomationScript;
use super::{AutomationError, Result};

/// Scripts stored as `<root>/<app_id>/<label>.json`.
///
/// Writes go through a temporary file and a rename, so readers never see
/// a partial script. Concurrent writers to one key: last rename wins.
#[derive(Debug, Clone)]
pub struct AutomationStore {
    root: PathBuf,
}

fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(AutomationError::InvalidName(name.to_string()))
    }
}

impl AutomationStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, app_id: &str, label: &str) -> Result<PathBuf> {
        check_name(app_id)?;
        check_name(label)?;
        Ok(self.root.join(app_id).join(format!("{label}.json")))
    }

    pub fn put(&self, app_id: &str, label: &str, script: &AutomationScript) -> Result<()> {
        if script.app_id != app_id || script.label != label {
            return Err(AutomationError::InvalidScript(format!(
                "script is for ({}, {}) but stored under ({app_id}, {label})",
                script.app_id, script.label
            )));
        }
        script.validate()?;
        let path = self.path(app_id, label)?;
        let dir = path.parent().expect("store paths have a parent");
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(script.to_json()?.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn get(&self, app_id: &str, label: &str) -> Result<AutomationScript> {
        let path = self.path(app_id, label)?;
        match std::fs::read_to_string(&path) {
            Ok(text) => AutomationScript::from_json(&text),
            Err(e) if e.kind() == ErrorKind::NotFound => Err(AutomationError::NotFound {
                app_id: app_id.to_string(),
                label: label.to_string(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    pub fn contains(&self, app_id: &str, label: &str) -> bool {
        self.path(app_id, label).map(|p| p.is_file()).unwrap_or(false)
    }

    /// Labels stored for `app_id`, sorted.
    pub fn list(&self, app_id: &str) -> Result<Vec<String>> {
        check_name(app_id)?;
        let dir = self.root.join(app_id);
        let entries = match std::fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut labels = Vec::new();
        for entry in entries {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(label) = name.strip_suffix(".json") {
                if check_name(label).is_ok() {
                    labels.push(label.to_string());
                }
            }
        }
        labels.sort();
        Ok(labels)
    }
}
