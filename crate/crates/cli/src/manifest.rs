//! Flat `key=value` run records.
//!
//! Every tunable is written as `name=value` followed by `name.source=...`,
//! where the source is `default`, `override`, `config` or a derivation label.
//! Nothing that depends on wall-clock time or thread count goes here, so
//! repeated runs produce identical manifests.

use std::path::Path;

use crate::error::CliResult;
use crate::table::write_text;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest::default();
        m.set("antac.version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn tunable(&mut self, key: &str, value: impl ToString, source: &str) {
        self.set(key, value);
        self.set(&format!("{key}.source"), source);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_text(path, &self.render())
    }

    /// Parse text produced by [`Manifest::render`].
    pub fn parse(text: &str) -> Manifest {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Manifest { entries }
    }
}

/// Non-reproducible facts about a run, kept apart from the manifest.
pub fn write_runtime(dir: &Path, threads: usize, elapsed: std::time::Duration) -> CliResult<()> {
    let text = format!(
        "threads={threads}\nelapsed_seconds={:.3}\n",
        elapsed.as_secs_f64()
    );
    write_text(&dir.join("runtime.txt"), &text)
}
