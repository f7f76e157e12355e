//! Machine-readable record of one command invocation.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::FORMAT_VERSION;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub format_version: u32,
    pub crate_version: &'static str,
    pub config_hash: String,
    pub config: RunConfig,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub cache_hits: Vec<String>,
    pub cache_misses: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
    #[serde(skip)]
    clock: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str, config: &RunConfig, threads: usize) -> Self {
        Self {
            command: command.into(),
            format_version: FORMAT_VERSION,
            crate_version: env!("CARGO_PKG_VERSION"),
            config_hash: config.hash(),
            config: config.clone(),
            threads,
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_time_s: 0.0,
            cache_hits: Vec::new(),
            cache_misses: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
            clock: Some(Instant::now()),
        }
    }

    pub fn cache(&mut self, what: impl Into<String>, hit: bool) {
        if hit {
            self.cache_hits.push(what.into());
        } else {
            self.cache_misses.push(what.into());
        }
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Writes `manifest-<command>.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> CliResult<PathBuf> {
        self.wall_time_s = self.clock.map_or(0.0, |c| c.elapsed().as_secs_f64());
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(format!("manifest-{}.json", self.command));
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
