//! Output directory: JSON documents, CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    parallel: bool,
    command: &'a str,
    config: &'a ExperimentConfig,
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// Create the directory and write `manifest.json` into it.
    pub fn create(root: &Path, command: &str, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(root)?;
        let out = Self { root: root.to_path_buf() };
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: delaywave::VERSION,
            parallel: delaywave::exec::is_parallel(),
            command,
            config: cfg,
        };
        out.json("manifest.json", &manifest)?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        Ok(())
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }
}
