//! Configurable experiment runs writing CSV/JSON artifacts.
//!
//! A run reads a JSON config `{experiment, seed, output_dir, parameters}`,
//! validates the parameters against the experiment's schema, computes, and
//! writes its artifacts plus `manifest.json` into the output directory.
//! CSV and JSON artifacts depend only on the resolved config; the manifest
//! also records wall time.

mod config;
mod engines;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

pub use config::{
    apply_override, load_config, resolve, ConfigSources, Experiment, ExperimentConfig,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failure of a run, split by who has to fix it.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// The config names an unknown key or a value that fails validation.
    Config { key: String, message: String },
    /// The computation or I/O failed.
    Runtime { message: String },
}

impl RunError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn runtime(message: impl fmt::Display) -> Self {
        RunError::Runtime {
            message: message.to_string(),
        }
    }

    /// Process exit code: 2 for config problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => 2,
            RunError::Runtime { .. } => 1,
        }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            RunError::Config { key, .. } => Some(key),
            RunError::Runtime { .. } => None,
        }
    }

    /// Single-line JSON description.
    pub fn to_json(&self) -> String {
        let v = match self {
            RunError::Config { key, message } => {
                serde_json::json!({"error": "config", "key": key, "message": message})
            }
            RunError::Runtime { message } => {
                serde_json::json!({"error": "runtime", "message": message})
            }
        };
        v.to_string()
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config { key, message } => write!(f, "config error at {key}: {message}"),
            RunError::Runtime { message } => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::runtime(e)
    }
}

impl From<crate::Error> for RunError {
    fn from(e: crate::Error) -> Self {
        RunError::runtime(e)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_echo: Value,
    pub artifact_paths: Vec<String>,
    pub wall_time: f64,
    pub version: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Collects the files a run writes.
pub(crate) struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
    warnings: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| RunError::runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        f.write_all(bytes)?;
        f.flush()?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    /// Header line plus one line per row, LF-terminated.
    pub(crate) fn csv<I>(&mut self, name: &str, header: &str, rows: I) -> Result<(), RunError>
    where
        I: IntoIterator<Item = String>,
    {
        let mut s = String::with_capacity(1024);
        s.push_str(header);
        s.push('\n');
        for row in rows {
            s.push_str(&row);
            s.push('\n');
        }
        self.write_bytes(name, s.as_bytes())
    }

    pub(crate) fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut s = serde_json::to_string_pretty(value).map_err(RunError::runtime)?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    pub(crate) fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }
}

/// Everything a run needs besides the config document.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub sources: ConfigSources,
    /// Also write per-run trajectories where an experiment supports it.
    pub debug_dump: bool,
}

/// Loads, validates and runs the config at `config_path`.
pub fn run(config_path: &Path, options: &RunOptions) -> Result<RunManifest, RunError> {
    let config = load_config(config_path, &options.sources)?;
    run_config(&config, options.debug_dump)
}

pub fn run_config(config: &ExperimentConfig, debug_dump: bool) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let prepared = engines::prepare(config)?;
    let config_echo = serde_json::json!({
        "experiment": config.experiment,
        "seed": config.seed,
        "output_dir": config.output_dir.display().to_string(),
        "parameters": prepared.echo(),
    });
    let mut artifacts = Artifacts::new(&config.output_dir)?;
    prepared.execute(config.seed, debug_dump, &mut artifacts)?;
    let mut manifest = RunManifest {
        config_echo,
        artifact_paths: artifacts.written.clone(),
        wall_time: 0.0,
        version: VERSION.to_string(),
        warnings: artifacts.warnings.clone(),
    };
    let manifest_path = config.output_dir.join("manifest.json");
    manifest
        .artifact_paths
        .push(manifest_path.display().to_string());
    manifest.wall_time = start.elapsed().as_secs_f64();
    artifacts.json("manifest.json", &manifest)?;
    Ok(manifest)
}

/// One line per experiment, sorted by name: name, section, description.
pub fn list_experiments() -> String {
    let width = Experiment::ALL
        .iter()
        .map(|e| e.name().len())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for e in Experiment::ALL {
        out.push_str(&format!(
            "{:width$}  {:5} {}\n",
            e.name(),
            e.section(),
            e.description()
        ));
    }
    out
}
