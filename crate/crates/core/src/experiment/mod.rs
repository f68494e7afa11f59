//! Configuration-driven experiments: one TOML file describes a model, an optional
//! simulation, a region and the analysis settings; each command writes CSV and
//! JSON outputs into a directory.
//!
//! Every JSON output embeds the SHA-256 of the configuration text and the tool
//! version. Outputs are written to a temporary file and renamed into place.

mod commands;
mod config;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{DominanceError, ModelError, RegionError, SimError, SpectralError};

pub use commands::{load_certificate, BuiltModel, Command};
pub use config::{
    AnalysisConfig, BoundConfig, ExperimentConfig, Format, HillConfig, ModelConfig, ModelKind, OutputConfig,
    RegionConfig, SimulateConfig, UncertaintyConfig,
};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("numerical fault: {0}")]
    Numerical(String),
    #[error("certification failed: {0}")]
    Certification(String),
}

impl ExperimentError {
    /// 1 for usage and configuration errors, 2 for numerical faults, 3 when a
    /// certificate cannot be found or does not verify.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 1,
            Self::Numerical(_) => 2,
            Self::Certification(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Numerical(_) => "numerical",
            Self::Certification(_) => "certification",
        }
    }
}

impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> Self {
        Self::Config(format!("model: {e}"))
    }
}

impl From<SimError> for ExperimentError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidRequest(m) => Self::Config(format!("simulate: {m}")),
            e => Self::Numerical(e.to_string()),
        }
    }
}

impl From<RegionError> for ExperimentError {
    fn from(e: RegionError) -> Self {
        Self::Config(format!("region: {e}"))
    }
}

impl From<SpectralError> for ExperimentError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::InvalidRequest(_) | SpectralError::NoLoop(_) => Self::Config(format!("analysis: {e}")),
            e => Self::Numerical(e.to_string()),
        }
    }
}

impl From<DominanceError> for ExperimentError {
    fn from(e: DominanceError) -> Self {
        match e {
            DominanceError::Dimension(_) => Self::Config(e.to_string()),
            DominanceError::Region(r) => r.into(),
            DominanceError::Stalled(_) => Self::Numerical(e.to_string()),
            e => Self::Certification(e.to_string()),
        }
    }
}

/// A loaded configuration plus the command-line overrides.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    tool_version: &'a str,
    config_hash: &'a str,
    result: T,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
}

/// Hex SHA-256 of the configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Experiment {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let config = ExperimentConfig::parse(text)?;
        Ok(Self {
            out_dir: config.output.dir.clone(),
            formats: config.output.formats.clone(),
            config,
            config_hash: config_hash(text),
            seed: 0,
        })
    }

    /// Load a configuration file. A relative `output.dir` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut exp = Self::from_toml(&text).map_err(|e| match e {
            ExperimentError::Config(m) => ExperimentError::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        if exp.out_dir.is_relative() {
            if let Some(parent) = path.parent() {
                exp.out_dir = parent.join(&exp.out_dir);
            }
        }
        Ok(exp)
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = dir.into();
        self
    }

    /// Restrict outputs to one format.
    pub fn with_format(mut self, format: Format) -> Self {
        self.formats = vec![format];
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    /// Run a command; returns the files written.
    pub fn run(&self, command: &Command) -> Result<Vec<PathBuf>, ExperimentError> {
        let mut out = Outputs::new(self, command.name());
        command.execute(self, &mut out)?;
        Ok(out.written)
    }

    /// Write `error.json` describing a failed command.
    pub fn write_error(&self, command: &Command, err: &ExperimentError) -> Result<PathBuf, ExperimentError> {
        let mut out = Outputs::new(self, command.name());
        out.force_json(
            "error.json",
            &ErrorBody {
                kind: err.kind(),
                exit_code: err.exit_code(),
                message: err.to_string(),
            },
        )?;
        Ok(out.written.pop().expect("one file written"))
    }
}

/// Collects the files a command writes.
pub(crate) struct Outputs<'a> {
    exp: &'a Experiment,
    command: &'static str,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(exp: &'a Experiment, command: &'static str) -> Self {
        Self {
            exp,
            command,
            written: Vec::new(),
        }
    }

    pub(crate) fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), ExperimentError> {
        let path = self.exp.out_dir.join(name);
        write_atomic(&path, bytes).map_err(|source| ExperimentError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    pub(crate) fn csv(&mut self, name: &str, render: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), ExperimentError> {
        if !self.exp.wants(Format::Csv) {
            return Ok(());
        }
        let mut buf = Vec::new();
        render(&mut buf).expect("writing to memory");
        self.write(name, &buf)
    }

    /// JSON wrapped with the command name, config hash and tool version.
    pub(crate) fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<(), ExperimentError> {
        if !self.exp.wants(Format::Json) {
            return Ok(());
        }
        self.force_json(name, result)
    }

    fn force_json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<(), ExperimentError> {
        let env = Envelope {
            command: self.command,
            tool_version: TOOL_VERSION,
            config_hash: &self.exp.config_hash,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env).expect("outputs serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(ExperimentError::Config("x".into()).exit_code(), 1);
        assert_eq!(ExperimentError::from(SimError::Stiffness { t: 1.0, h: 1e-13 }).exit_code(), 2);
        assert_eq!(ExperimentError::from(DominanceError::Degenerate { tol: 1e-9 }).exit_code(), 3);
        assert_eq!(ExperimentError::from(DominanceError::Region(RegionError::Empty)).exit_code(), 1);
    }

    #[test]
    fn hash_is_hex_sha256() {
        let h = config_hash("");
        assert_eq!(h, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
