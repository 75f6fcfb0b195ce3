//! Run manifests: config echo, code version, wall-clock, per-check results,
//! calibrated constants, and a content hash for every exported file. Written
//! atomically (temp file + rename) at run end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::Result;

/// One recorded check outcome.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    /// Residual or rate, when the check is quantitative.
    pub residual: Option<f64>,
    pub detail: String,
}

impl CheckLine {
    pub fn render(&self) -> String {
        let mut s = format!(
            "{} {}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" }
        );
        if let Some(r) = self.residual {
            write!(s, " residual={r:e}").unwrap();
        }
        if !self.detail.is_empty() {
            write!(s, " # {}", self.detail).unwrap();
        }
        s
    }
}

/// Manifest accumulated over a run and serialized at the end.
pub struct RunManifest {
    pub name: String,
    pub command: String,
    pub backend: String,
    pub config: Config,
    pub checks: Vec<CheckLine>,
    pub constants: Vec<(String, f64)>,
    pub files: Vec<(PathBuf, String)>,
    started: std::time::Instant,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

/// Write a file atomically: temp sibling, then rename over the target.
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

impl RunManifest {
    pub fn new(name: &str, command: &str, backend: &str, config: &Config) -> Self {
        Self {
            name: name.to_string(),
            command: command.to_string(),
            backend: backend.to_string(),
            config: config.clone(),
            checks: Vec::new(),
            constants: Vec::new(),
            files: Vec::new(),
            started: std::time::Instant::now(),
        }
    }

    pub fn record_check(&mut self, name: &str, pass: bool, residual: Option<f64>, detail: &str) {
        self.checks.push(CheckLine {
            name: name.to_string(),
            pass,
            residual,
            detail: detail.to_string(),
        });
    }

    pub fn record_constant(&mut self, name: &str, value: f64) {
        self.constants.push((name.to_string(), value));
    }

    /// Write an artifact atomically and register its content hash.
    pub fn emit_file(&mut self, path: &Path, content: &[u8]) -> Result<()> {
        write_atomic(path, content)?;
        self.files.push((path.to_path_buf(), sha256_hex(content)));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# run manifest").unwrap();
        writeln!(s, "name = {}", self.name).unwrap();
        writeln!(s, "command = {}", self.command).unwrap();
        writeln!(s, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(s, "backend = {}", self.backend).unwrap();
        writeln!(s, "wall-clock-ms = {}", self.started.elapsed().as_millis()).unwrap();
        if !self.checks.is_empty() {
            writeln!(s, "\n# checks").unwrap();
            for c in &self.checks {
                writeln!(s, "check: {}", c.render()).unwrap();
            }
        }
        if !self.constants.is_empty() {
            writeln!(s, "\n# calibrated constants").unwrap();
            for (k, v) in &self.constants {
                writeln!(s, "constant: {k} = {v}").unwrap();
            }
        }
        if !self.files.is_empty() {
            writeln!(s, "\n# files").unwrap();
            for (p, h) in &self.files {
                let base = p.file_name().map(|f| f.to_string_lossy().into_owned());
                writeln!(s, "file: {} sha256={h}", base.unwrap_or_default()).unwrap();
            }
        }
        writeln!(s, "\n# config echo").unwrap();
        for line in self.config.to_text().lines() {
            writeln!(s, "config: {line}").unwrap();
        }
        s
    }

    /// Serialize and write the manifest atomically.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}
