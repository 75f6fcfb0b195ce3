//! Line-oriented `key = value` configuration with `[section]` headers:
//! diff-able, canonically serializable, and embeddable in run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use kpzfp_core::colormap::ColorGridSpec;
use kpzfp_core::eternal::GridSpec;
use kpzfp_core::weight::{TailDescriptor, WeightFunction};
use kpzfp_core::SignedDirection;

use crate::error::{CliError, Result};

/// Parsed sections -> keys -> raw values, preserving nothing but content:
/// re-serialization is canonical (sorted sections and keys).
#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Config::default();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("line {}: unterminated section", lineno + 1)))?
                    .trim();
                if name.is_empty() {
                    return Err(CliError::Config(format!("line {}: empty section name", lineno + 1)));
                }
                current = name.to_string();
                out.sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() || current.is_empty() {
                return Err(CliError::Config(format!(
                    "line {}: key outside a section or empty",
                    lineno + 1
                )));
            }
            out.sections
                .get_mut(&current)
                .unwrap()
                .insert(key.to_string(), value.trim().to_string());
        }
        Ok(out)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialization: sorted sections and keys, LF endings.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, keys) in &self.sections {
            writeln!(s, "[{name}]").unwrap();
            for (k, v) in keys {
                writeln!(s, "{k} = {v}").unwrap();
            }
        }
        s
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| CliError::Config(format!("missing [{section}] {key}")))
    }

    pub fn parse_key<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("[{section}] {key} = {v:?}: unparseable value"))
            }),
        }
    }

    pub fn get_or<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.parse_key(section, key)?.unwrap_or(default))
    }

    fn list_f64(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("[{section}] {key}: expected comma-separated numbers"))),
        }
    }
}

/// Which landscape realization a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Parabolic,
    Lpp,
}

/// Parameters of the stochastic backend.
#[derive(Debug, Clone, Copy)]
pub struct LppParams {
    pub n: u32,
    pub horizon: i64,
    pub checks: usize,
    pub i_min: i64,
    pub i_max: i64,
    pub j_min: i64,
    pub j_max: i64,
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub backend: BackendKind,
    pub lpp: LppParams,
    pub phi: WeightFunction,
    pub scan: GridSpec,
    pub colorgrid: ColorGridSpec,
    pub suites: Vec<String>,
    pub replicas: usize,
    pub raw: Config,
}

impl RunConfig {
    pub fn from_config(cfg: Config) -> Result<Self> {
        let name = cfg.get("run", "name").unwrap_or("unnamed").to_string();
        let seed: u64 = cfg.get_or("run", "seed", 1)?;
        let out_dir = cfg.get("run", "out").map(PathBuf::from);

        let backend = match cfg.get("backend", "kind").unwrap_or("parabolic") {
            "parabolic" => BackendKind::Parabolic,
            "lpp" => BackendKind::Lpp,
            other => {
                return Err(CliError::Config(format!("[backend] kind = {other:?}: unknown backend")))
            }
        };
        let lpp = LppParams {
            n: cfg.get_or("backend", "n", 200)?,
            horizon: cfg.get_or("backend", "horizon", 150)?,
            checks: cfg.get_or("backend", "checks", 3)?,
            i_min: cfg.get_or("backend", "i_min", -80)?,
            i_max: cfg.get_or("backend", "i_max", 480)?,
            j_min: cfg.get_or("backend", "j_min", -80)?,
            j_max: cfg.get_or("backend", "j_max", 480)?,
        };

        let phi = Self::phi_from(&cfg)?;

        let scan = GridSpec {
            spacing: cfg.get_or("scan", "spacing", 0.05)?,
            refine_rounds: cfg.get_or("scan", "refine_rounds", 3)?,
        };
        if !(scan.spacing > 0.0) {
            return Err(CliError::Config("[scan] spacing must be positive".into()));
        }

        let mut colorgrid = ColorGridSpec::new(
            cfg.get_or("colorgrid", "x_min", -3.125)?,
            cfg.get_or("colorgrid", "x_max", 3.125)?,
            cfg.get_or("colorgrid", "dx", 0.25)?,
            cfg.get_or("colorgrid", "t_min", -1.5)?,
            cfg.get_or("colorgrid", "t_max", 0.0)?,
            cfg.get_or("colorgrid", "dt", 0.25)?,
        );
        colorgrid.max_ambiguous_fraction = cfg.get_or("colorgrid", "max_ambiguous", 0.01)?;

        let suites = cfg
            .get("verify", "suites")
            .unwrap_or("all")
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let replicas = cfg.get_or("verify", "replicas", 40)?;

        Ok(Self {
            name,
            seed,
            out_dir,
            backend,
            lpp,
            phi,
            scan,
            colorgrid,
            suites,
            replicas,
            raw: cfg,
        })
    }

    fn phi_from(cfg: &Config) -> Result<WeightFunction> {
        if let Some(path) = cfg.get("phi", "file") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read phi file {path}: {e}")))?;
            return WeightFunction::from_text(&text).map_err(CliError::Kpz);
        }
        let etas = cfg
            .list_f64("phi", "etas")?
            .unwrap_or_else(|| vec![-1.0, 0.0, 1.0]);
        let values = cfg
            .list_f64("phi", "values")?
            .unwrap_or_else(|| vec![0.0; etas.len()]);
        if etas.len() != values.len() {
            return Err(CliError::Config(format!(
                "[phi] {} etas but {} values",
                etas.len(),
                values.len()
            )));
        }
        let mut phi = WeightFunction::from_pairs(
            etas.iter()
                .zip(&values)
                .map(|(e, v)| (SignedDirection::minus(*e), *v)),
        );
        if let Some(alpha) = cfg.parse_key::<f64>("phi", "tail_alpha")? {
            let amp = cfg.get_or("phi", "tail_amplitude", 1.0)?;
            phi = phi.with_tail(TailDescriptor::power(alpha, amp));
        }
        Ok(phi)
    }

    /// Minus-tagged reference colors, in support order.
    pub fn reference_colors(&self) -> Vec<SignedDirection> {
        self.phi.atoms().map(|(xi, _)| *xi).collect()
    }
}
