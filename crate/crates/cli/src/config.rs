use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toda_core::Surface;

use crate::error::CliError;

/// Settings read from a TOML run file. Command-line flags override them.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surface: Option<String>,
    pub level: Option<u32>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// `"5pi,5pi"` or a pair of numbers.
    pub rho: Option<RhoSpec>,
    #[serde(default)]
    pub concentration: ConcentrationOverrides,
    #[serde(default)]
    pub probes: ProbeCorpusSpec,
    #[serde(default)]
    pub h: WeightSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    Text(String),
    Pair([f64; 2]),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationOverrides {
    pub r: Option<f64>,
    pub delta: Option<f64>,
    pub nu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeCorpusSpec {
    #[serde(default = "default_probe_count")]
    pub n: usize,
    pub seed: Option<u64>,
}

impl Default for ProbeCorpusSpec {
    fn default() -> Self {
        ProbeCorpusSpec { n: default_probe_count(), seed: None }
    }
}

fn default_probe_count() -> usize {
    50
}

/// Weight fields as field specs, e.g. `exp:a=0.5,axis=z`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub h1: Option<String>,
    pub h2: Option<String>,
}

/// Optional grading of torus meshes toward a few points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(default)]
    pub graded_foci: Vec<[f64; 2]>,
    pub h_min: Option<f64>,
    pub ratio: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn parse_surface(s: &str) -> Result<Surface, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "sphere" | "s2" => Ok(Surface::Sphere),
        "torus" | "flat_torus" | "flat-torus" | "t2" => Ok(Surface::FlatTorus),
        _ => Err(CliError::Config(format!("unknown surface {s:?}; expected sphere or torus"))),
    }
}

/// A number, optionally followed by `pi`.
fn parse_pi_number(tok: &str) -> Result<f64, CliError> {
    let t = tok.trim();
    let bad = || CliError::Config(format!("cannot parse {tok:?} as a number or multiple of pi"));
    let v = match t.strip_suffix("pi").or_else(|| t.strip_suffix("π")) {
        Some("") => PI,
        Some(c) => c.trim().trim_end_matches('*').parse::<f64>().map_err(|_| bad())? * PI,
        None => t.parse::<f64>().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn parse_rho(s: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a] => {
            let v = parse_pi_number(a)?;
            Ok([v, v])
        }
        [a, b] => Ok([parse_pi_number(a)?, parse_pi_number(b)?]),
        _ => Err(CliError::Config(format!("ρ must be one or two values, got {s:?}"))),
    }
}

impl RhoSpec {
    pub fn resolve(&self) -> Result<[f64; 2], CliError> {
        match self {
            RhoSpec::Text(s) => parse_rho(s),
            RhoSpec::Pair(p) => Ok(*p),
        }
    }
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("input file {} does not exist", path.display())))
    }
}
