use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;
use toda_core::concentration::{default_tau, ConcentrationConfig};
use toda_core::geometry::load_or_build;
use toda_core::{Mesh, Surface};

use crate::config::{parse_surface, ConcentrationOverrides, MeshSpec, ProbeCorpusSpec, RunConfig, WeightSpec};
use crate::error::CliError;
use crate::output::{artifact, write_artifact, Check};

pub const CACHE_ENV: &str = "TODA_CACHE_DIR";

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub surface: Option<String>,
    pub level: Option<u32>,
}

/// Resolved settings.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub surface: Surface,
    pub level: u32,
    pub seed: u64,
    pub concentration: ConcentrationOverrides,
    pub probes: ProbeCorpusSpec,
    pub rho: Option<[f64; 2]>,
    pub h: WeightSpec,
    pub mesh: MeshSpec,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

impl Ctx {
    pub fn resolve(c: &Common) -> Result<Ctx, CliError> {
        let file = match &c.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let surface = parse_surface(c.surface.as_deref().or(file.surface.as_deref()).unwrap_or("sphere"))?;
        let level = c.level.or(file.level).unwrap_or(4);
        let out_dir = c.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("out"));
        let cache_dir = std::env::var_os(CACHE_ENV).map(PathBuf::from).or_else(|| Some(out_dir.join("cache")));
        Ok(Ctx {
            surface,
            level,
            seed: c.seed.or(file.seed).unwrap_or(0),
            concentration: file.concentration,
            probes: file.probes,
            rho: file.rho.map(|r| r.resolve()).transpose()?,
            h: file.h,
            mesh: file.mesh,
            out_dir,
            cache_dir,
        })
    }

    pub fn mesh(&self) -> Result<Mesh, CliError> {
        self.mesh_at(self.level)
    }

    pub fn mesh_at(&self, level: u32) -> Result<Mesh, CliError> {
        if !self.mesh.graded_foci.is_empty() {
            if self.surface != Surface::FlatTorus {
                return Err(CliError::Config("graded meshes are only available on the torus".into()));
            }
            let h_min = self.mesh.h_min.unwrap_or(1e-4);
            let ratio = self.mesh.ratio.unwrap_or(1.25);
            return Ok(Mesh::graded_torus(level, &self.mesh.graded_foci, h_min, ratio)?);
        }
        Ok(load_or_build(self.surface, level, self.cache_dir.as_deref())?)
    }

    pub fn concentration(&self) -> Result<ConcentrationConfig, CliError> {
        let o = &self.concentration;
        let r = o.r.unwrap_or(2.0);
        let base = ConcentrationConfig::default_for(self.surface, r)?;
        Ok(match o.delta {
            Some(d) => ConcentrationConfig::new(self.surface, r, d, default_tau(r))?,
            None => base,
        })
    }

    pub fn rho(&self, flag: Option<&str>) -> Result<[f64; 2], CliError> {
        match flag {
            Some(s) => crate::config::parse_rho(s),
            None => self.rho.ok_or_else(|| CliError::Config("no ρ given: pass --rho or set rho in the config".into())),
        }
    }

    pub fn default_json(&self, name: &str) -> PathBuf {
        self.out_dir.join(format!("{name}.json"))
    }
}

/// Result of a command: its payload and any acceptance evidence.
pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
}

/// Runs `body` and writes its artifact to `path`; numerical failures are
/// written as a failed artifact carrying the diagnostic.
pub fn run_job<F>(name: &str, path: &Path, config: Value, body: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<Outcome, CliError>,
{
    let start = Instant::now();
    match body() {
        Ok(out) => {
            for c in &out.checks {
                log::info!(
                    "criterion {} {}: {} ({})",
                    c.criterion,
                    c.name,
                    if c.pass { "pass" } else { "fail" },
                    c.detail
                );
            }
            write_artifact(path, &artifact(name, config, true, out.checks, out.result), start.elapsed())?;
            println!("{}", path.display());
            Ok(())
        }
        Err(CliError::Numerical { message, diagnostic }) => {
            let result = serde_json::json!({ "error": message, "diagnostic": diagnostic });
            write_artifact(path, &artifact(name, config, false, vec![], result), start.elapsed())?;
            Err(CliError::Numerical { message: format!("{message} (diagnostics in {})", path.display()), diagnostic })
        }
        Err(e) => Err(e),
    }
}
