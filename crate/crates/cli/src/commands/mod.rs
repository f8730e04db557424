mod minmax;
mod mt_check;
mod probe;
mod psi;
mod report;
mod solve;
mod testfn;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use toda_core::functional::TodaParams;
use toda_core::geometry::cache_path;
use toda_core::testfamily::ScanGrid;
use toda_core::{Mesh, Surface};

use crate::config::{require_file, WeightSpec};
use crate::context::{run_job, Ctx, Outcome};
use crate::error::CliError;
use crate::spec::{point_from, FieldSpec};

pub use minmax::minmax;
pub use mt_check::{mt_check, Suite};
pub use probe::probe;
pub use psi::psi;
pub use report::report;
pub use solve::solve;
pub use testfn::{testfn_scan, ScanArgs};

pub fn mesh(ctx: &Ctx) -> Result<(), CliError> {
    let path = ctx.default_json("mesh");
    let config = json!({ "surface": ctx.surface.name(), "level": ctx.level, "mesh": ctx.mesh });
    run_job("mesh", &path, config, || {
        let m = ctx.mesh()?;
        let cache = match (&ctx.cache_dir, ctx.mesh.graded_foci.is_empty()) {
            (Some(d), true) => Some(cache_path(d, ctx.surface, ctx.level)),
            _ => None,
        };
        let result = json!({
            "surface": m.surface().name(),
            "level": m.level(),
            "vertices": m.num_vertices(),
            "triangles": m.triangles().len(),
            "max_edge": m.max_edge(),
            "area": m.mass().iter().sum::<f64>(),
            "fingerprint": format!("{:016x}", m.fingerprint()),
            "cache_file": cache,
        });
        Ok(Outcome { result, checks: vec![] })
    })
}

/// Path with the same stem and a new suffix, e.g. `scan.csv` → `scan-energy.csv`.
pub(crate) fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Weight specs from a JSON file `{"h1": "...", "h2": "..."}`, else from the config.
pub(crate) fn weights(ctx: &Ctx, file: Option<&Path>) -> Result<WeightSpec, CliError> {
    match file {
        Some(p) => {
            require_file(p)?;
            let f = File::open(p)?;
            serde_json::from_reader(BufReader::new(f))
                .map_err(|e| CliError::Config(format!("weight spec {}: {e}", p.display())))
        }
        None => Ok(ctx.h.clone()),
    }
}

pub(crate) fn params(mesh: &Mesh, rho: [f64; 2], w: &WeightSpec) -> Result<TodaParams, CliError> {
    let s = mesh.surface();
    let h = |spec: &Option<String>| -> Result<_, CliError> {
        spec.as_deref().map(|t| FieldSpec::parse(t, s)?.realize(mesh)).transpose()
    };
    Ok(TodaParams::new(mesh, rho[0], rho[1], h(&w.h1)?, h(&w.h2)?)?)
}

/// Two-sweep grid of test parameters; base points are snapped to vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn default_for(surface: Surface, n: usize) -> GridSpec {
        let (x1, x2) = match surface {
            Surface::Sphere => (vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]),
            Surface::FlatTorus => (vec![0.25, 0.25], vec![0.75, 0.75]),
        };
        GridSpec { x1, x2, lo: 0.01, hi: 0.05, n }
    }

    pub fn load(file: Option<&Path>, surface: Surface, n: usize) -> Result<GridSpec, CliError> {
        match file {
            Some(p) => {
                require_file(p)?;
                serde_json::from_reader(BufReader::new(File::open(p)?))
                    .map_err(|e| CliError::Config(format!("grid spec {}: {e}", p.display())))
            }
            None => Ok(GridSpec::default_for(surface, n)),
        }
    }

    pub fn build(&self, mesh: &Mesh) -> Result<ScanGrid, CliError> {
        let s = mesh.surface();
        let snap = |c: &[f64]| -> Result<_, CliError> { Ok(*mesh.point(mesh.nearest_vertex(&point_from(s, c)?))) };
        Ok(ScanGrid::log_uniform(snap(&self.x1)?, snap(&self.x2)?, self.lo, self.hi, self.n)?)
    }
}
