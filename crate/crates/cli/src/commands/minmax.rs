use std::path::Path;

use serde_json::json;
use toda_core::solver::{minmax_estimate, MinmaxOptions};
use toda_core::{TestParams, XnuConfig};

use super::{params, weights, GridSpec};
use crate::context::{run_job, Ctx, Outcome};
use crate::error::CliError;
use crate::output::Check;

pub fn minmax(
    ctx: &Ctx,
    rho: Option<&str>,
    h: Option<&Path>,
    grid: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let rho = ctx.rho(rho)?;
    let w = weights(ctx, h)?;
    let grid = GridSpec::load(grid, ctx.surface, 4)?;
    let conc = ctx.concentration()?;
    let delta = ctx.concentration.delta.unwrap_or(0.2);
    let nu = ctx.concentration.nu.unwrap_or(1.02 * grid.hi);
    let xcfg = XnuConfig::new(nu, delta)?;
    let opts = MinmaxOptions::default();
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| ctx.default_json("minmax"));
    let config = json!({
        "surface": ctx.surface.name(), "level": ctx.level, "mesh": ctx.mesh, "rho": rho, "h": w,
        "grid": grid, "delta": delta, "nu": nu, "concentration": conc, "options": opts,
    });
    run_job("minmax", &path, config, || {
        let m = ctx.mesh()?;
        let p = params(&m, rho, &w)?;
        let thetas: Vec<TestParams> = grid.build(&m)?.params(&m, &xcfg)?.into_iter().map(|(_, th)| th).collect();
        let rep = minmax_estimate(&m, &thetas, &xcfg, &p, &conc, &opts)?;
        let gap = rep.alpha_upper.is_finite() && rep.grid_min_j < rep.alpha_upper - 10.0;
        let check = Check::new(
            10,
            "mountain-pass gap",
            gap,
            format!("alpha_upper {:.3}, grid min J {:.3}", rep.alpha_upper, rep.grid_min_j),
        );
        Ok(Outcome { result: serde_json::to_value(&rep)?, checks: vec![check] })
    })
}
