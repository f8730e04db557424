use std::io::Write;
use std::path::Path;

use serde_json::json;
use toda_core::fields::write_field;
use toda_core::functional::{el_residual, weak_residual};
use toda_core::solver::continuation_solve;
use toda_core::{Field, Mesh, SolverConfig, SolverRun};

use super::{params, sibling, weights};
use crate::config::WeightSpec;
use crate::context::{run_job, Ctx, Outcome};
use crate::error::CliError;
use crate::output::{create, Check};

fn solve_on(m: &Mesh, rho: [f64; 2], w: &WeightSpec) -> Result<SolverRun, CliError> {
    let p = params(m, rho, w)?;
    Ok(continuation_solve(m, &SolverConfig::for_target(rho), &p)?)
}

/// Largest nodal difference relative to the fine solution's max norm.
fn refinement_gap(fine: &Mesh, coarse: &Mesh, a: &SolverRun, b: &SolverRun) -> Result<f64, CliError> {
    let idx = fine.embed_coarse(coarse)?;
    let diff = |u: &Field, v: &Field| {
        let d = idx.iter().enumerate().map(|(c, &f)| (u.values()[f] - v.values()[c]).abs()).fold(0.0, f64::max);
        d / u.max().abs().max(u.min().abs())
    };
    Ok(diff(&a.u1, &b.u1).max(diff(&a.u2, &b.u2)))
}

pub fn solve(
    ctx: &Ctx,
    rho: Option<&str>,
    h: Option<&Path>,
    out: Option<&Path>,
    compare: Option<u32>,
) -> Result<(), CliError> {
    let rho = ctx.rho(rho)?;
    let w = weights(ctx, h)?;
    let cfg = SolverConfig::for_target(rho);
    cfg.validate()?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| ctx.default_json("solve"));
    let config = json!({
        "surface": ctx.surface.name(), "level": ctx.level, "mesh": ctx.mesh,
        "rho": rho, "h": w, "solver": cfg, "compare_level": compare,
    });
    run_job("solve", &path, config, || {
        let m = ctx.mesh()?;
        let run = solve_on(&m, rho, &w)?;
        let p = params(&m, rho, &w)?;
        let (_, _, residual) = el_residual(&m, &p, &run.u1, &run.u2)?;
        let (w1, w2) = weak_residual(&m, &p, &run.u1, &run.u2)?;
        let zero_mean = w1.values().iter().sum::<f64>().abs().max(w2.values().iter().sum::<f64>().abs());
        let mut files = Vec::new();
        for (name, u) in [("-u1.bin", &run.u1), ("-u2.bin", &run.u2)] {
            let fp = sibling(&path, name);
            let mut f = create(&fp)?;
            write_field(u, &mut f)?;
            f.flush()?;
            files.push(fp.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string());
        }
        let refine = match compare {
            Some(l) => {
                let coarse = ctx.mesh_at(l)?;
                let other = solve_on(&coarse, rho, &w)?;
                Some(if l < ctx.level {
                    refinement_gap(&m, &coarse, &run, &other)?
                } else {
                    refinement_gap(&coarse, &m, &other, &run)?
                })
            }
            None => None,
        };
        let pass = residual < 1e-6 && zero_mean < 1e-9 && refine.is_none_or(|r| r < 0.02);
        let detail = match refine {
            Some(r) => format!("residual {residual:.2e}, zero-mean {zero_mean:.2e}, refinement gap {r:.4}"),
            None => format!("residual {residual:.2e}, zero-mean {zero_mean:.2e}, no refinement comparison"),
        };
        let result = json!({
            "method": run.method, "rho": run.rho, "converged": run.converged, "energy": run.energy,
            "residual_norm": run.residual_norm, "el_residual": residual, "zero_mean_residual": zero_mean,
            "observed_order": run.observed_order, "mesh_fingerprint": format!("{:016x}", run.mesh_fingerprint),
            "nodes": run.nodes, "trace": run.trace, "fields": files, "refinement_gap": refine,
            "u_max": [run.u1.max(), run.u2.max()], "u_min": [run.u1.min(), run.u2.min()],
        });
        Ok(Outcome { result, checks: vec![Check::new(10, "headline solve", pass, detail)] })
    })
}
