use std::io::Write;

use serde::Serialize;
use serde_json::json;
use toda_core::concentration::Scanner;
use toda_core::fields::density_of;
use toda_core::inequality::{check_mt_system, probe_corpus};
use toda_core::{ConcentrationConfig, Field, Mesh};

use super::sibling;
use crate::context::{run_job, Ctx, Outcome};
use crate::error::CliError;
use crate::output::{create, Check};

#[derive(Serialize)]
struct ProbeRow {
    probes: [String; 2],
    /// `max_x T(x, f_i)`
    max_t: [f64; 2],
    /// `σ(x0, f_i)` at the maximizer of `T`.
    sigma_x0: [f64; 2],
    /// Vertices with `σ(x0) ≥ 3σ(x)`.
    violations: [usize; 2],
    mt_margin: f64,
}

fn scale_scan(m: &Mesh, u: &Field, c: &ConcentrationConfig) -> Result<(f64, f64, usize), CliError> {
    let scan = Scanner::new(m, &density_of(m, u)?, c)?.full_scan();
    let (x0, &(s0, t0)) = scan.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("nonempty mesh");
    let bad = scan.iter().enumerate().filter(|(v, (s, _))| *v != x0 && !(s0 < 3.0 * s)).count();
    Ok((t0, s0, bad))
}

pub fn probe(ctx: &Ctx, n: Option<usize>) -> Result<(), CliError> {
    let n = n.unwrap_or(ctx.probes.n);
    let seed = ctx.probes.seed.unwrap_or(ctx.seed);
    let conc = ctx.concentration()?;
    let path = ctx.default_json("probe");
    let config = json!({
        "surface": ctx.surface.name(), "level": ctx.level, "mesh": ctx.mesh,
        "concentration": conc, "n": n, "seed": seed,
    });
    run_job("probe", &path, config, || {
        let m = ctx.mesh()?;
        let mut rows = Vec::new();
        for (a, b) in probe_corpus(ctx.surface, n, seed) {
            let (u1, u2) = (a.realize(&m)?, b.realize(&m)?);
            let (t1, s1, v1) = scale_scan(&m, &u1, &conc)?;
            let (t2, s2, v2) = scale_scan(&m, &u2, &conc)?;
            rows.push(ProbeRow {
                probes: [a.id(), b.id()],
                max_t: [t1, t2],
                sigma_x0: [s1, s2],
                violations: [v1, v2],
                mt_margin: check_mt_system(&m, &u1, &u2)?.margin,
            });
        }
        let mut w = create(&sibling(&path, ".csv"))?;
        writeln!(w, "probe1,probe2,max_t1,max_t2,sigma_x0_1,sigma_x0_2,violations1,violations2,mt_margin")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.probes[0],
                r.probes[1],
                r.max_t[0],
                r.max_t[1],
                r.sigma_x0[0],
                r.sigma_x0[1],
                r.violations[0],
                r.violations[1],
                r.mt_margin
            )?;
        }
        w.flush()?;
        let violations: usize = rows.iter().map(|r| r.violations[0] + r.violations[1]).sum();
        let low = rows.iter().flat_map(|r| r.max_t).filter(|t| !(*t > conc.tau)).count();
        let check = Check::new(
            3,
            "scale bounds",
            violations == 0 && low == 0 && n > 0,
            format!("{n} probe pairs: {violations} scale violations, {low} densities with max T ≤ τ = {:.4}", conc.tau),
        );
        Ok(Outcome { result: json!({ "tau": conc.tau, "rows": rows }), checks: vec![check] })
    })
}
