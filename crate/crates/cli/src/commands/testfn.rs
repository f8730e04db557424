use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde_json::json;
use toda_core::testfamily::{
    concentration_bounds_scan, energy_scan, integral_scaling_scan, write_bounds_csv, write_energy_csv,
    write_integral_csv,
};
use toda_core::XnuConfig;

use super::{params, sibling, weights, GridSpec};
use crate::context::{run_job, Ctx, Outcome};
use crate::error::CliError;
use crate::output::{create, Check};

pub struct ScanArgs<'a> {
    pub rho: Option<&'a str>,
    pub grid: Option<&'a Path>,
    pub h: Option<&'a Path>,
    pub out: Option<&'a Path>,
    pub delta: Option<f64>,
    pub nu: Option<f64>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn testfn_scan(ctx: &Ctx, a: &ScanArgs) -> Result<(), CliError> {
    let rho = ctx.rho(a.rho)?;
    let grid = GridSpec::load(a.grid, ctx.surface, 6)?;
    let w = weights(ctx, a.h)?;
    let delta = a.delta.or(ctx.concentration.delta).unwrap_or(0.2);
    let nu = a.nu.or(ctx.concentration.nu).unwrap_or(1.02 * grid.hi);
    let xcfg = XnuConfig::new(nu, delta)?;
    let csv = a.out.map(Path::to_path_buf).unwrap_or_else(|| ctx.out_dir.join("testfn-scan.csv"));
    let path = csv.with_extension("json");
    let config = json!({
        "surface": ctx.surface.name(), "level": ctx.level, "mesh": ctx.mesh,
        "rho": rho, "grid": grid, "h": w, "delta": delta, "nu": nu,
    });
    run_job("testfn-scan", &path, config, || {
        let m = ctx.mesh()?;
        let sg = grid.build(&m)?;
        let p = params(&m, rho, &w)?;
        let integral = integral_scaling_scan(&m, &sg, &xcfg)?;
        let energy = energy_scan(&m, &sg, &xcfg, &p)?;
        let bounds = concentration_bounds_scan(&m, &sg, &xcfg, 0.1, 1.0)?;
        let mut out = create(&csv)?;
        write_integral_csv(&integral, &mut out)?;
        out.flush()?;
        let mut out = create(&sibling(&csv, "-energy.csv"))?;
        write_energy_csv(&energy, &mut out)?;
        out.flush()?;
        let mut out = create(&sibling(&csv, "-bounds.csv"))?;
        write_bounds_csv(&bounds, &mut out)?;
        out.flush()?;

        let mut worst: f64 = 0.0;
        for k in 0..2 {
            worst = worst.max((integral.slopes[k][k] - 2.0).abs()).max((integral.slopes[1 - k][k] + 2.0).abs());
        }
        let mut law = Vec::new();
        let mut law_worst: f64 = 0.0;
        for r in [[4.5, 4.5], [5.0, 5.0], [6.0, 7.0]] {
            let r = r.map(|x| x * PI);
            let s = energy.j_slopes_at(r);
            let expected = r.map(|x| 2.0 * x - 8.0 * PI);
            law_worst = law_worst.max(rel(s[0], expected[0])).max(rel(s[1], expected[1]));
            law.push(json!({ "rho": r, "slopes": s, "expected": expected }));
        }
        let below = energy.j_slopes_at([3.75 * PI; 2]);
        let above = energy.j_slopes_at([4.25 * PI; 2]);
        let flips = below.iter().all(|x| *x < 0.0) && above.iter().all(|x| *x > 0.0);
        let checks = vec![
            Check::new(
                4,
                "integral exponents",
                worst < 0.1,
                format!(
                    "max slope error {worst:.4}; ratio band [{:.4}, {:.4}] on this level only",
                    integral.band[0], integral.band[1]
                ),
            ),
            Check::new(
                5,
                "energy law",
                law_worst < 0.15 && flips,
                format!("max rel slope error {law_worst:.3}; sign flip across 4π: {flips}"),
            ),
        ];
        let result = json!({
            "integral": integral, "energy": energy, "bounds": bounds,
            "energy_law": law, "flip": { "below": below, "above": above },
        });
        Ok(Outcome { result, checks })
    })
}
