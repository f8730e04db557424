use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::json;
use toda_core::fields::bubble;
use toda_core::inequality::{
    ball_annulus_pair, ball_region, check_improved, check_local_mt, check_mt_system, write_margin_csv, ImprovedMode,
    MarginReport,
};
use toda_core::testfamily::ols_slope;
use toda_core::Field;

use super::sibling;
use crate::context::{run_job, Ctx, Outcome};
use crate::error::CliError;
use crate::output::{create, Check};
use crate::spec::default_center;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    System,
    Local,
    Improved,
    Ball,
    Annulus,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::System => "system",
            Suite::Local => "local",
            Suite::Improved => "improved",
            Suite::Ball => "ball",
            Suite::Annulus => "annulus",
        }
    }

    /// Half-decade sweeps. The ball radius `1/√(6λ)` must stay below the
    /// annulus radius 0.1, hence the later start for those suites.
    fn default_lambdas(self) -> Vec<f64> {
        let (start, steps) = match self {
            Suite::Improved => (10.0, 8),
            Suite::Ball | Suite::Annulus => (30.0, 3),
            _ => (10.0, 6),
        };
        (0..=steps).map(|k| start * 10f64.powf(k as f64 / 2.0)).collect()
    }
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - lo) / hi.abs().max(lo.abs())
}

pub fn mt_check(ctx: &Ctx, suite: Suite, lambdas: &[f64], eps: f64, out: Option<&Path>) -> Result<(), CliError> {
    let lambdas = if lambdas.is_empty() { suite.default_lambdas() } else { lambdas.to_vec() };
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(CliError::Config("bubble scales must be positive".into()));
    }
    let conc = ctx.concentration()?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| ctx.default_json(&format!("mt-check-{}", suite.name())));
    let config = json!({
        "surface": ctx.surface.name(), "level": ctx.level, "mesh": ctx.mesh, "concentration": conc,
        "suite": suite.name(), "lambdas": lambdas, "eps": eps,
    });
    run_job("mt-check", &path, config, || {
        let m = ctx.mesh()?;
        let p = *m.point(m.nearest_vertex(&default_center(ctx.surface)));
        let zero = Field::zeros(&m);
        let mut reports: Vec<MarginReport> = Vec::new();
        let mut checks = Vec::new();
        let mut extra = serde_json::Value::Null;
        match suite {
            Suite::System => {
                for &l in &lambdas {
                    let u = bubble(&m, &p, l)?;
                    reports.push(check_mt_system(&m, &u, &u)?.with_probe("equal").with_param("lambda", l));
                    reports.push(check_mt_system(&m, &u, &zero)?.with_probe("single").with_param("lambda", l));
                }
            }
            Suite::Local => {
                let (r1, gap) = (0.1, 0.05);
                let omega1 = ball_region(&m, &p, r1);
                let omega2 = ball_region(&m, &p, r1 + 2.0 * gap);
                for &l in &lambdas {
                    let u = bubble(&m, &p, l)?;
                    reports.push(
                        check_local_mt(&m, &u, &u, &omega1, &omega2, gap, eps)?
                            .with_probe("equal")
                            .with_param("lambda", l),
                    );
                }
            }
            Suite::Improved => {
                let mut equal = Vec::new();
                let mut single = Vec::new();
                for &l in &lambdas {
                    let u = bubble(&m, &p, l)?;
                    let e = check_improved(&m, &u, &u, ImprovedMode::EqualPsi { cfg: &conc, tol: 1e-9 }, eps)?;
                    let s = check_improved(&m, &u, &zero, ImprovedMode::Unconditional, eps)?;
                    equal.push((l, e.margin));
                    single.push((l, s.margin));
                    reports.push(e.with_probe("equal").with_param("lambda", l));
                    reports.push(s.with_probe("single").with_param("lambda", l));
                }
                let top = lambdas.iter().cloned().fold(0.0, f64::max);
                let tail: Vec<(f64, f64)> =
                    equal.iter().copied().filter(|(l, _)| *l >= top / 10.0 * (1.0 - 1e-9)).collect();
                let stail: Vec<(f64, f64)> =
                    single.iter().copied().filter(|(l, _)| *l >= top / 10.0 * (1.0 - 1e-9)).collect();
                if tail.len() >= 2 {
                    let sp = spread(&tail.iter().map(|x| x.1).collect::<Vec<_>>());
                    let slope = ols_slope(
                        &stail.iter().map(|x| x.0.ln()).collect::<Vec<_>>(),
                        &stail.iter().map(|x| x.1).collect::<Vec<_>>(),
                    );
                    checks.push(Check::new(
                        6,
                        "improved inequality",
                        sp < 0.05 && slope < -1.0,
                        format!("equal-ψ margin spread {sp:.3} over the last decade; single-component slope {slope:.2} per log λ"),
                    ));
                    extra = json!({ "plateau_spread": sp, "single_slope": slope });
                }
            }
            Suite::Ball | Suite::Annulus => {
                let mut worst: f64 = 0.0;
                let mut cancel = Vec::new();
                for &l in &lambdas {
                    let u = bubble(&m, &p, l)?;
                    let s = 1.0 / (6.0 * l).sqrt();
                    let (b, a, c) = ball_annulus_pair(&m, &u, &u, &p, s, 0.1, eps)?;
                    worst = worst.max(c.relative);
                    cancel.push(json!({ "lambda": l, "cancellation": c }));
                    reports.push(b.with_probe("equal").with_param("lambda", l));
                    reports.push(a.with_probe("equal").with_param("lambda", l));
                }
                checks.push(Check::new(
                    7,
                    "ball/annulus cancellation",
                    worst < 0.05,
                    format!("worst relative residual {worst:.4}"),
                ));
                extra = json!({ "cancellation": cancel });
            }
        }
        let mut w = create(&sibling(&path, ".csv"))?;
        write_margin_csv(&reports, &mut w)?;
        w.flush()?;
        Ok(Outcome { result: json!({ "suite": suite.name(), "reports": reports, "summary": extra }), checks })
    })
}
