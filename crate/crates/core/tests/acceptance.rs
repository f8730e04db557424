//! Acceptance suite. Prints one line per criterion; run a subset by passing
//! criterion numbers as arguments.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toda_core::concentration::{analyze, ConcentrationConfig, ConePoint, Scanner};
use toda_core::fields::{bubble, density_of, flat_patch_bubble_mass, Field};
use toda_core::functional::{el_residual, weak_residual, TodaParams};
use toda_core::geometry::{Mesh, Surface};
use toda_core::inequality::{ball_annulus_pair, check_improved, probe_corpus, random_point, ImprovedMode};
use toda_core::solver::{continuation_solve, minmax_estimate, MinmaxOptions, SolverConfig, SolverRun};
use toda_core::testfamily::{
    energy_scan, integral_scaling_scan, ols_slope, retract_to_xnu, retract_traced, t_nu_map, ScanGrid, TestParams,
    XnuConfig,
};
use toda_core::TodaError;

/// Criteria that fail on this code base; see the README for the analysis.
const EXPECTED_FAILURES: &[usize] = &[10];

type Criterion = (usize, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn nearest(m: &Mesh, x: toda_core::Point) -> toda_core::Point {
    *m.point(m.nearest_vertex(&x))
}

fn bubble_calibration() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for lambda in [1e2, 1e3, 1e4] {
        let mass = flat_patch_bubble_mass(lambda, 1200);
        worst = worst.max(rel(mass, 4.0 * PI));
        parts.push(format!("λ={lambda:.0e}: {mass:.5}"));
    }
    verdict(worst < 0.01, format!("{} (4π = {:.5}), worst rel err {worst:.2e} < 1e-2", parts.join(", "), 4.0 * PI))
}

fn concentration_scaling() -> Verdict {
    let center = Surface::torus_point(0.5, 0.5);
    let m = Mesh::graded_torus(4, &[[0.5, 0.5]], 1e-4, 1.25).unwrap();
    let c = ConcentrationConfig::default_for(Surface::FlatTorus, 2.0).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut beta_ok = true;
    let mut beta_checked = 0;
    let mut min_mass = f64::INFINITY;
    for k in 0..7 {
        let lambda = 1e2 * 10f64.powf(k as f64 / 2.0);
        let f = density_of(&m, &bubble(&m, &center, lambda).unwrap()).unwrap();
        let rep = analyze(&m, &f, &c).unwrap();
        xs.push(lambda.ln());
        ys.push(rep.sigma_f.ln());
        if let Some(b) = rep.beta.point() {
            beta_checked += 1;
            beta_ok &= Surface::FlatTorus.geodesic_distance(b, &center) <= 2.0 * m.max_edge();
        }
        min_mass = min_mass.min(rep.witness_masses[0].min(rep.witness_masses[1]));
    }
    let slope = ols_slope(&xs, &ys);
    let pass = rel(slope, -0.5) < 0.05 && beta_ok && beta_checked >= 3 && min_mass > c.tau;
    verdict(
        pass,
        format!(
            "slope {slope:.4} (−1/2 ± 5%), β within 2 edges at {beta_checked}/7 non-apex samples: {beta_ok}, min witness mass {min_mass:.3} > τ = {:.4}",
            c.tau
        ),
    )
}

fn scale_bounds() -> Verdict {
    let m = Mesh::build(Surface::Sphere, 4).unwrap();
    let c = ConcentrationConfig::default_for(Surface::Sphere, 2.0).unwrap();
    let mut violations = 0;
    let mut low_t = 0;
    let mut count = 0;
    for (a, _) in probe_corpus(Surface::Sphere, 50, 2024) {
        let f = density_of(&m, &a.realize(&m).unwrap()).unwrap();
        let scan = Scanner::new(&m, &f, &c).unwrap().full_scan();
        let (x0, &(s0, t0)) = scan.iter().enumerate().max_by(|p, q| p.1 .1.total_cmp(&q.1 .1)).unwrap();
        violations += scan.iter().enumerate().filter(|(v, (s, _))| *v != x0 && !(s0 < 3.0 * s)).count();
        low_t += usize::from(!(t0 > c.tau));
        count += 1;
    }
    verdict(
        violations == 0 && low_t == 0,
        format!(
            "{count} probes × {} vertices: {violations} scale violations, {low_t} probes with max T ≤ τ",
            m.num_vertices()
        ),
    )
}

fn scan_setup(level: u32) -> (Mesh, ScanGrid, XnuConfig) {
    let m = Mesh::build(Surface::FlatTorus, level).unwrap();
    let x1 = nearest(&m, Surface::torus_point(0.25, 0.25));
    let x2 = nearest(&m, Surface::torus_point(0.75, 0.75));
    let grid = ScanGrid::log_uniform(x1, x2, 0.01, 0.05, 6).unwrap();
    (m, grid, XnuConfig::new(0.051, 0.2).unwrap())
}

fn integral_exponents() -> Verdict {
    let mut bands = Vec::new();
    let mut worst: f64 = 0.0;
    for level in [4, 5] {
        let (m, grid, cfg) = scan_setup(level);
        let s = integral_scaling_scan(&m, &grid, &cfg).unwrap();
        for k in 0..2 {
            worst = worst.max((s.slopes[k][k] - 2.0).abs()).max((s.slopes[1 - k][k] + 2.0).abs());
        }
        bands.push(s.band);
    }
    let agree = (0..2).map(|e| rel(bands[0][e], bands[1][e])).fold(0.0, f64::max);
    verdict(
        worst < 0.1 && agree < 0.2,
        format!(
            "max slope error {worst:.4} < 0.1; bands {:?} vs {:?} differ by {:.2e} < 20%",
            bands[0], bands[1], agree
        ),
    )
}

fn energy_law() -> Verdict {
    let (m, grid, cfg) = scan_setup(5);
    let p = TodaParams::uniform(&m, 5.0 * PI, 5.0 * PI).unwrap();
    let s = energy_scan(&m, &grid, &cfg, &p).unwrap();
    let mut worst: f64 = 0.0;
    for rho in [[4.5, 4.5], [5.0, 5.0], [6.0, 7.0]] {
        let rho = [rho[0] * PI, rho[1] * PI];
        let sl = s.j_slopes_at(rho);
        for k in 0..2 {
            worst = worst.max(rel(sl[k], 2.0 * rho[k] - 8.0 * PI));
        }
    }
    let eps = 0.25 * PI;
    let below = s.j_slopes_at([4.0 * PI - eps, 4.0 * PI - eps]);
    let above = s.j_slopes_at([4.0 * PI + eps, 4.0 * PI + eps]);
    let flips = below.iter().all(|x| *x < 0.0) && above.iter().all(|x| *x > 0.0);
    verdict(
        worst < 0.15 && flips,
        format!(
            "max rel slope error {worst:.3} < 0.15; at 4π∓π/4 slopes {:.3}/{:.3} (bounded below / divergent): {flips}",
            below[0], above[0]
        ),
    )
}

fn improved_inequality() -> Verdict {
    let m = Mesh::graded_torus(5, &[[0.5, 0.5]], 1e-4, 1.25).unwrap();
    let c = ConcentrationConfig::default_for(Surface::FlatTorus, 2.0).unwrap();
    let p = Surface::torus_point(0.5, 0.5);
    let z = Field::zeros(&m);
    let lambdas: Vec<f64> = (0..9).map(|k| 10.0 * 10f64.powf(k as f64 / 2.0)).collect();
    let mut equal = Vec::new();
    let mut single = Vec::new();
    for &lam in &lambdas {
        let u = bubble(&m, &p, lam).unwrap();
        equal.push(check_improved(&m, &u, &u, ImprovedMode::EqualPsi { cfg: &c, tol: 1e-9 }, 0.0).unwrap().margin);
        single.push(check_improved(&m, &u, &z, ImprovedMode::Unconditional, 0.0).unwrap().margin);
    }
    let tail = &equal[6..];
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let plateau = (hi - lo) / hi.abs().max(lo.abs());
    let xs: Vec<f64> = lambdas[6..].iter().map(|l| l.ln()).collect();
    let slope = ols_slope(&xs, &single[6..]);
    let decreasing = single.windows(2).skip(2).all(|w| w[1] < w[0]);
    verdict(
        plateau < 0.05 && slope < -1.0 && decreasing,
        format!(
            "equal-ψ margins over λ = 10..1e5 {equal:.2?}, spread {plateau:.3} over the last decade < 5%; single-component margins fall monotonically, slope {slope:.2} per log λ"
        ),
    )
}

fn ball_annulus() -> Verdict {
    let m = Mesh::build(Surface::Sphere, 6).unwrap();
    let p = *m.point(0);
    let mut worst: f64 = 0.0;
    for lam in [30.0, 100.0, 300.0] {
        let u = bubble(&m, &p, lam).unwrap();
        let s = 1.0 / (6.0f64 * lam).sqrt();
        let (_, _, c) = ball_annulus_pair(&m, &u, &u, &p, s, 0.1, 0.01).unwrap();
        worst = worst.max(c.relative);
    }
    verdict(worst < 0.05, format!("worst relative residual of the correction terms {worst:.4} < 5%"))
}

fn random_cone_point<R: Rng>(s: Surface, delta: f64, rng: &mut R) -> ConePoint {
    if rng.gen_bool(0.15) {
        ConePoint::Apex
    } else {
        ConePoint::Point { x: random_point(s, rng), t: delta * 10f64.powf(-rng.gen_range(0.0..6.0)) }
    }
}

fn retraction_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut n, mut member, mut idem, mut mono) = (0, 0, 0, 0);
    for s in [Surface::Sphere, Surface::FlatTorus] {
        let delta = ConcentrationConfig::default_for(s, 2.0).unwrap().delta;
        let cfg = XnuConfig::with_default_nu(delta).unwrap();
        let mut k = 0;
        while k < 500 {
            let th = match TestParams::new(
                random_cone_point(s, delta, &mut rng),
                random_cone_point(s, delta, &mut rng),
                s,
                delta,
            ) {
                Ok(th) => th,
                Err(TodaError::Precondition(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            k += 1;
            n += 1;
            let r = retract_traced(&th, &cfg, s).unwrap();
            member += usize::from(cfg.contains(&r.output, s));
            idem += usize::from(retract_to_xnu(&r.output, &cfg, s).unwrap() == r.output);
            let gaps: Vec<f64> = r.h1.iter().map(|f| (f.t[0] - f.t[1]).abs()).collect();
            mono += usize::from(gaps.windows(2).all(|w| w[0] > delta / 4.0 || w[1] >= w[0]));
        }
    }
    verdict(
        member == n && idem == n && mono == n,
        format!("{n} points: {member} in X_ν, {idem} exact fixed points, {mono} with nondecreasing |t₁−t₂| along H1"),
    )
}

fn t_nu_near_identity() -> Verdict {
    let foci = [[0.25, 0.25], [0.75, 0.6]];
    let m = Mesh::graded_torus(5, &foci, 1e-5, 1.25).unwrap();
    let conc = ConcentrationConfig::default_for(Surface::FlatTorus, 2.0).unwrap();
    let cfg = XnuConfig::new(0.01, conc.delta).unwrap();
    let x1 = Surface::torus_point(foci[0][0], foci[0][1]);
    let x2 = Surface::torus_point(foci[1][0], foci[1][1]);
    let mut bounds = Vec::new();
    for k in 0..5 {
        let t = 1e-4 * 10f64.powf(k as f64 / 2.0);
        let single =
            TestParams::new(ConePoint::Point { x: x1, t }, ConePoint::Apex, Surface::FlatTorus, cfg.delta).unwrap();
        let pair = TestParams::points(x1, t, x2, t, Surface::FlatTorus, cfg.delta).unwrap();
        for th in [single, pair] {
            bounds.push(t_nu_map(&m, &th, &cfg, &conc).unwrap().diagnostics.bound);
        }
    }
    let hi = bounds.iter().cloned().fold(0.0, f64::max);
    let lo = bounds.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        hi / lo < 2.0,
        format!(
            "t ∈ [1e-4, 1e-2], {} vertices: bound ∈ [{lo:.3}, {hi:.3}], ratio {:.3} < 2",
            m.num_vertices(),
            hi / lo
        ),
    )
}

fn headline_params(m: &Mesh) -> TodaParams {
    let h1 = Field::from_fn(m, |p| (0.5 * p[2]).exp()).unwrap();
    let h2 = Field::from_fn(m, |p| (-0.5 * p[2]).exp()).unwrap();
    TodaParams::new(m, 5.0 * PI, 5.0 * PI, Some(h1), Some(h2)).unwrap()
}

fn headline_run(level: u32) -> (Mesh, TodaParams, Result<SolverRun, TodaError>) {
    let m = Mesh::build(Surface::Sphere, level).unwrap();
    let p = headline_params(&m);
    let run = continuation_solve(&m, &SolverConfig::for_target(p.rho()), &p);
    (m, p, run)
}

fn describe(e: &TodaError) -> String {
    match e {
        TodaError::Solver(f) => {
            let last = f.completed.last().map(|n| n.rho[0] / PI).unwrap_or(f64::NAN);
            format!("failed at node {:?} ({}), last converged ρ = {last:.4}π", f.node, f.message)
        }
        other => other.to_string(),
    }
}

fn headline() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    let (m5, p5, r5) = headline_run(5);
    let (m4, _, r4) = headline_run(4);
    match (&r5, &r4) {
        (Ok(a), Ok(b)) => {
            let (_, _, res) = el_residual(&m5, &p5, &a.u1, &a.u2).unwrap();
            let (w1, w2) = weak_residual(&m5, &p5, &a.u1, &a.u2).unwrap();
            let zero_mean = w1.values().iter().sum::<f64>().abs().max(w2.values().iter().sum::<f64>().abs());
            let idx = m5.embed_coarse(&m4).unwrap();
            let diff = |u: &Field, v: &Field| {
                let d = idx.iter().enumerate().map(|(c, &f)| (u.values()[f] - v.values()[c]).abs()).fold(0.0, f64::max);
                d / u.max().abs().max(u.min().abs())
            };
            let refine = diff(&a.u1, &b.u1).max(diff(&a.u2, &b.u2));
            pass &= res < 1e-6 && zero_mean < 1e-9 && refine < 0.02;
            parts.push(format!("residual {res:.2e}, zero-mean {zero_mean:.2e}, level 4/5 max-norm diff {refine:.4}"));
        }
        _ => {
            pass = false;
            for (l, r) in [(5, &r5), (4, &r4)] {
                if let Err(e) = r {
                    parts.push(format!("level {l} continuation {}", describe(e)));
                }
            }
        }
    }
    let conc = ConcentrationConfig::default_for(Surface::Sphere, 2.0).unwrap();
    let xcfg = XnuConfig::new(0.051, 0.2).unwrap();
    let x1 = *m5.point(0);
    let x2 = nearest(&m5, Surface::sphere_point([0.0, 0.0, -1.0]));
    let grid: Vec<TestParams> = ScanGrid::log_uniform(x1, x2, 0.01, 0.05, 4)
        .unwrap()
        .params(&m5, &xcfg)
        .unwrap()
        .into_iter()
        .map(|(_, th)| th)
        .collect();
    let rep = minmax_estimate(&m5, &grid, &xcfg, &p5, &conc, &MinmaxOptions::default()).unwrap();
    let gap = rep.alpha_upper.is_finite() && rep.grid_min_j < rep.alpha_upper - 10.0;
    pass &= gap;
    parts.push(format!("alpha_upper {:.3}, grid min J {:.3}, gap > 10: {gap}", rep.alpha_upper, rep.grid_min_j));
    verdict(pass, parts.join("; "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "bubble calibration", bubble_calibration),
        (2, "concentration scaling", concentration_scaling),
        (3, "scale bounds on a probe corpus", scale_bounds),
        (4, "integral exponents", integral_exponents),
        (5, "energy law", energy_law),
        (6, "improved inequality", improved_inequality),
        (7, "ball/annulus cancellation", ball_annulus),
        (8, "retraction suite", retraction_suite),
        (9, "T_ν near identity", t_nu_near_identity),
        (10, "headline solve", headline),
    ];
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (n, name, f) in criteria {
        if !picked.is_empty() && !picked.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let status = match (v.pass, EXPECTED_FAILURES.contains(&n)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => {
                unexpected.push(n);
                "FAIL"
            }
        };
        println!("criterion {n:>2} {name}: {status} [{:.1}s] {}", start.elapsed().as_secs_f64(), v.detail);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
