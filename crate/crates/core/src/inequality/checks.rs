use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{psi_pair, select_separated_sets, ConcentrationConfig};
use crate::error::{Result, TodaError};
use crate::fields::{log_int_exp, log_int_exp_raw, mean, q_form, region_q_form, Field};
use crate::geometry::{Mesh, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub check: String,
    pub probe: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub margin: f64,
    /// `ū1(s) + ū2(s) + 4 log s`, for the ball and annulus checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

impl MarginReport {
    fn new(check: &str, lhs: f64, rhs: f64, params: &[(&str, f64)]) -> Result<MarginReport> {
        if !lhs.is_finite() || !rhs.is_finite() {
            return Err(TodaError::Numerical(format!("{check}: non-finite sides lhs = {lhs}, rhs = {rhs}")));
        }
        Ok(MarginReport {
            check: check.to_string(),
            probe: String::new(),
            lhs,
            rhs,
            margin: rhs - lhs,
            correction: None,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        })
    }

    pub fn with_probe(mut self, id: impl Into<String>) -> MarginReport {
        self.probe = id.into();
        self
    }

    pub fn with_param(mut self, key: &str, value: f64) -> MarginReport {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Vertices with `d(center, ·) ≤ radius`.
pub fn ball_region(mesh: &Mesh, center: &Point, radius: f64) -> Vec<usize> {
    annulus_region(mesh, center, f64::NEG_INFINITY, radius)
}

/// Vertices with `a ≤ d(center, ·) ≤ b`.
pub fn annulus_region(mesh: &Mesh, center: &Point, a: f64, b: f64) -> Vec<usize> {
    let s = mesh.surface();
    (0..mesh.num_vertices()).filter(|&k| (a..=b).contains(&s.geodesic_distance(center, mesh.point(k)))).collect()
}

fn indicator(n: usize, region: &[usize]) -> Vec<bool> {
    let mut v = vec![false; n];
    for &k in region {
        v[k] = true;
    }
    v
}

fn check_region(mesh: &Mesh, region: &[usize], name: &str) -> Result<()> {
    if region.is_empty() {
        return Err(TodaError::Domain(format!("region {name} contains no vertex")));
    }
    if region.iter().any(|&k| k >= mesh.num_vertices()) {
        return Err(TodaError::Domain(format!("region {name} has an out-of-range vertex")));
    }
    Ok(())
}

fn check_pair(mesh: &Mesh, u1: &Field, u2: &Field) -> Result<()> {
    u1.check_mesh(mesh)?;
    u2.check_mesh(mesh)
}

fn mean_over(mesh: &Mesh, u: &[f64], region: &[usize]) -> f64 {
    let m = mesh.mass();
    let (a, b) = region.iter().fold((0.0, 0.0), |(a, b), &k| (a + m[k] * u[k], b + m[k]));
    a / b
}

/// Distance from `omega1` to the complement of `omega2` (infinite when
/// `omega2` is everything).
pub fn region_gap(mesh: &Mesh, omega1: &[usize], omega2: &[usize]) -> f64 {
    let inside2 = indicator(mesh.num_vertices(), omega2);
    if inside2.iter().all(|&b| b) {
        return f64::INFINITY;
    }
    let s = mesh.surface();
    let outside: Vec<usize> = (0..mesh.num_vertices()).filter(|&k| !inside2[k]).collect();
    omega1
        .par_iter()
        .map(|&a| {
            outside.iter().map(|&b| s.geodesic_distance(mesh.point(a), mesh.point(b))).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// `4π Σ (log∫e^{u_i} − ū_i)` against `∫Q(u1, u2)`.
pub fn check_mt_system(mesh: &Mesh, u1: &Field, u2: &Field) -> Result<MarginReport> {
    check_pair(mesh, u1, u2)?;
    let lhs =
        4.0 * PI * (log_int_exp(mesh, None, u1)? - mean(mesh, u1)? + log_int_exp(mesh, None, u2)? - mean(mesh, u2)?);
    let rhs = q_form(mesh, u1, u2)?;
    MarginReport::new("system", lhs, rhs, &[])
}

/// Local inequality on `Ω1 ⊂ Ω2` with `d(Ω1, ∂Ω2) ≥ δ`.
pub fn check_local_mt(
    mesh: &Mesh,
    u1: &Field,
    u2: &Field,
    omega1: &[usize],
    omega2: &[usize],
    delta: f64,
    eps: f64,
) -> Result<MarginReport> {
    check_pair(mesh, u1, u2)?;
    check_region(mesh, omega1, "omega1")?;
    check_region(mesh, omega2, "omega2")?;
    let inside2 = indicator(mesh.num_vertices(), omega2);
    if omega1.iter().any(|&k| !inside2[k]) {
        return Err(TodaError::Precondition("omega1 is not contained in omega2".into()));
    }
    let gap = region_gap(mesh, omega1, omega2);
    if gap < delta {
        return Err(TodaError::Precondition(format!("d(omega1, boundary of omega2) = {gap} < delta = {delta}")));
    }
    let m = mesh.mass();
    let (a, b) = (u1.values(), u2.values());
    let lhs = 4.0
        * PI
        * (log_int_exp_raw(m, None, a, Some(omega1)) + log_int_exp_raw(m, None, b, Some(omega1))
            - mean_over(mesh, a, omega2)
            - mean_over(mesh, b, omega2));
    let rhs = (1.0 + eps) * region_q_form(mesh, a, b, &inside2);
    MarginReport::new("local", lhs, rhs, &[("eps", eps), ("delta", delta), ("gap", gap.min(f64::MAX))])
}

/// Hypothesis under which the improved constant is tested.
#[derive(Clone, Copy, Debug)]
pub enum ImprovedMode<'a> {
    /// Mass spread over two separated pairs of regions for each component.
    Separated { regions: &'a [[Vec<usize>; 2]; 2], delta0: f64, gamma0: f64 },
    /// `ψ(f1) = ψ(f2)` within `tol`.
    EqualPsi { cfg: &'a ConcentrationConfig, tol: f64 },
    /// No hypothesis; used to show that one is needed.
    Unconditional,
}

/// `8π Σ log∫e^{u_i − ū_i}` against `(1+ε)∫Q`.
pub fn check_improved(mesh: &Mesh, u1: &Field, u2: &Field, mode: ImprovedMode<'_>, eps: f64) -> Result<MarginReport> {
    check_pair(mesh, u1, u2)?;
    let mut params = vec![("eps", eps)];
    let name = match mode {
        ImprovedMode::Separated { regions, delta0, gamma0 } => {
            let sets = select_separated_sets(mesh, u1, u2, regions, delta0, gamma0)?;
            params.push(("gamma", sets.gamma));
            params.push(("separation", sets.r0));
            "improved_separated"
        }
        ImprovedMode::EqualPsi { cfg, tol } => {
            let (a, b) = psi_pair(mesh, u1, u2, cfg)?;
            let d = a.distance(&b, mesh.surface());
            if d > tol {
                return Err(TodaError::Precondition(format!("psi values differ by {d} > {tol}: {a:?} vs {b:?}")));
            }
            params.push(("psi_distance", d));
            params.push(("r", cfg.r));
            "improved_equal_psi"
        }
        ImprovedMode::Unconditional => "improved_unconditional",
    };
    let lhs =
        8.0 * PI * (log_int_exp(mesh, None, u1)? - mean(mesh, u1)? + log_int_exp(mesh, None, u2)? - mean(mesh, u2)?);
    let rhs = (1.0 + eps) * q_form(mesh, u1, u2)?;
    MarginReport::new(name, lhs, rhs, &params)
}

/// Small-ball inequality after dilation to unit scale.
pub fn check_ball(mesh: &Mesh, u1: &Field, u2: &Field, p: &Point, s: f64, eps: f64) -> Result<MarginReport> {
    check_pair(mesh, u1, u2)?;
    if !(s > 0.0) || s >= mesh.surface().tube_radius() {
        return Err(TodaError::Domain(format!("ball radius {s} must lie in (0, {})", mesh.surface().tube_radius())));
    }
    let half = ball_region(mesh, p, 0.5 * s);
    let full = ball_region(mesh, p, s);
    check_region(mesh, &half, "B(s/2)")?;
    let (a, b) = (u1.values(), u2.values());
    let m = mesh.mass();
    let x = mean_over(mesh, a, &full) + mean_over(mesh, b, &full) + 4.0 * s.ln();
    let lhs =
        4.0 * PI * (log_int_exp_raw(m, None, a, Some(&half)) + log_int_exp_raw(m, None, b, Some(&half))) - 4.0 * PI * x;
    let rhs = (1.0 + eps) * region_q_form(mesh, a, b, &indicator(mesh.num_vertices(), &full));
    let mut rep = MarginReport::new("ball", lhs, rhs, &[("eps", eps), ("s", s)])?;
    rep.correction = Some(x);
    Ok(rep)
}

/// How the annulus check obtains `u = 0` on `∂B_p(2r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// Subtract the mean over the ring `1.6r ≤ d ≤ 2r` and multiply by a
    /// cubic smoothstep falling from 1 at `1.6r` to 0 at `2r`.
    Cutoff,
    /// Reject fields exceeding `tol` on the first vertex layer at or beyond `2r`.
    Require { tol: f64 },
}

fn smoothstep_cutoff(d: f64, r: f64) -> f64 {
    let (a, b) = (1.6 * r, 2.0 * r);
    if d <= a {
        1.0
    } else if d >= b {
        0.0
    } else {
        let t = (b - d) / (b - a);
        t * t * (3.0 - 2.0 * t)
    }
}

/// Applies [`Boundary::Cutoff`] to one field.
pub fn enforce_boundary(mesh: &Mesh, u: &Field, p: &Point, r: f64) -> Result<Field> {
    let ring = annulus_region(mesh, p, 1.6 * r, 2.0 * r);
    check_region(mesh, &ring, "cutoff ring")?;
    let c = mean_over(mesh, u.values(), &ring);
    let s = mesh.surface();
    Field::new(
        mesh,
        (0..mesh.num_vertices())
            .map(|k| smoothstep_cutoff(s.geodesic_distance(p, mesh.point(k)), r) * (u.values()[k] - c))
            .collect(),
    )
}

/// Annulus inequality through the Kelvin transform.
#[allow(clippy::too_many_arguments)]
pub fn check_annulus(
    mesh: &Mesh,
    u1: &Field,
    u2: &Field,
    p: &Point,
    s: f64,
    r: f64,
    eps: f64,
    boundary: Boundary,
) -> Result<MarginReport> {
    check_pair(mesh, u1, u2)?;
    let tube = mesh.surface().tube_radius();
    if !(s > 0.0) || !(s < r) || 2.0 * r >= tube {
        return Err(TodaError::Domain(format!("annulus needs 0 < s < r < {}, got s = {s}, r = {r}", 0.5 * tube)));
    }
    let (w1, w2) = match boundary {
        Boundary::Cutoff => (enforce_boundary(mesh, u1, p, r)?, enforce_boundary(mesh, u2, p, r)?),
        Boundary::Require { tol } => {
            let layer = annulus_region(mesh, p, 2.0 * r, 2.0 * r + mesh.max_edge());
            check_region(mesh, &layer, "outer layer")?;
            for (i, u) in [u1, u2].into_iter().enumerate() {
                let worst = layer.iter().map(|&k| u.values()[k].abs()).fold(0.0, f64::max);
                if worst > tol {
                    return Err(TodaError::Precondition(format!(
                        "u{} = {worst} on the boundary of B(2r), above tolerance {tol}",
                        i + 1
                    )));
                }
            }
            (u1.clone(), u2.clone())
        }
    };
    let inner = ball_region(mesh, p, s);
    let ann = annulus_region(mesh, p, s, r);
    let wide = annulus_region(mesh, p, 0.5 * s, 2.0 * r);
    let big = ball_region(mesh, p, 2.0 * r);
    check_region(mesh, &inner, "B(s)")?;
    check_region(mesh, &ann, "A(s, r)")?;
    let (a, b) = (w1.values(), w2.values());
    let m = mesh.mass();
    let n = mesh.num_vertices();
    let x = mean_over(mesh, a, &inner) + mean_over(mesh, b, &inner) + 4.0 * s.ln();
    let lhs = 4.0
        * PI
        * (log_int_exp_raw(m, None, a, Some(&ann)) + log_int_exp_raw(m, None, b, Some(&ann)) + (1.0 + eps) * x);
    let rhs = region_q_form(mesh, a, b, &indicator(n, &wide)) + eps * region_q_form(mesh, a, b, &indicator(n, &big));
    let mut rep = MarginReport::new("annulus", lhs, rhs, &[("eps", eps), ("s", s), ("r", r)])?;
    rep.correction = Some(x);
    Ok(rep)
}

/// How far the correction terms of a ball and an annulus report fail to cancel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cancellation {
    /// Contribution `4π X` of the correction to the ball margin.
    pub ball_term: f64,
    /// Contribution `−4π(1+ε) X` to the annulus margin.
    pub annulus_term: f64,
    pub residual: f64,
    /// `|residual| / |ball_term|`
    pub relative: f64,
    pub summed_margin: f64,
}

pub fn cancellation(ball: &MarginReport, annulus: &MarginReport) -> Result<Cancellation> {
    let (Some(xb), Some(xa)) = (ball.correction, annulus.correction) else {
        return Err(TodaError::Domain("cancellation needs a ball and an annulus report".into()));
    };
    let eps = annulus.params.get("eps").copied().unwrap_or(0.0);
    let ball_term = 4.0 * PI * xb;
    let annulus_term = -4.0 * PI * (1.0 + eps) * xa;
    let residual = ball_term + annulus_term;
    Ok(Cancellation {
        ball_term,
        annulus_term,
        residual,
        relative: residual.abs() / ball_term.abs().max(f64::MIN_POSITIVE),
        summed_margin: ball.margin + annulus.margin,
    })
}

/// Ball and annulus checks on the same boundary-normalized pair.
pub fn ball_annulus_pair(
    mesh: &Mesh,
    u1: &Field,
    u2: &Field,
    p: &Point,
    s: f64,
    r: f64,
    eps: f64,
) -> Result<(MarginReport, MarginReport, Cancellation)> {
    let w1 = enforce_boundary(mesh, u1, p, r)?;
    let w2 = enforce_boundary(mesh, u2, p, r)?;
    let ball = check_ball(mesh, &w1, &w2, p, s, eps)?;
    let ann = check_annulus(mesh, &w1, &w2, p, s, r, eps, Boundary::Require { tol: 0.0 })?;
    let c = cancellation(&ball, &ann)?;
    Ok((ball, ann, c))
}

/// Parallel evaluation preserving input order.
pub fn sweep<T: Sync, F>(items: &[T], f: F) -> Vec<Result<MarginReport>>
where
    F: Fn(&T) -> Result<MarginReport> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Observed budget `−min margin`.
pub fn empirical_constant(reports: &[MarginReport]) -> Option<f64> {
    reports.iter().map(|r| r.margin).min_by(|a, b| a.total_cmp(b)).map(|m| -m)
}

pub fn write_margin_csv<W: Write>(reports: &[MarginReport], w: &mut W) -> Result<()> {
    let mut keys: Vec<&String> = reports.iter().flat_map(|r| r.params.keys()).collect();
    keys.sort();
    keys.dedup();
    write!(w, "check,probe,lhs,rhs,margin,correction")?;
    for k in &keys {
        write!(w, ",{k}")?;
    }
    writeln!(w)?;
    for r in reports {
        let corr = r.correction.map(|c| format!("{c:.17e}")).unwrap_or_default();
        write!(
            w,
            "{},\"{}\",{:.17e},{:.17e},{:.17e},{corr}",
            r.check,
            r.probe.replace('"', "'"),
            r.lhs,
            r.rhs,
            r.margin
        )?;
        for k in &keys {
            match r.params.get(*k) {
                Some(v) => write!(w, ",{v:.17e}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}
