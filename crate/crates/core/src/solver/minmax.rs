use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{psi_pair, ConcentrationConfig};
use crate::error::{Result, TodaError};
use crate::fields::{bubble, Field};
use crate::functional::{j_rho, TodaParams};
use crate::geometry::Mesh;
use crate::inequality::ProbeSpec;
use crate::testfamily::{phi_pair, TestParams, XnuConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinmaxOptions {
    /// Uniform samples of `s ∈ [0, 1]` before the golden-section refinement.
    pub s_samples: usize,
    /// Bubble scales of the diagonal probes `(U_λ, U_λ)`.
    pub probe_lambdas: Vec<f64>,
    /// Seeds of the random diagonal probes `(v, v)`.
    pub probe_seeds: Vec<u64>,
    /// Radius of the diagonal neighborhood in the cone metric; `δ²` if absent.
    pub diagonal_eta: Option<f64>,
}

impl Default for MinmaxOptions {
    fn default() -> Self {
        MinmaxOptions { s_samples: 21, probe_lambdas: vec![10.0, 30.0], probe_seeds: vec![1, 2, 3], diagonal_eta: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMax {
    pub theta: TestParams,
    pub s_max: f64,
    pub j_max: f64,
    /// `J_ρ(φ_θ)`
    pub j_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    /// Twice the largest `|J_ρ|` over the diagonal probes.
    pub level: f64,
    pub probe_energies: Vec<f64>,
    pub eta: f64,
    pub sampled: usize,
    pub in_sublevel: usize,
    /// Sublevel samples whose `Ψ` lies within `eta` of the diagonal.
    pub violations: usize,
    pub min_diagonal_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinmaxReport {
    pub rho: [f64; 2],
    /// `min_θ max_s J_ρ(s φ_θ)` over the grid.
    pub alpha_upper: f64,
    pub paths: Vec<PathMax>,
    /// `min_θ J_ρ(φ_θ)`
    pub grid_min_j: f64,
    pub barrier: BarrierReport,
}

/// `(s at the maximum, the maximum, uniform samples (s, J))`
type PathSamples = (f64, f64, Vec<(f64, f64)>);

fn j_scaled(mesh: &Mesh, p: &TodaParams, f: &(Field, Field), s: f64) -> Result<f64> {
    j_rho(mesh, p, &f.0.scale(s), &f.1.scale(s))
}

/// Maximum over `s ∈ [0, 1]` of `J_ρ(s φ)`: uniform samples, then a golden
/// section search around the best one.
fn path_max(mesh: &Mesh, p: &TodaParams, f: &(Field, Field), samples: usize) -> Result<PathSamples> {
    let n = samples.max(3);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            Ok((s, j_scaled(mesh, p, f, s)?))
        })
        .collect::<Result<_>>()?;
    let (k, _) = pts.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("nonempty");
    let h = 1.0 / (n - 1) as f64;
    let (mut a, mut b) = ((pts[k].0 - h).max(0.0), (pts[k].0 + h).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (j_scaled(mesh, p, f, c)?, j_scaled(mesh, p, f, d)?);
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = j_scaled(mesh, p, f, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = j_scaled(mesh, p, f, d)?;
        }
    }
    let (s_ref, j_ref) = if fc > fd { (c, fc) } else { (d, fd) };
    let best = if j_ref >= pts[k].1 { (s_ref, j_ref) } else { pts[k] };
    Ok((best.0, best.1, pts))
}

/// Upper bound for the min-max level over the paths `s ↦ s φ_θ`, with an
/// empirical check that low sublevels of `J_ρ` stay away from the diagonal
/// under `Ψ`.
pub fn minmax_estimate(
    mesh: &Mesh,
    grid: &[TestParams],
    xcfg: &XnuConfig,
    p: &TodaParams,
    conc: &ConcentrationConfig,
    opts: &MinmaxOptions,
) -> Result<MinmaxReport> {
    let s = mesh.surface();
    if grid.is_empty() {
        return Err(TodaError::Config("empty parameter grid".into()));
    }
    if let Some(th) = grid.iter().find(|th| !xcfg.contains(th, s)) {
        return Err(TodaError::Precondition(format!("{th:?} is not in X_ν")));
    }
    let fields: Vec<(Field, Field)> = grid.iter().map(|th| phi_pair(mesh, th, xcfg.delta)).collect::<Result<_>>()?;
    let results: Vec<PathSamples> =
        fields.par_iter().map(|f| path_max(mesh, p, f, opts.s_samples)).collect::<Result<_>>()?;
    let paths: Vec<PathMax> = grid
        .iter()
        .zip(&results)
        .map(|(th, (s_max, j_max, pts))| PathMax {
            theta: *th,
            s_max: *s_max,
            j_max: *j_max,
            j_end: pts.last().expect("s = 1").1,
        })
        .collect();
    let alpha_upper = paths.iter().map(|q| q.j_max).fold(f64::INFINITY, f64::min);
    let grid_min_j = paths.iter().map(|q| q.j_end).fold(f64::INFINITY, f64::min);

    // Pairs with equal components have equal images under Ψ.
    let mut probes = vec![Field::zeros(mesh)];
    let center = *mesh.point(0);
    for &l in &opts.probe_lambdas {
        probes.push(bubble(mesh, &center, l)?);
    }
    for &seed in &opts.probe_seeds {
        probes.push(ProbeSpec::RandomBandlimited { seed, band: 3, amplitude: 1.0 }.realize(mesh)?);
    }
    let probe_energies: Vec<f64> = probes.iter().map(|u| j_rho(mesh, p, u, u)).collect::<Result<_>>()?;
    let level = 2.0 * probe_energies.iter().map(|j| j.abs()).fold(0.0, f64::max);
    let eta = opts.diagonal_eta.unwrap_or(conc.delta * conc.delta);

    let mut sampled = 0;
    let mut low = Vec::new();
    for (f, (_, _, pts)) in fields.iter().zip(&results) {
        for &(sv, j) in pts {
            sampled += 1;
            if j <= -level {
                low.push((f, sv));
            }
        }
    }
    let dists: Vec<f64> = low
        .par_iter()
        .map(|(f, sv)| {
            let (a, b) = psi_pair(mesh, &f.0.scale(*sv), &f.1.scale(*sv), conc)?;
            Ok(a.distance(&b, s))
        })
        .collect::<Result<_>>()?;
    let barrier = BarrierReport {
        level,
        probe_energies,
        eta,
        sampled,
        in_sublevel: low.len(),
        violations: dists.iter().filter(|d| **d < eta).count(),
        min_diagonal_distance: dists.iter().copied().reduce(f64::min),
    };
    Ok(MinmaxReport { rho: p.rho(), alpha_upper, paths, grid_min_j, barrier })
}
