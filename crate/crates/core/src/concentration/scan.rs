use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ConcentrationConfig;
use super::profile::MassProfile;
use crate::error::{Result, TodaError};
use crate::fields::{density_of, Density, Field};
use crate::geometry::{Mesh, Point, Surface, VertexGrid};

/// Point of the cone `Σ × (0, δ)` with heights `≥ δ` collapsed to the apex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConePoint {
    Apex,
    Point { x: Point, t: f64 },
}

impl ConePoint {
    pub fn is_apex(&self) -> bool {
        matches!(self, ConePoint::Apex)
    }

    pub fn point(&self) -> Option<&Point> {
        match self {
            ConePoint::Apex => None,
            ConePoint::Point { x, .. } => Some(x),
        }
    }

    pub fn height(&self) -> Option<f64> {
        match self {
            ConePoint::Apex => None,
            ConePoint::Point { t, .. } => Some(*t),
        }
    }

    /// `d(x, y) + |t − s|`, zero between two apexes and infinite between the
    /// apex and a point.
    pub fn distance(&self, other: &ConePoint, surface: Surface) -> f64 {
        match (self, other) {
            (ConePoint::Apex, ConePoint::Apex) => 0.0,
            (ConePoint::Point { x, t }, ConePoint::Point { x: y, t: s }) => {
                surface.geodesic_distance(x, y) + (t - s).abs()
            }
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub sigma_f: f64,
    pub beta: ConePoint,
    pub witness_p: Point,
    pub witness_vertex: usize,
    /// Mass of `B_p(σ)` and of the complement of `B_p(Rσ)`.
    pub witness_masses: [f64; 2],
    /// Vertex realizing `min σ(x, f)`.
    pub argmin_vertex: usize,
    pub s_set_size: usize,
    pub s_set_diameter: f64,
    pub tau: f64,
    pub delta: f64,
    pub warnings: Vec<String>,
}

impl ConcentrationReport {
    /// `(β, min(σ, δ))` with the apex identification.
    pub fn psi(&self) -> ConePoint {
        self.beta
    }
}

/// Per-vertex data shared by all scale computations for one density.
pub struct Scanner<'m> {
    mesh: &'m Mesh,
    grid: VertexGrid,
    w: Vec<f64>,
    radii: Vec<f64>,
    r_max: f64,
    cell_mass: Vec<f64>,
    total: f64,
    r0: f64,
}

impl<'m> Scanner<'m> {
    pub fn new(mesh: &'m Mesh, f: &Density, cfg: &ConcentrationConfig) -> Result<Scanner<'m>> {
        f.check_mesh(mesh)?;
        let w = f.vertex_masses(mesh);
        Ok(Scanner::from_masses(mesh, w, cfg.r0))
    }

    fn from_masses(mesh: &'m Mesh, w: Vec<f64>, r0: f64) -> Scanner<'m> {
        let grid = VertexGrid::new(mesh);
        let radii: Vec<f64> = mesh.mass().iter().map(|m| (m / std::f64::consts::PI).sqrt()).collect();
        let r_max = radii.iter().cloned().fold(0.0, f64::max);
        let cell_mass = grid.cell_sums(&w);
        let total = w.iter().sum();
        Scanner { mesh, grid, w, radii, r_max, cell_mass, total, r0 }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Profile that is exact on `[0, reach]`.
    pub fn profile(&self, x: &Point, reach: f64) -> MassProfile {
        let surface = self.mesh.surface();
        let gather = reach + self.r_max;
        if gather >= surface.diameter() {
            let pts = self.mesh.points();
            return MassProfile::new(
                (0..pts.len()).map(|k| (surface.geodesic_distance(x, &pts[k]), self.w[k], self.radii[k])),
            );
        }
        let mut items = Vec::new();
        self.grid.for_each_within(self.mesh, x, gather, |k, d| items.push((d, self.w[k], self.radii[k])));
        MassProfile::new(items)
    }

    /// Upper bound for the mass within geodesic distance `radius` of `x`.
    fn mass_bound(&self, x: &Point, radius: f64) -> f64 {
        if radius >= self.mesh.surface().diameter() {
            return self.total;
        }
        let mut cells = Vec::new();
        self.grid.cells_near(x, radius, &mut cells);
        cells.iter().map(|&c| self.cell_mass[c]).sum()
    }

    /// False only when `σ(x, f) > cap` is certain.
    fn may_be_below(&self, x: &Point, cap: f64) -> bool {
        self.mass_bound(x, self.r0 * cap + self.r_max) >= 0.5 * self.total * (1.0 - 1e-12)
    }

    /// `(σ(x,f), T(x,f))`.
    pub fn sigma_at(&self, x: &Point) -> (f64, f64) {
        let hi = self.mesh.surface().diameter() + self.r_max;
        let p = self.profile(x, f64::INFINITY);
        let s = p.balance_root(self.r0, self.total, hi).unwrap_or(hi);
        (s, p.eval(s) / self.total)
    }

    /// `(σ, T)` when `σ(x, f) ≤ cap`.
    pub fn sigma_below(&self, x: &Point, cap: f64) -> Option<(f64, f64)> {
        if !self.may_be_below(x, cap) {
            return None;
        }
        let p = self.profile(x, self.r0 * cap);
        let s = p.balance_root(self.r0, self.total, cap)?;
        Some((s, p.eval(s) / self.total))
    }

    /// `(min σ(·, f), argmin vertex)` over the vertices.
    pub fn min_sigma(&self) -> (f64, usize) {
        let mut order: Vec<usize> = (0..self.w.len()).collect();
        order.sort_by(|&a, &b| (self.w[b] / self.mesh.mass()[b]).total_cmp(&(self.w[a] / self.mesh.mass()[a])));
        let first = order[0];
        let mut best = (self.sigma_at(self.mesh.point(first)).0, first);
        for &v in &order[1..] {
            if let Some((s, _)) = self.sigma_below(self.mesh.point(v), best.0) {
                if s < best.0 {
                    best = (s, v);
                }
            }
        }
        best
    }

    /// `(min σ(·, f), argmin vertex)` when the minimum is at most `cap`.
    pub fn min_sigma_below(&self, cap: f64) -> Option<(f64, usize)> {
        (0..self.w.len())
            .into_par_iter()
            .filter_map(|v| self.sigma_below(self.mesh.point(v), cap).map(|(s, _)| (s, v)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
    }

    /// Vertices with `σ(x, f) < cap`, with their `(σ, T)`.
    pub fn below(&self, cap: f64) -> Vec<(usize, f64, f64)> {
        (0..self.w.len())
            .into_par_iter()
            .filter_map(|v| {
                let (s, t) = self.sigma_below(self.mesh.point(v), cap)?;
                (s < cap).then_some((v, s, t))
            })
            .collect()
    }

    /// `(σ, T)` at every vertex.
    pub fn full_scan(&self) -> Vec<(f64, f64)> {
        (0..self.w.len()).into_par_iter().map(|v| self.sigma_at(self.mesh.point(v))).collect()
    }
}

pub fn sigma_x(mesh: &Mesh, f: &Density, x: &Point, cfg: &ConcentrationConfig) -> Result<f64> {
    Ok(Scanner::new(mesh, f, cfg)?.sigma_at(x).0)
}

pub fn t_mass(mesh: &Mesh, f: &Density, x: &Point, cfg: &ConcentrationConfig) -> Result<f64> {
    Ok(Scanner::new(mesh, f, cfg)?.sigma_at(x).1)
}

/// `σ(f) = 3 min_x σ(x, f)`.
pub fn sigma_f(mesh: &Mesh, f: &Density, cfg: &ConcentrationConfig) -> Result<f64> {
    Ok(3.0 * Scanner::new(mesh, f, cfg)?.min_sigma().0)
}

/// Vertices with `T(x, f) > τ` and `σ(x, f) < σ(f)`.
pub fn s_set(mesh: &Mesh, f: &Density, cfg: &ConcentrationConfig) -> Result<Vec<usize>> {
    let sc = Scanner::new(mesh, f, cfg)?;
    let sf = 3.0 * sc.min_sigma().0;
    let set: Vec<usize> = sc.below(sf).into_iter().filter(|e| e.2 > cfg.tau).map(|e| e.0).collect();
    if set.is_empty() {
        return Err(TodaError::Invariant("S(f) is empty; tau is too large".into()));
    }
    check_diameter(mesh, &set, cfg, sf)?;
    Ok(set)
}

fn set_diameter(mesh: &Mesh, set: &[usize]) -> f64 {
    let s = mesh.surface();
    let pts = mesh.points();
    set.par_iter()
        .enumerate()
        .map(|(i, &a)| set[i + 1..].iter().map(|&b| s.geodesic_distance(&pts[a], &pts[b])).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

fn check_diameter(mesh: &Mesh, set: &[usize], cfg: &ConcentrationConfig, sf: f64) -> Result<f64> {
    let diam = set_diameter(mesh, set);
    let bound = (cfg.r0 + 1.0) * sf;
    if diam > bound * (1.0 + 1e-9) + 1e-12 {
        return Err(TodaError::Invariant(format!("diam S(f) = {diam} exceeds (R0+1)σ(f) = {bound}")));
    }
    Ok(diam)
}

/// Full concentration analysis of a density.
pub fn analyze(mesh: &Mesh, f: &Density, cfg: &ConcentrationConfig) -> Result<ConcentrationReport> {
    let sc = Scanner::new(mesh, f, cfg)?;
    let (smin, argmin) = sc.min_sigma();
    let sf = 3.0 * smin;
    let below = sc.below(sf);
    let set: Vec<(usize, f64, f64)> = below.into_iter().filter(|e| e.2 > cfg.tau).collect();
    if set.is_empty() {
        return Err(TodaError::Invariant("S(f) is empty; tau is too large".into()));
    }
    let ids: Vec<usize> = set.iter().map(|e| e.0).collect();
    let diam = check_diameter(mesh, &ids, cfg, sf)?;
    let &(pv, _, _) = set.iter().max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0))).unwrap();
    let p = *mesh.point(pv);
    let prof = sc.profile(&p, cfg.r * sf);
    let masses = [prof.eval(sf) / sc.total, (sc.total - prof.eval(cfg.r * sf)) / sc.total];
    let mut warnings = Vec::new();
    let beta = if sf >= cfg.delta {
        ConePoint::Apex
    } else {
        let surface = mesh.surface();
        let dim = surface.embed_dim();
        let mut eta = vec![0.0; dim];
        let mut wsum = 0.0;
        for &(v, s, t) in &set {
            let wt = (t - cfg.tau) * (sf - s) * mesh.mass()[v];
            for (e, c) in eta.iter_mut().zip(surface.embed(mesh.point(v))) {
                *e += wt * c;
            }
            wsum += wt;
        }
        eta.iter_mut().for_each(|e| *e /= wsum);
        match surface.project(&eta) {
            Ok(b) => ConePoint::Point { x: b, t: sf },
            Err(e) => {
                warnings.push(format!("{e}; reporting apex"));
                log::warn!("barycenter projection failed: {e}");
                ConePoint::Apex
            }
        }
    };
    Ok(ConcentrationReport {
        sigma_f: sf,
        beta,
        witness_p: p,
        witness_vertex: pv,
        witness_masses: masses,
        argmin_vertex: argmin,
        s_set_size: set.len(),
        s_set_diameter: diam,
        tau: cfg.tau,
        delta: cfg.delta,
        warnings,
    })
}

/// First component of `ψ`. Spread densities (`σ(f) ≥ δ`) are sent to the
/// apex after a scan capped at `δ/3`.
pub fn barycenter(mesh: &Mesh, f: &Density, cfg: &ConcentrationConfig) -> Result<ConePoint> {
    if Scanner::new(mesh, f, cfg)?.min_sigma_below(cfg.delta / 3.0).is_none() {
        return Ok(ConePoint::Apex);
    }
    Ok(analyze(mesh, f, cfg)?.beta)
}

pub fn psi(mesh: &Mesh, f: &Density, cfg: &ConcentrationConfig) -> Result<ConePoint> {
    barycenter(mesh, f, cfg)
}

/// `Ψ(u1, u2) = (ψ(e^{u1}/∫e^{u1}), ψ(e^{u2}/∫e^{u2}))`.
pub fn psi_pair(mesh: &Mesh, u1: &Field, u2: &Field, cfg: &ConcentrationConfig) -> Result<(ConePoint, ConePoint)> {
    let f1 = density_of(mesh, u1)?;
    let f2 = density_of(mesh, u2)?;
    Ok((psi(mesh, &f1, cfg)?, psi(mesh, &f2, cfg)?))
}
