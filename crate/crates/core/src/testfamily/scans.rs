use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{TestParams, XnuConfig};
use super::phi::phi_pair;
use crate::concentration::ConePoint;
use crate::error::{Result, TodaError};
use crate::fields::{log_int_exp, mean, q_form, Field};
use crate::functional::TodaParams;
use crate::geometry::{Mesh, Point, VertexGrid};

/// Two one-parameter sweeps: the first varies `t1` with `θ2` at the apex,
/// the second varies `t2` with `θ1` at the apex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub x1: Point,
    pub x2: Point,
    pub heights: Vec<f64>,
}

impl ScanGrid {
    pub fn log_uniform(x1: Point, x2: Point, lo: f64, hi: f64, n: usize) -> Result<ScanGrid> {
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(TodaError::Config(format!("bad height range [{lo}, {hi}] with {n} points")));
        }
        let r = (hi / lo).ln() / (n - 1) as f64;
        Ok(ScanGrid { x1, x2, heights: (0..n).map(|k| lo * (r * k as f64).exp()).collect() })
    }

    /// `(varying component, θ)` for both sweeps, all required to lie in `X_ν`.
    pub fn params(&self, mesh: &Mesh, cfg: &XnuConfig) -> Result<Vec<(usize, TestParams)>> {
        let s = mesh.surface();
        let mut out = Vec::with_capacity(2 * self.heights.len());
        for k in 0..2 {
            for &t in &self.heights {
                let x = if k == 0 { self.x1 } else { self.x2 };
                let c = ConePoint::Point { x, t };
                let p = if k == 0 {
                    TestParams::new(c, ConePoint::Apex, s, cfg.delta)?
                } else {
                    TestParams::new(ConePoint::Apex, c, s, cfg.delta)?
                };
                if !cfg.contains(&p, s) {
                    return Err(TodaError::Precondition(format!("grid point t = {t} is not in X_ν")));
                }
                out.push((k, p));
            }
        }
        Ok(out)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope over the rows of one sweep.
fn sweep_slope<R>(rows: &[R], sweep: usize, key: impl Fn(&R) -> (usize, f64, f64)) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().map(&key).filter(|(k, _, _)| *k == sweep).map(|(_, a, b)| (a, b)).unzip();
    ols_slope(&x, &y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralRow {
    /// Index of the varying component.
    pub sweep: usize,
    /// Heights with the apex at `δ`.
    pub t: [f64; 2],
    pub log_int: [f64; 2],
    /// `∫e^{φ_i} / (t_i²/t_j²)`.
    pub ratio: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralScan {
    pub rows: Vec<IntegralRow>,
    /// `slopes[i][k]`: slope of `log∫e^{φ_i}` against `log t_k` along sweep `k`.
    pub slopes: [[f64; 2]; 2],
    /// Smallest and largest ratio over all rows and components.
    pub band: [f64; 2],
}

pub fn integral_scaling_scan(mesh: &Mesh, grid: &ScanGrid, cfg: &XnuConfig) -> Result<IntegralScan> {
    let params = grid.params(mesh, cfg)?;
    let rows = params
        .par_iter()
        .map(|(k, p)| {
            let (f1, f2) = phi_pair(mesh, p, cfg.delta)?;
            let t = p.heights(cfg.delta);
            let li = [log_int_exp(mesh, None, &f1)?, log_int_exp(mesh, None, &f2)?];
            let ratio = [li[0].exp() * (t[1] / t[0]).powi(2), li[1].exp() * (t[0] / t[1]).powi(2)];
            Ok(IntegralRow { sweep: *k, t, log_int: li, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut slopes = [[0.0; 2]; 2];
    for (i, row) in slopes.iter_mut().enumerate() {
        for (k, s) in row.iter_mut().enumerate() {
            *s = sweep_slope(&rows, k, |r| (r.sweep, r.t[k].ln(), r.log_int[i]));
        }
    }
    let all = rows.iter().flat_map(|r| r.ratio);
    let band = all.fold([f64::INFINITY, 0.0f64], |b, x| [b[0].min(x), b[1].max(x)]);
    Ok(IntegralScan { rows, slopes, band })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub sweep: usize,
    pub t: [f64; 2],
    /// `∫Q(φ)`
    pub q: f64,
    pub means: [f64; 2],
    /// `log∫h_i e^{φ_i}`
    pub log_int: [f64; 2],
    pub energy: f64,
}

impl EnergyRow {
    /// `J_ρ` for another `ρ` with the same weights.
    pub fn energy_at(&self, rho: [f64; 2]) -> f64 {
        self.q + rho[0] * (self.means[0] - self.log_int[0]) + rho[1] * (self.means[1] - self.log_int[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyScan {
    pub rho: [f64; 2],
    pub rows: Vec<EnergyRow>,
    /// Slope of `∫Q` against `log(1/t_k)` along sweep `k`.
    pub q_slopes: [f64; 2],
    /// `mean_slopes[i][k]`: slope of the mean of `φ_i` against `log t_k`.
    pub mean_slopes: [[f64; 2]; 2],
    /// Slope of `J_ρ` against `log t_k`.
    pub j_slopes: [f64; 2],
}

impl EnergyScan {
    pub fn j_slopes_at(&self, rho: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|k| sweep_slope(&self.rows, k, |r| (r.sweep, r.t[k].ln(), r.energy_at(rho))))
    }
}

pub fn energy_scan(mesh: &Mesh, grid: &ScanGrid, cfg: &XnuConfig, p: &TodaParams) -> Result<EnergyScan> {
    let params = grid.params(mesh, cfg)?;
    let rho = p.rho();
    let rows = params
        .par_iter()
        .map(|(k, th)| {
            let (f1, f2) = phi_pair(mesh, th, cfg.delta)?;
            let q = q_form(mesh, &f1, &f2)?;
            let means = [mean(mesh, &f1)?, mean(mesh, &f2)?];
            let log_int = [log_int_exp(mesh, Some(p.h1()), &f1)?, log_int_exp(mesh, Some(p.h2()), &f2)?];
            let mut row = EnergyRow { sweep: *k, t: th.heights(cfg.delta), q, means, log_int, energy: 0.0 };
            row.energy = row.energy_at(rho);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let q_slopes = [0, 1].map(|k| sweep_slope(&rows, k, |r| (r.sweep, -r.t[k].ln(), r.q)));
    let mean_slopes = [0, 1].map(|i| [0, 1].map(|k| sweep_slope(&rows, k, |r| (r.sweep, r.t[k].ln(), r.means[i]))));
    let mut scan = EnergyScan { rho, rows, q_slopes, mean_slopes, j_slopes: [0.0; 2] };
    scan.j_slopes = scan.j_slopes_at(rho);
    Ok(scan)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub sweep: usize,
    pub t: [f64; 2],
    /// Smallest `C` with `∫_{B_{x_i}(C t_i)} e^{φ_i} ≥ (1−ε)∫e^{φ_i}`; `None` at the apex.
    pub capture: [Option<f64>; 2],
    /// `sup_x ∫_{B_x(r t_i)} e^{φ_i} / (r² t_i²/t_j²)`; `None` at the apex.
    pub sup_ratio: [Option<f64>; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsScan {
    pub eps: f64,
    pub r: f64,
    pub rows: Vec<BoundsRow>,
}

impl BoundsScan {
    /// Smallest and largest capture multiple over the rows of sweep `k`.
    pub fn capture_range(&self, k: usize) -> [f64; 2] {
        self.rows
            .iter()
            .filter(|r| r.sweep == k)
            .filter_map(|r| r.capture[k])
            .fold([f64::INFINITY, 0.0], |b, x| [b[0].min(x), b[1].max(x)])
    }

    pub fn max_sup_ratio(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.sup_ratio).flatten().fold(0.0, f64::max)
    }
}

fn capture_multiple(mesh: &Mesh, u: &Field, x: &Point, t: f64, eps: f64) -> f64 {
    let s = mesh.surface();
    let mut items: Vec<(f64, f64)> = mesh
        .points()
        .iter()
        .zip(u.values().iter().zip(mesh.mass()))
        .map(|(p, (v, m))| (s.geodesic_distance(x, p), m * v.exp()))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = items.iter().map(|a| a.1).sum();
    let mut acc = 0.0;
    for (d, w) in &items {
        acc += w;
        if acc >= (1.0 - eps) * total {
            return d / t;
        }
    }
    items.last().map_or(0.0, |a| a.0 / t)
}

fn sup_ball_mass(mesh: &Mesh, index: &VertexGrid, w: &[f64], radius: f64) -> f64 {
    mesh.points()
        .par_iter()
        .map(|c| {
            let mut acc = 0.0;
            index.for_each_within(mesh, c, radius, |v, _| acc += w[v]);
            acc
        })
        .reduce(|| 0.0, f64::max)
}

pub fn concentration_bounds_scan(
    mesh: &Mesh,
    grid: &ScanGrid,
    cfg: &XnuConfig,
    eps: f64,
    r: f64,
) -> Result<BoundsScan> {
    if !(eps > 0.0 && eps < 1.0) || !(r > 0.0) {
        return Err(TodaError::Config(format!("need ε ∈ (0, 1) and r > 0, got {eps}, {r}")));
    }
    let params = grid.params(mesh, cfg)?;
    let index = VertexGrid::new(mesh);
    let rows = params
        .iter()
        .map(|(k, th)| {
            let (f1, f2) = phi_pair(mesh, th, cfg.delta)?;
            let t = th.heights(cfg.delta);
            let mut row = BoundsRow { sweep: *k, t, capture: [None; 2], sup_ratio: [None; 2] };
            for (i, f) in [&f1, &f2].into_iter().enumerate() {
                let Some(x) = th.theta(i).point() else { continue };
                row.capture[i] = Some(capture_multiple(mesh, f, x, t[i], eps));
                let w: Vec<f64> = f.values().iter().zip(mesh.mass()).map(|(v, m)| m * v.exp()).collect();
                let sup = sup_ball_mass(mesh, &index, &w, r * t[i]);
                row.sup_ratio[i] = Some(sup / (r * r * (t[i] / t[1 - i]).powi(2)));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundsScan { eps, r, rows })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "na".to_string(), |v| format!("{v:.10e}"))
}

pub fn write_integral_csv<W: Write>(scan: &IntegralScan, w: &mut W) -> Result<()> {
    writeln!(w, "sweep,t1,t2,log_int1,log_int2,ratio1,ratio2")?;
    for r in &scan.rows {
        writeln!(
            w,
            "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            r.sweep + 1,
            r.t[0],
            r.t[1],
            r.log_int[0],
            r.log_int[1],
            r.ratio[0],
            r.ratio[1]
        )?;
    }
    Ok(())
}

pub fn write_energy_csv<W: Write>(scan: &EnergyScan, w: &mut W) -> Result<()> {
    writeln!(w, "sweep,t1,t2,q,mean1,mean2,log_int1,log_int2,energy")?;
    for r in &scan.rows {
        writeln!(
            w,
            "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            r.sweep + 1,
            r.t[0],
            r.t[1],
            r.q,
            r.means[0],
            r.means[1],
            r.log_int[0],
            r.log_int[1],
            r.energy
        )?;
    }
    Ok(())
}

pub fn write_bounds_csv<W: Write>(scan: &BoundsScan, w: &mut W) -> Result<()> {
    writeln!(w, "sweep,t1,t2,capture1,capture2,sup_ratio1,sup_ratio2")?;
    for r in &scan.rows {
        writeln!(
            w,
            "{},{:.10e},{:.10e},{},{},{},{}",
            r.sweep + 1,
            r.t[0],
            r.t[1],
            opt(r.capture[0]),
            opt(r.capture[1]),
            opt(r.sup_ratio[0]),
            opt(r.sup_ratio[1])
        )?;
    }
    Ok(())
}
