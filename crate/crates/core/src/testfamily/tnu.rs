use serde::{Deserialize, Serialize};

use super::params::{TestParams, XnuConfig};
use super::phi::phi_pair;
use super::retract::retract_to_xnu;
use crate::concentration::{psi_pair, ConcentrationConfig, ConePoint};
use crate::error::{Result, TodaError};
use crate::geometry::Mesh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TnuDiagnostics {
    pub psi: [ConePoint; 2],
    /// `σ_i / t_i`, with `σ_i = δ` when `ψ_i` is the apex. `None` if `θ_i` is the apex.
    pub sigma_ratio: [Option<f64>; 2],
    /// `d(β_i, x_i) / t_i` when both are points.
    pub beta_distance_ratio: [Option<f64>; 2],
    /// Largest of `σ_i/t_i`, `t_i/σ_i` and `d(β_i, x_i)/t_i`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TnuOutcome {
    pub input: TestParams,
    pub output: TestParams,
    pub diagnostics: TnuDiagnostics,
}

/// `T_ν(θ) = R_ν(Ψ(φ_θ))` with the ratios comparing `ψ(f_i) = (β_i, σ_i)`
/// against `θ_i = (x_i, t_i)`.
pub fn t_nu_map(mesh: &Mesh, theta: &TestParams, cfg: &XnuConfig, conc: &ConcentrationConfig) -> Result<TnuOutcome> {
    let s = mesh.surface();
    if (cfg.delta - conc.delta).abs() > 1e-12 * conc.delta {
        return Err(TodaError::Config(format!("cone heights differ: δ = {} vs {}", cfg.delta, conc.delta)));
    }
    if !cfg.contains(theta, s) {
        return Err(TodaError::Precondition(format!("{theta:?} is not in X_ν")));
    }
    let (f1, f2) = phi_pair(mesh, theta, cfg.delta)?;
    let (p1, p2) = psi_pair(mesh, &f1, &f2, conc)?;
    let psi = [p1, p2];
    let image = TestParams::new(p1, p2, s, cfg.delta)?;
    let output = retract_to_xnu(&image, cfg, s)?;

    let mut sigma_ratio = [None; 2];
    let mut beta_distance_ratio = [None; 2];
    let mut bound: f64 = 0.0;
    for i in 0..2 {
        let ConePoint::Point { x, t } = *theta.theta(i) else { continue };
        let sigma = psi[i].height().unwrap_or(cfg.delta);
        sigma_ratio[i] = Some(sigma / t);
        bound = bound.max(sigma / t).max(t / sigma);
        if let Some(b) = psi[i].point() {
            let r = s.geodesic_distance(b, &x) / t;
            beta_distance_ratio[i] = Some(r);
            bound = bound.max(r);
        }
    }
    Ok(TnuOutcome {
        input: *theta,
        output,
        diagnostics: TnuDiagnostics { psi, sigma_ratio, beta_distance_ratio, bound },
    })
}
