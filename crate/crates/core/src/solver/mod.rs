//! Critical points of `J_ρ`: preconditioned descent in the coercive range,
//! damped Newton for saddle points, continuation in `ρ`, and an upper
//! estimate of the min-max level along the test family.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::fields::Field;

mod continuation;
mod descent;
mod minmax;
mod newton;
mod precond;

pub use continuation::continuation_solve;
pub use descent::minimize_coercive;
pub use minmax::{minmax_estimate, BarrierReport, MinmaxOptions, MinmaxReport, PathMax};
pub use newton::newton_solve;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub max_iters: usize,
    /// Initial step fraction of the line search.
    pub damping: f64,
    pub tol_residual: f64,
    pub linear_rtol: f64,
    pub linear_max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { max_iters: 60, damping: 1.0, tol_residual: 1e-10, linear_rtol: 1e-11, linear_max_iters: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Largest step of the backtracking line search.
    pub step: f64,
    pub max_steps: usize,
    /// Stop when the residual norm drops below this.
    pub tol_grad: f64,
    /// Window over which the residual must at least halve; otherwise the descent has stalled.
    pub stall_iters: usize,
    /// A stalled run below this residual is returned unconverged, for a Newton
    /// polish; above it the stall is a failure.
    pub handoff: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { step: 1.0, max_steps: 20_000, tol_grad: 1e-9, stall_iters: 50, handoff: 1e-2 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    #[default]
    MeanZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho_path: Vec<[f64; 2]>,
    pub newton: NewtonConfig,
    pub flow: FlowConfig,
    pub gauge: Gauge,
    /// Distance the first node keeps below `4π` and the last keeps from `4π`, `8π`.
    pub margin: f64,
    pub max_bisections: usize,
}

impl SolverConfig {
    /// Eight log-spaced nodes from `(3.5π, 3.5π)` to the target, or the
    /// target alone when it is already coercive.
    pub fn default_path(target: [f64; 2]) -> Vec<[f64; 2]> {
        let start = [3.5 * PI, 3.5 * PI];
        if target[0] <= start[0] && target[1] <= start[1] {
            return vec![target];
        }
        (0..8)
            .map(|k| {
                let a = k as f64 / 7.0;
                [0, 1].map(|i| start[i] * (target[i] / start[i]).powf(a))
            })
            .map(|mut r| {
                r.iter_mut().zip(target).for_each(|(x, t)| {
                    if (*x - t).abs() < 1e-12 * t {
                        *x = t
                    }
                });
                r
            })
            .collect()
    }

    pub fn for_target(target: [f64; 2]) -> SolverConfig {
        SolverConfig {
            rho_path: SolverConfig::default_path(target),
            newton: NewtonConfig::default(),
            flow: FlowConfig::default(),
            gauge: Gauge::MeanZero,
            margin: 0.05 * PI,
            max_bisections: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (Some(first), Some(last)) = (self.rho_path.first(), self.rho_path.last()) else {
            return Err(TodaError::Config("empty ρ path".into()));
        };
        if self.rho_path.iter().flatten().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(TodaError::Config("ρ path entries must be positive".into()));
        }
        if !(self.margin > 0.0) {
            return Err(TodaError::Config(format!("margin {} must be positive", self.margin)));
        }
        if first.iter().any(|r| *r > 4.0 * PI - self.margin) {
            return Err(TodaError::Config(format!("path must start in the coercive range, got {first:?}")));
        }
        for r in last {
            for k in [1.0, 2.0] {
                if (r - 4.0 * PI * k).abs() < self.margin {
                    return Err(TodaError::Config(format!("target ρ = {r} is within {} of {}π", self.margin, 4.0 * k)));
                }
            }
        }
        if !(self.newton.tol_residual > 0.0 && self.flow.tol_grad > 0.0 && self.flow.step > 0.0) {
            return Err(TodaError::Config("tolerances and step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Index of the continuation node.
    pub node: usize,
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
    /// Accepted step length.
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub rho: [f64; 2],
    pub method: Method,
    pub iterations: usize,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Descent,
    Newton,
    Continuation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub method: Method,
    pub config: SolverConfig,
    pub rho: [f64; 2],
    pub trace: Vec<TraceEntry>,
    pub nodes: Vec<NodeSummary>,
    /// Mean-zero solution.
    pub u1: Field,
    pub u2: Field,
    pub energy: f64,
    pub residual_norm: f64,
    pub converged: bool,
    /// `log r_{k+1} / log r_k` over the last Newton steps.
    pub observed_order: Option<f64>,
    pub mesh_fingerprint: u64,
}

impl SolverRun {
    pub(crate) fn summary(&self) -> NodeSummary {
        NodeSummary {
            rho: self.rho,
            method: self.method,
            iterations: self.trace.len().saturating_sub(1),
            energy: self.energy,
            residual: self.residual_norm,
        }
    }
}

/// Diagnostics of a failed solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverFailure {
    pub message: String,
    pub rho: [f64; 2],
    /// Continuation node that failed.
    pub node: Option<usize>,
    pub trace: Vec<TraceEntry>,
    /// Nodes completed before the failure.
    pub completed: Vec<NodeSummary>,
}

pub(crate) fn fail(message: impl Into<String>, rho: [f64; 2], trace: Vec<TraceEntry>) -> TodaError {
    TodaError::Solver(Box::new(SolverFailure { message: message.into(), rho, node: None, trace, completed: vec![] }))
}

/// Subtracts the mass-weighted mean.
pub(crate) fn gauge(mass: &[f64], u: &mut [f64]) {
    let total: f64 = mass.iter().sum();
    let m = u.iter().zip(mass).map(|(a, b)| a * b).sum::<f64>() / total;
    u.iter_mut().for_each(|x| *x -= m);
}

pub(crate) fn observed_order(trace: &[TraceEntry]) -> Option<f64> {
    // Residuals near 1e-12 sit at the round-off floor and say nothing about the rate.
    let r: Vec<f64> = trace.iter().map(|t| t.residual).filter(|r| *r > 1e-10 && *r < 1.0).collect();
    if r.len() < 3 {
        return None;
    }
    let n = r.len();
    let (a, b, c) = (r[n - 3].ln(), r[n - 2].ln(), r[n - 1].ln());
    Some((c - b) / (b - a))
}
