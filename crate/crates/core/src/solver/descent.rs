use std::f64::consts::PI;

use super::newton::newton_solve;
use super::precond::QPrecond;
use super::{fail, gauge, observed_order, Method, SolverConfig, SolverRun, TraceEntry};
use crate::error::{Result, TodaError};
use crate::fields::Field;
use crate::functional::{eval_raw, grad_raw, strong_residual_raw, TodaParams};
use crate::geometry::Mesh;
use crate::linalg::dot;

/// Preconditioned gradient descent with Armijo backtracking. Requires
/// `ρ_i < 4π`, where `J_ρ` is coercive on mean-zero pairs. Once the energy
/// decrease is lost in round-off the descent stalls; below `flow.handoff`
/// Newton finishes the job.
pub fn minimize_coercive(mesh: &Mesh, p: &TodaParams, init: (&Field, &Field), cfg: &SolverConfig) -> Result<SolverRun> {
    let rho = p.rho();
    if rho.iter().any(|r| *r >= 4.0 * PI) {
        return Err(TodaError::Precondition(format!("ρ = {rho:?} is not in the coercive range")));
    }
    init.0.check_mesh(mesh)?;
    init.1.check_mesh(mesh)?;
    let n = mesh.num_vertices();
    let m = mesh.mass();
    let mut u = [init.0.values().to_vec(), init.1.values().to_vec()];
    u.iter_mut().for_each(|x| gauge(m, x));
    let pre = QPrecond::new(mesh, 1.0)?;
    let flow = cfg.flow;
    let mut trace = Vec::new();
    let mut alpha = flow.step;
    let mut ev = eval_raw(mesh, p, &u[0], &u[1]);
    let mut last_step = 0.0;
    for iter in 0..=flow.max_steps {
        let g = grad_raw(mesh, p, [&u[0], &u[1]], &ev);
        let (_, res) = strong_residual_raw(mesh, &g);
        trace.push(TraceEntry { node: 0, iter, energy: ev.energy, residual: res, step: last_step });
        if !res.is_finite() || !ev.energy.is_finite() {
            return Err(fail("non-finite energy or residual", rho, trace));
        }
        if res < flow.tol_grad {
            return finish(mesh, p, cfg, u, trace, false);
        }
        let window = flow.stall_iters.max(1);
        if iter >= window && res > 0.5 * trace[iter - window].residual {
            return stalled(mesh, p, cfg, u, trace, res);
        }
        if iter == flow.max_steps {
            break;
        }
        let (mut d1, mut d2) = (vec![0.0; n], vec![0.0; n]);
        pre.apply([&g[0], &g[1]], [&mut d1, &mut d2]);
        d1.iter_mut().chain(d2.iter_mut()).for_each(|x| *x = -*x);
        let slope = dot(&g[0], &d1) + dot(&g[1], &d2);
        if !(slope < 0.0) {
            return Err(fail("preconditioned gradient is not a descent direction", rho, trace));
        }
        alpha = (2.0 * alpha).min(flow.step);
        loop {
            let t1: Vec<f64> = u[0].iter().zip(&d1).map(|(a, b)| a + alpha * b).collect();
            let t2: Vec<f64> = u[1].iter().zip(&d2).map(|(a, b)| a + alpha * b).collect();
            let trial = eval_raw(mesh, p, &t1, &t2);
            let armijo = trial.energy <= ev.energy + 1e-4 * alpha * slope;
            // Near the minimum the energy decrease drops below round-off;
            // accept non-increasing steps that reduce the residual.
            let flat = !armijo && trial.energy <= ev.energy && {
                let gt = grad_raw(mesh, p, [&t1, &t2], &trial);
                strong_residual_raw(mesh, &gt).1 < res
            };
            if armijo || flat {
                u = [t1, t2];
                u.iter_mut().for_each(|x| gauge(m, x));
                ev = eval_raw(mesh, p, &u[0], &u[1]);
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return stalled(mesh, p, cfg, u, trace, res);
            }
        }
        last_step = alpha;
    }
    Err(fail(format!("no convergence in {} steps", flow.max_steps), rho, trace))
}

fn finish(
    mesh: &Mesh,
    p: &TodaParams,
    cfg: &SolverConfig,
    u: [Vec<f64>; 2],
    trace: Vec<TraceEntry>,
    polished: bool,
) -> Result<SolverRun> {
    let ev = eval_raw(mesh, p, &u[0], &u[1]);
    let g = grad_raw(mesh, p, [&u[0], &u[1]], &ev);
    let (_, res) = strong_residual_raw(mesh, &g);
    Ok(SolverRun {
        method: Method::Descent,
        config: cfg.clone(),
        rho: p.rho(),
        observed_order: if polished { observed_order(&trace) } else { None },
        trace,
        nodes: vec![],
        u1: Field::new(mesh, u[0].clone())?,
        u2: Field::new(mesh, u[1].clone())?,
        energy: ev.energy,
        residual_norm: res,
        converged: true,
        mesh_fingerprint: mesh.fingerprint(),
    })
}

fn stalled(
    mesh: &Mesh,
    p: &TodaParams,
    cfg: &SolverConfig,
    u: [Vec<f64>; 2],
    mut trace: Vec<TraceEntry>,
    res: f64,
) -> Result<SolverRun> {
    if res >= cfg.flow.handoff {
        return Err(fail(format!("descent stalled at residual {res:.3e}"), p.rho(), trace));
    }
    let (u1, u2) = (Field::new(mesh, u[0].clone())?, Field::new(mesh, u[1].clone())?);
    let polish = newton_solve(mesh, p, (&u1, &u2), cfg).map_err(|e| match e {
        TodaError::Solver(mut f) => {
            let offset = trace.len();
            trace.extend(f.trace.iter().map(|t| TraceEntry { iter: t.iter + offset, ..*t }));
            f.trace = trace.clone();
            TodaError::Solver(f)
        }
        other => other,
    })?;
    let offset = trace.len();
    trace.extend(polish.trace.iter().map(|t| TraceEntry { iter: t.iter + offset, ..*t }));
    finish(mesh, p, cfg, [polish.u1.into_values(), polish.u2.into_values()], trace, true)
}
