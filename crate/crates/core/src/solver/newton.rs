use super::precond::QPrecond;
use super::{fail, gauge, observed_order, Method, SolverConfig, SolverRun, TraceEntry};
use crate::error::Result;
use crate::fields::Field;
use crate::functional::{eval_raw, grad_raw, hess_vec_raw, strong_residual_raw, Eval, TodaParams};
use crate::geometry::Mesh;
use crate::linalg::minres;

const MAX_SHIFT: f64 = 1e2;

fn residual(mesh: &Mesh, p: &TodaParams, u: &[Vec<f64>; 2]) -> (Eval, [Vec<f64>; 2], f64) {
    let ev = eval_raw(mesh, p, &u[0], &u[1]);
    let g = grad_raw(mesh, p, [&u[0], &u[1]], &ev);
    let (_, r) = strong_residual_raw(mesh, &g);
    (ev, g, r)
}

/// `(H + γ·mmᵀ + μP) δ = −g` on stacked vectors. The rank-one term removes
/// the constants from the kernel; since `g` sums to zero the solution is
/// mean-zero.
fn newton_direction(
    mesh: &Mesh,
    p: &TodaParams,
    ev: &Eval,
    g: &[Vec<f64>; 2],
    pre: &QPrecond,
    shift: f64,
    cfg: &SolverConfig,
) -> Result<Option<Vec<f64>>> {
    let n = mesh.num_vertices();
    let m = mesh.mass();
    let k = mesh.stiffness();
    let gamma = pre.shift;
    let apply = |v: &[f64], out: &mut [f64]| {
        let (v1, v2) = v.split_at(n);
        let (o1, o2) = out.split_at_mut(n);
        hess_vec_raw(mesh, p, ev, [v1, v2], [&mut *o1, &mut *o2]);
        for (vi, o, vj) in [(v1, &mut *o1, v2), (v2, &mut *o2, v1)] {
            let mv: f64 = vi.iter().zip(m).map(|(a, b)| a * b).sum();
            for x in 0..n {
                o[x] += gamma * m[x] * mv;
            }
            if shift > 0.0 {
                let comb: Vec<f64> = vi.iter().zip(vj).map(|(a, b)| 2.0 * a + b).collect();
                let kc = k.mul_vec(&comb);
                for x in 0..n {
                    o[x] += shift * (kc[x] / 3.0 + pre.shift * m[x] * vi[x]);
                }
            }
        }
    };
    let b: Vec<f64> = g[0].iter().chain(&g[1]).map(|x| -x).collect();
    let out = minres(apply, |r, o| pre.apply_stacked(r, o), &b, cfg.newton.linear_rtol, cfg.newton.linear_max_iters)?;
    let ok = out.x.iter().all(|x| x.is_finite()) && out.rel_residual < 1e-3;
    Ok(ok.then_some(out.x))
}

/// Damped Newton on the gradient of `J_ρ` in the mean-zero gauge, with a
/// backtracking line search on the residual norm and a Levenberg shift
/// `μP` when the step fails.
pub fn newton_solve(mesh: &Mesh, p: &TodaParams, init: (&Field, &Field), cfg: &SolverConfig) -> Result<SolverRun> {
    init.0.check_mesh(mesh)?;
    init.1.check_mesh(mesh)?;
    let rho = p.rho();
    let n = mesh.num_vertices();
    let m = mesh.mass();
    let mut u = [init.0.values().to_vec(), init.1.values().to_vec()];
    u.iter_mut().for_each(|x| gauge(m, x));
    let pre = QPrecond::new(mesh, rho[0].max(rho[1]).max(1.0))?;
    let nc = cfg.newton;
    let mut trace = Vec::new();
    let (mut ev, mut g, mut res) = residual(mesh, p, &u);
    let mut shift = 0.0;
    let mut last_step = 0.0;
    for iter in 0..=nc.max_iters {
        trace.push(TraceEntry { node: 0, iter, energy: ev.energy, residual: res, step: last_step });
        if !res.is_finite() {
            return Err(fail("non-finite residual", rho, trace));
        }
        if res < nc.tol_residual {
            return Ok(SolverRun {
                method: Method::Newton,
                config: cfg.clone(),
                rho,
                observed_order: observed_order(&trace),
                trace,
                nodes: vec![],
                u1: Field::new(mesh, u[0].clone())?,
                u2: Field::new(mesh, u[1].clone())?,
                energy: ev.energy,
                residual_norm: res,
                converged: true,
                mesh_fingerprint: mesh.fingerprint(),
            });
        }
        if iter == nc.max_iters {
            break;
        }
        let accepted = loop {
            if let Some(d) = newton_direction(mesh, p, &ev, &g, &pre, shift, cfg)? {
                let mut alpha = nc.damping;
                let mut found = None;
                while alpha >= 1.0 / 1024.0 {
                    let trial = [
                        u[0].iter().zip(&d[..n]).map(|(a, b)| a + alpha * b).collect::<Vec<_>>(),
                        u[1].iter().zip(&d[n..]).map(|(a, b)| a + alpha * b).collect::<Vec<_>>(),
                    ];
                    let (tev, tg, tres) = residual(mesh, p, &trial);
                    if tres.is_finite() && tres < (1.0 - 1e-4 * alpha) * res {
                        found = Some((trial, tev, tg, tres, alpha));
                        break;
                    }
                    alpha *= 0.5;
                }
                if found.is_some() {
                    break found;
                }
            }
            shift = if shift == 0.0 { 1e-4 } else { 10.0 * shift };
            if shift > MAX_SHIFT {
                break None;
            }
        };
        let Some((mut nu, nev, ng, nres, alpha)) = accepted else {
            return Err(fail(format!("no acceptable step at iteration {iter}, shift above {MAX_SHIFT}"), rho, trace));
        };
        nu.iter_mut().for_each(|x| gauge(m, x));
        u = nu;
        (ev, g, res) = (nev, ng, nres);
        last_step = alpha;
        shift = if shift < 1e-8 { 0.0 } else { 0.1 * shift };
    }
    Err(fail(format!("no convergence in {} Newton iterations", nc.max_iters), rho, trace))
}
