//! The Toda energy `J_ρ`, its gradient and the Euler-Lagrange residual.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::fields::{density_values, log_int_exp_raw, mean_raw, q_form_raw, Field};
use crate::geometry::Mesh;

#[derive(Clone, Debug)]
pub struct TodaParams {
    pub rho1: f64,
    pub rho2: f64,
    h1: Field,
    h2: Field,
}

impl TodaParams {
    /// `h` defaults to 1 when absent.
    pub fn new(mesh: &Mesh, rho1: f64, rho2: f64, h1: Option<Field>, h2: Option<Field>) -> Result<TodaParams> {
        for (i, r) in [rho1, rho2].iter().enumerate() {
            if !(*r > 0.0) || !r.is_finite() {
                return Err(TodaError::Domain(format!("rho{} = {r} must be positive", i + 1)));
            }
        }
        let h1 = h1.unwrap_or_else(|| Field::constant(mesh, 1.0));
        let h2 = h2.unwrap_or_else(|| Field::constant(mesh, 1.0));
        for h in [&h1, &h2] {
            h.check_mesh(mesh)?;
            if h.values().iter().any(|&v| !(v > 0.0)) {
                return Err(TodaError::Domain("weights h must be positive".into()));
            }
        }
        Ok(TodaParams { rho1, rho2, h1, h2 })
    }

    pub fn uniform(mesh: &Mesh, rho1: f64, rho2: f64) -> Result<TodaParams> {
        TodaParams::new(mesh, rho1, rho2, None, None)
    }

    pub fn rho(&self) -> [f64; 2] {
        [self.rho1, self.rho2]
    }

    pub fn h1(&self) -> &Field {
        &self.h1
    }

    pub fn h2(&self) -> &Field {
        &self.h2
    }

    pub fn with_rho(&self, rho1: f64, rho2: f64) -> TodaParams {
        TodaParams { rho1, rho2, h1: self.h1.clone(), h2: self.h2.clone() }
    }

    fn check(&self, mesh: &Mesh, u1: &Field, u2: &Field) -> Result<()> {
        self.h1.check_mesh(mesh)?;
        u1.check_mesh(mesh)?;
        u2.check_mesh(mesh)
    }
}

/// Energy together with the normalized densities it was computed from.
#[derive(Clone, Debug)]
pub(crate) struct Eval {
    pub energy: f64,
    /// `h_i e^{u_i} / ∫h_i e^{u_i}` per vertex.
    pub f: [Vec<f64>; 2],
    pub log_z: [f64; 2],
}

pub(crate) fn eval_raw(mesh: &Mesh, p: &TodaParams, u1: &[f64], u2: &[f64]) -> Eval {
    let m = mesh.mass();
    let lz1 = log_int_exp_raw(m, Some(p.h1.values()), u1, None);
    let lz2 = log_int_exp_raw(m, Some(p.h2.values()), u2, None);
    let energy = q_form_raw(mesh, u1, u2) + p.rho1 * (mean_raw(m, u1) - lz1) + p.rho2 * (mean_raw(m, u2) - lz2);
    Eval {
        energy,
        f: [density_values(Some(p.h1.values()), u1, lz1), density_values(Some(p.h2.values()), u2, lz2)],
        log_z: [lz1, lz2],
    }
}

/// Dual gradient `g_i = (1/3)K(2u_i + u_j) + ρ_i M(1 − f_i)`.
pub(crate) fn grad_raw(mesh: &Mesh, p: &TodaParams, u: [&[f64]; 2], ev: &Eval) -> [Vec<f64>; 2] {
    let k = mesh.stiffness();
    let m = mesh.mass();
    let n = m.len();
    let rho = p.rho();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for i in 0..2 {
        let j = 1 - i;
        let comb: Vec<f64> = (0..n).map(|v| 2.0 * u[i][v] + u[j][v]).collect();
        k.mul_vec_into(&comb, &mut out[i]);
        for v in 0..n {
            out[i][v] = out[i][v] / 3.0 + rho[i] * m[v] * (1.0 - ev.f[i][v]);
        }
    }
    out
}

/// Strong residual `s_i = M⁻¹(2g_i − g_j)` and its mass-weighted L² norm.
pub(crate) fn strong_residual_raw(mesh: &Mesh, g: &[Vec<f64>; 2]) -> ([Vec<f64>; 2], f64) {
    let m = mesh.mass();
    let n = m.len();
    let mut s = [vec![0.0; n], vec![0.0; n]];
    let mut nrm = 0.0;
    for i in 0..2 {
        let j = 1 - i;
        for v in 0..n {
            s[i][v] = (2.0 * g[i][v] - g[j][v]) / m[v];
            nrm += m[v] * s[i][v] * s[i][v];
        }
    }
    (s, nrm.sqrt())
}

/// Hessian-vector product at the state described by `ev`.
pub(crate) fn hess_vec_raw(mesh: &Mesh, p: &TodaParams, ev: &Eval, v: [&[f64]; 2], out: [&mut [f64]; 2]) {
    let k = mesh.stiffness();
    let m = mesh.mass();
    let n = m.len();
    let rho = p.rho();
    let [o1, o2] = out;
    let outs = [o1, o2];
    for (i, o) in outs.into_iter().enumerate() {
        let j = 1 - i;
        let comb: Vec<f64> = (0..n).map(|x| 2.0 * v[i][x] + v[j][x]).collect();
        k.mul_vec_into(&comb, o);
        let w = &ev.f[i];
        let wv: f64 = (0..n).map(|x| m[x] * w[x] * v[i][x]).sum();
        for x in 0..n {
            let mw = m[x] * w[x];
            o[x] = o[x] / 3.0 - rho[i] * (mw * v[i][x] - mw * wv);
        }
    }
}

pub fn j_rho(mesh: &Mesh, p: &TodaParams, u1: &Field, u2: &Field) -> Result<f64> {
    p.check(mesh, u1, u2)?;
    Ok(eval_raw(mesh, p, u1.values(), u2.values()).energy)
}

/// Gradient of `J_ρ` as dual vectors (pairings with nodal directions).
pub fn grad_j(mesh: &Mesh, p: &TodaParams, u1: &Field, u2: &Field) -> Result<(Field, Field)> {
    p.check(mesh, u1, u2)?;
    let ev = eval_raw(mesh, p, u1.values(), u2.values());
    let [g1, g2] = grad_raw(mesh, p, [u1.values(), u2.values()], &ev);
    Ok((Field::new(mesh, g1)?, Field::new(mesh, g2)?))
}

/// Strong-form residuals of the system, as nodal values, with their
/// mass-weighted L² norm.
pub fn el_residual(mesh: &Mesh, p: &TodaParams, u1: &Field, u2: &Field) -> Result<(Field, Field, f64)> {
    p.check(mesh, u1, u2)?;
    let ev = eval_raw(mesh, p, u1.values(), u2.values());
    let g = grad_raw(mesh, p, [u1.values(), u2.values()], &ev);
    let ([s1, s2], nrm) = strong_residual_raw(mesh, &g);
    Ok((Field::new(mesh, s1)?, Field::new(mesh, s2)?, nrm))
}

/// Residuals tested against the nodal basis: `K u_i − M[2ρ_i(f_i−1) − ρ_j(f_j−1)]`.
pub fn weak_residual(mesh: &Mesh, p: &TodaParams, u1: &Field, u2: &Field) -> Result<(Field, Field)> {
    p.check(mesh, u1, u2)?;
    let ev = eval_raw(mesh, p, u1.values(), u2.values());
    let g = grad_raw(mesh, p, [u1.values(), u2.values()], &ev);
    let r = |i: usize| g[i].iter().zip(&g[1 - i]).map(|(a, b)| 2.0 * a - b).collect::<Vec<_>>();
    Ok((Field::new(mesh, r(0))?, Field::new(mesh, r(1))?))
}

/// One evaluation of the functional, as reported in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub rho: [f64; 2],
    pub energy: f64,
    pub residual_norm: f64,
    pub means: [f64; 2],
    /// `∫h_i e^{u_i}`.
    pub masses: [f64; 2],
}

pub fn evaluate(mesh: &Mesh, p: &TodaParams, u1: &Field, u2: &Field) -> Result<EvalRecord> {
    p.check(mesh, u1, u2)?;
    let ev = eval_raw(mesh, p, u1.values(), u2.values());
    let g = grad_raw(mesh, p, [u1.values(), u2.values()], &ev);
    let (_, nrm) = strong_residual_raw(mesh, &g);
    Ok(EvalRecord {
        rho: p.rho(),
        energy: ev.energy,
        residual_norm: nrm,
        means: [mean_raw(mesh.mass(), u1.values()), mean_raw(mesh.mass(), u2.values())],
        masses: [ev.log_z[0].exp(), ev.log_z[1].exp()],
    })
}
