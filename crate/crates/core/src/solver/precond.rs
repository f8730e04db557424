use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::Result;
use crate::geometry::Mesh;
use crate::linalg::EnvelopeCholesky;

/// `P = (1/3)[[2K, K], [K, 2K]] + s·diag(M, M)`, inverted blockwise in the
/// eigenbasis `(1, ±1)/√2` of the coupling matrix.
pub(crate) struct QPrecond {
    plus: EnvelopeCholesky,
    minus: EnvelopeCholesky,
    pub shift: f64,
}

impl QPrecond {
    pub fn new(mesh: &Mesh, shift: f64) -> Result<QPrecond> {
        let k = mesh.stiffness();
        let m = mesh.mass();
        let plus = EnvelopeCholesky::factor(&k.add_diagonal(1.0, shift, m))?;
        let minus = EnvelopeCholesky::factor(&k.add_diagonal(1.0 / 3.0, shift, m))?;
        Ok(QPrecond { plus, minus, shift })
    }

    pub fn apply(&self, r: [&[f64]; 2], out: [&mut [f64]; 2]) {
        let n = r[0].len();
        let rp: Vec<f64> = (0..n).map(|v| FRAC_1_SQRT_2 * (r[0][v] + r[1][v])).collect();
        let rm: Vec<f64> = (0..n).map(|v| FRAC_1_SQRT_2 * (r[0][v] - r[1][v])).collect();
        let zp = self.plus.solve(&rp);
        let zm = self.minus.solve(&rm);
        let [o1, o2] = out;
        for v in 0..n {
            o1[v] = FRAC_1_SQRT_2 * (zp[v] + zm[v]);
            o2[v] = FRAC_1_SQRT_2 * (zp[v] - zm[v]);
        }
    }

    /// Same on a stacked vector `(r1, r2)`.
    pub fn apply_stacked(&self, r: &[f64], out: &mut [f64]) {
        let n = r.len() / 2;
        let (o1, o2) = out.split_at_mut(n);
        self.apply([&r[..n], &r[n..]], [o1, o2]);
    }
}
