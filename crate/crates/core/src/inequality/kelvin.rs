use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};

/// Function on a flat patch of the plane.
#[derive(Clone)]
pub struct PlanarField {
    f: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for PlanarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PlanarField")
    }
}

impl PlanarField {
    pub fn new<F: Fn([f64; 2]) -> f64 + Send + Sync + 'static>(f: F) -> PlanarField {
        PlanarField { f: Arc::new(f) }
    }

    pub fn zero() -> PlanarField {
        PlanarField::new(|_| 0.0)
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        (self.f)(x)
    }

    /// Random plane waves with wave numbers up to `band / length`.
    pub fn bandlimited(seed: u64, band: usize, length: f64, amplitude: f64) -> PlanarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (4 * band).max(1);
        let modes: Vec<([f64; 2], f64, f64)> = (0..n)
            .map(|_| {
                let th: f64 = rng.gen_range(0.0..2.0 * PI);
                let k = rng.gen_range(0.5..band.max(1) as f64 + 0.5) / length;
                ([k * th.cos(), k * th.sin()], rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        let norm = amplitude * (2.0 / n as f64).sqrt();
        PlanarField::new(move |x| {
            modes.iter().map(|(w, a, ph)| norm * a * (w[0] * x[0] + w[1] * x[1] + ph).cos()).sum()
        })
    }
}

/// Inversion `K(x) = p + rs (x-p)/|x-p|²`.
pub fn kelvin_map(p: [f64; 2], s: f64, r: f64, x: [f64; 2]) -> [f64; 2] {
    let d = [x[0] - p[0], x[1] - p[1]];
    let q = d[0] * d[0] + d[1] * d[1];
    [p[0] + r * s * d[0] / q, p[1] + r * s * d[1] / q]
}

/// `û(x) = u(K(x)) − 4 log|x−p|` outside `B_p(s/2)`, `−4 log(s/2)` inside.
pub fn kelvin_transform(u: &PlanarField, p: [f64; 2], s: f64, r: f64) -> Result<PlanarField> {
    if !(s > 0.0 && r > 0.0) || !(s < r) {
        return Err(TodaError::Domain(format!("Kelvin transform needs 0 < s < r, got s = {s}, r = {r}")));
    }
    let u = u.clone();
    Ok(PlanarField::new(move |x| {
        let d = (x[0] - p[0]).hypot(x[1] - p[1]);
        if d <= 0.5 * s {
            -4.0 * (0.5 * s).ln()
        } else {
            u.eval(kelvin_map(p, s, r, x)) - 4.0 * d.ln()
        }
    }))
}

/// `∫_{A_p(a,b)} e^u` in polar coordinates: composite Simpson in `log ρ`,
/// periodic trapezoid in the angle.
pub fn annulus_exp_integral(u: &PlanarField, p: [f64; 2], a: f64, b: f64, n_r: usize, n_theta: usize) -> f64 {
    let n_r = (n_r.max(2) + 1) & !1;
    let (ta, tb) = (a.ln(), b.ln());
    let h = (tb - ta) / n_r as f64;
    let dth = 2.0 * PI / n_theta as f64;
    let mut acc = 0.0;
    for i in 0..=n_r {
        let t = ta + i as f64 * h;
        let rho = t.exp();
        let w = if i == 0 || i == n_r {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let ring: f64 = (0..n_theta)
            .map(|j| {
                let th = j as f64 * dth;
                u.eval([p[0] + rho * th.cos(), p[1] + rho * th.sin()]).exp()
            })
            .sum();
        acc += w * ring * dth * rho * rho;
    }
    acc * h / 3.0
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KelvinIdentity {
    /// `∫_{A(s,r)} e^û`
    pub lhs: f64,
    /// `(sr)^{-2} ∫_{A(s,r)} e^u`
    pub rhs: f64,
    pub rel_err: f64,
}

/// Both sides of the change-of-variables identity for the exponential integral.
pub fn kelvin_identity(
    u: &PlanarField,
    p: [f64; 2],
    s: f64,
    r: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<KelvinIdentity> {
    let uh = kelvin_transform(u, p, s, r)?;
    let lhs = annulus_exp_integral(&uh, p, s, r, n_r, n_theta);
    let rhs = annulus_exp_integral(u, p, s, r, n_r, n_theta) / (s * s * r * r);
    Ok(KelvinIdentity { lhs, rhs, rel_err: (lhs - rhs).abs() / rhs.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_field_transform_is_clamped_log() {
        let (p, s, r) = ([0.3, -0.1], 0.01, 0.2);
        let uh = kelvin_transform(&PlanarField::zero(), p, s, r).unwrap();
        for d in [0.001, 0.004, 0.005, 0.006, 0.05, 0.3] {
            let x = [p[0] + d * 0.6, p[1] + d * 0.8];
            let want = if d <= 0.5 * s { -4.0 * (0.5 * s).ln() } else { -4.0 * f64::ln(d) };
            assert!((uh.eval(x) - want).abs() < 1e-9, "d = {d}");
        }
    }

    #[test]
    fn requires_s_below_r() {
        assert!(kelvin_transform(&PlanarField::zero(), [0.0, 0.0], 0.2, 0.2).is_err());
        assert!(kelvin_transform(&PlanarField::zero(), [0.0, 0.0], 0.0, 0.2).is_err());
    }

    #[test]
    fn exp_identity_on_random_fields() {
        for seed in 0..5 {
            let u = PlanarField::bandlimited(seed, 4, 0.05, 1.5);
            let k = kelvin_identity(&u, [0.1, 0.2], 0.01, 0.15, 400, 256).unwrap();
            assert!(k.rel_err < 0.01, "seed {seed}: {k:?}");
        }
    }

    #[test]
    fn exp_identity_zero_field_closed_form() {
        // ∫_{A(s,r)} |x|^{-4} = π(s^{-2} − r^{-2}) = |A(s,r)| / (sr)².
        let (s, r) = (0.02, 0.1);
        let k = kelvin_identity(&PlanarField::zero(), [0.0, 0.0], s, r, 200, 64).unwrap();
        let want_rhs = PI * (r * r - s * s) / (s * s * r * r);
        let want_lhs = PI * (1.0 / (s * s) - 1.0 / (r * r));
        assert!((k.rhs - want_rhs).abs() / want_rhs < 1e-8);
        assert!((k.lhs - want_lhs).abs() / want_lhs < 1e-6);
    }

    proptest! {
        #[test]
        fn kelvin_is_an_involution(
            px in -1.0..1.0f64, py in -1.0..1.0f64,
            s in 0.001..0.05f64, ratio in 1.5..20.0f64,
            rho_frac in 0.0..1.0f64, th in 0.0..std::f64::consts::TAU,
        ) {
            let r = s * ratio;
            let rho = 0.5 * s + rho_frac * (2.0 * r - 0.5 * s);
            let x = [px + rho * th.cos(), py + rho * th.sin()];
            let y = kelvin_map([px, py], s, r, kelvin_map([px, py], s, r, x));
            prop_assert!(((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt() < 1e-9);
        }

        #[test]
        fn kelvin_swaps_annulus_boundaries(s in 0.001..0.05f64, ratio in 1.5..20.0f64, th in 0.0..std::f64::consts::TAU) {
            let r = s * ratio;
            let x = [0.5 * s * th.cos(), 0.5 * s * th.sin()];
            let y = kelvin_map([0.0, 0.0], s, r, x);
            prop_assert!((y[0].hypot(y[1]) - 2.0 * r).abs() < 1e-9 * r);
            let z = [(s * r).sqrt() * th.cos(), (s * r).sqrt() * th.sin()];
            let w = kelvin_map([0.0, 0.0], s, r, z);
            prop_assert!((w[0] - z[0]).abs() < 1e-12 && (w[1] - z[1]).abs() < 1e-12);
        }
    }
}
