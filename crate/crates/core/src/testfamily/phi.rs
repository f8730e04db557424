use super::params::{t_tilde, TestParams};
use crate::concentration::ConePoint;
use crate::error::Result;
use crate::fields::Field;
use crate::geometry::{Mesh, Point, Surface};

/// `(x, t̃(t))`, or `None` at the apex where `t̃ = 0`.
fn scaled(c: &ConePoint, delta: f64) -> Result<Option<(Point, f64)>> {
    match c {
        ConePoint::Apex => Ok(None),
        ConePoint::Point { x, t } => {
            let tt = t_tilde(*t, delta)?;
            Ok(if tt == 0.0 { None } else { Some((*x, tt)) })
        }
    }
}

/// `log(1 + t̃² d(x, y)²)`
fn log_bump(surface: Surface, c: &Option<(Point, f64)>, y: &Point) -> f64 {
    match c {
        None => 0.0,
        Some((x, tt)) => (tt * surface.geodesic_distance(x, y)).powi(2).ln_1p(),
    }
}

/// Both test functions at one point of the surface.
pub fn phi_at(surface: Surface, theta: &TestParams, delta: f64, y: &Point) -> Result<[f64; 2]> {
    let a = scaled(&theta.theta1, delta)?;
    let b = scaled(&theta.theta2, delta)?;
    let (l1, l2) = (log_bump(surface, &a, y), log_bump(surface, &b, y));
    Ok([l2 - 2.0 * l1, l1 - 2.0 * l2])
}

/// `φ_i = log[(1 + t̃_j² d(x_j,·)²) / (1 + t̃_i² d(x_i,·)²)²]` sampled at the vertices.
pub fn phi_pair(mesh: &Mesh, theta: &TestParams, delta: f64) -> Result<(Field, Field)> {
    let s = mesh.surface();
    let a = scaled(&theta.theta1, delta)?;
    let b = scaled(&theta.theta2, delta)?;
    let (l1, l2): (Vec<f64>, Vec<f64>) = mesh.points().iter().map(|y| (log_bump(s, &a, y), log_bump(s, &b, y))).unzip();
    let p1 = l1.iter().zip(&l2).map(|(a, b)| b - 2.0 * a).collect();
    let p2 = l1.iter().zip(&l2).map(|(a, b)| a - 2.0 * b).collect();
    Ok((Field::new(mesh, p1)?, Field::new(mesh, p2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mesh;

    #[test]
    fn closed_form_and_sum_rule() {
        let mesh = Mesh::build(Surface::FlatTorus, 3).unwrap();
        let s = mesh.surface();
        let delta = 0.2;
        let x1 = Surface::torus_point(0.3, 0.3);
        let x2 = Surface::torus_point(0.6, 0.4);
        let th = TestParams::points(x1, 0.02, x2, 0.15, s, delta).unwrap();
        let (p1, p2) = phi_pair(&mesh, &th, delta).unwrap();
        let t2t = t_tilde(0.15, delta).unwrap();
        for (k, y) in mesh.points().iter().enumerate().step_by(37) {
            let d1 = s.geodesic_distance(&x1, y);
            let d2 = s.geodesic_distance(&x2, y);
            let want = ((1.0 + t2t * t2t * d2 * d2) / (1.0 + d1 * d1 / 4e-4).powi(2)).ln();
            assert!((p1.values()[k] - want).abs() < 1e-10);
            // 2φ1 + φ2 = −3 log(1 + t̃1² d1²)
            let lhs = 2.0 * p1.values()[k] + p2.values()[k];
            assert!((lhs + 3.0 * (d1 * d1 / 4e-4).ln_1p()).abs() < 1e-10);
        }
    }

    #[test]
    fn apex_component_drops_out() {
        let mesh = Mesh::build(Surface::Sphere, 2).unwrap();
        let s = mesh.surface();
        let x = *mesh.point(5);
        let th = TestParams::new(ConePoint::Point { x, t: 0.01 }, ConePoint::Apex, s, 0.05).unwrap();
        let (p1, p2) = phi_pair(&mesh, &th, 0.05).unwrap();
        for (a, b) in p1.values().iter().zip(p2.values()) {
            assert!((a + 2.0 * b).abs() < 1e-12);
        }
        assert_eq!(p1.values()[5], 0.0);
        let at = phi_at(s, &th, 0.05, mesh.point(9)).unwrap();
        assert!((at[0] - p1.values()[9]).abs() < 1e-14);
    }
}
