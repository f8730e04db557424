use serde::{Deserialize, Serialize};

use crate::concentration::ConePoint;
use crate::error::{Result, TodaError};
use crate::geometry::{Point, Surface};

/// Pair `(θ1, θ2)` of cone points off the diagonal. A point at height `δ`
/// or above is stored as the apex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub theta1: ConePoint,
    pub theta2: ConePoint,
}

fn canonical(c: ConePoint, surface: Surface, delta: f64) -> Result<ConePoint> {
    match c {
        ConePoint::Apex => Ok(ConePoint::Apex),
        ConePoint::Point { x, t } => {
            if !(t > 0.0) || !t.is_finite() {
                return Err(TodaError::Domain(format!("cone height {t} must be positive")));
            }
            if t >= delta {
                Ok(ConePoint::Apex)
            } else {
                Ok(ConePoint::Point { x: surface.canonicalize(x), t })
            }
        }
    }
}

impl TestParams {
    pub fn new(theta1: ConePoint, theta2: ConePoint, surface: Surface, delta: f64) -> Result<TestParams> {
        let p = TestParams { theta1: canonical(theta1, surface, delta)?, theta2: canonical(theta2, surface, delta)? };
        if p.theta1 == p.theta2 {
            return Err(TodaError::Precondition(format!("({theta1:?}, {theta2:?}) lies on the diagonal")));
        }
        Ok(p)
    }

    pub fn points(x1: Point, t1: f64, x2: Point, t2: f64, surface: Surface, delta: f64) -> Result<TestParams> {
        TestParams::new(ConePoint::Point { x: x1, t: t1 }, ConePoint::Point { x: x2, t: t2 }, surface, delta)
    }

    pub fn theta(&self, i: usize) -> &ConePoint {
        if i == 0 {
            &self.theta1
        } else {
            &self.theta2
        }
    }

    /// Heights with the apex at `δ`.
    pub fn heights(&self, delta: f64) -> [f64; 2] {
        [self.theta1.height().unwrap_or(delta), self.theta2.height().unwrap_or(delta)]
    }

    pub fn swap(&self) -> TestParams {
        TestParams { theta1: self.theta2, theta2: self.theta1 }
    }

    /// Distance of the base points; zero if either is the apex.
    pub fn base_distance(&self, surface: Surface) -> f64 {
        match (self.theta1.point(), self.theta2.point()) {
            (Some(a), Some(b)) => surface.geodesic_distance(a, b),
            _ => 0.0,
        }
    }
}

/// Parameters of the compact retract `X_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XnuConfig {
    pub nu: f64,
    pub delta: f64,
}

impl XnuConfig {
    pub fn new(nu: f64, delta: f64) -> Result<XnuConfig> {
        if !(nu > 0.0 && nu < 1.0 && nu < delta) || !delta.is_finite() {
            return Err(TodaError::Config(format!("need ν² < ν < δ, got ν = {nu}, δ = {delta}")));
        }
        Ok(XnuConfig { nu, delta })
    }

    /// `ν = 10⁻³ δ`.
    pub fn with_default_nu(delta: f64) -> Result<XnuConfig> {
        XnuConfig::new(1e-3 * delta, delta)
    }

    fn min_in_band(&self, t: [f64; 2]) -> bool {
        let m = t[0].min(t[1]);
        m >= self.nu * self.nu && m <= self.nu
    }

    /// Condition `max t < δ` and `|t1 − t2|² + d² ≥ δ⁴`.
    pub fn separated(&self, p: &TestParams, surface: Surface) -> bool {
        let t = p.heights(self.delta);
        let d = p.base_distance(surface);
        t[0].max(t[1]) < self.delta && (t[0] - t[1]).powi(2) + d * d >= self.delta.powi(4)
    }

    pub fn at_ceiling(&self, p: &TestParams) -> bool {
        let t = p.heights(self.delta);
        t[0].max(t[1]) >= self.delta
    }

    pub fn in_x1(&self, p: &TestParams, surface: Surface) -> bool {
        self.separated(p, surface) && self.min_in_band(p.heights(self.delta))
    }

    pub fn in_x2(&self, p: &TestParams) -> bool {
        self.at_ceiling(p) && self.min_in_band(p.heights(self.delta))
    }

    pub fn contains(&self, p: &TestParams, surface: Surface) -> bool {
        self.in_x1(p, surface) || self.in_x2(p)
    }
}

/// `t̃(t)`: `1/t` up to `δ/2`, then linear down to 0 at `δ`.
pub fn t_tilde(t: f64, delta: f64) -> Result<f64> {
    if !(t > 0.0) || t > delta {
        return Err(TodaError::Domain(format!("t = {t} outside (0, {delta}]")));
    }
    Ok(if t <= 0.5 * delta { 1.0 / t } else { -4.0 / (delta * delta) * (t - delta) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_tilde_branches() {
        let d = 0.2;
        assert!((t_tilde(0.1, d).unwrap() - 10.0).abs() < 1e-12);
        let left = 1.0 / (0.5 * d);
        let right = -4.0 / (d * d) * (0.5 * d - d);
        assert!((left - right).abs() < 1e-12);
        assert_eq!(t_tilde(d, d).unwrap(), 0.0);
        assert!((t_tilde(0.25 * d, d).unwrap() - 4.0 / d).abs() < 1e-12);
        assert!(t_tilde(0.0, d).is_err() && t_tilde(1.01 * d, d).is_err());
        let a = t_tilde(0.5 * d - 1e-12, d).unwrap();
        let b = t_tilde(0.5 * d + 1e-12, d).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn diagonal_is_rejected() {
        let s = Surface::FlatTorus;
        let x = Surface::torus_point(0.2, 0.3);
        assert!(TestParams::new(ConePoint::Apex, ConePoint::Apex, s, 0.1).is_err());
        assert!(TestParams::points(x, 0.01, x, 0.01, s, 0.1).is_err());
        // Heights at or above δ collapse to the apex.
        assert!(TestParams::new(ConePoint::Point { x, t: 0.2 }, ConePoint::Apex, s, 0.1).is_err());
        assert!(TestParams::points(x, 0.01, x, 0.02, s, 0.1).is_ok());
    }

    #[test]
    fn membership_predicates() {
        let s = Surface::FlatTorus;
        let c = XnuConfig::new(0.01, 0.1).unwrap();
        let x = Surface::torus_point(0.2, 0.3);
        let y = Surface::torus_point(0.4, 0.3);
        let p = TestParams::points(x, 0.005, y, 0.05, s, 0.1).unwrap();
        assert!(c.in_x1(&p, s) && !c.in_x2(&p));
        let q = TestParams::new(ConePoint::Point { x, t: 0.005 }, ConePoint::Apex, s, 0.1).unwrap();
        assert!(c.in_x2(&q) && !c.in_x1(&q, s));
        let close = TestParams::points(x, 0.005, Surface::torus_point(0.2001, 0.3), 0.0051, s, 0.1).unwrap();
        assert!(!c.contains(&close, s));
        let low = TestParams::points(x, 1e-5, y, 0.05, s, 0.1).unwrap();
        assert!(!c.contains(&low, s));
        assert!(XnuConfig::new(0.2, 0.1).is_err());
    }
}
