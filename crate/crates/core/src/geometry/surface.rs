use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};

/// A point on a surface. Sphere points are stored in R³ on the sphere of
/// radius [`SPHERE_RADIUS`]; torus points are `[x, y, 0]` with `x, y ∈ [0, 1)`.
pub type Point = [f64; 3];

/// Tangent vector at a point, in the same coordinates as [`Point`].
pub type Tangent = [f64; 3];

/// Radius of the round sphere of unit area.
pub const SPHERE_RADIUS: f64 = 0.282_094_791_773_878_14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Sphere,
    FlatTorus,
}

impl Surface {
    pub fn embed_dim(self) -> usize {
        match self {
            Surface::Sphere => 3,
            Surface::FlatTorus => 4,
        }
    }

    pub fn total_area(self) -> f64 {
        1.0
    }

    pub fn diameter(self) -> f64 {
        match self {
            Surface::Sphere => PI * SPHERE_RADIUS,
            Surface::FlatTorus => 0.5 * std::f64::consts::SQRT_2,
        }
    }

    /// Largest geodesic radius for which the ambient convex hull of a ball
    /// stays inside the projection-safe tube.
    pub fn tube_radius(self) -> f64 {
        match self {
            Surface::Sphere => 0.5 * PI * SPHERE_RADIUS,
            Surface::FlatTorus => 0.25,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Surface::Sphere => "sphere",
            Surface::FlatTorus => "flat_torus",
        }
    }

    /// Maps arbitrary coordinates to the canonical representative.
    pub fn canonicalize(self, p: Point) -> Point {
        match self {
            Surface::Sphere => {
                let n = norm3(p);
                scale3(p, SPHERE_RADIUS / n)
            }
            Surface::FlatTorus => [wrap01(p[0]), wrap01(p[1]), 0.0],
        }
    }

    /// Sphere point in the direction of `dir`.
    pub fn sphere_point(dir: [f64; 3]) -> Point {
        Surface::Sphere.canonicalize(dir)
    }

    pub fn torus_point(x: f64, y: f64) -> Point {
        [wrap01(x), wrap01(y), 0.0]
    }

    pub fn geodesic_distance(self, a: &Point, b: &Point) -> f64 {
        match self {
            Surface::Sphere => SPHERE_RADIUS * norm3(cross3(*a, *b)).atan2(dot3(*a, *b)),
            Surface::FlatTorus => {
                let dx = wrap_half(b[0] - a[0]);
                let dy = wrap_half(b[1] - a[1]);
                dx.hypot(dy)
            }
        }
    }

    /// Lower bound on geodesic distance from the chord (sphere) or from the
    /// wrapped coordinate difference (torus); cheap to compare.
    pub fn chord_for_distance(self, s: f64) -> f64 {
        match self {
            Surface::Sphere => {
                let s = s.min(PI * SPHERE_RADIUS);
                2.0 * SPHERE_RADIUS * (0.5 * s / SPHERE_RADIUS).sin()
            }
            Surface::FlatTorus => s,
        }
    }

    /// Area of the metric ball of radius `s`.
    pub fn ball_area(self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            Surface::Sphere => {
                if s >= PI * SPHERE_RADIUS {
                    1.0
                } else {
                    (2.0 * PI * SPHERE_RADIUS * SPHERE_RADIUS * (1.0 - (s / SPHERE_RADIUS).cos())).min(1.0)
                }
            }
            Surface::FlatTorus => torus_ball_area(s),
        }
    }

    /// Tangent vector at `x` of length `d(x, y)` pointing along a minimizing
    /// geodesic to `y`. Zero at the cut locus of the sphere.
    pub fn log_map(self, x: &Point, y: &Point) -> Tangent {
        match self {
            Surface::Sphere => {
                let n = scale3(*x, 1.0 / norm3(*x));
                let w = sub3(*y, scale3(n, dot3(*y, n)));
                let wn = norm3(w);
                if wn < 1e-300 {
                    return [0.0; 3];
                }
                scale3(w, self.geodesic_distance(x, y) / wn)
            }
            Surface::FlatTorus => [wrap_half(y[0] - x[0]), wrap_half(y[1] - x[1]), 0.0],
        }
    }

    /// Follows the geodesic from `x` with initial velocity `v`.
    pub fn exp_map(self, x: &Point, v: &Tangent) -> Point {
        match self {
            Surface::Sphere => {
                let vn = norm3(*v);
                if vn < 1e-300 {
                    return *x;
                }
                let a = vn / SPHERE_RADIUS;
                let p = add3(scale3(*x, a.cos()), scale3(*v, SPHERE_RADIUS * a.sin() / vn));
                self.canonicalize(p)
            }
            Surface::FlatTorus => Self::torus_point(x[0] + v[0], x[1] + v[1]),
        }
    }

    /// Gradient in `x` of `d(x, y)²`.
    pub fn grad_dist_sq(self, x: &Point, y: &Point) -> Tangent {
        scale3(self.log_map(x, y), -2.0)
    }

    pub fn embed(self, x: &Point) -> Vec<f64> {
        match self {
            Surface::Sphere => x.to_vec(),
            Surface::FlatTorus => {
                let c = 1.0 / (2.0 * PI);
                let (s1, c1) = (2.0 * PI * x[0]).sin_cos();
                let (s2, c2) = (2.0 * PI * x[1]).sin_cos();
                vec![c * c1, c * s1, c * c2, c * s2]
            }
        }
    }

    /// Nearest-point projection from the ambient space onto the surface.
    pub fn project(self, v: &[f64]) -> Result<Point> {
        if v.len() != self.embed_dim() {
            return Err(TodaError::Domain(format!(
                "ambient vector has dimension {}, expected {}",
                v.len(),
                self.embed_dim()
            )));
        }
        let tol = 1e-9 * SPHERE_RADIUS;
        match self {
            Surface::Sphere => {
                let p = [v[0], v[1], v[2]];
                let n = norm3(p);
                if !(n > tol) {
                    return Err(TodaError::DegenerateProjection(format!("ambient norm {n:.3e} at sphere center")));
                }
                Ok(scale3(p, SPHERE_RADIUS / n))
            }
            Surface::FlatTorus => {
                let r1 = v[0].hypot(v[1]);
                let r2 = v[2].hypot(v[3]);
                if !(r1 > tol && r2 > tol) {
                    return Err(TodaError::DegenerateProjection(format!(
                        "ambient circle components ({r1:.3e}, {r2:.3e}) vanish"
                    )));
                }
                let x = v[1].atan2(v[0]) / (2.0 * PI);
                let y = v[3].atan2(v[2]) / (2.0 * PI);
                Ok(Self::torus_point(x, y))
            }
        }
    }

    /// Point on the minimizing geodesic from `a` to `b` at fraction `t`.
    pub fn geodesic_lerp(self, a: &Point, b: &Point, t: f64) -> Point {
        let v = self.log_map(a, b);
        self.exp_map(a, &scale3(v, t))
    }
}

/// Rigid motions used to test equivariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Isometry {
    /// Rotation about the z axis by the given angle.
    RotateZ(f64),
    /// Rotation about the x axis by the given angle.
    RotateX(f64),
    Translate(f64, f64),
}

impl Isometry {
    pub fn apply(&self, surface: Surface, p: &Point) -> Point {
        match *self {
            Isometry::RotateZ(a) => {
                let (s, c) = a.sin_cos();
                [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
            }
            Isometry::RotateX(a) => {
                let (s, c) = a.sin_cos();
                [p[0], c * p[1] - s * p[2], s * p[1] + c * p[2]]
            }
            Isometry::Translate(dx, dy) => surface.canonicalize([p[0] + dx, p[1] + dy, 0.0]),
        }
    }
}

fn torus_ball_area(s: f64) -> f64 {
    // Area of a disc of radius s intersected with the square [-1/2, 1/2]².
    if s <= 0.5 {
        return PI * s * s;
    }
    if s >= 0.5 * std::f64::consts::SQRT_2 {
        return 1.0;
    }
    let seg = s * s * (0.5 / s).acos() - 0.5 * (s * s - 0.25).sqrt();
    (PI * s * s - 4.0 * seg).min(1.0)
}

pub(crate) fn wrap01(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

pub(crate) fn wrap_half(d: f64) -> f64 {
    d - d.round()
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const R: f64 = SPHERE_RADIUS;

    #[test]
    fn radius_gives_unit_area() {
        assert_relative_eq!(4.0 * PI * R * R, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn distance_examples() {
        let t = Surface::FlatTorus;
        assert_relative_eq!(
            t.geodesic_distance(&[0.0, 0.0, 0.0], &[0.5, 0.5, 0.0]),
            0.5 * 2f64.sqrt(),
            epsilon = 1e-15
        );
        let s = Surface::Sphere;
        let n = [0.0, 0.0, R];
        assert_relative_eq!(s.geodesic_distance(&n, &[0.0, 0.0, -R]), PI.sqrt() / 2.0, epsilon = 1e-14);
        assert_eq!(s.geodesic_distance(&n, &n), 0.0);
        assert_relative_eq!(s.diameter(), PI.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn ball_area_examples() {
        let s = Surface::Sphere;
        assert_eq!(s.ball_area(PI * R), 1.0);
        assert_relative_eq!(s.ball_area(0.5 * PI * R), 0.5, epsilon = 1e-14);
        assert_relative_eq!(Surface::FlatTorus.ball_area(0.25), PI / 16.0, epsilon = 1e-15);
        assert_eq!(Surface::FlatTorus.ball_area(Surface::FlatTorus.diameter()), 1.0);
    }

    #[test]
    fn torus_ball_area_matches_grid_count() {
        // Independent check: count grid cells of the unit square within s of the center.
        let n = 2000;
        for &s in &[0.55, 0.6, 0.68] {
            let mut count = 0usize;
            for i in 0..n {
                for j in 0..n {
                    let x = (i as f64 + 0.5) / n as f64 - 0.5;
                    let y = (j as f64 + 0.5) / n as f64 - 0.5;
                    if x * x + y * y <= s * s {
                        count += 1;
                    }
                }
            }
            let grid = count as f64 / (n * n) as f64;
            assert!((grid - torus_ball_area(s)).abs() < 2e-3, "s={s}");
        }
    }

    #[test]
    fn embed_project_round_trip() {
        let s = Surface::Sphere;
        let n = [0.0, 0.0, R];
        assert_eq!(s.embed(&n), vec![0.0, 0.0, R]);
        assert_eq!(s.project(&s.embed(&n)).unwrap(), n);
        let t = Surface::FlatTorus;
        let p = [0.25, 0.5, 0.0];
        let e = t.embed(&p);
        let c = 1.0 / (2.0 * PI);
        assert_relative_eq!(e[0], c * (PI / 2.0).cos(), epsilon = 1e-15);
        assert_relative_eq!(e[2], -c, epsilon = 1e-15);
        let q = t.project(&e).unwrap();
        assert_relative_eq!(q[0], 0.25, epsilon = 1e-14);
        assert_relative_eq!(q[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_projection_errors() {
        assert!(matches!(Surface::Sphere.project(&[0.0, 0.0, 0.0]), Err(TodaError::DegenerateProjection(_))));
        assert!(matches!(Surface::FlatTorus.project(&[0.0, 0.0, 0.1, 0.0]), Err(TodaError::DegenerateProjection(_))));
    }

    #[test]
    fn projected_chord_midpoint_is_near_geodesic_midpoint() {
        let s = Surface::Sphere;
        let a = Surface::sphere_point([1.0, 0.2, 0.3]);
        let dir = s.log_map(&a, &Surface::sphere_point([0.0, 1.0, 0.0]));
        let b = s.exp_map(&a, &scale3(dir, 1e-2 / norm3(dir)));
        assert_relative_eq!(s.geodesic_distance(&a, &b), 1e-2, epsilon = 1e-12);
        let ea = s.embed(&a);
        let eb = s.embed(&b);
        let mid: Vec<f64> = ea.iter().zip(&eb).map(|(x, y)| 0.5 * (x + y)).collect();
        let p = s.project(&mid).unwrap();
        let g = s.geodesic_lerp(&a, &b, 0.5);
        assert!(s.geodesic_distance(&p, &g) < 1e-4 * 1e-2);
    }

    fn sphere_pt() -> impl Strategy<Value = Point> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| Surface::sphere_point([x, y, z]))
    }

    fn torus_pt() -> impl Strategy<Value = Point> {
        (0.0f64..1.0, 0.0f64..1.0).prop_map(|(x, y)| Surface::torus_point(x, y))
    }

    proptest! {
        #[test]
        fn sphere_metric_axioms(a in sphere_pt(), b in sphere_pt(), c in sphere_pt()) {
            let s = Surface::Sphere;
            let ab = s.geodesic_distance(&a, &b);
            prop_assert!((ab - s.geodesic_distance(&b, &a)).abs() < 1e-14);
            prop_assert!(ab <= s.geodesic_distance(&a, &c) + s.geodesic_distance(&c, &b) + 1e-12);
            prop_assert!(ab <= s.diameter() + 1e-14);
        }

        #[test]
        fn torus_metric_axioms(a in torus_pt(), b in torus_pt(), c in torus_pt()) {
            let t = Surface::FlatTorus;
            let ab = t.geodesic_distance(&a, &b);
            prop_assert!((ab - t.geodesic_distance(&b, &a)).abs() < 1e-14);
            prop_assert!(ab <= t.geodesic_distance(&a, &c) + t.geodesic_distance(&c, &b) + 1e-12);
            prop_assert!(ab <= t.diameter() + 1e-14);
        }

        #[test]
        fn ball_area_monotone(s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
            for surf in [Surface::Sphere, Surface::FlatTorus] {
                let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
                prop_assert!(surf.ball_area(lo) <= surf.ball_area(hi) + 1e-15);
                prop_assert!((surf.ball_area(lo + 1e-9) - surf.ball_area(lo)).abs() < 1e-7);
            }
        }

        #[test]
        fn round_trips(a in sphere_pt(), b in torus_pt()) {
            let p = Surface::Sphere.project(&Surface::Sphere.embed(&a)).unwrap();
            prop_assert!(Surface::Sphere.geodesic_distance(&a, &p) < 1e-12);
            let q = Surface::FlatTorus.project(&Surface::FlatTorus.embed(&b)).unwrap();
            prop_assert!(Surface::FlatTorus.geodesic_distance(&b, &q) < 1e-12);
        }

        #[test]
        fn exp_inverts_log(a in sphere_pt(), b in sphere_pt(), c in torus_pt(), d in torus_pt()) {
            let s = Surface::Sphere;
            prop_assume!(s.geodesic_distance(&a, &b) < 0.95 * s.diameter());
            let p = s.exp_map(&a, &s.log_map(&a, &b));
            prop_assert!(s.geodesic_distance(&p, &b) < 1e-10);
            let t = Surface::FlatTorus;
            let q = t.exp_map(&c, &t.log_map(&c, &d));
            prop_assert!(t.geodesic_distance(&q, &d) < 1e-12);
        }
    }
}
