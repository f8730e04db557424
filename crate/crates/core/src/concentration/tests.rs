use std::f64::consts::PI;
use std::sync::OnceLock;

use super::*;
use crate::fields::{bubble, density_of, Density, Field};
use crate::geometry::{Isometry, Mesh, Surface, SPHERE_RADIUS};

fn sphere(level: u32) -> &'static Mesh {
    static M: [OnceLock<Mesh>; 8] = [const { OnceLock::new() }; 8];
    M[level as usize].get_or_init(|| Mesh::build(Surface::Sphere, level).unwrap())
}

fn cfg(surface: Surface) -> ConcentrationConfig {
    ConcentrationConfig::default_for(surface, 2.0).unwrap()
}

fn bubble_density(mesh: &Mesh, x: &[f64; 3], lambda: f64) -> Density {
    density_of(mesh, &bubble(mesh, x, lambda).unwrap()).unwrap()
}

/// Root of `cap(s) = 1 − cap(6s)` for normalized sphere caps, by bisection.
fn uniform_sphere_sigma() -> f64 {
    let cap = |s: f64| Surface::Sphere.ball_area(s);
    let (mut lo, mut hi) = (0.0, PI * SPHERE_RADIUS / 6.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cap(mid) + cap(6.0 * mid) >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn uniform_sphere_scale_matches_cap_equation() {
    let want = uniform_sphere_sigma();
    assert!((want - PI * SPHERE_RADIUS / 7.0).abs() < 1e-12);
    let m = sphere(4);
    let c = cfg(Surface::Sphere);
    let f = Density::uniform(m);
    let sc = Scanner::new(m, &f, &c).unwrap();
    for v in [0, 100, 1000, 2561] {
        let (s, t) = sc.sigma_at(m.point(v));
        assert!((s - want).abs() / want < 0.02, "vertex {v}: {s} vs {want}");
        let cap = Surface::Sphere.ball_area(want);
        assert!((t - cap).abs() / cap < 0.05, "T {t} vs {cap}");
    }
    let sf = sigma_f(m, &f, &c).unwrap();
    assert!((sf / 3.0 - want).abs() / want < 0.02);
    assert!(barycenter(m, &f, &c).unwrap().is_apex());
    let set = s_set(m, &f, &c).unwrap();
    assert_eq!(set.len(), m.num_vertices());
}

#[test]
fn balance_gap_is_tiny() {
    let m = sphere(4);
    let c = cfg(Surface::Sphere);
    let f = bubble_density(m, &Surface::sphere_point([0.2, 0.1, 1.0]), 300.0);
    let sc = Scanner::new(m, &f, &c).unwrap();
    for v in [0, 7, 500] {
        let x = m.point(v);
        let (s, _) = sc.sigma_at(x);
        let p = sc.profile(x, f64::INFINITY);
        let gap = p.eval(s) - (sc.total() - p.eval(c.r0 * s));
        assert!(gap.abs() < 1e-10, "{gap}");
    }
}

#[test]
fn bubble_scale_matches_planar_balance_root() {
    // Planar balance: λs²/(1+λs²) = 1/(1+36λs²) gives s = 1/√(6λ), T = 1/7.
    let m = sphere(7);
    let c = cfg(Surface::Sphere);
    let x = *m.point(0);
    let lambda = 1e4;
    let f = bubble_density(m, &x, lambda);
    let sc = Scanner::new(m, &f, &c).unwrap();
    let (s, t) = sc.sigma_at(&x);
    let want = 1.0 / (6.0 * lambda).sqrt();
    assert!((s - want).abs() / want < 0.10, "{s} vs {want}");
    assert!(t < 0.5 && (t - 1.0 / 7.0).abs() < 0.03, "{t}");
}

#[test]
fn antipodal_symmetry() {
    let m = sphere(4);
    let c = cfg(Surface::Sphere);
    let u = Field::from_fn(m, |p| 30.0 * p[2] * p[2] + 5.0 * p[0] * p[0]).unwrap();
    let f = density_of(m, &u).unwrap();
    let sc = Scanner::new(m, &f, &c).unwrap();
    let n = *m.point(0);
    let s = [-n[0], -n[1], -n[2]];
    let (a, ta) = sc.sigma_at(&n);
    let (b, tb) = sc.sigma_at(&s);
    assert!((a - b).abs() < 1e-9 && (ta - tb).abs() < 1e-9);
}

#[test]
fn t_is_invariant_under_relabeling() {
    let m = sphere(3);
    let n = m.num_vertices();
    let perm: Vec<usize> = (0..n).map(|i| (i * 37 + 11) % n).collect();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let pts: Vec<[f64; 3]> = perm.iter().map(|&o| *m.point(o)).collect();
    let tris: Vec<[usize; 3]> = m.triangles().iter().map(|t| [inv[t[0]], inv[t[1]], inv[t[2]]]).collect();
    let pm = Mesh::from_parts(Surface::Sphere, 3, pts, tris).unwrap();
    let c = cfg(Surface::Sphere);
    let x = Surface::sphere_point([1.0, -0.3, 0.2]);
    let f = bubble_density(m, &x, 200.0);
    let g = bubble_density(&pm, &x, 200.0);
    let y = Surface::sphere_point([0.9, -0.2, 0.3]);
    let a = t_mass(m, &f, &y, &c).unwrap();
    let b = t_mass(&pm, &g, &y, &c).unwrap();
    assert!((a - b).abs() < 1e-12);
    assert!(a > 0.0 && a <= 0.5);
}

#[test]
fn sigma_f_tracks_bubble() {
    let m = sphere(5);
    let c = cfg(Surface::Sphere);
    let x = Surface::sphere_point([0.3, 0.5, -0.8]);
    let mut prev = f64::INFINITY;
    for lambda in [1e2, 1e3, 1e4] {
        let f = bubble_density(m, &x, lambda);
        let sc = Scanner::new(m, &f, &c).unwrap();
        let (smin, v) = sc.min_sigma();
        assert!(Surface::Sphere.geodesic_distance(m.point(v), &x) <= m.max_edge());
        assert!(3.0 * smin < prev);
        prev = 3.0 * smin;
    }
}

#[test]
fn pruned_minimum_matches_brute_force() {
    let m = sphere(4);
    let c = cfg(Surface::Sphere);
    for lambda in [10.0, 1e3] {
        let f = bubble_density(m, &Surface::sphere_point([0.3, 0.5, -0.8]), lambda);
        let sc = Scanner::new(m, &f, &c).unwrap();
        let brute = sc.full_scan().iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        assert!((brute - sc.min_sigma().0).abs() < 1e-12);
    }
}

#[test]
fn bubble_barycenter_at_pole() {
    let m = sphere(5);
    let c = cfg(Surface::Sphere);
    let north = *m.point(0);
    let f = bubble_density(m, &north, 1e4);
    let rep = analyze(m, &f, &c).unwrap();
    let b = rep.beta.point().copied().expect("not apex");
    assert!(Surface::Sphere.geodesic_distance(&b, &north) <= 2.0 * m.max_edge());
    assert!(rep.witness_masses[0] > c.tau && rep.witness_masses[1] > c.tau);
    assert!(Surface::Sphere.geodesic_distance(&rep.witness_p, &b) <= c.c_prime * rep.sigma_f);
    let set = s_set(m, &f, &c).unwrap();
    assert!(set.iter().all(|&v| Surface::Sphere.geodesic_distance(m.point(v), &north) < 7.0 * rep.sigma_f));
}

#[test]
fn rotation_equivariance() {
    let m = sphere(5);
    let c = cfg(Surface::Sphere);
    let x = Surface::sphere_point([0.4, 0.3, 0.85]);
    let rot = Isometry::RotateZ(2.0 * PI / 5.0);
    let rx = rot.apply(Surface::Sphere, &x);
    let a = analyze(m, &bubble_density(m, &x, 3e3), &c).unwrap();
    let b = analyze(m, &bubble_density(m, &rx, 3e3), &c).unwrap();
    assert!((a.sigma_f - b.sigma_f).abs() < 1e-9);
    let ra = rot.apply(Surface::Sphere, a.beta.point().unwrap());
    assert!(Surface::Sphere.geodesic_distance(&ra, b.beta.point().unwrap()) < 1e-9);
}

#[test]
fn translation_equivariance_on_torus() {
    let m = Mesh::build(Surface::FlatTorus, 3).unwrap();
    let c = cfg(Surface::FlatTorus);
    let x = Surface::torus_point(0.31, 0.72);
    let shift = Isometry::Translate(5.0 / 64.0, -9.0 / 64.0);
    let sx = shift.apply(Surface::FlatTorus, &x);
    let a = analyze(&m, &bubble_density(&m, &x, 2e3), &c).unwrap();
    let b = analyze(&m, &bubble_density(&m, &sx, 2e3), &c).unwrap();
    assert!((a.sigma_f - b.sigma_f).abs() < 1e-9);
    let sa = shift.apply(Surface::FlatTorus, a.beta.point().unwrap());
    assert!(Surface::FlatTorus.geodesic_distance(&sa, b.beta.point().unwrap()) < 1e-9);
}

#[test]
fn psi_pair_examples() {
    let m = sphere(4);
    let c = cfg(Surface::Sphere);
    let z = Field::zeros(m);
    let (a, b) = psi_pair(m, &z, &z, &c).unwrap();
    assert!(a.is_apex() && b.is_apex());
    let u = bubble(m, m.point(3), 5e3).unwrap();
    let (a, b) = psi_pair(m, &u, &u, &c).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_apex());
}

#[test]
fn l1_continuity() {
    let m = sphere(5);
    let c = cfg(Surface::Sphere);
    let x = Surface::sphere_point([-0.2, 0.7, 0.5]);
    let f = bubble_density(m, &x, 2e3);
    let a = analyze(m, &f, &c).unwrap();
    let pert: Vec<f64> =
        f.values().iter().zip(m.points()).map(|(v, p)| v * (1.0 + 0.01 * (40.0 * p[0]).sin())).collect();
    let total: f64 = pert.iter().zip(m.mass()).map(|(v, w)| v * w).sum();
    let g = Density::new(m, pert.iter().map(|v| v / total).collect()).unwrap();
    let l1: f64 = f.values().iter().zip(g.values()).zip(m.mass()).map(|((p, q), w)| (p - q).abs() * w).sum();
    assert!(l1 <= 0.02);
    let b = analyze(m, &g, &c).unwrap();
    assert!((a.sigma_f - b.sigma_f).abs() / a.sigma_f < 0.05);
    let d = Surface::Sphere.geodesic_distance(a.beta.point().unwrap(), b.beta.point().unwrap());
    assert!(d < 5.0 * a.sigma_f);
}

#[test]
fn scale_bounds_on_small_corpus() {
    let m = sphere(3);
    let c = cfg(Surface::Sphere);
    for (k, lambda) in [1.0, 30.0, 400.0].into_iter().enumerate() {
        let x = *m.point(17 * k + 5);
        let f = bubble_density(m, &x, lambda);
        let scan = Scanner::new(m, &f, &c).unwrap().full_scan();
        let (x0, &(s0, t0)) = scan.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).unwrap();
        assert!(t0 > c.tau);
        for (v, &(s, _)) in scan.iter().enumerate() {
            assert!(v == x0 || s0 < 3.0 * s);
        }
    }
}

#[test]
fn two_far_bubbles_respect_diameter_bound() {
    let m = sphere(4);
    let c = cfg(Surface::Sphere);
    let a = bubble(m, m.point(0), 1e3).unwrap();
    let b = bubble(m, m.point(11), 1e3).unwrap();
    let u = Field::new(m, a.values().iter().zip(b.values()).map(|(p, q)| (p.exp() + q.exp()).ln()).collect()).unwrap();
    let f = density_of(m, &u).unwrap();
    let rep = analyze(m, &f, &c).unwrap();
    assert!(rep.s_set_diameter <= (c.r0 + 1.0) * rep.sigma_f);
    assert!(rep.beta.is_apex());
}

mod separated {
    use super::*;

    fn sum_bubbles(m: &Mesh, centers: &[[f64; 3]], lambda: f64) -> Field {
        let vals: Vec<f64> = (0..m.num_vertices())
            .map(|k| {
                centers
                    .iter()
                    .map(|x| crate::fields::bubble_value(lambda, m.surface().geodesic_distance(x, m.point(k))).exp())
                    .sum::<f64>()
                    .ln()
            })
            .collect();
        Field::new(m, vals).unwrap()
    }

    fn region(m: &Mesh, x: &[f64; 3], rad: f64) -> Vec<usize> {
        (0..m.num_vertices()).filter(|&k| m.surface().geodesic_distance(x, m.point(k)) <= rad).collect()
    }

    #[test]
    fn disjoint_case() {
        let m = Mesh::build(Surface::FlatTorus, 4).unwrap();
        let p = [
            Surface::torus_point(0.2, 0.2),
            Surface::torus_point(0.7, 0.2),
            Surface::torus_point(0.2, 0.7),
            Surface::torus_point(0.7, 0.7),
        ];
        let u1 = sum_bubbles(&m, &[p[0], p[1]], 2e3);
        let u2 = sum_bubbles(&m, &[p[2], p[3]], 2e3);
        let regions =
            [[region(&m, &p[0], 0.05), region(&m, &p[1], 0.05)], [region(&m, &p[2], 0.05), region(&m, &p[3], 0.05)]];
        let out = select_separated_sets(&m, &u1, &u2, &regions, 0.3, 0.3).unwrap();
        assert_eq!(out.case, SeparationCase::Disjoint);
        assert!(out.masses.iter().flatten().all(|&v| v >= out.gamma));
        assert!((out.delta - 0.3 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn shared_case() {
        let m = Mesh::build(Surface::FlatTorus, 4).unwrap();
        let a = Surface::torus_point(0.25, 0.25);
        let b = Surface::torus_point(0.75, 0.75);
        let u1 = sum_bubbles(&m, &[a, b], 2e3);
        let u2 = sum_bubbles(&m, &[a, Surface::torus_point(0.75, 0.25)], 2e3);
        let regions = [
            [region(&m, &a, 0.05), region(&m, &b, 0.05)],
            [region(&m, &a, 0.05), region(&m, &Surface::torus_point(0.75, 0.25), 0.05)],
        ];
        let out = select_separated_sets(&m, &u1, &u2, &regions, 0.3, 0.3).unwrap();
        assert_eq!(out.case, SeparationCase::Shared);
        assert!(out.masses.iter().flatten().all(|&v| v >= out.gamma));
    }

    #[test]
    fn symmetric_input_gives_equal_masses() {
        let m = Mesh::build(Surface::FlatTorus, 4).unwrap();
        let p = [Surface::torus_point(0.25, 0.25), Surface::torus_point(0.75, 0.25)];
        let q = [Surface::torus_point(0.25, 0.75), Surface::torus_point(0.75, 0.75)];
        let u1 = sum_bubbles(&m, &p, 2e3);
        let u2 = sum_bubbles(&m, &q, 2e3);
        let r = |x: &[f64; 3]| region(&m, x, 0.05);
        let a = select_separated_sets(&m, &u1, &u2, &[[r(&p[0]), r(&p[1])], [r(&q[0]), r(&q[1])]], 0.3, 0.3).unwrap();
        let b = select_separated_sets(&m, &u1, &u2, &[[r(&p[1]), r(&p[0])], [r(&q[0]), r(&q[1])]], 0.3, 0.3).unwrap();
        let sa: f64 = a.masses.iter().flatten().sum();
        let sb: f64 = b.masses.iter().flatten().sum();
        assert!((sa - sb).abs() < 1e-9);
    }

    #[test]
    fn hypothesis_violations() {
        let m = Mesh::build(Surface::FlatTorus, 3).unwrap();
        let u = Field::zeros(&m);
        let a = region(&m, &Surface::torus_point(0.2, 0.2), 0.05);
        let b = region(&m, &Surface::torus_point(0.3, 0.2), 0.05);
        let err = select_separated_sets(&m, &u, &u, &[[a.clone(), b.clone()], [a, b]], 0.3, 0.001);
        assert!(matches!(err, Err(crate::error::TodaError::Precondition(_))));
    }
}
