use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use sha2::{Digest, Sha256};

use super::surface::{cross3, dot3, norm3, scale3, sub3, wrap_half, Point, Surface, SPHERE_RADIUS};
use crate::error::{Result, TodaError};
use crate::linalg::CsrMatrix;

pub const MAX_LEVEL: u32 = 8;

/// Triangulation of a surface with lumped mass and cotangent stiffness.
#[derive(Clone, Debug)]
pub struct Mesh {
    surface: Surface,
    level: u32,
    points: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    mass: Vec<f64>,
    stiffness: CsrMatrix,
    /// Per triangle, the stiffness weight of the edge opposite each corner.
    tri_weights: Vec<[f64; 3]>,
    fingerprint: u64,
    max_edge: f64,
}

impl Mesh {
    /// Icosahedral subdivision (sphere) or `(8·2^level)²` periodic grid (torus).
    pub fn build(surface: Surface, level: u32) -> Result<Mesh> {
        if level > MAX_LEVEL {
            return Err(TodaError::Config(format!("mesh level {level} outside [0, {MAX_LEVEL}]")));
        }
        let (points, triangles) = match surface {
            Surface::Sphere => icosphere(level),
            Surface::FlatTorus => torus_grid(torus_side(level)),
        };
        Mesh::from_parts(surface, level, points, triangles)
    }

    /// Periodic tensor grid: the uniform nodes of `level` plus, on each axis,
    /// nodes at every focus coordinate and at geometric offsets
    /// `±h_min·ratio^k` from it, up to the uniform spacing.
    pub fn graded_torus(level: u32, foci: &[[f64; 2]], h_min: f64, ratio: f64) -> Result<Mesh> {
        if level > MAX_LEVEL {
            return Err(TodaError::Config(format!("mesh level {level} outside [0, {MAX_LEVEL}]")));
        }
        if !(h_min > 0.0) || !(ratio > 1.0) {
            return Err(TodaError::Config(format!("need h_min > 0 and ratio > 1, got {h_min}, {ratio}")));
        }
        let n = torus_side(level);
        let h = 1.0 / n as f64;
        let axis = |c: usize| {
            let mut xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
            for f in foci {
                let f = super::surface::wrap01(f[c]);
                xs.push(f);
                let mut d = h_min;
                while d < 0.75 * h {
                    xs.push(super::surface::wrap01(f + d));
                    xs.push(super::surface::wrap01(f - d));
                    d *= ratio;
                }
            }
            xs.sort_by(f64::total_cmp);
            // Focus nodes win over nearby uniform nodes.
            let keep = |x: f64| foci.iter().any(|f| (wrap_half(x - f[c])).abs() < 1e-15);
            let mut out: Vec<f64> = Vec::with_capacity(xs.len());
            for x in xs {
                match out.last() {
                    Some(&last) if x - last < 0.5 * h_min => {
                        if keep(x) {
                            *out.last_mut().expect("nonempty") = x;
                        }
                    }
                    _ => out.push(x),
                }
            }
            if out.len() > 1 && 1.0 + out[0] - out[out.len() - 1] < 0.5 * h_min {
                out.pop();
            }
            out
        };
        let (xs, ys) = (axis(0), axis(1));
        let (nx, ny) = (xs.len(), ys.len());
        let idx = |i: usize, j: usize| (i % nx) * ny + (j % ny);
        let mut points = Vec::with_capacity(nx * ny);
        for x in &xs {
            for y in &ys {
                points.push([*x, *y, 0.0]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        Mesh::from_parts(Surface::FlatTorus, level, points, triangles)
    }

    /// Assembles mass and stiffness for given connectivity.
    pub fn from_parts(surface: Surface, level: u32, points: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let n = points.len();
        let mut mass = vec![0.0; n];
        let mut tri_weights = Vec::with_capacity(triangles.len());
        let mut trip = Vec::with_capacity(triangles.len() * 9);
        let mut max_edge: f64 = 0.0;
        for (ti, t) in triangles.iter().enumerate() {
            let [e0, e1, e2] = local_vectors(surface, &points, t);
            // Corner k sits at position e_k; edges are differences.
            let pos = [e0, e1, e2];
            let normal = cross3(sub3(pos[1], pos[0]), sub3(pos[2], pos[0]));
            let flat_area = 0.5 * norm3(normal);
            let orient = match surface {
                Surface::Sphere => dot3(normal, points[t[0]]),
                Surface::FlatTorus => normal[2],
            };
            if !(orient > 0.0) || !(flat_area > 0.0) {
                return Err(TodaError::Invariant(format!("triangle {ti} has nonpositive area")));
            }
            let area = match surface {
                Surface::Sphere => spherical_triangle_area(&points[t[0]], &points[t[1]], &points[t[2]]),
                Surface::FlatTorus => flat_area,
            };
            for &v in t {
                mass[v] += area / 3.0;
            }
            let mut w = [0.0; 3];
            for k in 0..3 {
                let a = sub3(pos[(k + 1) % 3], pos[k]);
                let b = sub3(pos[(k + 2) % 3], pos[k]);
                let cot = dot3(a, b) / norm3(cross3(a, b));
                w[k] = 0.5 * cot;
                let (i, j) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                trip.push((i, i, w[k]));
                trip.push((j, j, w[k]));
                trip.push((i, j, -w[k]));
                trip.push((j, i, -w[k]));
                max_edge = max_edge.max(surface.geodesic_distance(&points[i], &points[j]));
            }
            tri_weights.push(w);
        }
        if mass.iter().any(|&m| !(m > 0.0)) {
            return Err(TodaError::Invariant("vertex with zero mass".into()));
        }
        let stiffness = CsrMatrix::from_triplets(n, &trip);
        let fingerprint = fingerprint_of(surface, level, &points, &triangles);
        Ok(Mesh { surface, level, points, triangles, mass, stiffness, tri_weights, fingerprint, max_edge })
    }

    pub(crate) fn from_cached(
        surface: Surface,
        level: u32,
        points: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        mass: Vec<f64>,
        stiffness: CsrMatrix,
    ) -> Result<Mesh> {
        // Per-triangle weights and diagnostics are cheap; recompute them.
        let rebuilt = Mesh::from_parts(surface, level, points, triangles)?;
        if rebuilt.mass.len() != mass.len() || stiffness.dim() != mass.len() {
            return Err(TodaError::Format("cached mesh blocks disagree in size".into()));
        }
        Ok(Mesh { mass, stiffness, ..rebuilt })
    }

    pub fn surface(&self) -> Surface {
        self.surface
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn triangle_weights(&self) -> &[[f64; 3]] {
        &self.tri_weights
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Longest edge, measured geodesically.
    pub fn max_edge(&self) -> f64 {
        self.max_edge
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.stiffness.row(i).map(|(j, _)| j).filter(move |&j| j != i)
    }

    /// Geodesic distances from `x` to every vertex.
    pub fn distances_from(&self, x: &Point) -> Vec<f64> {
        self.points.iter().map(|p| self.surface.geodesic_distance(x, p)).collect()
    }

    pub fn nearest_vertex(&self, x: &Point) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = self.surface.geodesic_distance(x, p);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Shortest edge-path distances from a vertex (Dijkstra).
    pub fn edge_path_distances(&self, source: usize) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.total_cmp(&self.0)
            }
        }
        let mut dist = vec![f64::INFINITY; self.num_vertices()];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item(0.0, source));
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for w in self.neighbors(v) {
                let nd = d + self.surface.geodesic_distance(&self.points[v], &self.points[w]);
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Item(nd, w));
                }
            }
        }
        dist
    }

    /// For each vertex of `coarse`, the index of the same point in `self`.
    /// Both meshes must be built by [`Mesh::build`] on the same surface.
    pub fn embed_coarse(&self, coarse: &Mesh) -> Result<Vec<usize>> {
        let uniform = |m: &Mesh| match m.surface {
            Surface::Sphere => m.num_vertices() == 10 * 4usize.pow(m.level) + 2,
            Surface::FlatTorus => m.num_vertices() == torus_side(m.level).pow(2),
        };
        if coarse.surface != self.surface || coarse.level > self.level || !uniform(self) || !uniform(coarse) {
            return Err(TodaError::Domain("meshes are not nested".into()));
        }
        match self.surface {
            Surface::Sphere => Ok((0..coarse.num_vertices()).collect()),
            Surface::FlatTorus => {
                let nc = torus_side(coarse.level);
                let nf = torus_side(self.level);
                let r = nf / nc;
                Ok((0..coarse.num_vertices()).map(|k| (k / nc) * r * nf + (k % nc) * r).collect())
            }
        }
    }
}

pub fn torus_side(level: u32) -> usize {
    8usize << level
}

fn local_vectors(surface: Surface, points: &[Point], t: &[usize; 3]) -> [[f64; 3]; 3] {
    match surface {
        Surface::Sphere => [points[t[0]], points[t[1]], points[t[2]]],
        Surface::FlatTorus => {
            let p0 = points[t[0]];
            let rel = |q: &Point| [p0[0] + wrap_half(q[0] - p0[0]), p0[1] + wrap_half(q[1] - p0[1]), 0.0];
            [p0, rel(&points[t[1]]), rel(&points[t[2]])]
        }
    }
}

fn spherical_triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    let r = SPHERE_RADIUS;
    let (a, b, c) = (scale3(*a, 1.0 / r), scale3(*b, 1.0 / r), scale3(*c, 1.0 / r));
    let num = dot3(a, cross3(b, c)).abs();
    let den = 1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a);
    2.0 * num.atan2(den) * r * r
}

fn icosphere(level: u32) -> (Vec<Point>, Vec<[usize; 3]>) {
    let z = 1.0 / 5f64.sqrt();
    let rho = 2.0 / 5f64.sqrt();
    let mut pts: Vec<[f64; 3]> = vec![[0.0, 0.0, 1.0]];
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
        pts.push([rho * a.cos(), rho * a.sin(), z]);
    }
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0 + std::f64::consts::PI / 5.0;
        pts.push([rho * a.cos(), rho * a.sin(), -z]);
    }
    pts.push([0.0, 0.0, -1.0]);
    let up = |k: usize| 1 + k % 5;
    let lo = |k: usize| 6 + k % 5;
    let mut tris = Vec::new();
    for k in 0..5 {
        tris.push([0, up(k), up(k + 1)]);
        tris.push([up(k), lo(k), up(k + 1)]);
        tris.push([up(k + 1), lo(k), lo(k + 1)]);
        tris.push([11, lo(k + 1), lo(k)]);
    }
    for t in tris.iter_mut() {
        let n = cross3(sub3(pts[t[1]], pts[t[0]]), sub3(pts[t[2]], pts[t[0]]));
        if dot3(n, pts[t[0]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut midpoint = |i: usize, j: usize, pts: &mut Vec<[f64; 3]>| -> usize {
            let key = (i.min(j), i.max(j));
            *mid.entry(key).or_insert_with(|| {
                let m = [pts[i][0] + pts[j][0], pts[i][1] + pts[j][1], pts[i][2] + pts[j][2]];
                pts.push(scale3(m, 1.0 / norm3(m)));
                pts.len() - 1
            })
        };
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    let pts = pts.into_iter().map(|p| scale3(p, SPHERE_RADIUS)).collect();
    (pts, tris)
}

fn torus_grid(n: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push([i as f64 * h, j as f64 * h, 0.0]);
        }
    }
    let mut tris = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    (pts, tris)
}

fn fingerprint_of(surface: Surface, level: u32, points: &[Point], triangles: &[[usize; 3]]) -> u64 {
    let mut h = Sha256::new();
    h.update(surface.name().as_bytes());
    h.update(level.to_le_bytes());
    h.update((points.len() as u64).to_le_bytes());
    for p in points {
        for c in p {
            h.update(c.to_le_bytes());
        }
    }
    for t in triangles {
        for &v in t {
            h.update((v as u64).to_le_bytes());
        }
    }
    let out = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&out[..8]);
    u64::from_le_bytes(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn check_invariants(m: &Mesh) {
        let total: f64 = m.mass().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
        assert!(m.stiffness().is_symmetric(1e-12));
        for i in 0..m.num_vertices() {
            let rs: f64 = m.stiffness().row(i).map(|(_, v)| v).sum();
            assert!(rs.abs() < 1e-10);
        }
    }

    #[test]
    fn vertex_counts() {
        assert_eq!(Mesh::build(Surface::Sphere, 0).unwrap().num_vertices(), 12);
        assert_eq!(Mesh::build(Surface::FlatTorus, 0).unwrap().num_vertices(), 64);
        for l in 0..4 {
            let s = Mesh::build(Surface::Sphere, l).unwrap();
            assert_eq!(s.num_vertices(), 10 * 4usize.pow(l) + 2);
            check_invariants(&s);
            let t = Mesh::build(Surface::FlatTorus, l).unwrap();
            assert_eq!(t.num_vertices(), 64 * 4usize.pow(l));
            check_invariants(&t);
        }
    }

    #[test]
    fn graded_torus_grid() {
        let foci = [[0.25, 0.25], [0.7, 0.6]];
        let m = Mesh::graded_torus(3, &foci, 1e-5, 1.25).unwrap();
        check_invariants(&m);
        for f in foci {
            let x = Surface::torus_point(f[0], f[1]);
            let v = m.nearest_vertex(&x);
            assert!(Surface::FlatTorus.geodesic_distance(m.point(v), &x) < 1e-15);
        }
        assert!(m.num_vertices() > Mesh::build(Surface::FlatTorus, 3).unwrap().num_vertices());
        // ∫|∇cos 2πx|² = 2π²
        let u: Vec<f64> = m.points().iter().map(|p| (2.0 * PI * p[0]).cos()).collect();
        let e: f64 = u.iter().zip(m.stiffness().mul_vec(&u)).map(|(a, b)| a * b).sum();
        assert!((e - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < 0.01, "{e}");
        let coarse = Mesh::build(Surface::FlatTorus, 2).unwrap();
        assert!(m.embed_coarse(&coarse).is_err());
        assert!(matches!(Mesh::graded_torus(3, &foci, 0.0, 1.25), Err(TodaError::Config(_))));
    }

    #[test]
    fn level_out_of_range() {
        assert!(matches!(Mesh::build(Surface::Sphere, 9), Err(TodaError::Config(_))));
    }

    #[test]
    fn stiffness_is_positive_semidefinite() {
        let m = Mesh::build(Surface::Sphere, 1).unwrap();
        let n = m.num_vertices();
        let k = nalgebra::DMatrix::from_fn(n, n, |i, j| m.stiffness().get(i, j));
        let eig = k.symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > -1e-10);
        assert_eq!(eig.iter().filter(|&&e| e.abs() < 1e-9).count(), 1);
    }

    #[test]
    fn sphere_first_eigenvalue() {
        // Generalized problem K v = λ M v with diagonal M: use M^{-1/2} K M^{-1/2}.
        let m = Mesh::build(Surface::Sphere, 3).unwrap();
        let n = m.num_vertices();
        let s: Vec<f64> = m.mass().iter().map(|x| 1.0 / x.sqrt()).collect();
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| s[i] * m.stiffness().get(i, j) * s[j]);
        let mut eig: Vec<f64> = a.symmetric_eigenvalues().iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        let target = 2.0 / (SPHERE_RADIUS * SPHERE_RADIUS);
        assert_relative_eq!(target, 8.0 * PI, epsilon = 1e-12);
        assert!((eig[1] - target).abs() / target < 0.02, "λ1 = {}", eig[1]);
        assert!((eig[3] - target).abs() / target < 0.02);
    }

    #[test]
    fn torus_linear_coordinate_energy() {
        // u = cos(2πx)/(2π) is an embedding coordinate; ∫|∇u|² = 1/2.
        let m = Mesh::build(Surface::FlatTorus, 2).unwrap();
        let u: Vec<f64> = m.points().iter().map(|p| (2.0 * PI * p[0]).cos() / (2.0 * PI)).collect();
        let e = m.stiffness().bilinear(&u, &u);
        assert!((e - 0.5).abs() / 0.5 < 0.01, "{e}");
    }

    #[test]
    fn edge_paths_approximate_geodesics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for surface in [Surface::Sphere, Surface::FlatTorus] {
            let m = Mesh::build(surface, 3).unwrap();
            let h = m.max_edge();
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let a = rng.gen_range(0..m.num_vertices());
                let d = m.edge_path_distances(a);
                for _ in 0..10 {
                    let b = rng.gen_range(0..m.num_vertices());
                    let g = surface.geodesic_distance(m.point(a), m.point(b));
                    assert!(d[b] >= g - 1e-12);
                    // Edge paths on a grid cut one diagonal only, so the
                    // excess can reach (√2 − 1)·d plus a few edges.
                    worst = worst.max((d[b] - g) / (0.42 * g + 3.0 * h));
                }
            }
            assert!(worst <= 1.0, "{surface:?}: {worst}");
        }
    }

    #[test]
    fn nested_indices_coincide() {
        for surface in [Surface::Sphere, Surface::FlatTorus] {
            let c = Mesh::build(surface, 1).unwrap();
            let f = Mesh::build(surface, 2).unwrap();
            let map = f.embed_coarse(&c).unwrap();
            for (i, &j) in map.iter().enumerate() {
                assert!(surface.geodesic_distance(c.point(i), f.point(j)) < 1e-14);
            }
        }
    }

    #[test]
    fn fingerprints_distinguish_meshes() {
        let a = Mesh::build(Surface::Sphere, 1).unwrap();
        let b = Mesh::build(Surface::Sphere, 2).unwrap();
        let c = Mesh::build(Surface::Sphere, 1).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), c.fingerprint());
    }
}
