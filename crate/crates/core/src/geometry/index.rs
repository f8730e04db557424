use super::mesh::Mesh;
use super::surface::{Point, Surface, SPHERE_RADIUS};

/// Uniform bucket grid over the vertices of a mesh: a cube grid in R³ for
/// the sphere and a periodic square grid for the torus.
#[derive(Clone, Debug)]
pub struct VertexGrid {
    surface: Surface,
    g: usize,
    cell: f64,
    cell_start: Vec<usize>,
    cell_vertices: Vec<usize>,
    vertex_cell: Vec<usize>,
}

impl VertexGrid {
    pub fn new(mesh: &Mesh) -> Self {
        let surface = mesh.surface();
        let n = mesh.num_vertices();
        let (g, cell) = match surface {
            Surface::Sphere => {
                let g = ((n as f64 / 3.0).sqrt() as usize).clamp(1, 96);
                (g, 2.0 * SPHERE_RADIUS / g as f64)
            }
            Surface::FlatTorus => {
                let g = ((n as f64).sqrt() as usize / 2).clamp(1, 512);
                (g, 1.0 / g as f64)
            }
        };
        let ncells = match surface {
            Surface::Sphere => g * g * g,
            Surface::FlatTorus => g * g,
        };
        let mut grid = VertexGrid {
            surface,
            g,
            cell,
            cell_start: vec![0; ncells + 1],
            cell_vertices: vec![0; n],
            vertex_cell: vec![0; n],
        };
        for (v, p) in mesh.points().iter().enumerate() {
            let c = grid.cell_of_point(p);
            grid.vertex_cell[v] = c;
            grid.cell_start[c + 1] += 1;
        }
        for c in 0..ncells {
            grid.cell_start[c + 1] += grid.cell_start[c];
        }
        let mut fill = grid.cell_start.clone();
        for v in 0..n {
            let c = grid.vertex_cell[v];
            grid.cell_vertices[fill[c]] = v;
            fill[c] += 1;
        }
        grid
    }

    pub fn num_cells(&self) -> usize {
        self.cell_start.len() - 1
    }

    pub fn cell_of_vertex(&self, v: usize) -> usize {
        self.vertex_cell[v]
    }

    pub fn vertices_in(&self, cell: usize) -> &[usize] {
        &self.cell_vertices[self.cell_start[cell]..self.cell_start[cell + 1]]
    }

    fn axis(&self, x: f64) -> usize {
        match self.surface {
            Surface::Sphere => (((x + SPHERE_RADIUS) / self.cell) as isize).clamp(0, self.g as isize - 1) as usize,
            Surface::FlatTorus => ((x * self.g as f64) as usize).min(self.g - 1),
        }
    }

    fn cell_of_point(&self, p: &Point) -> usize {
        match self.surface {
            Surface::Sphere => (self.axis(p[0]) * self.g + self.axis(p[1])) * self.g + self.axis(p[2]),
            Surface::FlatTorus => self.axis(p[0]) * self.g + self.axis(p[1]),
        }
    }

    /// Every cell that may contain a vertex within geodesic distance `s`.
    pub fn cells_near(&self, center: &Point, s: f64, out: &mut Vec<usize>) {
        out.clear();
        let g = self.g as isize;
        match self.surface {
            Surface::Sphere => {
                if s >= std::f64::consts::PI * SPHERE_RADIUS {
                    out.extend(0..self.num_cells());
                    return;
                }
                let c = self.surface.chord_for_distance(s) * (1.0 + 1e-12) + 1e-15;
                let lo = |x: f64| (((x - c + SPHERE_RADIUS) / self.cell).floor() as isize).clamp(0, g - 1);
                let hi = |x: f64| (((x + c + SPHERE_RADIUS) / self.cell).floor() as isize).clamp(0, g - 1);
                let gap = |x: f64, i: isize| {
                    let a = -SPHERE_RADIUS + i as f64 * self.cell;
                    let b = a + self.cell;
                    if x < a {
                        a - x
                    } else if x > b {
                        x - b
                    } else {
                        0.0
                    }
                };
                for i in lo(center[0])..=hi(center[0]) {
                    let dx = gap(center[0], i);
                    for j in lo(center[1])..=hi(center[1]) {
                        let dy = gap(center[1], j);
                        if dx * dx + dy * dy > c * c {
                            continue;
                        }
                        for k in lo(center[2])..=hi(center[2]) {
                            let dz = gap(center[2], k);
                            if dx * dx + dy * dy + dz * dz <= c * c {
                                out.push(((i * g + j) * g + k) as usize);
                            }
                        }
                    }
                }
            }
            Surface::FlatTorus => {
                let gf = self.g as f64;
                let range = |x: f64| -> (isize, isize, bool) {
                    let a = ((x - s) * gf).floor() as isize;
                    let b = ((x + s) * gf).floor() as isize;
                    if b - a + 1 >= g {
                        (0, g - 1, true)
                    } else {
                        (a, b, false)
                    }
                };
                let gap = |x: f64, i: isize, full: bool| {
                    if full {
                        return 0.0;
                    }
                    let a = i as f64 / gf;
                    let b = a + 1.0 / gf;
                    if x < a {
                        a - x
                    } else if x > b {
                        x - b
                    } else {
                        0.0
                    }
                };
                let (ia, ib, fi) = range(center[0]);
                let (ja, jb, fj) = range(center[1]);
                let s2 = s * s * (1.0 + 1e-12) + 1e-30;
                for i in ia..=ib {
                    let dx = gap(center[0], i, fi);
                    for j in ja..=jb {
                        let dy = gap(center[1], j, fj);
                        if dx * dx + dy * dy <= s2 {
                            out.push((i.rem_euclid(g) * g + j.rem_euclid(g)) as usize);
                        }
                    }
                }
            }
        }
    }

    /// Calls `f(vertex, distance)` for each vertex within geodesic distance `s`.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, mesh: &Mesh, center: &Point, s: f64, mut f: F) {
        let mut cells = Vec::new();
        self.cells_near(center, s, &mut cells);
        for c in cells {
            for &v in self.vertices_in(c) {
                let d = self.surface.geodesic_distance(center, mesh.point(v));
                if d <= s {
                    f(v, d);
                }
            }
        }
    }

    /// Per-cell sums of a vertex quantity.
    pub fn cell_sums(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_cells()];
        for (v, &x) in w.iter().enumerate() {
            out[self.vertex_cell[v]] += x;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_queries_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for surface in [Surface::Sphere, Surface::FlatTorus] {
            let mesh = Mesh::build(surface, 3).unwrap();
            let grid = VertexGrid::new(&mesh);
            for _ in 0..30 {
                let c = *mesh.point(rng.gen_range(0..mesh.num_vertices()));
                let s = rng.gen_range(0.0..surface.diameter() * 1.05);
                let mut got = Vec::new();
                grid.for_each_within(&mesh, &c, s, |v, _| got.push(v));
                got.sort();
                let want: Vec<usize> =
                    (0..mesh.num_vertices()).filter(|&v| surface.geodesic_distance(&c, mesh.point(v)) <= s).collect();
                assert_eq!(got, want, "{surface:?} s={s}");
            }
        }
    }

    #[test]
    fn cells_partition_vertices() {
        let mesh = Mesh::build(Surface::Sphere, 2).unwrap();
        let grid = VertexGrid::new(&mesh);
        let total: usize = (0..grid.num_cells()).map(|c| grid.vertices_in(c).len()).sum();
        assert_eq!(total, mesh.num_vertices());
    }
}
