use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::fields::{density_of, Field};
use crate::geometry::{Mesh, VertexGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationCase {
    /// Some concentration balls of the two components are close: a ball and
    /// the complement of a larger ball.
    Shared,
    /// All pairs are far apart: unions of two small balls.
    Disjoint,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatedSets {
    pub omega1: Vec<usize>,
    pub omega2: Vec<usize>,
    pub gamma: f64,
    pub delta: f64,
    pub case: SeparationCase,
    pub r0: f64,
    pub num_balls: usize,
    /// `masses[i][c]`: normalized mass of `e^{u_c}` on `Ω̃_i`.
    pub masses: [[f64; 2]; 2],
    /// Centers `y_{i,j}` as vertex indices.
    pub centers: [[usize; 2]; 2],
}

fn set_distance(mesh: &Mesh, a: &[usize], b: &[usize]) -> f64 {
    let s = mesh.surface();
    let mut best = f64::INFINITY;
    for &i in a {
        for &j in b {
            best = best.min(s.geodesic_distance(mesh.point(i), mesh.point(j)));
        }
    }
    best
}

/// Given regions `Ω_{i,j}` (component `i`, index `j`) with
/// `d(Ω_{i,1}, Ω_{i,2}) ≥ δ0` and normalized masses of `e^{u_i}` at least
/// `γ0`, builds two sets separated by `r0` on which both components keep
/// mass at least `γ0 / N`, `N` being the number of `r0`-balls in the cover.
pub fn select_separated_sets(
    mesh: &Mesh,
    u1: &Field,
    u2: &Field,
    regions: &[[Vec<usize>; 2]; 2],
    delta0: f64,
    gamma0: f64,
) -> Result<SeparatedSets> {
    let f = [density_of(mesh, u1)?, density_of(mesh, u2)?];
    let w: Vec<Vec<f64>> = f.iter().map(|d| d.vertex_masses(mesh)).collect();
    for i in 0..2 {
        for j in 0..2 {
            let reg = &regions[i][j];
            if reg.is_empty() || reg.iter().any(|&v| v >= mesh.num_vertices()) {
                return Err(TodaError::Precondition(format!("region ({i},{j}) is empty or out of range")));
            }
            let m: f64 = reg.iter().map(|&v| w[i][v]).sum();
            if m < gamma0 {
                return Err(TodaError::Precondition(format!(
                    "mass {m} of region ({i},{j}) is below gamma0 = {gamma0}"
                )));
            }
        }
        let d = set_distance(mesh, &regions[i][0], &regions[i][1]);
        if d < delta0 {
            return Err(TodaError::Precondition(format!("regions of component {i} are {d} < delta0 apart")));
        }
    }
    let r0 = delta0 / 81.0;
    let grid = VertexGrid::new(mesh);
    // Greedy cover of the vertices by r0-balls centered at vertices.
    let n = mesh.num_vertices();
    let mut covered = vec![false; n];
    let mut centers = Vec::new();
    for v in 0..n {
        if covered[v] {
            continue;
        }
        centers.push(v);
        grid.for_each_within(mesh, mesh.point(v), r0, |k, _| covered[k] = true);
    }
    let ball = |c: usize| {
        let mut out = Vec::new();
        grid.for_each_within(mesh, mesh.point(c), r0, |k, _| out.push(k));
        out
    };
    let balls: Vec<Vec<usize>> = centers.iter().map(|&c| ball(c)).collect();
    let mut y = [[0usize; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut inside = vec![false; n];
            for &v in &regions[i][j] {
                inside[v] = true;
            }
            let mut best = (f64::NEG_INFINITY, 0);
            for (b, members) in balls.iter().enumerate() {
                if members.iter().any(|&k| inside[k]) {
                    let m: f64 = members.iter().map(|&k| w[i][k]).sum();
                    if m > best.0 {
                        best = (m, centers[b]);
                    }
                }
            }
            y[i][j] = best.1;
        }
    }
    let surface = mesh.surface();
    let dist = |a: usize, b: usize| surface.geodesic_distance(mesh.point(a), mesh.point(b));
    let meeting = (0..2).find(|&j| (0..2).any(|k| dist(y[0][j], y[1][k]) < 10.0 * r0));
    let within = |c: usize, rad: f64| -> Vec<usize> { (0..n).filter(|&k| dist(c, k) <= rad).collect() };
    let (omega1, omega2, case) = match meeting {
        Some(j) => {
            let c = y[0][j];
            let o1 = within(c, 30.0 * r0);
            let o2: Vec<usize> = (0..n).filter(|&k| dist(c, k) > 40.0 * r0).collect();
            (o1, o2, SeparationCase::Shared)
        }
        None => {
            let mut o1 = ball(y[0][0]);
            o1.extend(ball(y[1][0]));
            o1.sort_unstable();
            o1.dedup();
            let mut o2 = ball(y[0][1]);
            o2.extend(ball(y[1][1]));
            o2.sort_unstable();
            o2.dedup();
            (o1, o2, SeparationCase::Disjoint)
        }
    };
    let gamma = gamma0 / centers.len() as f64;
    let mass = |set: &[usize], c: usize| set.iter().map(|&k| w[c][k]).sum::<f64>();
    let masses = [[mass(&omega1, 0), mass(&omega1, 1)], [mass(&omega2, 0), mass(&omega2, 1)]];
    if masses.iter().flatten().any(|&m| m < gamma * (1.0 - 1e-12)) {
        return Err(TodaError::Invariant(format!("selected sets lose mass: {masses:?} < {gamma}")));
    }
    if omega2.is_empty() || set_distance(mesh, &omega1, &omega2) < r0 {
        return Err(TodaError::Invariant("selected sets are closer than r0".into()));
    }
    Ok(SeparatedSets { omega1, omega2, gamma, delta: r0, case, r0, num_balls: centers.len(), masses, centers: y })
}
