use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::geometry::Surface;

/// Parameters of the scale/barycenter construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub r: f64,
    pub r0: f64,
    pub delta: f64,
    pub tau: f64,
    /// `max{3R + 1, diam/δ}`
    pub c_prime: f64,
}

impl ConcentrationConfig {
    pub fn new(surface: Surface, r: f64, delta: f64, tau: f64) -> Result<ConcentrationConfig> {
        if !(r > 1.0) || !r.is_finite() {
            return Err(TodaError::Config(format!("R = {r} must exceed 1")));
        }
        let r0 = 3.0 * r;
        if !(delta > 0.0) || (r0 + 1.0) * delta >= surface.tube_radius() {
            return Err(TodaError::Config(format!(
                "delta = {delta} violates the tube condition (R0+1)·delta < {}",
                surface.tube_radius()
            )));
        }
        if !(tau > 0.0 && tau < 0.5) {
            return Err(TodaError::Config(format!("tau = {tau} must lie in (0, 1/2)")));
        }
        Ok(ConcentrationConfig { r, r0, delta, tau, c_prime: (3.0 * r + 1.0).max(surface.diameter() / delta) })
    }

    /// Default `δ` and `τ` for the given `R`.
    pub fn default_for(surface: Surface, r: f64) -> Result<ConcentrationConfig> {
        if !(r > 1.0) || !r.is_finite() {
            return Err(TodaError::Config(format!("R = {r} must exceed 1")));
        }
        ConcentrationConfig::new(surface, r, default_delta(surface, r), default_tau(r))
    }
}

/// `0.9 · tube/(3R + 1)`: the largest δ with margin for which balls of
/// radius `(R0 + 1)δ` have a projectable convex hull.
pub fn default_delta(surface: Surface, r: f64) -> f64 {
    0.9 * surface.tube_radius() / (3.0 * r + 1.0)
}

/// `0.9/(k + 2)` with `k` a greedy covering count of the planar annulus
/// `A(1, R)` by discs of radius 1/3.
pub fn default_tau(r: f64) -> f64 {
    0.9 / (annulus_cover_count(r) + 2) as f64
}

/// Greedy cover of `A(1, R)` by discs of radius 1/3. Samples on a grid of
/// spacing `h` are covered with discs shrunk by the sample half-diagonal, so
/// the discs of full radius cover the continuous annulus.
pub fn annulus_cover_count(r: f64) -> usize {
    let h = 0.02;
    let rad = 1.0 / 3.0 - h * std::f64::consts::FRAC_1_SQRT_2;
    let n = (r / h).ceil() as i64 + 1;
    let side = (2 * n + 1) as usize;
    let at = |i: i64, j: i64| ((i + n) as usize) * side + (j + n) as usize;
    // `pending[k]` marks samples of the annulus not yet covered.
    let mut pending = vec![false; side * side];
    let mut left = 0usize;
    for i in -n..=n {
        for j in -n..=n {
            let d = (i as f64 * h).hypot(j as f64 * h);
            if d >= 1.0 - h && d <= r + h {
                pending[at(i, j)] = true;
                left += 1;
            }
        }
    }
    let m = (rad / h).floor() as i64;
    let offsets: Vec<(i64, i64)> = (-m..=m)
        .flat_map(|a| (-m..=m).map(move |b| (a, b)))
        .filter(|&(a, b)| (a as f64 * h).hypot(b as f64 * h) <= rad)
        .collect();
    let inside = |i: i64, j: i64| i >= -n && i <= n && j >= -n && j <= n;
    let mut count = 0;
    while left > 0 {
        let mut best = (0i64, 0i64, 0usize);
        for ci in (-n..=n).step_by(2) {
            for cj in (-n..=n).step_by(2) {
                let gain =
                    offsets.iter().filter(|&&(a, b)| inside(ci + a, cj + b) && pending[at(ci + a, cj + b)]).count();
                if gain > best.2 {
                    best = (ci, cj, gain);
                }
            }
        }
        for &(a, b) in &offsets {
            let (i, j) = (best.0 + a, best.1 + b);
            if inside(i, j) && pending[at(i, j)] {
                pending[at(i, j)] = false;
                left -= 1;
            }
        }
        count += 1;
    }
    count
}
