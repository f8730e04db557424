//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use toda_core::functional::TodaParams;
use toda_core::{Field, Mesh, Surface};

pub fn mesh(surface: Surface, level: u32) -> Mesh {
    Mesh::build(surface, level).expect("mesh builds")
}

/// `ρ` in the coercive range with weights `exp(±0.5 cos 2πx)` on the torus
/// and `exp(±0.5 z)` on the sphere.
pub fn tilted_params(m: &Mesh, rho: f64) -> TodaParams {
    let s = m.surface();
    let c = move |p: &[f64; 3]| match s {
        Surface::FlatTorus => (2.0 * PI * p[0]).cos(),
        Surface::Sphere => p[2],
    };
    let h1 = Field::from_fn(m, |p| (0.5 * c(p)).exp()).unwrap();
    let h2 = Field::from_fn(m, |p| (-0.5 * c(p)).exp()).unwrap();
    TodaParams::new(m, rho, rho, Some(h1), Some(h2)).unwrap()
}
