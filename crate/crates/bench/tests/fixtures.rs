use toda_bench::{mesh, tilted_params};
use toda_core::Surface;

#[test]
fn weights_are_reciprocal() {
    for s in [Surface::Sphere, Surface::FlatTorus] {
        let m = mesh(s, 2);
        let p = tilted_params(&m, 3.0);
        assert_eq!(p.rho(), [3.0, 3.0]);
        for (a, b) in p.h1().values().iter().zip(p.h2().values()) {
            assert!((a * b - 1.0).abs() < 1e-12);
        }
    }
}
