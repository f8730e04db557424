use toda_core::fields::{bubble, mean, read_field, write_field};
use toda_core::functional::{el_residual, j_rho};
use toda_core::{Field, Mesh, Surface, TodaParams};

#[test]
fn zero_is_a_critical_point_of_the_unweighted_functional() {
    for s in [Surface::Sphere, Surface::FlatTorus] {
        let m = Mesh::build(s, 3).unwrap();
        let p = TodaParams::uniform(&m, 3.0, 2.0).unwrap();
        let z = Field::zeros(&m);
        assert!(j_rho(&m, &p, &z, &z).unwrap().abs() < 1e-12);
        let (_, _, r) = el_residual(&m, &p, &z, &z).unwrap();
        assert!(r < 1e-10, "{r}");
    }
}

#[test]
fn fields_round_trip_through_bytes() {
    let m = Mesh::build(Surface::Sphere, 2).unwrap();
    let x = m.points()[7];
    let u = bubble(&m, &x, 50.0).unwrap();
    let mut buf = Vec::new();
    write_field(&u, &mut buf).unwrap();
    let v = read_field(&m, &mut buf.as_slice()).unwrap();
    assert_eq!(u.values(), v.values());
    assert!(mean(&m, &v).unwrap().is_finite());

    let other = Mesh::build(Surface::Sphere, 3).unwrap();
    assert!(read_field(&other, &mut buf.as_slice()).is_err());
}
