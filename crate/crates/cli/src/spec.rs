//! Field specs: `kind:key=value,...`.
//!
//! * `bubble:lambda=1e4[,scale=1][,x=..,y=..[,z=..]]`
//! * `random:seed=3[,band=3][,amplitude=1]`
//! * `constant:value=0`
//! * `exp:a=0.5,axis=z` for `exp(a · embedding coordinate)`; `axis` is an
//!   index into the embedding or one of `x`, `y`, `z`.
//!
//! Bubble centers are a direction on the sphere (default the north pole) and
//! periodic coordinates on the torus (default `(0.5, 0.5)`).

use std::collections::BTreeMap;

use toda_core::inequality::ProbeSpec;
use toda_core::{Field, Mesh, Point, Surface};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Probe(ProbeSpec),
    ExpCoordinate { a: f64, axis: usize },
}

fn bad(spec: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field spec {spec:?}: {why}"))
}

pub fn default_center(surface: Surface) -> Point {
    match surface {
        Surface::Sphere => Surface::sphere_point([0.0, 0.0, 1.0]),
        Surface::FlatTorus => Surface::torus_point(0.5, 0.5),
    }
}

/// A point from coordinates: a direction on the sphere, `[x, y]` on the torus.
pub fn point_from(surface: Surface, c: &[f64]) -> Result<Point, CliError> {
    match (surface, c) {
        (Surface::Sphere, [x, y, z]) => {
            if x * x + y * y + z * z == 0.0 {
                return Err(CliError::Config("sphere direction must be nonzero".into()));
            }
            Ok(Surface::sphere_point([*x, *y, *z]))
        }
        (Surface::FlatTorus, [x, y]) => Ok(Surface::torus_point(*x, *y)),
        _ => Err(CliError::Config(format!(
            "{} points need {} coordinates, got {c:?}",
            surface.name(),
            match surface {
                Surface::Sphere => 3,
                Surface::FlatTorus => 2,
            }
        ))),
    }
}

impl FieldSpec {
    pub fn parse(spec: &str, surface: Surface) -> Result<FieldSpec, CliError> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| bad(spec, format!("expected key=value, got {item:?}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str| kv.remove(key);
        let num = |v: Option<String>, key: &str, default: Option<f64>| -> Result<f64, CliError> {
            match v {
                Some(v) => v.parse::<f64>().map_err(|_| bad(spec, format!("{key} = {v:?} is not a number"))),
                None => default.ok_or_else(|| bad(spec, format!("missing {key}"))),
            }
        };
        let out = match kind.trim() {
            "bubble" => {
                let lambda = num(take("lambda"), "lambda", None)?;
                let scale = num(take("scale"), "scale", Some(1.0))?;
                let coords: Vec<Option<String>> = ["x", "y", "z"].iter().map(|k| take(k)).collect();
                let center = if coords.iter().all(Option::is_none) {
                    default_center(surface)
                } else {
                    let c: Vec<f64> = coords
                        .into_iter()
                        .zip(["x", "y", "z"])
                        .filter_map(|(v, k)| v.map(|v| num(Some(v), k, None)))
                        .collect::<Result<_, _>>()?;
                    point_from(surface, &c)?
                };
                FieldSpec::Probe(ProbeSpec::Bubble { center, lambda, scale })
            }
            "random" => FieldSpec::Probe(ProbeSpec::RandomBandlimited {
                seed: num(take("seed"), "seed", Some(0.0))? as u64,
                band: num(take("band"), "band", Some(3.0))? as usize,
                amplitude: num(take("amplitude"), "amplitude", Some(1.0))?,
            }),
            "constant" => FieldSpec::Probe(ProbeSpec::Constant { value: num(take("value"), "value", Some(0.0))? }),
            "exp" => {
                let a = num(take("a"), "a", None)?;
                let axis = match take("axis").as_deref() {
                    Some("x") => 0,
                    Some("y") => 1,
                    Some("z") | None => 2,
                    Some(v) => v.parse::<usize>().map_err(|_| bad(spec, format!("axis {v:?}")))?,
                };
                if axis >= surface.embed_dim() {
                    return Err(bad(spec, format!("axis {axis} out of range for the {}", surface.name())));
                }
                FieldSpec::ExpCoordinate { a, axis }
            }
            other => return Err(bad(spec, format!("unknown kind {other:?}"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(bad(spec, format!("unknown key {k:?}")));
        }
        Ok(out)
    }

    pub fn realize(&self, mesh: &Mesh) -> Result<Field, CliError> {
        match self {
            FieldSpec::Probe(p) => Ok(p.realize(mesh)?),
            FieldSpec::ExpCoordinate { a, axis } => {
                let s = mesh.surface();
                Ok(Field::from_fn(mesh, |p| (a * s.embed(p)[*axis]).exp())?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_kinds() {
        let s = Surface::Sphere;
        match FieldSpec::parse("bubble:lambda=1e4", s).unwrap() {
            FieldSpec::Probe(ProbeSpec::Bubble { lambda, scale, center }) => {
                assert_eq!((lambda, scale), (1e4, 1.0));
                assert_eq!(center, default_center(s));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(FieldSpec::parse("exp:a=-0.5,axis=z", s).unwrap(), FieldSpec::ExpCoordinate { a: -0.5, axis: 2 });
        assert!(matches!(
            FieldSpec::parse("random:seed=4", s).unwrap(),
            FieldSpec::Probe(ProbeSpec::RandomBandlimited { seed: 4, .. })
        ));
        let t = FieldSpec::parse("bubble:lambda=10,x=0.25,y=0.5", Surface::FlatTorus).unwrap();
        assert!(
            matches!(t, FieldSpec::Probe(ProbeSpec::Bubble { center, .. }) if center == Surface::torus_point(0.25, 0.5))
        );
    }

    #[test]
    fn rejects_bad_specs() {
        let s = Surface::FlatTorus;
        for bad in [
            "bubble",
            "bubble:lambda=x",
            "wave:k=1",
            "constant:value=1,extra=2",
            "exp:a=1,axis=7",
            "bubble:lambda=1,x=0.1,y=0.2,z=0.3",
        ] {
            assert!(matches!(FieldSpec::parse(bad, s), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn exp_weight_uses_the_embedding() {
        let m = Mesh::build(Surface::Sphere, 1).unwrap();
        let f = FieldSpec::parse("exp:a=0.5,axis=z", Surface::Sphere).unwrap().realize(&m).unwrap();
        for (v, p) in f.values().iter().zip(m.points()) {
            assert!((v - (0.5 * p[2]).exp()).abs() < 1e-15);
        }
    }
}
