use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::fields::{bubble_value, Field};
use crate::geometry::{Mesh, Point, Surface, SPHERE_RADIUS};

fn one() -> f64 {
    1.0
}

/// Deterministic recipe for a probe field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeSpec {
    /// `scale · U_{λ,x}`.
    Bubble {
        center: Point,
        lambda: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · log(e^{U_{λ1,x1}} + e^{U_{λ2,x2}})`.
    TwoBubble {
        centers: [Point; 2],
        lambdas: [f64; 2],
        #[serde(default = "one")]
        scale: f64,
    },
    /// Random superposition of plane waves with frequency at most `band`
    /// (in units of the surface's fundamental frequency).
    RandomBandlimited {
        seed: u64,
        band: usize,
        amplitude: f64,
    },
    Constant {
        value: f64,
    },
}

impl ProbeSpec {
    pub fn bubble(center: Point, lambda: f64) -> ProbeSpec {
        ProbeSpec::Bubble { center, lambda, scale: 1.0 }
    }

    pub fn id(&self) -> String {
        let p = |x: &Point| format!("{:.4}:{:.4}:{:.4}", x[0], x[1], x[2]);
        match self {
            ProbeSpec::Bubble { center, lambda, scale } => format!("bubble[{}|{lambda:e}|{scale}]", p(center)),
            ProbeSpec::TwoBubble { centers, lambdas, scale } => {
                format!("two_bubble[{}|{}|{:e}|{:e}|{scale}]", p(&centers[0]), p(&centers[1]), lambdas[0], lambdas[1])
            }
            ProbeSpec::RandomBandlimited { seed, band, amplitude } => format!("random[{seed}|{band}|{amplitude}]"),
            ProbeSpec::Constant { value } => format!("constant[{value}]"),
        }
    }

    pub fn realize(&self, mesh: &Mesh) -> Result<Field> {
        let surface = mesh.surface();
        let check_lambda = |l: f64| {
            if !(l > 0.0) || !l.is_finite() {
                Err(TodaError::Domain(format!("bubble scale λ = {l} must be positive")))
            } else {
                Ok(())
            }
        };
        match self {
            ProbeSpec::Bubble { center, lambda, scale } => {
                check_lambda(*lambda)?;
                let c = surface.canonicalize(*center);
                Field::from_fn(mesh, |x| scale * bubble_value(*lambda, surface.geodesic_distance(&c, x)))
            }
            ProbeSpec::TwoBubble { centers, lambdas, scale } => {
                check_lambda(lambdas[0])?;
                check_lambda(lambdas[1])?;
                let c = centers.map(|c| surface.canonicalize(c));
                Field::from_fn(mesh, |x| {
                    let a = bubble_value(lambdas[0], surface.geodesic_distance(&c[0], x));
                    let b = bubble_value(lambdas[1], surface.geodesic_distance(&c[1], x));
                    let m = a.max(b);
                    scale * (m + ((a - m).exp() + (b - m).exp()).ln())
                })
            }
            ProbeSpec::RandomBandlimited { seed, band, amplitude } => {
                let waves = Waves::new(surface, *seed, *band, *amplitude);
                Field::from_fn(mesh, |x| waves.eval(x))
            }
            ProbeSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(TodaError::Domain("constant probe must be finite".into()));
                }
                Ok(Field::constant(mesh, *value))
            }
        }
    }

    /// Random probe for corpus generation.
    pub fn random<R: Rng>(surface: Surface, rng: &mut R) -> ProbeSpec {
        let point = |rng: &mut R| random_point(surface, rng);
        match rng.gen_range(0..4) {
            0 => ProbeSpec::Bubble { center: point(rng), lambda: 10f64.powf(rng.gen_range(1.0..3.5)), scale: 1.0 },
            1 => ProbeSpec::TwoBubble {
                centers: [point(rng), point(rng)],
                lambdas: [10f64.powf(rng.gen_range(1.0..3.0)), 10f64.powf(rng.gen_range(1.0..3.0))],
                scale: 1.0,
            },
            2 => ProbeSpec::RandomBandlimited {
                seed: rng.gen(),
                band: rng.gen_range(1..6),
                amplitude: rng.gen_range(0.5..4.0),
            },
            _ => ProbeSpec::Constant { value: rng.gen_range(-3.0..3.0) },
        }
    }
}

pub fn random_point<R: Rng>(surface: Surface, rng: &mut R) -> Point {
    match surface {
        Surface::Sphere => loop {
            let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-3 && n <= 1.0 {
                break Surface::sphere_point(v);
            }
        },
        Surface::FlatTorus => Surface::torus_point(rng.gen(), rng.gen()),
    }
}

/// `n` seeded probe pairs.
pub fn probe_corpus(surface: Surface, n: usize, seed: u64) -> Vec<(ProbeSpec, ProbeSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (ProbeSpec::random(surface, &mut rng), ProbeSpec::random(surface, &mut rng))).collect()
}

struct Waves {
    modes: Vec<([f64; 3], f64, f64)>,
}

impl Waves {
    fn new(surface: Surface, seed: u64, band: usize, amplitude: f64) -> Waves {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        let band = band as i64;
        match surface {
            Surface::FlatTorus => {
                for kx in -band..=band {
                    for ky in 0..=band {
                        if ky == 0 && kx <= 0 {
                            continue;
                        }
                        let w = [2.0 * PI * kx as f64, 2.0 * PI * ky as f64, 0.0];
                        modes.push((w, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
                    }
                }
            }
            Surface::Sphere => {
                let count = (2 * band * (band + 1)).max(1);
                for _ in 0..count {
                    let dir = random_point(Surface::Sphere, &mut rng);
                    let k = rng.gen_range(1..=band.max(1)) as f64 / SPHERE_RADIUS;
                    let w = dir.map(|c| c / SPHERE_RADIUS * k);
                    modes.push((w, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
                }
            }
        }
        let norm = amplitude * (2.0 / modes.len().max(1) as f64).sqrt();
        for m in &mut modes {
            m.1 *= norm;
        }
        Waves { modes }
    }

    fn eval(&self, x: &Point) -> f64 {
        self.modes.iter().map(|(w, a, ph)| a * (w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + ph).cos()).sum()
    }
}
