//! Per-vertex fields, probability densities, lumped-mass integrals and the
//! quadratic form of the Toda energy.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TodaError};
use crate::geometry::{Mesh, Point};

/// Real values at the vertices of one mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    values: Vec<f64>,
    mesh_id: u64,
}

impl Field {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Field> {
        if values.len() != mesh.num_vertices() {
            return Err(TodaError::Domain(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TodaError::Domain(format!("field value at vertex {i} is not finite")));
        }
        Ok(Field { values, mesh_id: mesh.fingerprint() })
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Field {
        Field { values: vec![c; mesh.num_vertices()], mesh_id: mesh.fingerprint() }
    }

    pub fn zeros(mesh: &Mesh) -> Field {
        Field::constant(mesh, 0.0)
    }

    pub fn from_fn<F: Fn(&Point) -> f64>(mesh: &Mesh, f: F) -> Result<Field> {
        Field::new(mesh, mesh.points().iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn add_constant(&self, c: f64) -> Field {
        Field { values: self.values.iter().map(|v| v + c).collect(), mesh_id: self.mesh_id }
    }

    pub fn scale(&self, a: f64) -> Field {
        Field { values: self.values.iter().map(|v| a * v).collect(), mesh_id: self.mesh_id }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        same_mesh(self, other)?;
        Ok(Field {
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
            mesh_id: self.mesh_id,
        })
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Field> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TodaError::Domain("mapped field is not finite".into()));
        }
        Ok(Field { values, mesh_id: self.mesh_id })
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id != mesh.fingerprint() {
            return Err(TodaError::MeshMismatch { expected: mesh.fingerprint(), found: self.mesh_id });
        }
        Ok(())
    }
}

/// Positive density of unit mass with respect to the lumped measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    values: Vec<f64>,
    mesh_id: u64,
}

impl Density {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Density> {
        if values.len() != mesh.num_vertices() {
            return Err(TodaError::Domain("density length does not match mesh".into()));
        }
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(TodaError::Domain("density must be positive and finite".into()));
        }
        let total: f64 = values.iter().zip(mesh.mass()).map(|(f, m)| f * m).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(TodaError::Domain(format!("density has mass {total}, expected 1")));
        }
        Ok(Density { values, mesh_id: mesh.fingerprint() })
    }

    pub fn uniform(mesh: &Mesh) -> Density {
        let total: f64 = mesh.mass().iter().sum();
        Density { values: vec![1.0 / total; mesh.num_vertices()], mesh_id: mesh.fingerprint() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id != mesh.fingerprint() {
            return Err(TodaError::MeshMismatch { expected: mesh.fingerprint(), found: self.mesh_id });
        }
        Ok(())
    }

    /// Vertex masses `m_k f_k`, summing to 1.
    pub fn vertex_masses(&self, mesh: &Mesh) -> Vec<f64> {
        self.values.iter().zip(mesh.mass()).map(|(f, m)| f * m).collect()
    }

    /// Mass of the closed geodesic ball `B_x(s)`.
    pub fn ball_mass(&self, mesh: &Mesh, x: &Point, s: f64) -> f64 {
        let surface = mesh.surface();
        mesh.points()
            .iter()
            .zip(self.values.iter().zip(mesh.mass()))
            .filter(|(p, _)| surface.geodesic_distance(x, p) <= s)
            .map(|(_, (f, m))| f * m)
            .sum()
    }
}

fn same_mesh(a: &Field, b: &Field) -> Result<()> {
    if a.mesh_id != b.mesh_id {
        return Err(TodaError::MeshMismatch { expected: a.mesh_id, found: b.mesh_id });
    }
    Ok(())
}

pub fn mean(mesh: &Mesh, u: &Field) -> Result<f64> {
    u.check_mesh(mesh)?;
    Ok(mean_raw(mesh.mass(), u.values()))
}

pub(crate) fn mean_raw(mass: &[f64], u: &[f64]) -> f64 {
    let total: f64 = mass.iter().sum();
    u.iter().zip(mass).map(|(a, m)| a * m).sum::<f64>() / total
}

pub fn mean_on(mesh: &Mesh, u: &Field, region: &[usize]) -> Result<f64> {
    u.check_mesh(mesh)?;
    if region.is_empty() {
        return Err(TodaError::Domain("average over an empty region".into()));
    }
    let m = mesh.mass();
    let (num, den) = region.iter().fold((0.0, 0.0), |(a, b), &k| (a + m[k] * u.values[k], b + m[k]));
    Ok(num / den)
}

/// `∫|∇u|²` as the stiffness quadratic form.
pub fn dirichlet(mesh: &Mesh, u: &Field) -> Result<f64> {
    u.check_mesh(mesh)?;
    Ok(mesh.stiffness().bilinear(u.values(), u.values()).max(0.0))
}

/// `(1/3)∫(|∇u1|² + |∇u2|² + ∇u1·∇u2)`
pub fn q_form(mesh: &Mesh, u1: &Field, u2: &Field) -> Result<f64> {
    u1.check_mesh(mesh)?;
    u2.check_mesh(mesh)?;
    Ok(q_form_raw(mesh, u1.values(), u2.values()))
}

pub(crate) fn q_form_raw(mesh: &Mesh, u1: &[f64], u2: &[f64]) -> f64 {
    let k = mesh.stiffness();
    (k.bilinear(u1, u1) + k.bilinear(u2, u2) + k.bilinear(u1, u2)) / 3.0
}

/// Dirichlet energy restricted to triangles whose three vertices lie in `inside`.
pub fn region_dirichlet(mesh: &Mesh, u: &[f64], inside: &[bool]) -> f64 {
    region_bilinear(mesh, u, u, inside)
}

/// Restriction of the quadratic form to triangles inside a region.
pub fn region_q_form(mesh: &Mesh, u1: &[f64], u2: &[f64], inside: &[bool]) -> f64 {
    (region_bilinear(mesh, u1, u1, inside)
        + region_bilinear(mesh, u2, u2, inside)
        + region_bilinear(mesh, u1, u2, inside))
        / 3.0
}

fn region_bilinear(mesh: &Mesh, u: &[f64], v: &[f64], inside: &[bool]) -> f64 {
    let mut acc = 0.0;
    for (t, w) in mesh.triangles().iter().zip(mesh.triangle_weights()) {
        if !(inside[t[0]] && inside[t[1]] && inside[t[2]]) {
            continue;
        }
        for k in 0..3 {
            let (i, j) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            acc += w[k] * (u[i] - u[j]) * (v[i] - v[j]);
        }
    }
    acc
}

/// `log ∫ h e^u`, stabilized by subtracting the maximum exponent.
pub fn log_int_exp(mesh: &Mesh, h: Option<&Field>, u: &Field) -> Result<f64> {
    u.check_mesh(mesh)?;
    if let Some(h) = h {
        h.check_mesh(mesh)?;
        if h.values().iter().any(|&x| !(x > 0.0)) {
            return Err(TodaError::Domain("weight h must be positive".into()));
        }
    }
    Ok(log_int_exp_raw(mesh.mass(), h.map(|h| h.values()), u.values(), None))
}

/// Same as [`log_int_exp`] restricted to a vertex subset.
pub fn log_int_exp_on(mesh: &Mesh, h: Option<&Field>, u: &Field, region: &[usize]) -> Result<f64> {
    u.check_mesh(mesh)?;
    if region.is_empty() {
        return Err(TodaError::Domain("integral over an empty region".into()));
    }
    Ok(log_int_exp_raw(mesh.mass(), h.map(|h| h.values()), u.values(), Some(region)))
}

pub(crate) fn log_int_exp_raw(mass: &[f64], h: Option<&[f64]>, u: &[f64], region: Option<&[usize]>) -> f64 {
    let expo = |k: usize| u[k] + h.map_or(0.0, |h| h[k].ln());
    let all: Box<dyn Iterator<Item = usize>> = match region {
        Some(r) => Box::new(r.iter().copied()),
        None => Box::new(0..u.len()),
    };
    let idx: Vec<usize> = all.collect();
    let mx = idx.iter().map(|&k| expo(k)).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = idx.iter().map(|&k| mass[k] * (expo(k) - mx).exp()).sum();
    mx + s.ln()
}

/// Density `e^u / ∫e^u`.
pub fn density_of(mesh: &Mesh, u: &Field) -> Result<Density> {
    weighted_density(mesh, None, u)
}

/// Density `h e^u / ∫h e^u`.
pub fn weighted_density(mesh: &Mesh, h: Option<&Field>, u: &Field) -> Result<Density> {
    let lz = log_int_exp(mesh, h, u)?;
    let values = density_values(h.map(|h| h.values()), u.values(), lz);
    Ok(Density { values, mesh_id: mesh.fingerprint() })
}

pub(crate) fn density_values(h: Option<&[f64]>, u: &[f64], log_z: f64) -> Vec<f64> {
    u.iter()
        .enumerate()
        .map(|(k, &v)| (v + h.map_or(0.0, |h| h[k].ln()) - log_z).exp().max(f64::MIN_POSITIVE))
        .collect()
}

/// Standard bubble value `log(4λ/(1+λd²)²)`.
pub fn bubble_value(lambda: f64, d: f64) -> f64 {
    (4.0 * lambda).ln() - 2.0 * (lambda * d * d).ln_1p()
}

/// Bubble `U_{λ,x}` sampled at the vertices.
pub fn bubble(mesh: &Mesh, x: &Point, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(TodaError::Domain(format!("bubble scale λ = {lambda} must be positive")));
    }
    let s = mesh.surface();
    Field::new(mesh, mesh.points().iter().map(|p| bubble_value(lambda, s.geodesic_distance(x, p))).collect())
}

/// Planar mass of `e^U` over the square of half-width `30/√λ` by midpoint
/// quadrature on `cells²` cells.
pub fn flat_patch_bubble_mass(lambda: f64, cells: usize) -> f64 {
    let a = 30.0 / lambda.sqrt();
    let h = 2.0 * a / cells as f64;
    let mut acc = 0.0;
    for i in 0..cells {
        let x = -a + (i as f64 + 0.5) * h;
        for j in 0..cells {
            let y = -a + (j as f64 + 0.5) * h;
            acc += bubble_value(lambda, x.hypot(y)).exp();
        }
    }
    acc * h * h
}

/// Planar mass of `e^U` over a disc of radius `s`.
pub fn planar_bubble_disc_mass(lambda: f64, s: f64) -> f64 {
    4.0 * std::f64::consts::PI * lambda * s * s / (1.0 + lambda * s * s)
}

const FIELD_MAGIC: &[u8; 8] = b"TODAFLD1";

pub fn write_field<W: Write>(field: &Field, w: &mut W) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_u64::<LittleEndian>(field.mesh_id)?;
    w.write_u64::<LittleEndian>(field.values.len() as u64)?;
    for &v in &field.values {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

/// Reads a field written by [`write_field`] and checks it belongs to `mesh`.
pub fn read_field<R: Read>(mesh: &Mesh, r: &mut R) -> Result<Field> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(TodaError::Format("not a field file".into()));
    }
    let id = r.read_u64::<LittleEndian>()?;
    if id != mesh.fingerprint() {
        return Err(TodaError::MeshMismatch { expected: mesh.fingerprint(), found: id });
    }
    let n = r.read_u64::<LittleEndian>()? as usize;
    if n != mesh.num_vertices() {
        return Err(TodaError::Format("field length does not match mesh".into()));
    }
    let values = (0..n).map(|_| r.read_f64::<LittleEndian>()).collect::<std::io::Result<Vec<_>>>()?;
    Field::new(mesh, values)
}

/// CSV with vertex coordinates, mass and the given named columns.
pub fn write_csv<W: Write>(mesh: &Mesh, columns: &[(&str, &[f64])], w: &mut W) -> Result<()> {
    write!(w, "vertex,x,y,z,mass")?;
    for (name, col) in columns {
        if col.len() != mesh.num_vertices() {
            return Err(TodaError::Domain(format!("column {name} has wrong length")));
        }
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for (k, p) in mesh.points().iter().enumerate() {
        write!(w, "{k},{},{},{},{}", p[0], p[1], p[2], mesh.mass()[k])?;
        for (_, col) in columns {
            write!(w, ",{}", col[k])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
