//! Binary mesh cache: `TODAMESH`, version, kind, level, then vertex,
//! triangle, mass and stiffness blocks, all little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::mesh::Mesh;
use super::surface::Surface;
use crate::error::{Result, TodaError};
use crate::linalg::CsrMatrix;

const MAGIC: &[u8; 8] = b"TODAMESH";
const VERSION: u32 = 1;

pub fn cache_path(dir: &Path, surface: Surface, level: u32) -> PathBuf {
    dir.join(format!("{}-L{}.mesh", surface.name(), level))
}

pub fn write_mesh<W: Write>(mesh: &Mesh, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u8(match mesh.surface() {
        Surface::Sphere => 0,
        Surface::FlatTorus => 1,
    })?;
    w.write_u32::<LittleEndian>(mesh.level())?;
    w.write_u64::<LittleEndian>(mesh.num_vertices() as u64)?;
    w.write_u64::<LittleEndian>(mesh.triangles().len() as u64)?;
    for p in mesh.points() {
        for &c in p {
            w.write_f64::<LittleEndian>(c)?;
        }
    }
    for t in mesh.triangles() {
        for &v in t {
            w.write_u64::<LittleEndian>(v as u64)?;
        }
    }
    for &m in mesh.mass() {
        w.write_f64::<LittleEndian>(m)?;
    }
    let k = mesh.stiffness();
    w.write_u64::<LittleEndian>(k.nnz() as u64)?;
    for &r in k.row_ptr() {
        w.write_u64::<LittleEndian>(r as u64)?;
    }
    for &c in k.col_idx() {
        w.write_u64::<LittleEndian>(c as u64)?;
    }
    for &v in k.values() {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn read_mesh<R: Read>(r: &mut R) -> Result<Mesh> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TodaError::Format("not a mesh cache file".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(TodaError::Format(format!("unsupported mesh cache version {version}")));
    }
    let surface = match r.read_u8()? {
        0 => Surface::Sphere,
        1 => Surface::FlatTorus,
        k => return Err(TodaError::Format(format!("unknown surface tag {k}"))),
    };
    let level = r.read_u32::<LittleEndian>()?;
    let nv = read_len(r)?;
    let nt = read_len(r)?;
    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        points.push([r.read_f64::<LittleEndian>()?, r.read_f64::<LittleEndian>()?, r.read_f64::<LittleEndian>()?]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut t = [0usize; 3];
        for v in t.iter_mut() {
            *v = read_len(r)?;
            if *v >= nv {
                return Err(TodaError::Format("triangle index out of range".into()));
            }
        }
        triangles.push(t);
    }
    let mut mass = Vec::with_capacity(nv);
    for _ in 0..nv {
        mass.push(r.read_f64::<LittleEndian>()?);
    }
    let nnz = read_len(r)?;
    let row_ptr = (0..=nv).map(|_| read_len(r)).collect::<Result<Vec<_>>>()?;
    let col = (0..nnz).map(|_| read_len(r)).collect::<Result<Vec<_>>>()?;
    let val = (0..nnz).map(|_| Ok(r.read_f64::<LittleEndian>()?)).collect::<Result<Vec<_>>>()?;
    let stiffness = CsrMatrix::from_raw(nv, row_ptr, col, val)?;
    Mesh::from_cached(surface, level, points, triangles, mass, stiffness)
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let v = r.read_u64::<LittleEndian>()?;
    usize::try_from(v).map_err(|_| TodaError::Format("length overflows usize".into()))
}

/// Loads a cached mesh, rebuilding and rewriting it when absent or stale.
pub fn load_or_build(surface: Surface, level: u32, dir: Option<&Path>) -> Result<Mesh> {
    let Some(dir) = dir else {
        return Mesh::build(surface, level);
    };
    let path = cache_path(dir, surface, level);
    if let Ok(f) = File::open(&path) {
        match read_mesh(&mut BufReader::new(f)) {
            Ok(m) if m.surface() == surface && m.level() == level => return Ok(m),
            Ok(_) => log::warn!("mesh cache {} has wrong header; rebuilding", path.display()),
            Err(e) => log::warn!("mesh cache {} unreadable ({e}); rebuilding", path.display()),
        }
    }
    let mesh = Mesh::build(surface, level)?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_mesh(&mesh, &mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_mesh() {
        for surface in [Surface::Sphere, Surface::FlatTorus] {
            let m = Mesh::build(surface, 1).unwrap();
            let mut buf = Vec::new();
            write_mesh(&m, &mut buf).unwrap();
            let back = read_mesh(&mut buf.as_slice()).unwrap();
            assert_eq!(back.fingerprint(), m.fingerprint());
            assert_eq!(back.mass(), m.mass());
            assert_eq!(back.stiffness(), m.stiffness());
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_mesh(&mut &b"NOTAMESH\x01\0\0\0"[..]), Err(TodaError::Format(_))));
        let m = Mesh::build(Surface::Sphere, 0).unwrap();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        buf.truncate(buf.len() - 5);
        assert!(read_mesh(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn load_or_build_writes_then_reads() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_or_build(Surface::FlatTorus, 0, Some(dir.path())).unwrap();
        assert!(cache_path(dir.path(), Surface::FlatTorus, 0).exists());
        let b = load_or_build(Surface::FlatTorus, 0, Some(dir.path())).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
