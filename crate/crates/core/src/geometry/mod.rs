//! Sphere and flat torus of unit area, their meshes and closed-form metric data.

mod cache;
mod index;
mod mesh;
mod surface;

pub use cache::{cache_path, load_or_build, read_mesh, write_mesh};
pub use index::VertexGrid;
pub use mesh::{torus_side, Mesh, MAX_LEVEL};
pub use surface::{add3, cross3, dot3, norm3, scale3, sub3, Isometry, Point, Surface, Tangent, SPHERE_RADIUS};
