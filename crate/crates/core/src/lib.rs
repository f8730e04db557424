pub mod concentration;
pub mod error;
pub mod fields;
pub mod functional;
pub mod geometry;
pub mod inequality;
pub mod linalg;
pub mod solver;
pub mod testfamily;

pub use concentration::{ConcentrationConfig, ConePoint};
pub use error::{Result, TodaError};
pub use fields::{Density, Field};
pub use functional::TodaParams;
pub use geometry::{Mesh, Point, Surface};
pub use solver::{SolverConfig, SolverRun};
pub use testfamily::{TestParams, XnuConfig};
