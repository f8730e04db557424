//! Parameter space of the test functions, the retraction onto its compact
//! part, and numerical checks of the scaling laws along the family.

mod params;
mod phi;
mod retract;
mod scans;
mod tnu;

pub use params::{t_tilde, TestParams, XnuConfig};
pub use phi::{phi_at, phi_pair};
pub use retract::{retract_to_xnu, retract_traced, FlowSample, Retraction};
pub use scans::{
    concentration_bounds_scan, energy_scan, integral_scaling_scan, ols_slope, write_bounds_csv, write_energy_csv,
    write_integral_csv, BoundsRow, BoundsScan, EnergyRow, EnergyScan, IntegralRow, IntegralScan, ScanGrid,
};
pub use tnu::{t_nu_map, TnuDiagnostics, TnuOutcome};
