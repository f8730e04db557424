//! Numerical margins of the Moser-Trudinger type inequalities: global,
//! local, improved, small ball and annulus.

mod checks;
mod kelvin;
mod probes;

pub use checks::{
    annulus_region, ball_annulus_pair, ball_region, cancellation, check_annulus, check_ball, check_improved,
    check_local_mt, check_mt_system, empirical_constant, enforce_boundary, region_gap, sweep, write_margin_csv,
    Boundary, Cancellation, ImprovedMode, MarginReport,
};
pub use kelvin::{annulus_exp_integral, kelvin_identity, kelvin_map, kelvin_transform, KelvinIdentity, PlanarField};
pub use probes::{probe_corpus, random_point, ProbeSpec};
