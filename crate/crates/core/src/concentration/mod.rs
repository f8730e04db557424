//! Concentration scale `σ(x, f)`, mass `T(x, f)`, the set `S(f)`, the
//! barycenter and the cone-valued map `ψ`.

mod config;
mod profile;
mod scan;
mod separated;

pub use config::{annulus_cover_count, default_delta, default_tau, ConcentrationConfig};
pub use profile::MassProfile;
pub use scan::{
    analyze, barycenter, psi, psi_pair, s_set, sigma_f, sigma_x, t_mass, ConcentrationReport, ConePoint, Scanner,
};
pub use separated::{select_separated_sets, SeparatedSets, SeparationCase};

#[cfg(test)]
mod tests;
