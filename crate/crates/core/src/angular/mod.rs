//! Angular quadrature: Lebedev tables, real harmonics and reduced rules.

mod harmonics;
mod lebedev;
mod quadrature;
mod reduced;

pub use harmonics::{
    angles_of, harmonics_at, harmonics_up_to, real_spherical_harmonic, HarmonicIndex,
};
pub use lebedev::{available_lebedev_counts, lebedev};
pub(crate) use quadrature::same_node as quadrature_same_node;
pub use quadrature::{discrete_moment, AngularQuadrature, Provenance};
pub use reduced::{
    exactness_defect, ls_quadrature_weights, nonneg_reduced_quadrature, LsWeights, PINV_CUTOFF,
};
