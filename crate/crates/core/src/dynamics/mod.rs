//! Semigroups, spectral projectors, fixed points and contraction.

pub mod contraction;
pub mod grm;
pub mod locality;
pub mod propagate;
pub mod spectral;

pub use contraction::{contraction, local_contraction, maximize_trace_distance, mixing_time, ContractionEstimate, Reduction};
pub use grm::{fit_grm, grm_samples, GrmFit, GrmSample};
pub use locality::{commutator_growth, localization_error};
pub use propagate::{propagate, propagate_grid, relaxed_state, Picture, Semigroup};
pub use spectral::{
    asymptotic_projectors, eigenvalues, fixed_point, spectral_gap, spectral_gap_of_matrix,
    stationary_dimension, AsymptoticProjectors, CLASSIFY_TOL,
};
