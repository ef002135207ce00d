//! Local Lindbladian models on lattice regions.

pub mod family;
pub mod profile;
pub mod spec;
pub mod term;

pub use family::{
    apply_perturbation, apply_perturbation_liouvillian, probe_contractivity, strength_estimate, BoundaryAudit,
    BoundaryCondition, BoundaryRule, BulkRule, ContractivityProbe, Perturbation, Strength, StrengthEstimate,
    UniformFamily, DEFAULT_PROBE_TIMES,
};
pub use profile::{fit_profile, DecayProfile, ProfileFit};
pub use spec::{parse_model, FamilySpec, ModelSpec, PerturbationSpec, TermSpec};
pub use term::{sum_liouvillian, sum_superop, LocalTerm, TermGenerator};
