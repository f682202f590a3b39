//! Entanglement of identical particles in first quantization.
//!
//! States are built from single-particle kets, symmetrized (or
//! antisymmetrized) and stored in an occupation basis. Amplitudes come from
//! matrix permanents, reduced states from the symmetrized partial trace, and
//! entanglement from projecting onto two spatially separated detectors.

pub mod algebra;
pub mod closed_form;
pub mod detection;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod states;
pub mod tolerance;

pub use algebra::{
    contract_single, pure_to_density, symmetrized_partial_trace, transition_amplitude, transition_amplitude_with,
    DensityMatrix, OverlapMatrix,
};
pub use detection::{
    build_detection_matrix, coherence, entanglement_from_sectors, entanglement_of_particles, project_onto_detectors,
    project_onto_detectors_with, sector_entanglement,
    theorem1_separability_check, DetectionMatrixSpec, ParticleEnsemble, Sector, SectorDecomposition,
    SeparabilityVerdict, Side,
};
pub use error::{Error, Result};
pub use linalg::{determinant, permanent, permanent_naive, permanent_ryser, ComplexMatrix, PermanentMethod};
pub use measures::{
    concurrence, concurrence_pure, label_split_coefficients, schmidt_decompose, verify_schmidt_equivalence,
    verify_schmidt_equivalence_for,
    von_neumann_entropy, Bipartition, Measure, SchmidtEquivalence, SchmidtResult,
};
pub use states::{
    expand_first_quantized, make_product_state, mode_ket, normalization_subsystem, normalization_total,
    LabeledState, ModeLabel, OccupationKey, PseudoSpin, SingleParticleKet, SpatialLabel, SpatialMode, Statistics,
    SymmetricKet,
};
pub use tolerance::Tolerances;

pub use num_complex::Complex64;
