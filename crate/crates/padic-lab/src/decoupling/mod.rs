//! Caps, anisotropic boxes and function tuples; decoupling ratios and their lower-bound search;
//! the lemma harness; Whitney squares and bilinear ratios; cone regions with their rescaling
//! operators; and log-space evaluation of the explicit constants.

mod bilinear;
mod boxes;
mod caps;
mod cone;
mod constants;
mod exponents;
mod harness;
mod ratio;
mod whitney;

pub use bilinear::{
    bilinear_ratio, bilinear_ratio_unchecked, check_separation, holder_bound, holder_chain,
    mixed_integral, symmetric_bilinear_ratio, HolderChainCheck,
};
pub use boxes::{containment_sweep, AnisotropicBox, BoxVariant, ContainmentReport};
pub use caps::{Cap, CapSystem, FunctionTuple, CERTIFICATION_TOLERANCE};
pub use cone::{
    classify_coordinates, cone_classify, in_class, in_omega_j, in_slice, is_adapted,
    rescaled_gamma_check, rescaled_gamma_sides, rescaling_op, sample_omega_coordinates, ConeCell,
    ConeClass, ConeRegionSpec, RescaleKind, RescaleParams, RescaleStep,
};
pub use constants::{
    constant_evaluator, vino_threshold_lnln, ConstantKind, ConstantParams, ConstantValue,
    CONSTANT_PRECISION,
};
pub use exponents::DecouplingExponents;
pub use harness::{
    lemma_harness, random_partition, resample_spectrum, run_harness, HarnessInstance, LemmaId,
    VerificationRecord, IDENTITY_TOLERANCE,
};
pub use ratio::{
    decoupling_ratio, estimate, flat_bound, sample_spectra, sample_tuple, trial_rng,
    DecouplingEstimate, Strategy,
};
pub use whitney::{
    whitney_check, whitney_count, whitney_count_literal, whitney_decomposition, WhitneyFamily,
    WhitneyReport, WhitneySquare,
};
