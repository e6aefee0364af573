//! Finite fractal sets in `Z_p^n`, the restricted projections `Pi_t`, Frostman constants,
//! exceptional-set sweeps, tube families and the map `xi_r`.

mod dynamics;
mod exceptional;
mod experiment;
mod fractal;
mod tubes;

pub use dynamics::{ad_check, adjoint_entry, xi_map};
pub use exceptional::{
    default_threshold_exponent, exceptional_sets, ExceptionalParams, ExceptionalRecord, TCell,
    Threshold,
};
pub use experiment::{
    run_projection_experiment, scale_exponent, GeneratorConfig, ProjectionConfig, ProjectionOutputs,
};
pub use fractal::{
    c_alpha, frostman_constant, nu_t_masses, project, projection_matrix, pushforward_counts,
    BallMass, FiniteFractalSet, FrostmanReport, Generator, ProjectionKernel, ScaleProfile,
    MAX_POINTS,
};
pub use tubes::{
    kakeya_experiment, tube_family, KakeyaParams, KakeyaRow, Tube, TubeFamily, TubeGeometryReport,
};
