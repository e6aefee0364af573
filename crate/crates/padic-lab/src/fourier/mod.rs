//! Locally constant, compactly supported functions on `Q_p^n` stored as finite arrays,
//! with the additive character, the Fourier transform, `L^q` norms, convolution and
//! frequency projections.

mod lattice;
mod region;
mod transform;

pub use lattice::{
    cell_budget, character, checked_cells, roots_of_unity, set_cell_budget, LatticeFunction,
    DEFAULT_CELL_BUDGET,
};
pub use region::FrequencyRegion;
pub use transform::{
    assert_close, convolve, fourier_support, fourier_transform, fourier_transform_direct,
    freq_restrict, inverse_fourier_transform, lq_norm,
};
