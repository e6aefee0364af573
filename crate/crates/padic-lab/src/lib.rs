//! A laboratory for p-adic harmonic analysis: exact Q_p arithmetic, the moment
//! curve and its frames, a finite Fourier transform on Q_p^n, decoupling ratio
//! measurements, Vinogradov counting, and restricted projection experiments.

pub mod curves;
pub mod decoupling;
pub mod error;
pub mod fourier;
pub mod padic;
pub mod projection;
pub mod vinogradov;

pub use error::{LabError, Result};
