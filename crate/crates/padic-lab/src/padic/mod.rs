//! Exact arithmetic in Q_p at finite precision.

mod ball;
mod linalg;
pub mod random;
mod scalar;

pub use ball::{ball_partition, cell_representatives, Ball};
pub use linalg::{PadicMatrix, PadicVector};
pub use scalar::{
    is_prime, pow_p, rational_valuation, PadicContext, PadicNorm, PadicScalar, DEFAULT_PRECISION,
};

use crate::error::Result;

pub fn padic_add(x: &PadicScalar, y: &PadicScalar) -> Result<PadicScalar> {
    x.try_add(y)
}

pub fn padic_mul(x: &PadicScalar, y: &PadicScalar) -> Result<PadicScalar> {
    x.try_mul(y)
}

pub fn padic_inv(x: &PadicScalar) -> Result<PadicScalar> {
    x.inv()
}
