//! Seeded samplers for p-adic test data.

use num_bigint::BigUint;
use rand::Rng;

use super::scalar::{pow_p, PadicContext, PadicScalar};

/// Uniform element of `Z_p / p^prec`, returned as a scalar (may be zero).
pub fn random_integer<R: Rng + ?Sized>(ctx: PadicContext, rng: &mut R) -> PadicScalar {
    let mut acc = BigUint::from(0u32);
    for i in 0..ctx.prec {
        let d: u64 = rng.random_range(0..ctx.p);
        acc += pow_p(ctx.p, i) * d;
    }
    ctx.bigint(&acc.into())
}

/// Uniform unit of `Z_p`.
pub fn random_unit<R: Rng + ?Sized>(ctx: PadicContext, rng: &mut R) -> PadicScalar {
    loop {
        let x = random_integer(ctx, rng);
        if x.is_unit() {
            return x;
        }
    }
}

/// Nonzero element with valuation uniform in `[vmin, vmax]`.
pub fn random_nonzero<R: Rng + ?Sized>(
    ctx: PadicContext,
    rng: &mut R,
    vmin: i64,
    vmax: i64,
) -> PadicScalar {
    let v = rng.random_range(vmin..=vmax);
    random_unit(ctx, rng) * ctx.p_power(v)
}

/// Element of `Z_p` given as a small integer in `[0, p^k)`.
pub fn random_residue<R: Rng + ?Sized>(ctx: PadicContext, rng: &mut R, k: u32) -> PadicScalar {
    let m = ctx.p.pow(k);
    ctx.int(rng.random_range(0..m) as i64)
}
