use num_bigint::BigInt;

use crate::padic::{PadicContext, PadicScalar};

/// Polynomial over Q_p, coefficients in increasing degree.
#[derive(Clone, Debug)]
pub struct Polynomial {
    ctx: PadicContext,
    coeffs: Vec<PadicScalar>,
}

impl Polynomial {
    pub fn new(ctx: PadicContext, mut coeffs: Vec<PadicScalar>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { ctx, coeffs }
    }

    pub fn zero(ctx: PadicContext) -> Self {
        Self {
            ctx,
            coeffs: Vec::new(),
        }
    }

    pub fn from_ints(ctx: PadicContext, coeffs: &[i64]) -> Self {
        Self::new(ctx, coeffs.iter().map(|&c| ctx.int(c)).collect())
    }

    /// `c * t^d`.
    pub fn monomial(ctx: PadicContext, c: PadicScalar, d: usize) -> Self {
        let mut coeffs = vec![ctx.zero(); d + 1];
        coeffs[d] = c;
        Self::new(ctx, coeffs)
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    /// Coefficient of `t^d` (zero past the degree).
    pub fn coeff(&self, d: usize) -> PadicScalar {
        self.coeffs
            .get(d)
            .cloned()
            .unwrap_or_else(|| self.ctx.zero())
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, t: &PadicScalar) -> PadicScalar {
        self.coeffs
            .iter()
            .rev()
            .fold(self.ctx.zero(), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(d, c)| c * &self.ctx.int(d as i64))
            .collect();
        Self::new(self.ctx, coeffs)
    }

    pub fn nth_derivative(&self, j: usize) -> Self {
        (0..j).fold(self.clone(), |acc, _| acc.derivative())
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            self.ctx,
            (0..len).map(|d| self.coeff(d) + other.coeff(d)).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            self.ctx,
            (0..len).map(|d| self.coeff(d) - other.coeff(d)).collect(),
        )
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        Self::new(self.ctx, self.coeffs.iter().map(|a| a * c).collect())
    }

    /// The polynomial `t -> f(theta + lambda t)`, expanded with integer binomials.
    pub fn affine_substitute(&self, theta: &PadicScalar, lambda: &PadicScalar) -> Self {
        let deg = match self.degree() {
            None => return self.clone(),
            Some(d) => d,
        };
        let mut out = vec![self.ctx.zero(); deg + 1];
        for (d, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut binom = BigInt::from(1);
            for i in 0..=d {
                let term =
                    c * &self.ctx.bigint(&binom) * theta.pow((d - i) as u32) * lambda.pow(i as u32);
                out[i] = &out[i] + &term;
                binom = binom * BigInt::from(d - i) / BigInt::from(i + 1);
            }
        }
        Self::new(self.ctx, out)
    }

    pub fn eq_padic(&self, other: &Self) -> bool {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len).all(|d| self.coeff(d).eq_padic(&other.coeff(d)))
    }
}
