use crate::error::{invalid, Result};

/// `q_k = k(k+1)` and the cone exponents `D_k = (k(k+1)+2)/2` for the moment curve in `Q_p^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecouplingExponents {
    pub n: usize,
}

impl DecouplingExponents {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self { n })
    }

    /// `q_k = k(k+1)`, defined for every `k <= n`.
    pub fn q(&self, k: usize) -> Result<u64> {
        if k > self.n {
            return invalid(format!("q_k needs k <= n = {}, got {k}", self.n));
        }
        Ok((k * (k + 1)) as u64)
    }

    pub fn q_n(&self) -> u64 {
        (self.n * (self.n + 1)) as u64
    }

    pub fn frak_d(&self, k: usize) -> Result<f64> {
        if k > self.n {
            return invalid(format!("D_k needs k <= n = {}, got {k}", self.n));
        }
        Ok((k * (k + 1) + 2) as f64 / 2.0)
    }
}
