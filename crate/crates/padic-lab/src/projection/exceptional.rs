use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{invalid, Result};

use super::fractal::{c_alpha, FiniteFractalSet, ProjectionKernel};

/// `s = alpha - 2 eps0` with `eps0 = 10^{10n} sqrt(2 eps)`.
pub fn default_threshold_exponent(n: usize, alpha: f64, eps: f64) -> f64 {
    alpha - 2.0 * 10f64.powi(10 * n as i32) * (2.0 * eps).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// `c_alpha^{b0}(nu) b^s`.
    Exponent(f64),
    /// A fixed mass, independent of `b`.
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalParams {
    pub m: usize,
    pub alpha: f64,
    pub eps: f64,
    /// `b0 = p^-k0`.
    pub k0: u32,
    /// Defaults to `Exponent(default_threshold_exponent(..))`.
    pub threshold: Option<Threshold>,
    /// A `t`-cell is bad when its bad mass exceeds this level; defaults to `b^eps`.
    pub bad_t_level: Option<f64>,
}

impl ExceptionalParams {
    pub fn new(m: usize, alpha: f64, eps: f64, k0: u32) -> Self {
        Self {
            m,
            alpha,
            eps,
            k0,
            threshold: None,
            bad_t_level: None,
        }
    }

    pub fn threshold_for(&self, n: usize) -> Threshold {
        self.threshold
            .unwrap_or(Threshold::Exponent(default_threshold_exponent(
                n, self.alpha, self.eps,
            )))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TCell {
    pub t: u64,
    /// `nu(F_{b,t}^bad)`.
    pub bad_mass: Ratio<u64>,
    pub bad: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalRecord {
    pub k: u32,
    pub b: f64,
    pub ln_c_alpha: f64,
    /// Log of the ball-mass threshold at this `b`.
    pub ln_threshold: f64,
    pub bad_t_level: f64,
    pub cells: Vec<TCell>,
}

impl ExceptionalRecord {
    /// Fraction of the `p^k` cells of `t` that are bad (Haar measure of the bad `t`).
    pub fn bad_t_fraction(&self) -> Ratio<u64> {
        Ratio::new(
            self.cells.iter().filter(|c| c.bad).count() as u64,
            self.cells.len() as u64,
        )
    }

    /// The `t` with the largest bad mass, the smallest such `t` on ties.
    pub fn worst(&self) -> &TCell {
        self.cells.iter().fold(
            &self.cells[0],
            |w, c| if c.bad_mass > w.bad_mass { c } else { w },
        )
    }

    /// Mean over `t` of `nu(F_{b,t}^bad)`, the product-measure mass of the bad pairs `(t, w)`.
    pub fn bad_w_fraction(&self) -> Ratio<u64> {
        let sum = self
            .cells
            .iter()
            .fold(Ratio::new(0, 1), |acc, c| acc + c.bad_mass);
        sum / self.cells.len() as u64
    }
}

/// For `b = p^-k` and every `t` in `[0, p^k)` computes
/// `F_{b,t}^bad = {w in F : nu_t(B(Pi_t w, b)) > threshold}`. Ball masses are exact counts; only
/// the comparison with the threshold happens in floating point, in log space.
pub fn exceptional_sets(
    f: &FiniteFractalSet,
    par: &ExceptionalParams,
    k: u32,
) -> Result<ExceptionalRecord> {
    if f.is_empty() {
        return invalid("exceptional sets of an empty set");
    }
    if k > f.depth() {
        return invalid(format!(
            "scale p^-{k} is finer than the set's depth {}",
            f.depth()
        ));
    }
    let p = f.prime();
    let lnb = -(k as f64) * (p as f64).ln();
    let c = c_alpha(f, par.alpha, par.k0)?;
    let ln_threshold = match par.threshold_for(f.dim()) {
        Threshold::Exponent(s) => c.ln_constant + s * lnb,
        Threshold::Value(v) if v > 0.0 => v.ln(),
        Threshold::Value(v) => return invalid(format!("threshold value {v} must be positive")),
    };
    let bad_t_level = par.bad_t_level.unwrap_or((par.eps * lnb).exp());
    let total = f.len() as u64;
    let ln_total = (total as f64).ln();
    let cells = (0..p.pow(k))
        .into_par_iter()
        .map(|t| {
            let ker = ProjectionKernel::new(p, f.dim(), par.m, t, k)?;
            let images: Vec<Vec<u64>> = f.points().iter().map(|x| ker.apply(x)).collect();
            let mut counts = std::collections::HashMap::new();
            for y in &images {
                *counts.entry(y.as_slice()).or_insert(0u64) += 1;
            }
            let bad = images
                .iter()
                .filter(|y| (counts[y.as_slice()] as f64).ln() - ln_total > ln_threshold)
                .count() as u64;
            let bad_mass = Ratio::new(bad, total);
            Ok(TCell {
                t,
                bad_mass,
                bad: (bad as f64) / (total as f64) > bad_t_level,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExceptionalRecord {
        k,
        b: lnb.exp(),
        ln_c_alpha: c.ln_constant,
        ln_threshold,
        bad_t_level,
        cells,
    })
}
