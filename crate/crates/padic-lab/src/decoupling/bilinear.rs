use num_complex::Complex64;

use crate::error::{precondition, Result};
use crate::fourier::{lq_norm, LatticeFunction};

use super::caps::FunctionTuple;
use super::exponents::DecouplingExponents;
use super::ratio::lq_power_sum;

/// Both tuples must carry curve intervals, and every interval of one must sit in a different
/// residue class mod `p` from every interval of the other.
pub fn check_separation(f: &FunctionTuple, g: &FunctionTuple) -> Result<()> {
    let classes = |t: &FunctionTuple| -> Result<Vec<u64>> {
        t.caps()
            .caps()
            .iter()
            .map(|c| match c.interval() {
                Some((center, r)) if r >= 1 && center.is_integral() => Ok(center.residue_u64(1)?),
                _ => precondition("bilinear caps need intervals of radius at most 1/p inside Z_p"),
            })
            .collect()
    };
    let (a, b) = (classes(f)?, classes(g)?);
    if a.iter().any(|x| b.contains(x)) {
        return precondition("the two tuples share a ball of radius 1/p");
    }
    Ok(())
}

/// `∫ |F|^s |G|^t` for `F = sum f`, `G = sum g`.
pub fn mixed_integral(f: &LatticeFunction, g: &LatticeFunction, s: f64, t: f64) -> Result<f64> {
    let (f, g) = f.align(g)?;
    let w = f.cell_measure();
    let total: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(x, y): (&Complex64, &Complex64)| x.norm().powf(s) * y.norm().powf(t))
        .sum();
    Ok(total * w)
}

fn split(n: usize, k: usize) -> Result<(f64, f64)> {
    let e = DecouplingExponents::new(n)?;
    Ok((e.q(k)? as f64, e.q_n() as f64))
}

/// `(∫|F|^{q_k}|G|^{q_n-q_k})^{1/q_n}` over
/// `(sum ||f||_{q_n}^2)^{q_k/(2q_n)} (sum ||g||_{q_n}^2)^{(q_n-q_k)/(2q_n)}`.
pub fn bilinear_ratio(f: &FunctionTuple, g: &FunctionTuple, n: usize, k: usize) -> Result<f64> {
    check_separation(f, g)?;
    bilinear_value(f, g, n, k)
}

fn bilinear_value(f: &FunctionTuple, g: &FunctionTuple, n: usize, k: usize) -> Result<f64> {
    let (qk, qn) = split(n, k)?;
    let num = mixed_integral(&f.sum(), &g.sum(), qk, qn - qk)?.powf(1.0 / qn);
    let sf = lq_power_sum(f.functions(), 2.0, qn)?;
    let sg = lq_power_sum(g.functions(), 2.0, qn)?;
    let den = sf.powf(qk / qn) * sg.powf((qn - qk) / qn);
    if den == 0.0 {
        return precondition("bilinear ratio of a zero tuple");
    }
    Ok(num / den)
}

/// The symmetric form, `q_n/2` on each side.
pub fn symmetric_bilinear_ratio(f: &FunctionTuple, g: &FunctionTuple, n: usize) -> Result<f64> {
    check_separation(f, g)?;
    let qn = DecouplingExponents::new(n)?.q_n() as f64;
    let h = qn / 2.0;
    let num = mixed_integral(&f.sum(), &g.sum(), h, h)?.powf(1.0 / qn);
    let den =
        lq_power_sum(f.functions(), 2.0, qn)?.sqrt() * lq_power_sum(g.functions(), 2.0, qn)?.sqrt();
    if den == 0.0 {
        return precondition("bilinear ratio of a zero tuple");
    }
    Ok(num / den)
}

/// Hölder bound for one pair: `lin(F)^{q_k/q_n} lin(G)^{(q_n-q_k)/q_n}` with the `l^2 L^{q_n}`
/// ratios of the two tuples.
pub fn holder_bound(f: &FunctionTuple, g: &FunctionTuple, n: usize, k: usize) -> Result<f64> {
    let (qk, qn) = split(n, k)?;
    let lin = |t: &FunctionTuple| -> Result<f64> {
        Ok(lq_norm(&t.sum(), qn)? / lq_power_sum(t.functions(), 2.0, qn)?)
    };
    Ok(lin(f)?.powf(qk / qn) * lin(g)?.powf((qn - qk) / qn))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderChainCheck {
    pub k: usize,
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl HolderChainCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + tol)
    }
}

/// With `theta = 1/(n-k+1)`:
/// `∫|F|^{q_k}|G|^{q_n-q_k} <= (∫|F|^{q_n-q_{n-k}}|G|^{q_{n-k}})^theta (∫|F|^{q_{k-1}}|G|^{q_n-q_{k-1}})^{1-theta}`.
pub fn holder_chain(
    f: &FunctionTuple,
    g: &FunctionTuple,
    n: usize,
    k: usize,
) -> Result<HolderChainCheck> {
    if k == 0 || k > n {
        return precondition(format!(
            "Hölder chain needs 1 <= k <= n, got k = {k}, n = {n}"
        ));
    }
    let e = DecouplingExponents::new(n)?;
    let q = |i: usize| -> Result<f64> { Ok(e.q(i)? as f64) };
    let qn = e.q_n() as f64;
    let theta = 1.0 / (n - k + 1) as f64;
    let (fs, gs) = (f.sum(), g.sum());
    let lhs = mixed_integral(&fs, &gs, q(k)?, qn - q(k)?)?;
    let top = mixed_integral(&fs, &gs, qn - q(n - k)?, q(n - k)?)?;
    let low = mixed_integral(&fs, &gs, q(k - 1)?, qn - q(k - 1)?)?;
    Ok(HolderChainCheck {
        k,
        theta,
        lhs,
        rhs: top.powf(theta) * low.powf(1.0 - theta),
    })
}

/// The ratio without the separation check, for reductions where one side is a single
/// constant cap.
pub fn bilinear_ratio_unchecked(
    f: &FunctionTuple,
    g: &FunctionTuple,
    n: usize,
    k: usize,
) -> Result<f64> {
    bilinear_value(f, g, n, k)
}
