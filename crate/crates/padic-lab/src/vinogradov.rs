//! Exact counts of solutions to the Vinogradov system, the explicit upper bound for them, and
//! the Fourier-moment identity that ties the count to wave packets on the moment curve.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::curves::moment_curve_eval;
use crate::decoupling::{constant_evaluator, vino_threshold_lnln, ConstantKind, ConstantParams};
use crate::error::{invalid, LabError, Result};
use crate::fourier::{character, lq_norm, LatticeFunction};
use crate::padic::PadicContext;

/// Default cap on the number of `s`-multisets enumerated for one table.
pub const DEFAULT_TABLE_BUDGET: u64 = 200_000_000;

/// `J_{s,n}(N)`: pairs `a, b` in `[N]^s` with equal power sums of degrees `1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VinoInstance {
    pub s: u32,
    pub n: u32,
    pub big_n: u64,
}

impl VinoInstance {
    pub fn new(s: u32, n: u32, big_n: u64) -> Result<Self> {
        if s == 0 || n == 0 || big_n == 0 {
            return invalid(format!(
                "need s, n, N >= 1, got s = {s}, n = {n}, N = {big_n}"
            ));
        }
        Ok(Self { s, n, big_n })
    }

    /// Largest power sum in each degree, `s N^d`, or `None` on `u128` overflow.
    fn max_sums(&self) -> Option<Vec<u128>> {
        (1..=self.n)
            .map(|d| {
                (self.big_n as u128)
                    .checked_pow(d)
                    .and_then(|x| x.checked_mul(self.s as u128))
            })
            .collect()
    }

    /// Number of multisets of size `s` from `[N]`, `C(N + s - 1, s)`.
    pub fn multiset_count(&self) -> Option<u128> {
        let mut c: u128 = 1;
        for i in 0..self.s as u128 {
            c = c.checked_mul(self.big_n as u128 + i)? / (i + 1);
        }
        Some(c)
    }

    /// Rough peak memory of the table in bytes: one entry per multiset in the worst case.
    pub fn memory_estimate(&self) -> Option<u128> {
        let entry = if self.packed_bits().is_some_and(|b| b <= 128) {
            48
        } else {
            48 + 16 * self.n as u128
        };
        self.multiset_count()?.checked_mul(entry)
    }

    fn packed_bits(&self) -> Option<u32> {
        let maxes = self.max_sums()?;
        Some(maxes.iter().map(|m| 128 - m.leading_zeros()).sum())
    }
}

/// Power-sum vector of one tuple, packed into a single word when the degrees fit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Packed(u128),
    Wide(Vec<u128>),
}

struct KeyLayout {
    shifts: Option<Vec<u32>>,
}

impl KeyLayout {
    fn new(inst: &VinoInstance) -> Result<Self> {
        let maxes = inst.max_sums().ok_or_else(|| {
            LabError::BudgetExceeded(format!(
                "power sums s N^n overflow 128 bits at s = {}, n = {}, N = {}",
                inst.s, inst.n, inst.big_n
            ))
        })?;
        let widths: Vec<u32> = maxes.iter().map(|m| 128 - m.leading_zeros()).collect();
        let shifts = if widths.iter().sum::<u32>() <= 128 {
            let mut acc = 0;
            Some(
                widths
                    .iter()
                    .map(|w| {
                        let s = acc;
                        acc += w;
                        s
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self { shifts })
    }

    fn key(&self, sums: &[u128]) -> Key {
        match &self.shifts {
            Some(sh) => Key::Packed(
                sums.iter()
                    .zip(sh)
                    .fold(0u128, |acc, (x, s)| acc | (x << s)),
            ),
            None => Key::Wide(sums.to_vec()),
        }
    }
}

fn factorial(k: u32) -> u128 {
    (1..=k as u128).product()
}

/// Visits every nondecreasing tuple in `[lo, N]^len` extending `prefix`, accumulating power sums.
#[allow(clippy::too_many_arguments)]
fn walk(
    inst: &VinoInstance,
    layout: &KeyLayout,
    lo: u64,
    left: u32,
    sums: &mut Vec<u128>,
    run: u32,
    weight_den: u128,
    table: &mut HashMap<Key, u128>,
) {
    if left == 0 {
        let den = weight_den * factorial(run);
        *table.entry(layout.key(sums)).or_insert(0) += factorial(inst.s) / den;
        return;
    }
    for a in lo..=inst.big_n {
        let mut pw = 1u128;
        for d in 0..inst.n as usize {
            pw *= a as u128;
            sums[d] += pw;
        }
        // runs of equal entries give the multinomial weight s! / prod(mult!)
        let (run2, den2) = if a == lo && run > 0 {
            (run + 1, weight_den)
        } else {
            (1, weight_den * factorial(run))
        };
        walk(inst, layout, a, left - 1, sums, run2, den2, table);
        let mut pw = 1u128;
        for d in 0..inst.n as usize {
            pw *= a as u128;
            sums[d] -= pw;
        }
    }
}

fn merge_tables(a: HashMap<Key, u128>, b: HashMap<Key, u128>) -> HashMap<Key, u128> {
    let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    for (k, v) in small {
        *big.entry(k).or_insert(0) += v;
    }
    big
}

/// `J_{s,n}(N) = sum_v m(v)^2`, where `m(v)` counts ordered `s`-tuples with power-sum vector `v`.
/// Multisets are enumerated once and weighted by their number of orderings; the first entry is
/// split across workers.
pub fn count_solutions(inst: &VinoInstance) -> Result<u128> {
    count_solutions_with_budget(inst, DEFAULT_TABLE_BUDGET)
}

pub fn count_solutions_with_budget(inst: &VinoInstance, budget: u64) -> Result<u128> {
    inst.multiset_count()
        .filter(|&c| c <= budget as u128)
        .ok_or_else(|| {
            LabError::BudgetExceeded(format!(
                "J_{{{},{}}}({}) needs {} multisets (about {} bytes), budget is {budget}",
                inst.s,
                inst.n,
                inst.big_n,
                inst.multiset_count()
                    .map_or("more than 2^128".into(), |c| c.to_string()),
                inst.memory_estimate()
                    .map_or("more than 2^128".into(), |c| c.to_string()),
            ))
        })?;
    let layout = KeyLayout::new(inst)?;
    let merged = (1..=inst.big_n)
        .into_par_iter()
        .fold(HashMap::new, |mut table, first| {
            let mut sums = vec![0u128; inst.n as usize];
            let mut pw = 1u128;
            for d in 0..inst.n as usize {
                pw *= first as u128;
                sums[d] += pw;
            }
            walk(
                inst,
                &layout,
                first,
                inst.s - 1,
                &mut sums,
                1,
                1,
                &mut table,
            );
            table
        })
        .reduce(HashMap::new, merge_tables);
    let mut total: u128 = 0;
    for m in merged.values() {
        total = m
            .checked_mul(*m)
            .and_then(|x| total.checked_add(x))
            .ok_or_else(|| LabError::BudgetExceeded("solution count overflows 128 bits".into()))?;
    }
    Ok(total)
}

/// Direct enumeration of all `(a, b)` in `[N]^{2s}`.
pub fn count_solutions_naive(inst: &VinoInstance) -> Result<u128> {
    let total = (inst.big_n as u128)
        .checked_pow(2 * inst.s)
        .filter(|&t| t <= 1 << 32)
        .ok_or_else(|| {
            LabError::BudgetExceeded(format!(
                "naive enumeration of N^(2s) = {}^{} tuples",
                inst.big_n,
                2 * inst.s
            ))
        })?;
    let len = 2 * inst.s as usize;
    let count = (0..total as u64)
        .into_par_iter()
        .filter(|&code| {
            let mut c = code;
            let mut xs = vec![0u64; len];
            for x in xs.iter_mut() {
                *x = c % inst.big_n + 1;
                c /= inst.big_n;
            }
            (1..=inst.n).all(|d| {
                let lhs: u128 = xs[..inst.s as usize]
                    .iter()
                    .map(|&a| (a as u128).pow(d))
                    .sum();
                let rhs: u128 = xs[inst.s as usize..]
                    .iter()
                    .map(|&b| (b as u128).pow(d))
                    .sum();
                lhs == rhs
            })
        })
        .count();
    Ok(count as u128)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VinoBoundReport {
    /// Natural log of the bound.
    pub ln_bound: f64,
    /// `N < exp(exp(3n(4n log n + 1)))`, where the bound is not claimed.
    pub below_threshold: bool,
}

/// The explicit bound for `J_{s,n}(N)` in log space.
pub fn bound_value(inst: &VinoInstance) -> Result<VinoBoundReport> {
    bound_value_ln(inst.s, inst.n, (inst.big_n as f64).ln())
}

/// As [`bound_value`] with `log N` given directly.
pub fn bound_value_ln(s: u32, n: u32, ln_big_n: f64) -> Result<VinoBoundReport> {
    let par = ConstantParams {
        n,
        s,
        ln_big_n,
        ..ConstantParams::default()
    };
    let v = constant_evaluator(ConstantKind::VinoBound, &par)?;
    Ok(VinoBoundReport {
        ln_bound: v.ln,
        below_threshold: ln_big_n.ln() < vino_threshold_lnln(n),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentIdentityRecord {
    pub p: u64,
    pub l: u32,
    pub s: u32,
    pub n: u32,
    /// `||sum_a g_a||_{2s}^{2s}` on the lattice.
    pub moment: f64,
    pub count: u128,
    /// `p^{l n} J`.
    pub literal_rhs: f64,
    /// `p^{l n^2} J`, the Haar measure of `p^{-ln} Z_p^n` times the count.
    pub corrected_rhs: f64,
}

impl MomentIdentityRecord {
    pub fn literal_rel_error(&self) -> f64 {
        (self.moment - self.literal_rhs).abs() / self.literal_rhs
    }

    pub fn corrected_rel_error(&self) -> f64 {
        (self.moment - self.corrected_rhs).abs() / self.corrected_rhs
    }
}

/// Builds `g_a(x) = chi(x . gamma(a)) 1_{p^{-ln} Z_p^n}(x)` for `a = 1..=p^l`, takes the `L^{2s}`
/// moment of their sum, and sets it beside the exact count `J_{s,n}(p^l)`.
pub fn moment_identity_check(p: u64, l: u32, s: u32, n: u32) -> Result<MomentIdentityRecord> {
    if p <= n as u64 {
        return invalid(format!(
            "the moment curve needs p > n, got p = {p}, n = {n}"
        ));
    }
    if l == 0 || s == 0 {
        return invalid("need l, s >= 1");
    }
    let ctx = PadicContext::with_default_precision(p)?;
    let big_n = p
        .checked_pow(l)
        .ok_or_else(|| LabError::InvalidParameter("p^l overflows".into()))?;
    let depth = l * n;
    let points: Vec<_> = (1..=big_n)
        .map(|a| moment_curve_eval(ctx, n as usize, &ctx.int(a as i64)))
        .collect::<Result<_>>()?;
    let sum = LatticeFunction::from_point_fn(ctx, n as usize, depth, 0, |x| {
        points
            .iter()
            .map(|g| character(&x.dot(g)))
            .sum::<Complex64>()
    })?;
    let moment = lq_norm(&sum, 2.0 * s as f64)?.powi(2 * s as i32);
    let count = count_solutions(&VinoInstance::new(s, n, big_n)?)?;
    let j = count as f64;
    Ok(MomentIdentityRecord {
        p,
        l,
        s,
        n,
        moment,
        count,
        literal_rhs: (p as f64).powi(depth as i32) * j,
        corrected_rhs: (p as f64).powi((depth * n) as i32) * j,
    })
}
