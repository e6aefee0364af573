use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::padic::{is_prime, PadicContext, PadicMatrix, PadicScalar, PadicVector};

pub const DEFAULT_CELL_BUDGET: usize = 1 << 24;

static CELL_BUDGET: AtomicUsize = AtomicUsize::new(DEFAULT_CELL_BUDGET);

/// Largest array (in cells) any lattice function may allocate.
pub fn cell_budget() -> usize {
    CELL_BUDGET.load(Ordering::Relaxed)
}

pub fn set_cell_budget(cells: usize) {
    CELL_BUDGET.store(cells, Ordering::Relaxed);
}

/// Number of cells `p^{n(a+b)}`, checked against the budget.
pub fn checked_cells(p: u64, n: usize, a: u32, b: u32) -> Result<usize> {
    let budget = cell_budget();
    let side = (p as u128).checked_pow(a + b);
    let total = side.and_then(|s| s.checked_pow(n as u32));
    match total {
        Some(t) if t <= budget as u128 => Ok(t as usize),
        _ => Err(LabError::BudgetExceeded(format!(
            "p^(n(a+b)) = {p}^({n}*{}) cells exceeds the budget of {budget}",
            a + b
        ))),
    }
}

/// A Schwartz-Bruhat function on `Q_p^n` supported in `p^{-a} Z_p^n` and constant on
/// cosets of `p^b Z_p^n`. Entry `k` (row-major, first coordinate slowest) is the value at
/// `x = p^{-a} k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "Wire", try_from = "Wire")]
pub struct LatticeFunction {
    p: u64,
    n: usize,
    a: u32,
    b: u32,
    side: usize,
    values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    p: u64,
    n: usize,
    a: u32,
    b: u32,
    values: Vec<[f64; 2]>,
}

impl From<LatticeFunction> for Wire {
    fn from(f: LatticeFunction) -> Self {
        Wire {
            p: f.p,
            n: f.n,
            a: f.a,
            b: f.b,
            values: f.values.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<Wire> for LatticeFunction {
    type Error = LabError;
    fn try_from(w: Wire) -> Result<Self> {
        let values = w
            .values
            .iter()
            .map(|v| Complex64::new(v[0], v[1]))
            .collect();
        LatticeFunction::from_values(w.p, w.n, w.a, w.b, values)
    }
}

impl LatticeFunction {
    pub fn zeros(p: u64, n: usize, a: u32, b: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(LabError::NotPrime(p));
        }
        if n == 0 {
            return invalid("dimension must be positive");
        }
        let total = checked_cells(p, n, a, b)?;
        let side = p.pow(a + b) as usize;
        Ok(Self {
            p,
            n,
            a,
            b,
            side,
            values: vec![Complex64::new(0.0, 0.0); total],
        })
    }

    pub fn from_values(p: u64, n: usize, a: u32, b: u32, values: Vec<Complex64>) -> Result<Self> {
        let mut f = Self::zeros(p, n, a, b)?;
        if values.len() != f.values.len() {
            return Err(LabError::Dimension(format!(
                "expected {} values, got {}",
                f.values.len(),
                values.len()
            )));
        }
        f.values = values;
        Ok(f)
    }

    /// Values from a closure on the integer index `k` (the point is `p^{-a} k`).
    pub fn from_index_fn(
        p: u64,
        n: usize,
        a: u32,
        b: u32,
        mut f: impl FnMut(&[u64]) -> Complex64,
    ) -> Result<Self> {
        let mut out = Self::zeros(p, n, a, b)?;
        let mut k = vec![0u64; n];
        for flat in 0..out.values.len() {
            out.unflatten_into(flat, &mut k);
            out.values[flat] = f(&k);
        }
        Ok(out)
    }

    /// Values from a closure on cell representatives, as p-adic vectors.
    pub fn from_point_fn(
        ctx: PadicContext,
        n: usize,
        a: u32,
        b: u32,
        mut f: impl FnMut(&PadicVector) -> Complex64,
    ) -> Result<Self> {
        let mut out = Self::zeros(ctx.p, n, a, b)?;
        let mut k = vec![0u64; n];
        for flat in 0..out.values.len() {
            out.unflatten_into(flat, &mut k);
            let x = out.point_of(ctx, &k);
            out.values[flat] = f(&x);
        }
        Ok(out)
    }

    /// Indicator of `v + M Z_p^n`. The set must lie in `p^{-a} Z_p^n` and be a union of
    /// `p^b`-cells; both are checked.
    pub fn indicator_coset(
        ctx: PadicContext,
        a: u32,
        b: u32,
        v: &PadicVector,
        m: &PadicMatrix,
    ) -> Result<Self> {
        let n = v.dim();
        let minv = m.inverse()?;
        let fine = matrix_min_valuation(&minv);
        if fine + (b as i64) < 0 {
            return invalid(format!(
                "coset is finer than the p^{b} cells (needs b >= {})",
                -fine
            ));
        }
        let coarse = matrix_min_valuation(m).min(v.min_valuation().unwrap_or(i64::MAX));
        if coarse < -(a as i64) {
            return invalid(format!(
                "coset leaves p^-{a} Z_p^n (needs a >= {})",
                -coarse
            ));
        }
        Self::from_point_fn(ctx, n, a, b, |x| {
            let y = minv.mul_vec(&x.sub(v));
            if y.iter().all(|e| e.is_integral()) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `1_{p^k Z_p^n}`, needs `-a <= k <= b`.
    pub fn ball_indicator(p: u64, n: usize, a: u32, b: u32, k: i64) -> Result<Self> {
        if k < -(a as i64) || k > b as i64 {
            return invalid(format!(
                "ball p^{k} Z_p^n does not fit the grid (a = {a}, b = {b})"
            ));
        }
        let step = p.pow((k + a as i64) as u32);
        Self::from_index_fn(p, n, a, b, |idx| {
            if idx.iter().all(|&c| c % step == 0) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Support exponent: `supp f ⊆ p^{-a} Z_p^n`.
    pub fn a(&self) -> u32 {
        self.a
    }

    /// Constancy exponent: `f` is constant on `p^b Z_p^n`-cosets.
    pub fn b(&self) -> u32 {
        self.b
    }

    /// Side length `p^{a+b}` of the index cube.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Haar measure of one cell, `p^{-nb}`.
    pub fn cell_measure(&self) -> f64 {
        (self.p as f64).powi(-((self.n as u32 * self.b) as i32))
    }

    pub fn flatten(&self, k: &[u64]) -> usize {
        k.iter()
            .fold(0usize, |acc, &c| acc * self.side + (c as usize % self.side))
    }

    pub fn unflatten(&self, flat: usize) -> Vec<u64> {
        let mut k = vec![0u64; self.n];
        self.unflatten_into(flat, &mut k);
        k
    }

    fn unflatten_into(&self, mut flat: usize, k: &mut [u64]) {
        for c in k.iter_mut().rev() {
            *c = (flat % self.side) as u64;
            flat /= self.side;
        }
    }

    /// The cell representative `p^{-a} k`.
    pub fn point_of(&self, ctx: PadicContext, k: &[u64]) -> PadicVector {
        let s = ctx.p_power(-(self.a as i64));
        PadicVector::new(ctx, k.iter().map(|&c| &s * &ctx.int(c as i64)).collect())
    }

    /// Index of the cell containing `x`, or `None` when `x` lies outside `p^{-a} Z_p^n`.
    pub fn index_of(&self, x: &PadicVector) -> Result<Option<usize>> {
        if x.dim() != self.n {
            return Err(LabError::Dimension(format!(
                "point has dimension {}, function {}",
                x.dim(),
                self.n
            )));
        }
        let ctx = x.context();
        let scale = ctx.p_power(self.a as i64);
        let mut k = Vec::with_capacity(self.n);
        for e in x.iter() {
            let y = e * &scale;
            if !y.is_integral() {
                return Ok(None);
            }
            k.push(y.residue_u64(self.a + self.b)?);
        }
        Ok(Some(self.flatten(&k)))
    }

    pub fn value_at(&self, x: &PadicVector) -> Result<Complex64> {
        Ok(self
            .index_of(x)?
            .map_or(Complex64::new(0.0, 0.0), |i| self.values[i]))
    }

    /// The same function on a finer grid `(a2, b2)` with `a2 >= a`, `b2 >= b`.
    pub fn refine(&self, a2: u32, b2: u32) -> Result<Self> {
        if a2 < self.a || b2 < self.b {
            return invalid(format!(
                "cannot refine ({}, {}) to ({a2}, {b2})",
                self.a, self.b
            ));
        }
        if a2 == self.a && b2 == self.b {
            return Ok(self.clone());
        }
        let step = self.p.pow(a2 - self.a);
        let side = self.side as u64;
        let mut old = vec![0u64; self.n];
        Self::from_index_fn(self.p, self.n, a2, b2, |k| {
            if k.iter().any(|&c| c % step != 0) {
                return Complex64::new(0.0, 0.0);
            }
            for (o, &c) in old.iter_mut().zip(k) {
                *o = (c / step) % side;
            }
            self.values[self.flatten(&old)]
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(LabError::PrimeMismatch(self.p, other.p));
        }
        if self.n != other.n {
            return Err(LabError::Dimension(format!(
                "dimensions {} and {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    /// Both functions on the common grid `(max a, max b)`.
    pub fn align(&self, other: &Self) -> Result<(Self, Self)> {
        self.check_compatible(other)?;
        let a = self.a.max(other.a);
        let b = self.b.max(other.b);
        Ok((self.refine(a, b)?, other.refine(a, b)?))
    }

    fn zip_with(
        &self,
        other: &Self,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        let (mut f, g) = self.align(other)?;
        for (x, y) in f.values.iter_mut().zip(&g.values) {
            *x = op(*x, *y);
        }
        Ok(f)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x * y)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut f = self.clone();
        f.values.iter_mut().for_each(|x| *x *= c);
        f
    }

    pub fn conj(&self) -> Self {
        let mut f = self.clone();
        f.values.iter_mut().for_each(|x| *x = x.conj());
        f
    }

    /// `x -> chi(x . v) f(x)`. Needs `v ∈ p^{-b} Z_p^n` so the result stays `p^b`-constant.
    pub fn modulate(&self, v: &PadicVector) -> Result<Self> {
        if v.dim() != self.n {
            return Err(LabError::Dimension(format!(
                "frequency has dimension {}, function {}",
                v.dim(),
                self.n
            )));
        }
        if v.min_valuation().is_some_and(|m| m < -(self.b as i64)) {
            return invalid(format!("modulation frequency leaves p^-{} Z_p^n", self.b));
        }
        // x . v = p^{-(a+b)} sum k_i r_i with r_i = p^b v_i mod p^{a+b}
        let s = v.context().p_power(self.b as i64);
        let r: Vec<u64> = v
            .iter()
            .map(|e| (e * &s).residue_u64(self.a + self.b))
            .collect::<Result<_>>()?;
        let table = roots_of_unity(self.side);
        let side = self.side as u128;
        let mut f = self.clone();
        let mut k = vec![0u64; self.n];
        for flat in 0..f.values.len() {
            self.unflatten_into(flat, &mut k);
            let ph = k
                .iter()
                .zip(&r)
                .fold(0u128, |acc, (&x, &y)| (acc + x as u128 * y as u128) % side);
            f.values[flat] *= table[ph as usize];
        }
        Ok(f)
    }

    /// `(x, y) -> f(x) g(y)` on `Q_p^{n+m}`, on the common grid `(max a, max b)`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.p != other.p {
            return Err(LabError::PrimeMismatch(self.p, other.p));
        }
        let (a, b) = (self.a.max(other.a), self.b.max(other.b));
        let (f, g) = (self.refine(a, b)?, other.refine(a, b)?);
        let mut out = Self::zeros(self.p, self.n + other.n, a, b)?;
        let glen = g.values.len();
        for (i, x) in f.values.iter().enumerate() {
            for (j, y) in g.values.iter().enumerate() {
                out.values[i * glen + j] = x * y;
            }
        }
        Ok(out)
    }

    /// Largest entrywise difference after aligning grids.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.values.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Indices of cells with `|value| > tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i].norm() > tol)
            .collect()
    }
}

/// `exp(2 pi i r / m)` for `r in [0, m)`, each from the exact fraction `r/m`.
pub fn roots_of_unity(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|r| {
            let (s, c) = (std::f64::consts::TAU * (r as f64 / m as f64)).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

pub(crate) fn matrix_min_valuation(m: &PadicMatrix) -> i64 {
    let mut best = i64::MAX;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if let Some(v) = m.get(i, j).valuation() {
                best = best.min(v);
            }
        }
    }
    best
}

/// `chi(x) = exp(2 pi i {x}_p)`.
pub fn character(x: &PadicScalar) -> Complex64 {
    use num_traits::ToPrimitive;
    let frac = x.fractional_part().to_f64().unwrap_or(0.0);
    let (s, c) = (std::f64::consts::TAU * frac).sin_cos();
    Complex64::new(c, s)
}
