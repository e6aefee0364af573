use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{LabError, Result};

use super::scalar::{PadicContext, PadicNorm, PadicScalar};

#[derive(Clone, Debug)]
pub struct PadicVector {
    ctx: PadicContext,
    entries: Vec<PadicScalar>,
}

impl PadicVector {
    pub fn new(ctx: PadicContext, entries: Vec<PadicScalar>) -> Self {
        debug_assert!(entries.iter().all(|e| e.prime() == ctx.p));
        Self { ctx, entries }
    }

    pub fn zeros(ctx: PadicContext, n: usize) -> Self {
        Self::new(ctx, vec![ctx.zero(); n])
    }

    pub fn from_ints(ctx: PadicContext, xs: &[i64]) -> Self {
        Self::new(ctx, xs.iter().map(|&x| ctx.int(x)).collect())
    }

    pub fn basis(ctx: PadicContext, n: usize, i: usize) -> Self {
        let mut v = Self::zeros(ctx, n);
        v.entries[i] = ctx.one();
        v
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[PadicScalar] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<PadicScalar> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PadicScalar> {
        self.entries.iter()
    }

    /// `||x|| = max_i |x_i|_p`.
    pub fn norm(&self) -> PadicNorm {
        self.entries
            .iter()
            .map(|e| e.norm())
            .max()
            .unwrap_or_else(|| PadicNorm::zero(self.ctx.p))
    }

    /// Smallest coordinate valuation, `None` when every entry is zero.
    pub fn min_valuation(&self) -> Option<i64> {
        self.entries.iter().filter_map(|e| e.valuation()).min()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(
            self.ctx,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(
            self.ctx,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        Self::new(self.ctx, self.entries.iter().map(|a| a * c).collect())
    }

    pub fn dot(&self, other: &Self) -> PadicScalar {
        assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(self.ctx.zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn eq_padic(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.eq_padic(b))
    }

    /// Integral vector from residues modulo `p^k`.
    pub fn residues_u64(&self, k: u32) -> Result<Vec<u64>> {
        self.entries.iter().map(|e| e.residue_u64(k)).collect()
    }
}

impl Index<usize> for PadicVector {
    type Output = PadicScalar;
    fn index(&self, i: usize) -> &PadicScalar {
        &self.entries[i]
    }
}

impl IndexMut<usize> for PadicVector {
    fn index_mut(&mut self, i: usize) -> &mut PadicScalar {
        &mut self.entries[i]
    }
}

impl PartialEq for PadicVector {
    fn eq(&self, other: &Self) -> bool {
        self.eq_padic(other)
    }
}

impl fmt::Display for PadicVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Row-major matrix over Q_p.
#[derive(Clone, Debug)]
pub struct PadicMatrix {
    ctx: PadicContext,
    rows: usize,
    cols: usize,
    data: Vec<PadicScalar>,
}

impl PadicMatrix {
    pub fn from_fn(
        ctx: PadicContext,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> PadicScalar,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self {
            ctx,
            rows,
            cols,
            data,
        }
    }

    pub fn zeros(ctx: PadicContext, rows: usize, cols: usize) -> Self {
        Self::from_fn(ctx, rows, cols, |_, _| ctx.zero())
    }

    pub fn identity(ctx: PadicContext, n: usize) -> Self {
        Self::from_fn(
            ctx,
            n,
            n,
            |i, j| if i == j { ctx.one() } else { ctx.zero() },
        )
    }

    pub fn from_ints(ctx: PadicContext, rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(ctx, r, c, |i, j| ctx.int(rows[i][j]))
    }

    pub fn diagonal(ctx: PadicContext, d: &[PadicScalar]) -> Self {
        Self::from_fn(ctx, d.len(), d.len(), |i, j| {
            if i == j {
                d[i].clone()
            } else {
                ctx.zero()
            }
        })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(ctx: PadicContext, cols: &[PadicVector]) -> Self {
        let n = cols.first().map_or(0, |c| c.dim());
        Self::from_fn(ctx, n, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &PadicScalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: PadicScalar) {
        self.data[i * self.cols + j] = x;
    }

    pub fn column(&self, j: usize) -> PadicVector {
        PadicVector::new(
            self.ctx,
            (0..self.rows).map(|i| self.get(i, j).clone()).collect(),
        )
    }

    pub fn row(&self, i: usize) -> PadicVector {
        PadicVector::new(
            self.ctx,
            (0..self.cols).map(|j| self.get(i, j).clone()).collect(),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ctx, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        Self::from_fn(self.ctx, self.rows, other.cols, |i, j| {
            (0..self.cols).fold(self.ctx.zero(), |acc, k| {
                acc + self.get(i, k) * other.get(k, j)
            })
        })
    }

    pub fn mul_vec(&self, x: &PadicVector) -> PadicVector {
        assert_eq!(self.cols, x.dim(), "shape mismatch");
        PadicVector::new(
            self.ctx,
            (0..self.rows)
                .map(|i| {
                    (0..self.cols).fold(self.ctx.zero(), |acc, k| acc + self.get(i, k) * &x[k])
                })
                .collect(),
        )
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        Self {
            ctx: self.ctx,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// The max-norm induced operator norm, which over Q_p is the largest entry norm.
    pub fn operator_norm(&self) -> PadicNorm {
        self.data
            .iter()
            .map(|a| a.norm())
            .max()
            .unwrap_or_else(|| PadicNorm::zero(self.ctx.p))
    }

    pub fn eq_padic(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.eq_padic(b))
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && self.eq_padic(&Self::identity(self.ctx, self.rows))
    }

    fn check_square(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(LabError::Dimension(format!(
                "{}x{} matrix is not square",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Index of a maximal-norm nonzero entry in column `j` from row `from` on.
    fn pivot(&self, j: usize, from: usize) -> Option<usize> {
        (from..self.rows)
            .filter(|&i| !self.get(i, j).is_zero())
            .max_by(|&a, &b| {
                self.get(a, j)
                    .norm()
                    .cmp(&self.get(b, j).norm())
                    .then(b.cmp(&a))
            })
    }

    fn vanishing_precision(&self, j: usize, from: usize) -> i64 {
        (from..self.rows)
            .filter_map(|i| self.get(i, j).absolute_precision())
            .min()
            .unwrap_or(i64::MAX)
    }

    /// Determinant by elimination with maximal-norm pivots.
    pub fn det(&self) -> Result<PadicScalar> {
        self.check_square()?;
        let n = self.rows;
        let mut a = self.clone();
        let mut det = self.ctx.one();
        for j in 0..n {
            let Some(piv) = a.pivot(j, j) else {
                let abs = a.vanishing_precision(j, j);
                return Ok(if abs == i64::MAX {
                    self.ctx.zero()
                } else {
                    det * PadicScalar::zero_mod(self.ctx.p, self.ctx.prec, abs)
                });
            };
            if piv != j {
                a.swap_rows(piv, j);
                det = -det;
            }
            let d = a.get(j, j).clone();
            let dinv = d.inv()?;
            det = det * &d;
            for i in j + 1..n {
                let f = a.get(i, j) * &dinv;
                if f.is_zero() {
                    continue;
                }
                for k in j..n {
                    let v = a.get(i, k) - &f * a.get(j, k);
                    a.set(i, k, v);
                }
            }
        }
        Ok(det)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        for k in 0..self.cols {
            self.data.swap(r1 * self.cols + k, r2 * self.cols + k);
        }
    }

    /// Inverse by Gauss-Jordan with maximal-norm pivots.
    pub fn inverse(&self) -> Result<Self> {
        self.check_square()?;
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(self.ctx, n);
        for j in 0..n {
            let piv = a.pivot(j, j).ok_or_else(|| LabError::Singular {
                column: j,
                abs_precision: a.vanishing_precision(j, j),
            })?;
            if piv != j {
                a.swap_rows(piv, j);
                inv.swap_rows(piv, j);
            }
            let dinv = a.get(j, j).inv()?;
            for k in 0..n {
                let v = a.get(j, k) * &dinv;
                a.set(j, k, v);
                let w = inv.get(j, k) * &dinv;
                inv.set(j, k, w);
            }
            for i in 0..n {
                if i == j {
                    continue;
                }
                let f = a.get(i, j).clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..n {
                    let v = a.get(i, k) - &f * a.get(j, k);
                    a.set(i, k, v);
                    let w = inv.get(i, k) - &f * inv.get(j, k);
                    inv.set(i, k, w);
                }
            }
        }
        Ok(inv)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &PadicVector) -> Result<PadicVector> {
        Ok(self.inverse()?.mul_vec(b))
    }
}

impl PartialEq for PadicMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.eq_padic(other)
    }
}

impl fmt::Display for PadicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            writeln!(f, "{}", self.row(i))?;
        }
        Ok(())
    }
}
