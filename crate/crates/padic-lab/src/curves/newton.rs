use std::collections::HashMap;

use itertools::Itertools;
use num_bigint::BigUint;

use crate::error::{invalid, LabError, Result};
use crate::padic::{cell_representatives, PadicContext, PadicNorm, PadicScalar};

use super::curve::PolyCurve;
use super::poly::Polynomial;

/// A function `Z_p -> Q_p` that Newton quotients can be taken of.
pub trait UltrametricFunction {
    fn context(&self) -> PadicContext;
    fn eval(&self, x: &PadicScalar) -> PadicScalar;
    /// Symbolic form, when one exists; enables coincident-point quotients.
    fn as_polynomial(&self) -> Option<&Polynomial> {
        None
    }
}

impl UltrametricFunction for Polynomial {
    fn context(&self) -> PadicContext {
        Polynomial::context(self)
    }
    fn eval(&self, x: &PadicScalar) -> PadicScalar {
        Polynomial::eval(self, x)
    }
    fn as_polynomial(&self) -> Option<&Polynomial> {
        Some(self)
    }
}

/// A function known only through its values.
pub struct BlackBox<F> {
    pub ctx: PadicContext,
    pub f: F,
}

impl<F: Fn(&PadicScalar) -> PadicScalar> UltrametricFunction for BlackBox<F> {
    fn context(&self) -> PadicContext {
        self.ctx
    }
    fn eval(&self, x: &PadicScalar) -> PadicScalar {
        (self.f)(x)
    }
}

fn all_distinct(points: &[PadicScalar]) -> bool {
    points
        .iter()
        .tuple_combinations()
        .all(|(a, b)| !a.eq_padic(b))
}

/// `Phi_k f(a_1..a_{k+1}) = sum_j f(a_j) / prod_{i != j} (a_j - a_i)` at distinct points.
pub fn divided_difference(
    f: &dyn UltrametricFunction,
    points: &[PadicScalar],
) -> Result<PadicScalar> {
    let ctx = f.context();
    let mut acc = ctx.zero();
    for (j, a) in points.iter().enumerate() {
        let mut den = ctx.one();
        for (i, b) in points.iter().enumerate() {
            if i != j {
                den = den * (a - b);
            }
        }
        acc = acc + f.eval(a) * den.inv()?;
    }
    Ok(acc)
}

/// Complete homogeneous symmetric polynomials `h_0..h_m` of the points.
fn complete_homogeneous(ctx: PadicContext, points: &[PadicScalar], m: usize) -> Vec<PadicScalar> {
    let mut h = vec![ctx.zero(); m + 1];
    h[0] = ctx.one();
    for a in points {
        for d in 1..=m {
            let add = a * &h[d - 1];
            h[d] = &h[d] + &add;
        }
    }
    h
}

/// The continuous extension `bar Phi_k f` of a polynomial at arbitrary (possibly repeated)
/// points, using `Phi_k t^d = h_{d-k}`.
pub fn coincident_quotient(f: &Polynomial, points: &[PadicScalar]) -> Result<PadicScalar> {
    let ctx = f.context();
    if points.is_empty() {
        return invalid("need at least one point");
    }
    let k = points.len() - 1;
    let Some(deg) = f.degree() else {
        return Ok(ctx.zero());
    };
    if deg < k {
        return Ok(ctx.zero());
    }
    let h = complete_homogeneous(ctx, points, deg - k);
    Ok((k..=deg).fold(ctx.zero(), |acc, d| acc + f.coeff(d) * &h[d - k]))
}

/// Newton quotient of order `points.len() - 1`. Repeated points are routed to the
/// coincident-limit evaluation for polynomials and rejected for black boxes.
pub fn newton_quotient(f: &dyn UltrametricFunction, points: &[PadicScalar]) -> Result<PadicScalar> {
    if points.is_empty() {
        return invalid("need at least one point");
    }
    if all_distinct(points) {
        return divided_difference(f, points);
    }
    match f.as_polynomial() {
        Some(poly) => coincident_quotient(poly, points),
        None => invalid("repeated points need a polynomial; the function is a black box"),
    }
}

#[derive(Clone, Debug)]
pub struct QuotientDifferenceRecord {
    pub lhs: PadicScalar,
    pub rhs: PadicScalar,
    pub holds: bool,
}

/// Checks `bar Phi_k f(x) - bar Phi_k f(y) = sum_j (x_j - y_j) bar Phi_{k+1} f(x_1..x_j, y_j..y_{k+1})`.
pub fn newton_quotient_difference(
    f: &Polynomial,
    x: &[PadicScalar],
    y: &[PadicScalar],
) -> Result<QuotientDifferenceRecord> {
    if x.len() != y.len() || x.is_empty() {
        return invalid("point tuples must have equal nonzero length");
    }
    let lhs = coincident_quotient(f, x)? - coincident_quotient(f, y)?;
    let ctx = f.context();
    let mut rhs = ctx.zero();
    for j in 0..x.len() {
        let mut pts: Vec<PadicScalar> = x[..=j].to_vec();
        pts.extend_from_slice(&y[j..]);
        rhs = rhs + (&x[j] - &y[j]) * coincident_quotient(f, &pts)?;
    }
    let holds = lhs.eq_padic(&rhs);
    Ok(QuotientDifferenceRecord { lhs, rhs, holds })
}

/// Memoized Newton quotients of a fixed order. Keys are the sorted residues of the points.
pub struct NewtonQuotientTable<'a> {
    f: &'a dyn UltrametricFunction,
    order: usize,
    cache: HashMap<Vec<(Option<i64>, BigUint)>, PadicScalar>,
}

impl<'a> NewtonQuotientTable<'a> {
    pub fn new(f: &'a dyn UltrametricFunction, order: usize) -> Self {
        Self {
            f,
            order,
            cache: HashMap::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&mut self, points: &[PadicScalar]) -> Result<PadicScalar> {
        if points.len() != self.order + 1 {
            return invalid(format!(
                "order {} needs {} points",
                self.order,
                self.order + 1
            ));
        }
        let mut key: Vec<(Option<i64>, BigUint)> = points
            .iter()
            .map(|a| (a.valuation(), a.unit().cloned().unwrap_or_default()))
            .collect();
        key.sort();
        if let Some(v) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let v = newton_quotient(self.f, points)?;
        self.cache.insert(key, v.clone());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }
}

fn grid_points(
    ctx: PadicContext,
    center: &PadicScalar,
    radius_exp: i64,
    d: u32,
) -> Vec<PadicScalar> {
    let step = ctx.p_power(radius_exp);
    cell_representatives(ctx.p, d, 1)
        .map(|r| center + &step * &ctx.int(r[0] as i64))
        .collect()
}

fn grid_sup(f: &Polynomial, pts: &[PadicScalar], jmin: usize, k: usize) -> Result<PadicNorm> {
    let mut best = PadicNorm::zero(f.context().p);
    for j in jmin..=k {
        if j == 0 {
            for a in pts {
                best = best.max(f.eval(a).norm());
            }
            continue;
        }
        for combo in pts.iter().cloned().combinations(j + 1) {
            best = best.max(coincident_quotient(f, &combo)?.norm());
        }
    }
    Ok(best)
}

/// `max_{1<=j<=k} |Phi_j f|` over distinct tuples of the depth-`d` grid of `Z_p`.
/// A certified lower bound for the seminorm; exact for polynomials once the grid resolves them.
pub fn ck_seminorm(f: &dyn UltrametricFunction, k: usize, d: u32) -> Result<PadicNorm> {
    ck_seminorm_on_ball(f, k, &f.context().zero(), 0, d)
}

/// Same as [`ck_seminorm`] but with `j` starting at 0 (the full norm).
pub fn ck_norm(f: &dyn UltrametricFunction, k: usize, d: u32) -> Result<PadicNorm> {
    let poly = require_poly(f)?;
    let pts = grid_points(poly.context(), &poly.context().zero(), 0, d);
    grid_sup(poly, &pts, 0, k)
}

/// Seminorm over the ball `center + p^{radius_exp} Z_p`, gridded to `p^d` points.
pub fn ck_seminorm_on_ball(
    f: &dyn UltrametricFunction,
    k: usize,
    center: &PadicScalar,
    radius_exp: i64,
    d: u32,
) -> Result<PadicNorm> {
    if d == 0 {
        return invalid("grid depth must be at least 1");
    }
    let poly = require_poly(f)?;
    let pts = grid_points(poly.context(), center, radius_exp, d);
    grid_sup(poly, &pts, 1, k)
}

fn require_poly(f: &dyn UltrametricFunction) -> Result<&Polynomial> {
    f.as_polynomial().ok_or_else(|| {
        LabError::InvalidParameter("C^k norms are computed for polynomials only".into())
    })
}

/// The indicator of `B(0, p^{-N})` has `|Phi_1| = p^{N-1}` at the pair `(p^{N-1}, 0)`,
/// while its pointwise derivative vanishes everywhere.
pub fn indicator_c1_separation(ctx: PadicContext, big_n: i64) -> Result<PadicNorm> {
    let f = BlackBox {
        ctx,
        f: move |x: &PadicScalar| {
            if x.valuation().is_none_or(|v| v >= big_n) {
                ctx.one()
            } else {
                ctx.zero()
            }
        },
    };
    let q = newton_quotient(&f, &[ctx.p_power(big_n - 1), ctx.zero()])?;
    Ok(q.norm())
}

#[derive(Clone, Debug)]
pub struct ChainScalingRecord {
    pub holds: bool,
    pub max_defect_valuation: Option<i64>,
}

/// Checks `Phi_k (zeta_{theta,lambda})(a) = lambda^k [A^zeta_{theta,lambda}]^{-1} Phi_k zeta(theta + lambda a)`
/// componentwise at the given points.
pub fn chain_scaling_check(
    curve: &PolyCurve,
    rescaled: &PolyCurve,
    theta: &PadicScalar,
    lambda: &PadicScalar,
    points: &[PadicScalar],
) -> Result<ChainScalingRecord> {
    let ctx = curve.context();
    let n = curve.dim();
    let k = points.len() - 1;
    let scales: Vec<PadicScalar> = (1..=n).map(|j| lambda.pow(j as u32)).collect();
    let a = curve
        .frame_at(theta)
        .mul(&crate::padic::PadicMatrix::diagonal(ctx, &scales));
    let ainv = a.inverse()?;
    let moved: Vec<PadicScalar> = points.iter().map(|x| theta + lambda * x).collect();
    let raw: Vec<PadicScalar> = curve
        .components()
        .iter()
        .map(|f| coincident_quotient(f, &moved))
        .collect::<Result<_>>()?;
    let lk = lambda.pow(k as u32);
    let mut holds = true;
    let mut worst: Option<i64> = None;
    for i in 0..n {
        let lhs = coincident_quotient(&rescaled.components()[i], points)?;
        let rhs = (0..n).fold(ctx.zero(), |acc, j| acc + ainv.get(i, j) * &raw[j]) * &lk;
        let diff = &lhs - &rhs;
        if !diff.is_zero() {
            holds = false;
            worst = Some(worst.map_or(diff.valuation().unwrap(), |w: i64| {
                w.min(diff.valuation().unwrap())
            }));
        }
    }
    Ok(ChainScalingRecord {
        holds,
        max_defect_valuation: worst,
    })
}
