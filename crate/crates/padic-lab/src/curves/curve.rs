use crate::error::{invalid, precondition, LabError, Result};
use crate::padic::{
    cell_representatives, PadicContext, PadicMatrix, PadicNorm, PadicScalar, PadicVector,
};

use super::poly::Polynomial;

/// A polynomial curve `Z_p -> Q_p^n` with formal derivatives cached up to order `n + 1`.
#[derive(Clone, Debug)]
pub struct PolyCurve {
    ctx: PadicContext,
    components: Vec<Polynomial>,
    /// `derivs[j][i]` is the j-th derivative of component i.
    derivs: Vec<Vec<Polynomial>>,
}

impl PolyCurve {
    pub fn new(ctx: PadicContext, components: Vec<Polynomial>) -> Self {
        let n = components.len();
        let mut derivs = vec![components.clone()];
        for j in 1..=n + 1 {
            let next: Vec<Polynomial> = derivs[j - 1].iter().map(|f| f.derivative()).collect();
            derivs.push(next);
        }
        Self {
            ctx,
            components,
            derivs,
        }
    }

    /// `gamma(t) = (t/1!, ..., t^n/n!)`; needs `p > n`.
    pub fn moment(ctx: PadicContext, n: usize) -> Result<Self> {
        check_moment_prime(ctx, n)?;
        let comps = (1..=n)
            .map(|i| Polynomial::monomial(ctx, inv_factorial(ctx, i), i))
            .collect();
        Ok(Self::new(ctx, comps))
    }

    pub fn context(&self) -> PadicContext {
        self.ctx
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn degree(&self) -> usize {
        self.components
            .iter()
            .filter_map(|c| c.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, t: &PadicScalar) -> PadicVector {
        PadicVector::new(
            self.ctx,
            self.components.iter().map(|c| c.eval(t)).collect(),
        )
    }

    /// `zeta^{(j)}(t)`.
    pub fn derivative_at(&self, j: usize, t: &PadicScalar) -> PadicVector {
        let polys = if j < self.derivs.len() {
            self.derivs[j].clone()
        } else {
            self.components
                .iter()
                .map(|c| c.nth_derivative(j))
                .collect()
        };
        PadicVector::new(self.ctx, polys.iter().map(|c| c.eval(t)).collect())
    }

    /// The frame `[zeta'(t), ..., zeta^{(n)}(t)]` (columns).
    pub fn frame_at(&self, t: &PadicScalar) -> PadicMatrix {
        let cols: Vec<PadicVector> = (1..=self.dim()).map(|j| self.derivative_at(j, t)).collect();
        PadicMatrix::from_columns(self.ctx, &cols)
    }

    pub fn eq_padic(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.eq_padic(b))
    }

    /// True when this curve is exactly the moment curve.
    pub fn is_moment_curve(&self) -> bool {
        match Self::moment(self.ctx, self.dim()) {
            Ok(g) => self.eq_padic(&g),
            Err(_) => false,
        }
    }
}

fn check_moment_prime(ctx: PadicContext, n: usize) -> Result<()> {
    if ctx.p as usize <= n {
        return precondition(format!(
            "moment curve needs p > n (p = {}, n = {n}); n! is not a unit",
            ctx.p
        ));
    }
    Ok(())
}

pub(crate) fn inv_factorial(ctx: PadicContext, k: usize) -> PadicScalar {
    let f: i64 = (1..=k as i64).product();
    ctx.int(f).inv().expect("factorial is a unit for p > k")
}

/// `gamma(t) = (t/1!, ..., t^n/n!)`.
pub fn moment_curve_eval(ctx: PadicContext, n: usize, t: &PadicScalar) -> Result<PadicVector> {
    check_moment_prime(ctx, n)?;
    Ok(gamma_derivative(ctx, n, 0, t))
}

/// `gamma^{(j)}(t)_i = t^{i-j}/(i-j)!` for `i >= j`, else 0 (1-based `i`). Assumes `p > n`.
pub fn gamma_derivative(ctx: PadicContext, n: usize, j: usize, t: &PadicScalar) -> PadicVector {
    let entries = (1..=n)
        .map(|i| {
            if i < j {
                ctx.zero()
            } else {
                t.pow((i - j) as u32) * inv_factorial(ctx, i - j)
            }
        })
        .collect();
    PadicVector::new(ctx, entries)
}

/// `A_{theta,alpha,beta}` together with its parameters.
#[derive(Clone, Debug)]
pub struct DerivativeFrame {
    pub theta: PadicScalar,
    pub alpha: PadicScalar,
    pub beta: PadicScalar,
    pub m: usize,
    pub matrix: PadicMatrix,
}

fn check_p_power(x: &PadicScalar, name: &str) -> Result<()> {
    let ok = x.unit().is_some_and(|u| *u == 1u32.into());
    if !ok {
        return invalid(format!("{name} must be an integer power of p, got {x}"));
    }
    Ok(())
}

/// Columns `alpha^{-1} zeta^{(j)}(theta)` for `j <= m` and `beta^{-1} zeta^{(j)}(theta)` after.
pub fn derivative_frame(
    curve: &PolyCurve,
    theta: &PadicScalar,
    alpha: &PadicScalar,
    beta: &PadicScalar,
    m: usize,
) -> Result<DerivativeFrame> {
    check_p_power(alpha, "alpha")?;
    check_p_power(beta, "beta")?;
    let n = curve.dim();
    if m > n {
        return invalid(format!("split index m = {m} exceeds n = {n}"));
    }
    let ai = alpha.inv()?;
    let bi = beta.inv()?;
    let cols: Vec<PadicVector> = (1..=n)
        .map(|j| {
            curve
                .derivative_at(j, theta)
                .scale(if j <= m { &ai } else { &bi })
        })
        .collect();
    Ok(DerivativeFrame {
        theta: theta.clone(),
        alpha: alpha.clone(),
        beta: beta.clone(),
        m,
        matrix: PadicMatrix::from_columns(curve.context(), &cols),
    })
}

/// `A_{theta,alpha,beta}` for the moment curve, built from the closed form.
pub fn moment_frame(
    ctx: PadicContext,
    n: usize,
    theta: &PadicScalar,
    alpha: &PadicScalar,
    beta: &PadicScalar,
    m: usize,
) -> Result<PadicMatrix> {
    check_moment_prime(ctx, n)?;
    check_p_power(alpha, "alpha")?;
    check_p_power(beta, "beta")?;
    if m > n {
        return invalid(format!("split index m = {m} exceeds n = {n}"));
    }
    let ai = alpha.inv()?;
    let bi = beta.inv()?;
    Ok(PadicMatrix::from_fn(ctx, n, n, |i, j| {
        if i < j {
            ctx.zero()
        } else {
            let s = if j < m { &ai } else { &bi };
            theta.pow((i - j) as u32) * inv_factorial(ctx, i - j) * s
        }
    }))
}

/// `A_{theta,1}`.
pub fn a_theta(ctx: PadicContext, n: usize, theta: &PadicScalar) -> Result<PadicMatrix> {
    moment_frame(ctx, n, theta, &ctx.one(), &ctx.one(), n)
}

#[derive(Clone, Debug)]
pub struct VandermondeRecord {
    pub det_valuation: i64,
    pub expected: i64,
    pub holds: bool,
}

/// Valuation of `det[gamma'(t)..gamma^{(k)}(t), gamma'(s)..gamma^{(n-k)}(s)]`
/// compared with `k(n-k) v(s - t)`.
pub fn vandermonde_valuation(
    ctx: PadicContext,
    n: usize,
    k: usize,
    t: &PadicScalar,
    s: &PadicScalar,
) -> Result<VandermondeRecord> {
    check_moment_prime(ctx, n)?;
    if k == 0 || k >= n {
        return invalid(format!("need 0 < k < n, got k = {k}, n = {n}"));
    }
    let diff = s - t;
    let Some(vd) = diff.valuation() else {
        return invalid("t = s: the determinant vanishes");
    };
    let mut cols: Vec<PadicVector> = (1..=k).map(|j| gamma_derivative(ctx, n, j, t)).collect();
    cols.extend((1..=n - k).map(|j| gamma_derivative(ctx, n, j, s)));
    let det = PadicMatrix::from_columns(ctx, &cols).det()?;
    let Some(v) = det.valuation() else {
        return Err(LabError::Certification(format!(
            "determinant lost all precision (known modulo p^{:?})",
            det.absolute_precision()
        )));
    };
    let expected = (k * (n - k)) as i64 * vd;
    Ok(VandermondeRecord {
        det_valuation: v,
        expected,
        holds: v == expected,
    })
}

#[derive(Clone, Debug)]
pub struct ConvexityReport {
    /// Infimum of `|det[zeta'(t), ..., zeta^{(n)}(t)]|` over the grid.
    pub c: PadicNorm,
    /// Supremum of `|zeta_i^{(j)}(t)|` over the grid, `1 <= i, j <= n`.
    pub big_c: PadicNorm,
    pub degenerate: bool,
}

/// Convexity and bounded-derivative constants of a polynomial curve over the depth-`d` grid.
pub fn convexity_check(curve: &PolyCurve, d: u32) -> Result<ConvexityReport> {
    let ctx = curve.context();
    let mut c: Option<PadicNorm> = None;
    let mut big_c = PadicNorm::zero(ctx.p);
    for t in cell_representatives(ctx.p, d, 1) {
        let t = ctx.int(t[0] as i64);
        let frame = curve.frame_at(&t);
        let det = frame.det()?.norm();
        c = Some(match c {
            None => det,
            Some(prev) => prev.min(det),
        });
        big_c = big_c.max(frame.operator_norm());
    }
    let c = c.unwrap_or_else(|| PadicNorm::zero(ctx.p));
    Ok(ConvexityReport {
        c,
        big_c,
        degenerate: c.is_zero(),
    })
}

/// `zeta_{theta,lambda}(t) = [A^zeta_{theta,lambda}]^{-1} (zeta(theta + lambda t) - zeta(theta))`.
pub fn rescaled_curve(
    curve: &PolyCurve,
    theta: &PadicScalar,
    lambda: &PadicScalar,
) -> Result<PolyCurve> {
    let ctx = curve.context();
    match lambda.valuation() {
        Some(v) if v >= 1 => {}
        _ => return invalid(format!("lambda must lie in pZ_p\\{{0}}, got {lambda}")),
    }
    let n = curve.dim();
    let scales: Vec<PadicScalar> = (1..=n).map(|j| lambda.pow(j as u32)).collect();
    let a = curve
        .frame_at(theta)
        .mul(&PadicMatrix::diagonal(ctx, &scales));
    let ainv = a.inverse()?;
    let shifted: Vec<Polynomial> = curve
        .components()
        .iter()
        .map(|f| {
            let g = f.affine_substitute(theta, lambda);
            g.sub(&Polynomial::new(ctx, vec![f.eval(theta)]))
        })
        .collect();
    let comps = (0..n)
        .map(|i| {
            (0..n).fold(Polynomial::zero(ctx), |acc, k| {
                acc.add(&shifted[k].scale(ainv.get(i, k)))
            })
        })
        .collect();
    Ok(PolyCurve::new(ctx, comps))
}
