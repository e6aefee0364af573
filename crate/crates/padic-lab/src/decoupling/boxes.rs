use crate::curves::{derivative_frame, PolyCurve};
use crate::error::{invalid, precondition, Result};
use crate::fourier::FrequencyRegion;
use crate::padic::{PadicContext, PadicMatrix, PadicScalar, PadicVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxVariant {
    /// `zeta(t) + sum_k lambda_k zeta^{(k)}(t)` with `|lambda_k| <= rho^k`.
    Standard,
    /// The axis-parallel alternative `zeta(t) + prod_j B_{rho^j}(0)`.
    Prime,
    /// The plate `A_{t, rho^{-1}} Z_p^n` whose first `m` columns carry `rho^{-1}`.
    Plate { m: usize },
}

/// A box attached to the curve over the interval `I = center + p^r Z_p` (radius `rho = p^{-r}`).
#[derive(Clone, Debug)]
pub struct AnisotropicBox {
    curve: PolyCurve,
    center: PadicScalar,
    r: u32,
    anchor: PadicScalar,
    variant: BoxVariant,
    offset: PadicVector,
    gens: PadicMatrix,
    gens_inv: PadicMatrix,
}

impl AnisotropicBox {
    pub fn new(
        curve: &PolyCurve,
        center: PadicScalar,
        r: u32,
        anchor: PadicScalar,
        variant: BoxVariant,
    ) -> Result<Self> {
        let ctx = curve.context();
        let n = curve.dim();
        let d = &anchor - &center;
        if !d.valuation().is_none_or(|v| v >= r as i64) || !center.is_integral() {
            return precondition(format!(
                "anchor {anchor} is not in the interval {center} + p^{r} Z_p"
            ));
        }
        let pr = ctx.p_power(r as i64);
        let (offset, gens) = match variant {
            BoxVariant::Standard => {
                let frame = curve.frame_at(&anchor);
                let scale: Vec<PadicScalar> = (1..=n).map(|k| pr.pow(k as u32)).collect();
                (
                    curve.eval(&anchor),
                    frame.mul(&PadicMatrix::diagonal(ctx, &scale)),
                )
            }
            BoxVariant::Prime => {
                let scale: Vec<PadicScalar> = (1..=n).map(|k| pr.pow(k as u32)).collect();
                (curve.eval(&anchor), PadicMatrix::diagonal(ctx, &scale))
            }
            BoxVariant::Plate { m } => {
                if m > n {
                    return invalid(format!("plate split m = {m} exceeds n = {n}"));
                }
                let f = derivative_frame(curve, &anchor, &pr, &ctx.one(), m)?;
                (PadicVector::zeros(ctx, n), f.matrix)
            }
        };
        let gens_inv = gens.inverse()?;
        Ok(Self {
            curve: curve.clone(),
            center,
            r,
            anchor,
            variant,
            offset,
            gens,
            gens_inv,
        })
    }

    /// `U_{I,t}` for the moment curve.
    pub fn moment(
        ctx: PadicContext,
        n: usize,
        center: i64,
        r: u32,
        anchor: i64,
        variant: BoxVariant,
    ) -> Result<Self> {
        let curve = PolyCurve::moment(ctx, n)?;
        Self::new(&curve, ctx.int(center), r, ctx.int(anchor), variant)
    }

    pub fn context(&self) -> PadicContext {
        self.curve.context()
    }

    pub fn dim(&self) -> usize {
        self.curve.dim()
    }

    pub fn curve(&self) -> &PolyCurve {
        &self.curve
    }

    /// `(center, r)` with `I = center + p^r Z_p`.
    pub fn interval(&self) -> (&PadicScalar, u32) {
        (&self.center, self.r)
    }

    pub fn anchor(&self) -> &PadicScalar {
        &self.anchor
    }

    pub fn variant(&self) -> BoxVariant {
        self.variant
    }

    /// The box as the lattice coset `v + M Z_p^n`.
    pub fn as_coset(&self) -> (PadicVector, PadicMatrix) {
        (self.offset.clone(), self.gens.clone())
    }

    /// Exact membership by solving the frame system.
    pub fn contains(&self, x: &PadicVector) -> bool {
        self.gens_inv
            .mul_vec(&x.sub(&self.offset))
            .iter()
            .all(|e| e.is_integral())
    }

    /// Whether `other` lies inside `self`: both offsets agree modulo `M Z_p^n` and `M^{-1} M'` is integral.
    pub fn contains_box(&self, other: &AnisotropicBox) -> bool {
        coset_contains(&self.offset, &self.gens_inv, &other.offset, &other.gens)
    }

    pub fn region(&self) -> Result<FrequencyRegion> {
        FrequencyRegion::coset(self.offset.clone(), &self.gens)
    }
}

/// `v' + M' Z^n ⊆ v + M Z^n`, given `M^{-1}`.
pub(crate) fn coset_contains(
    v: &PadicVector,
    m_inv: &PadicMatrix,
    v2: &PadicVector,
    m2: &PadicMatrix,
) -> bool {
    let shift_ok = m_inv.mul_vec(&v2.sub(v)).iter().all(|e| e.is_integral());
    let rel = m_inv.mul(m2);
    shift_ok && (0..rel.rows()).all(|i| (0..rel.cols()).all(|j| rel.get(i, j).is_integral()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentReport {
    pub checked: u64,
    pub failures: Vec<(u64, u64)>,
}

impl ContainmentReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `U'_{J} ⊆ U_{I}` for every interval `J` of radius `delta = p^{-l}` inside every `I` of
/// radius `delta^{1/n}`, for the moment curve. Each `J` is visited through all its
/// representatives modulo `p^{l + extra}`, so independence of the anchor is checked as well.
/// Failures are reported as `(t0, theta)`.
pub fn containment_sweep(
    ctx: PadicContext,
    n: usize,
    l: u32,
    extra: u32,
) -> Result<ContainmentReport> {
    if l == 0 || !(l as usize).is_multiple_of(n) {
        return precondition(format!(
            "delta = p^-{l} must have an n-th root in p^-N (n = {n})"
        ));
    }
    let r = l / n as u32;
    let p = ctx.p;
    let outer_count = p.pow(r);
    let step = outer_count;
    let inner_count = p.pow(l + extra - r);
    let curve = PolyCurve::moment(ctx, n)?;
    let mut checked = 0u64;
    let mut failures = Vec::new();
    for t0 in 0..outer_count {
        let big = AnisotropicBox::new(
            &curve,
            ctx.int(t0 as i64),
            r,
            ctx.int(t0 as i64),
            BoxVariant::Standard,
        )?;
        for i in 0..inner_count {
            let theta = t0 + step * i;
            let th = ctx.int(theta as i64);
            let small = AnisotropicBox::new(&curve, th.clone(), l, th, BoxVariant::Prime)?;
            checked += 1;
            if !big.contains_box(&small) {
                failures.push((t0, theta));
            }
        }
    }
    Ok(ContainmentReport { checked, failures })
}
