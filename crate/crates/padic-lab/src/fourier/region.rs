use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::padic::{PadicContext, PadicMatrix, PadicVector};

use super::lattice::{matrix_min_valuation, LatticeFunction};

type Predicate = Arc<dyn Fn(&PadicVector) -> bool + Send + Sync>;

/// A set of frequencies given by a membership predicate. `depth = Some(d)` declares the set
/// a union of `p^d Z_p^n`-cells.
#[derive(Clone)]
pub struct FrequencyRegion {
    label: String,
    depth: Option<i64>,
    pred: Predicate,
}

impl fmt::Debug for FrequencyRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyRegion")
            .field("label", &self.label)
            .field("depth", &self.depth)
            .finish()
    }
}

impl FrequencyRegion {
    pub fn from_predicate(
        label: impl Into<String>,
        depth: Option<i64>,
        pred: impl Fn(&PadicVector) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            depth,
            pred: Arc::new(pred),
        }
    }

    pub fn everything() -> Self {
        Self::from_predicate("everything", Some(i64::MIN), |_| true)
    }

    pub fn nothing() -> Self {
        Self::from_predicate("nothing", Some(i64::MIN), |_| false)
    }

    /// `center + p^k Z_p^n`.
    pub fn ball(center: PadicVector, k: i64) -> Self {
        Self::from_predicate(format!("ball(p^{k})"), Some(k), move |x| {
            x.sub(&center)
                .iter()
                .all(|e| e.valuation().is_none_or(|v| v >= k))
        })
    }

    /// The affine lattice coset `v + M Z_p^n`.
    pub fn coset(v: PadicVector, m: &PadicMatrix) -> Result<Self> {
        let minv = m.inverse()?;
        let depth = -matrix_min_valuation(&minv);
        Ok(Self::from_predicate(
            format!("coset(depth {depth})"),
            Some(depth),
            move |x| minv.mul_vec(&x.sub(&v)).iter().all(|e| e.is_integral()),
        ))
    }

    pub fn union(parts: Vec<FrequencyRegion>) -> Self {
        let depth = parts
            .iter()
            .try_fold(i64::MIN, |acc, r| r.depth.map(|d| acc.max(d)));
        let label = format!("union of {}", parts.len());
        Self::from_predicate(label, depth, move |x| parts.iter().any(|r| r.contains(x)))
    }

    pub fn intersect(&self, other: &FrequencyRegion) -> Self {
        let depth = match (self.depth, other.depth) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        let (a, b) = (self.clone(), other.clone());
        Self::from_predicate(
            format!("{} ∩ {}", self.label, other.label),
            depth,
            move |x| a.contains(x) && b.contains(x),
        )
    }

    pub fn complement(&self) -> Self {
        let a = self.clone();
        Self::from_predicate(
            format!("complement of {}", self.label),
            self.depth,
            move |x| !a.contains(x),
        )
    }

    pub fn contains(&self, x: &PadicVector) -> bool {
        (self.pred)(x)
    }

    pub fn depth(&self) -> Option<i64> {
        self.depth
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Membership of each cell of `g` (cells of `p^{b} Z_p^n` in `p^{-a} Z_p^n` for `g`'s own
    /// `a`, `b`). Errors with the first cell on which the predicate is seen to vary.
    pub fn cell_mask(&self, ctx: PadicContext, g: &LatticeFunction) -> Result<Vec<bool>> {
        let b = g.b() as i64;
        if let Some(d) = self.depth {
            if d > b {
                return Err(LabError::Precondition(format!(
                    "region '{}' is resolved at depth {d}, finer than the frequency cells p^{b}",
                    self.label
                )));
            }
        }
        let n = g.dim();
        let fine = ctx.p_power(b);
        let probes: Vec<PadicVector> = probe_offsets(ctx, n)
            .into_iter()
            .map(|o| o.scale(&fine))
            .collect();
        let mut mask = Vec::with_capacity(g.len());
        for flat in 0..g.len() {
            let k = g.unflatten(flat);
            let x = g.point_of(ctx, &k);
            let inside = self.contains(&x);
            for o in &probes {
                if self.contains(&x.add(o)) != inside {
                    return Err(LabError::Precondition(format!(
                        "region '{}' is not constant on the frequency cell with index {k:?}",
                        self.label
                    )));
                }
            }
            mask.push(inside);
        }
        Ok(mask)
    }
}

/// Sample offsets in `Z_p^n` used to probe cell-constancy: the basis vectors, their
/// `p-1` multiples, the all-ones vector and a few deeper points.
fn probe_offsets(ctx: PadicContext, n: usize) -> Vec<PadicVector> {
    let mut out = Vec::new();
    let pm1 = ctx.int(ctx.p as i64 - 1);
    for i in 0..n {
        let e = PadicVector::basis(ctx, n, i);
        out.push(e.scale(&pm1));
        out.push(e);
    }
    let ones = PadicVector::new(ctx, vec![ctx.one(); n]);
    out.push(ones.scale(&ctx.int(ctx.p as i64 + 1)));
    out.push(ones.scale(&ctx.int((ctx.p * ctx.p) as i64 - 1)));
    out.push(ones);
    out
}
