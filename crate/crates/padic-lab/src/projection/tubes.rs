use std::collections::HashMap;

use num_rational::BigRational;
use rayon::prelude::*;

use crate::decoupling::{constant_evaluator, ConstantKind, ConstantParams};
use crate::error::{invalid, precondition, Result};
use crate::padic::{cell_representatives, PadicContext, PadicMatrix, PadicScalar, PadicVector};

use super::fractal::{c_alpha, projection_matrix, FiniteFractalSet, ProjectionKernel};

/// `Z_p^n ∩ Pi_theta^{-1}(anchor + p^k Z_p^m)`, stored as its translate form `center + A^{-T} Z_p^n`.
#[derive(Clone, Debug)]
pub struct Tube {
    pub theta: u64,
    pub anchor: Vec<u64>,
    pub center: PadicVector,
}

struct SlopeData {
    theta: u64,
    /// `A_{theta, p^k}^{-T}`, whose columns generate the tube lattice.
    generator: PadicMatrix,
    /// `A_{theta, p^k}^T`.
    dual: PadicMatrix,
    /// `A_{-theta,1}^T`, mapping `(x, 0)` to a center.
    centering: PadicMatrix,
    /// First `m` rows of `A_{theta,1}^T`.
    projection: PadicMatrix,
}

/// Tubes of width `delta = p^-k` for every slope in `thetas`, resolved on cells of `p^l Z_p^n`.
pub struct TubeFamily {
    ctx: PadicContext,
    n: usize,
    m: usize,
    k: u32,
    l: u32,
    slopes: Vec<SlopeData>,
}

pub fn tube_family(
    ctx: PadicContext,
    n: usize,
    m: usize,
    k: u32,
    l: u32,
    thetas: Option<&[u64]>,
) -> Result<TubeFamily> {
    if k > l {
        return precondition(format!(
            "tube width p^-{k} is finer than the resolution p^-{l}"
        ));
    }
    if m == 0 || m > n {
        return invalid(format!("tube codimension m = {m} must lie in 1..={n}"));
    }
    let side = ctx
        .p
        .checked_pow(k)
        .filter(|s| *s < 1 << 40)
        .ok_or_else(|| crate::LabError::InvalidParameter(format!("p^{k} slopes is too many")))?;
    let thetas: Vec<u64> = match thetas {
        Some(t) => t.to_vec(),
        None => (0..side).collect(),
    };
    let mut seen = thetas.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != thetas.len() || thetas.iter().any(|&t| t >= side) {
        return invalid(format!("slopes must be distinct residues mod p^{k}"));
    }
    let one = ctx.one();
    let narrow = ctx.p_power(-(k as i64));
    let slopes = thetas
        .iter()
        .map(|&t| {
            let theta = ctx.int(t as i64);
            let dual = frame(ctx, n, &theta, &narrow, m)?.transpose();
            let generator = dual.inverse()?;
            let centering = frame(ctx, n, &-&theta, &one, 0)?.transpose();
            let projection = projection_matrix(ctx, n, m, &theta)?;
            Ok(SlopeData {
                theta: t,
                generator,
                dual,
                centering,
                projection,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TubeFamily {
        ctx,
        n,
        m,
        k,
        l,
        slopes,
    })
}

/// `A_{theta, alpha}` with `alpha^{-1} = scale`: column `j` is `gamma^{(j)}(theta)`, times `scale`
/// for `j <= m`. Only `(n-1)!` has to be a unit, so `p = n` is allowed.
fn frame(
    ctx: PadicContext,
    n: usize,
    theta: &PadicScalar,
    scale: &PadicScalar,
    m: usize,
) -> Result<PadicMatrix> {
    let lower = projection_matrix(ctx, n, n, theta)?.transpose();
    Ok(PadicMatrix::from_fn(ctx, n, n, |i, j| {
        if j < m {
            lower.get(i, j) * scale
        } else {
            lower.get(i, j).clone()
        }
    }))
}

fn int_vector(ctx: PadicContext, xs: &[u64]) -> PadicVector {
    PadicVector::new(ctx, xs.iter().map(|&x| ctx.int(x as i64)).collect())
}

impl TubeFamily {
    pub fn slopes(&self) -> Vec<u64> {
        self.slopes.iter().map(|s| s.theta).collect()
    }

    pub fn width_exponent(&self) -> u32 {
        self.k
    }

    pub fn resolution(&self) -> u32 {
        self.l
    }

    fn slope(&self, theta: u64) -> Result<&SlopeData> {
        self.slopes.iter().find(|s| s.theta == theta).map_or_else(
            || invalid(format!("slope {theta} is not in the family")),
            Ok,
        )
    }

    /// The tube over `anchor + p^k Z_p^m`, centered at `A_{-theta,1}^T (anchor, 0)`.
    pub fn tube(&self, theta: u64, anchor: &[u64]) -> Result<Tube> {
        let s = self.slope(theta)?;
        if anchor.len() != self.m {
            return invalid(format!("tube anchor needs {} coordinates", self.m));
        }
        let mut x = anchor.to_vec();
        x.resize(self.n, 0);
        let center = s.centering.mul_vec(&int_vector(self.ctx, &x));
        Ok(Tube {
            theta,
            anchor: anchor.to_vec(),
            center,
        })
    }

    /// All `p^{km}` tubes of one slope.
    pub fn tubes(&self, theta: u64) -> Result<Vec<Tube>> {
        cell_representatives(self.ctx.p, self.k, self.m)
            .map(|a| self.tube(theta, &a))
            .collect()
    }

    /// Membership by solving `A^{-T} z = y - center` and testing `z` for integrality.
    pub fn contains(&self, tube: &Tube, y: &PadicVector) -> Result<bool> {
        let s = self.slope(tube.theta)?;
        let z = s.generator.solve(&y.sub(&tube.center))?;
        Ok(z.iter().all(|e| e.is_integral()))
    }

    /// Membership by projecting `y` and testing whether it lands in the `delta`-ball.
    pub fn contains_by_projection(&self, tube: &Tube, y: &PadicVector) -> Result<bool> {
        let s = self.slope(tube.theta)?;
        let d = s
            .projection
            .mul_vec(y)
            .sub(&int_vector(self.ctx, &tube.anchor));
        Ok(d.iter()
            .all(|e| e.valuation().is_none_or(|v| v >= self.k as i64)))
    }

    /// Number of cells of `p^l Z_p^n` inside `tube`, by exhaustive membership.
    pub fn tube_cells(&self, tube: &Tube) -> Result<u64> {
        let mut count = 0;
        for c in cell_representatives(self.ctx.p, self.l, self.n) {
            if self.contains(tube, &int_vector(self.ctx, &c))? {
                count += 1;
            }
        }
        Ok(count)
    }

    /// `sum_{T in w} 1_T(x)`.
    pub fn incidence_count(&self, w: &[Tube], x: &PadicVector) -> Result<usize> {
        let mut count = 0;
        for t in w {
            if self.contains(t, x)? {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Compares frame membership with projection membership for every tube and every cell.
    /// By linearity `y` lies in the tube centered at `c` exactly when `A^T y` and `A^T c` have
    /// the same fractional parts, so one product per cell settles all tubes of a slope.
    pub fn geometry_check(&self) -> Result<TubeGeometryReport> {
        let p = self.ctx.p;
        let cells: Vec<Vec<u64>> = cell_representatives(p, self.l, self.n).collect();
        let per_slope = self
            .slopes
            .par_iter()
            .map(|s| {
                let key = |v: &PadicVector| -> Vec<BigRational> {
                    s.dual
                        .mul_vec(v)
                        .iter()
                        .map(|e| e.fractional_part())
                        .collect()
                };
                let tubes = self.tubes(s.theta)?;
                let mut by_key: HashMap<Vec<BigRational>, Vec<usize>> = HashMap::new();
                for (i, t) in tubes.iter().enumerate() {
                    by_key.entry(key(&t.center)).or_default().push(i);
                }
                let side = p.pow(self.k);
                let mut counts = vec![0u64; tubes.len()];
                let mut disagreements = 0u64;
                for c in &cells {
                    let y = int_vector(self.ctx, c);
                    let frame: &[usize] = by_key.get(&key(&y)).map_or(&[], |v| v.as_slice());
                    let image = s.projection.mul_vec(&y).residues_u64(self.k)?;
                    // row-major index of the anchor, matching cell_representatives
                    let proj = image
                        .iter()
                        .fold(0usize, |acc, &r| acc * side as usize + r as usize);
                    if frame != [proj] {
                        disagreements += 1;
                    }
                    for &i in frame {
                        counts[i] += 1;
                    }
                }
                Ok((tubes.len() as u64, disagreements, counts))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut report = TubeGeometryReport {
            tubes: 0,
            cells: cells.len() as u64,
            disagreements: 0,
            min_cells: u64::MAX,
            max_cells: 0,
            expected_cells: p.pow(self.l * self.n as u32 - self.k * self.m as u32),
        };
        for (t, d, counts) in per_slope {
            report.tubes += t;
            report.disagreements += d;
            for c in counts {
                report.min_cells = report.min_cells.min(c);
                report.max_cells = report.max_cells.max(c);
            }
        }
        Ok(report)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TubeGeometryReport {
    pub tubes: u64,
    pub cells: u64,
    /// Cells whose frame-membership set differs from their projection tube.
    pub disagreements: u64,
    pub min_cells: u64,
    pub max_cells: u64,
    /// `p^{ln - km}`, which is `p^{l(n-m)}` when `k = l`.
    pub expected_cells: u64,
}

impl TubeGeometryReport {
    pub fn exact(&self) -> bool {
        self.disagreements == 0
            && self.min_cells == self.expected_cells
            && self.max_cells == self.expected_cells
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KakeyaParams {
    pub m: usize,
    pub alpha: f64,
    pub eps: f64,
    /// `delta0 = p^-k0`.
    pub k0: u32,
    /// A tube joins `W` when it holds at least this many points of `F`.
    pub min_points: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KakeyaRow {
    pub k: u32,
    pub delta: f64,
    pub w_count: u64,
    pub incidence_min: u64,
    pub incidence_max: u64,
    /// `ln c` with `c = incidence_min * delta^{1 - eps}`.
    pub ln_c: f64,
    /// Log of `C(c) nu(Q_p^n) c_alpha^{delta0}(nu)^{-1} delta^{-1-alpha} delta^{loss}`; NaN when the
    /// incidence hypothesis fails (some point of `F` meets no tube).
    pub log_bound: f64,
    pub bound_holds: Option<bool>,
}

/// Tubes of width `delta = p^-k` over all slopes in `[0, p^k)`; `W_theta` keeps the tubes holding
/// at least `min_points` points of `F`.
pub fn kakeya_experiment(f: &FiniteFractalSet, par: &KakeyaParams, k: u32) -> Result<KakeyaRow> {
    if f.is_empty() {
        return invalid("Kakeya experiment on an empty set");
    }
    if k >= par.k0 {
        return precondition(format!("need delta = p^-{k} > delta0 = p^-{}", par.k0));
    }
    if k > f.depth() {
        return precondition(format!(
            "tube width p^-{k} is finer than the set's depth {}",
            f.depth()
        ));
    }
    let p = f.prime();
    let per_slope = (0..p.pow(k))
        .into_par_iter()
        .map(|t| {
            let ker = ProjectionKernel::new(p, f.dim(), par.m, t, k)?;
            let images: Vec<Vec<u64>> = f.points().iter().map(|x| ker.apply(x)).collect();
            let mut counts: HashMap<&[u64], u64> = HashMap::new();
            for y in &images {
                *counts.entry(y.as_slice()).or_insert(0) += 1;
            }
            let kept = counts.values().filter(|&&c| c >= par.min_points).count() as u64;
            let hits: Vec<bool> = images
                .iter()
                .map(|y| counts[y.as_slice()] >= par.min_points)
                .collect();
            Ok((kept, hits))
        })
        .collect::<Result<Vec<_>>>()?;
    let w_count = per_slope.iter().map(|s| s.0).sum();
    let incidences: Vec<u64> = (0..f.len())
        .map(|i| per_slope.iter().filter(|s| s.1[i]).count() as u64)
        .collect();
    let incidence_min = *incidences.iter().min().expect("nonempty");
    let incidence_max = *incidences.iter().max().expect("nonempty");
    let lnd = -(k as f64) * (p as f64).ln();
    let ln_c = (incidence_min as f64).ln() + (1.0 - par.eps) * lnd;
    let (log_bound, bound_holds) = if incidence_min == 0 {
        (f64::NAN, None)
    } else {
        let cp = ConstantParams {
            n: f.dim() as u32,
            p,
            eps: par.eps,
            c: ln_c.exp(),
            alpha: par.alpha,
            ..Default::default()
        };
        let cv = constant_evaluator(ConstantKind::Kakeya, &cp)?;
        let ca = c_alpha(f, par.alpha, par.k0)?;
        let loss = cv.sqrt_eps_loss.unwrap_or(0.0);
        let lb = cv.ln - ca.ln_constant + (-1.0 - par.alpha) * lnd + loss * lnd;
        (lb, Some((w_count as f64).ln() >= lb))
    };
    Ok(KakeyaRow {
        k,
        delta: lnd.exp(),
        w_count,
        incidence_min,
        incidence_max,
        ln_c,
        log_bound,
        bound_holds,
    })
}
