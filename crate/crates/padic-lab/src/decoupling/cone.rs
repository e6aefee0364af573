use rand::Rng;

use crate::curves::{a_theta, moment_curve_eval};
use crate::error::{invalid, precondition, Result};
use crate::padic::{PadicContext, PadicScalar, PadicVector};

/// The frequency regions around the moment curve over `J = center + p^{depth} Z_p` at scale
/// `delta = p^{-beta}`, with `eps = 1/l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeRegionSpec {
    pub ctx: PadicContext,
    pub n: usize,
    pub m: usize,
    pub beta: u32,
    pub l: u32,
    pub j_center: i64,
    pub j_depth: u32,
}

impl ConeRegionSpec {
    pub fn new(
        ctx: PadicContext,
        n: usize,
        m: usize,
        beta: u32,
        l: u32,
        j_center: i64,
        j_depth: u32,
    ) -> Result<Self> {
        if m == 0 || m > n {
            return invalid(format!("need 1 <= m <= n, got m = {m}, n = {n}"));
        }
        if l == 0 {
            return invalid("eps = 1/l needs l >= 1");
        }
        Ok(Self {
            ctx,
            n,
            m,
            beta,
            l,
            j_center,
            j_depth,
        })
    }

    /// Number of admissible slices for class `m1`, `log_p(delta^{-1/(n-m1)}) / l`.
    pub fn slice_count(&self, m1: usize) -> Result<u32> {
        let w = (self.n - m1) as u32 * self.l;
        if w == 0 || !self.beta.is_multiple_of(w) {
            return precondition(format!(
                "delta^(1/(n-m1)) must lie in p^(-l N): beta = {} is not a multiple of (n - m1) l = {w}",
                self.beta
            ));
        }
        Ok(self.beta / w)
    }

    pub fn theta_in_j(&self, theta: &PadicScalar) -> bool {
        let d = theta - &self.ctx.int(self.j_center);
        d.valuation().is_none_or(|v| v >= self.j_depth as i64)
    }

    /// Frame coordinates `lambda` with `xi = sum lambda_j gamma^{(j)}(theta)`.
    pub fn coordinates(&self, xi: &PadicVector, theta: &PadicScalar) -> Result<PadicVector> {
        a_theta(self.ctx, self.n, theta)?.solve(xi)
    }

    /// `sum lambda_j gamma^{(j)}(theta)`.
    pub fn point(&self, lambda: &PadicVector, theta: &PadicScalar) -> Result<PadicVector> {
        Ok(a_theta(self.ctx, self.n, theta)?.mul_vec(lambda))
    }
}

fn val(x: &PadicScalar) -> Option<i64> {
    x.valuation()
}

/// `lambda` in `Z_p^n`, `max |lambda_j| = 1`, `|lambda_j| <= delta` for `j > m`.
pub fn in_omega_j(spec: &ConeRegionSpec, lambda: &PadicVector) -> bool {
    lambda.iter().all(PadicScalar::is_integral)
        && lambda.iter().any(PadicScalar::is_unit)
        && lambda
            .iter()
            .skip(spec.m)
            .all(|x| val(x).is_none_or(|v| v >= spec.beta as i64))
}

/// `|lambda_{m1}| = 1` and `|lambda_j| < 1` for `j` in `(m1, m]`.
pub fn in_class(spec: &ConeRegionSpec, lambda: &PadicVector, m1: usize) -> bool {
    in_omega_j(spec, lambda)
        && lambda[m1 - 1].is_unit()
        && (m1..spec.m).all(|j| !lambda[j].is_unit())
}

/// The slice `s1 = p^{-k l}` of class `m1`, literally:
/// (`s1 = delta^{1/(n-m1)}` or some `iota` in `[1, m-m1]` has `s1^iota <= |lambda_{m1+iota}|`) and
/// every such `iota` has `p^{iota l} s1^iota > |lambda_{m1+iota}|`.
pub fn in_slice(spec: &ConeRegionSpec, lambda: &PadicVector, m1: usize, k: u32) -> Result<bool> {
    let kmax = spec.slice_count(m1)?;
    if k == 0 || k > kmax || !in_class(spec, lambda, m1) {
        return Ok(false);
    }
    let l = spec.l as i64;
    let k = k as i64;
    let iotas = 1..=(spec.m - m1) as i64;
    let v = |iota: i64| val(&lambda[m1 - 1 + iota as usize]);
    let reaches = k == kmax as i64 || iotas.clone().any(|i| v(i).is_some_and(|v| v <= k * l * i));
    let below = iotas
        .into_iter()
        .all(|i| v(i).is_none_or(|v| v > (k - 1) * l * i));
    Ok(reaches && below)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeCell {
    pub m1: usize,
    /// `s1 = p^{-k l}`.
    pub k: u32,
    /// `lambda_{m1} mod p^k`.
    pub b: u64,
    /// `lambda_j mod p^k` for `j < m1`.
    pub r: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConeClass {
    Outside,
    Inside(ConeCell),
}

/// Classifies `xi` against the regions anchored at `theta`.
pub fn cone_classify(
    xi: &PadicVector,
    theta: &PadicScalar,
    spec: &ConeRegionSpec,
) -> Result<ConeClass> {
    if xi.dim() != spec.n {
        return invalid(format!(
            "frequency has dimension {}, regions live in dimension {}",
            xi.dim(),
            spec.n
        ));
    }
    if !spec.theta_in_j(theta) {
        return Ok(ConeClass::Outside);
    }
    let lambda = spec.coordinates(xi, theta)?;
    classify_coordinates(spec, &lambda)
}

pub fn classify_coordinates(spec: &ConeRegionSpec, lambda: &PadicVector) -> Result<ConeClass> {
    if !in_omega_j(spec, lambda) {
        return Ok(ConeClass::Outside);
    }
    let m1 = (1..=spec.m)
        .rev()
        .find(|&j| lambda[j - 1].is_unit())
        .expect("Omega_J forces a unit among the first m");
    let kmax = spec.slice_count(m1)?;
    let l = spec.l as f64;
    let r = (1..=spec.m - m1)
        .filter_map(|i| val(&lambda[m1 - 1 + i]).map(|v| v as f64 / (l * i as f64)))
        .fold(f64::INFINITY, f64::min);
    let k = if r.is_finite() {
        (r.ceil() as u32).min(kmax)
    } else {
        kmax
    };
    let b = lambda[m1 - 1].residue_u64(k)?;
    let rs = (0..m1 - 1)
        .map(|j| lambda[j].residue_u64(k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConeClass::Inside(ConeCell { m1, k, b, r: rs }))
}

/// Random frame coordinates in `Omega_J` with a random class and valuations spread over the
/// slice thresholds.
pub fn sample_omega_coordinates<R: Rng>(spec: &ConeRegionSpec, rng: &mut R) -> PadicVector {
    let ctx = spec.ctx;
    let top = rng.random_range(1..=spec.m);
    let span = (spec.beta as i64 + 2).max(2);
    let entries = (1..=spec.n)
        .map(|j| {
            let unit = crate::padic::random::random_unit(ctx, rng);
            let v = if j == top {
                0
            } else if j > spec.m {
                spec.beta as i64 + rng.random_range(0..3)
            } else if j > top {
                rng.random_range(1..=span)
            } else {
                rng.random_range(0..=span)
            };
            if rng.random_bool(0.05) && j != top {
                ctx.zero()
            } else {
                &unit * &ctx.p_power(v)
            }
        })
        .collect();
    PadicVector::new(ctx, entries)
}

/// One step `(m_j, n_j, s_j)` with `s_j = p^{-e}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RescaleStep {
    pub m1: usize,
    pub n1: usize,
    pub e: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RescaleKind {
    L,
    LInverse,
    R,
    D,
}

/// Operator parameters: ambient `n`, the split `m`, `eps = 1/l`, and the steps in order of
/// application.
#[derive(Clone, Debug, PartialEq)]
pub struct RescaleParams {
    pub ctx: PadicContext,
    pub n: usize,
    pub m: usize,
    pub l: u32,
    pub steps: Vec<RescaleStep>,
}

impl RescaleParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > self.n || self.l == 0 {
            return invalid(format!(
                "need 1 <= m <= n and l >= 1, got n = {}, m = {}, l = {}",
                self.n, self.m, self.l
            ));
        }
        for s in &self.steps {
            if s.m1 == 0 || s.m1 > self.m {
                return invalid(format!("m1 = {} outside [1, {}]", s.m1, self.m));
            }
            if s.n1 < self.m || s.n1 > self.n {
                return invalid(format!("n1 = {} outside [{}, {}]", s.n1, self.m, self.n));
            }
            if s.e % self.l != 0 {
                return invalid(format!(
                    "s = p^-{} is not in p^(-l N) for l = {}",
                    s.e, self.l
                ));
            }
        }
        Ok(())
    }

    /// `log_p` of `s^circ`, i.e. `-(sum e_j)`.
    pub fn s_circ_exponent(&self) -> i64 {
        -self.steps.iter().map(|s| s.e as i64).sum::<i64>()
    }

    fn s_pow(&self, step: &RescaleStep, k: i64) -> PadicScalar {
        self.ctx.p_power(-(step.e as i64) * k)
    }

    /// Diagonal multiplier of one step at coordinate `j` (1-based).
    fn factor(&self, kind: RescaleKind, step: &RescaleStep, j: usize) -> PadicScalar {
        let (j, m1) = (j as i64, step.m1 as i64);
        match kind {
            RescaleKind::L => self.s_pow(step, -(j - m1).max(0)),
            RescaleKind::LInverse => self.s_pow(step, (j - m1).max(0)),
            RescaleKind::R => self.s_pow(step, 1 - j.min(m1)),
            RescaleKind::D => {
                let (m, n1) = (self.m as i64, step.n1 as i64);
                if j <= m1 {
                    self.s_pow(step, j - 1)
                } else if j <= m {
                    &self.ctx.p_power(-(j - m1) * self.l as i64) * &self.s_pow(step, m1 - 1)
                } else if j <= n1 {
                    self.s_pow(step, m1 - 1)
                } else {
                    self.ctx.one()
                }
            }
        }
    }

    fn apply_step(&self, kind: RescaleKind, step: &RescaleStep, xi: &PadicVector) -> PadicVector {
        PadicVector::new(
            self.ctx,
            xi.iter()
                .enumerate()
                .map(|(i, x)| x * &self.factor(kind, step, i + 1))
                .collect(),
        )
    }
}

/// The composed operator: `L`, `R` and `D` apply step 1 first; `LInverse` undoes the composed
/// `L` and so applies the last step first.
pub fn rescaling_op(
    kind: RescaleKind,
    params: &RescaleParams,
    xi: &PadicVector,
) -> Result<PadicVector> {
    params.validate()?;
    if xi.dim() != params.n {
        return invalid(format!(
            "vector has dimension {}, operators act on dimension {}",
            xi.dim(),
            params.n
        ));
    }
    let mut out = xi.clone();
    if kind == RescaleKind::LInverse {
        for s in params.steps.iter().rev() {
            out = params.apply_step(kind, s, &out);
        }
    } else {
        for s in &params.steps {
            out = params.apply_step(kind, s, &out);
        }
    }
    Ok(out)
}

/// Both sides of `R gamma(theta) = s^circ L^{-1} gamma(s^{-circ} theta)`.
pub fn rescaled_gamma_sides(
    params: &RescaleParams,
    theta: &PadicScalar,
) -> Result<(PadicVector, PadicVector)> {
    let ctx = params.ctx;
    let lhs = rescaling_op(
        RescaleKind::R,
        params,
        &moment_curve_eval(ctx, params.n, theta)?,
    )?;
    let sc = params.s_circ_exponent();
    let inner = moment_curve_eval(ctx, params.n, &(&ctx.p_power(-sc) * theta))?;
    let rhs = rescaling_op(RescaleKind::LInverse, params, &inner)?.scale(&ctx.p_power(sc));
    Ok((lhs, rhs))
}

pub fn rescaled_gamma_check(params: &RescaleParams, theta: &PadicScalar) -> Result<bool> {
    let (a, b) = rescaled_gamma_sides(params, theta)?;
    Ok(a.eq_padic(&b))
}

/// Whether `next` is adapted to the steps so far at scale `delta = p^{-beta}`:
/// `(delta prod s_j^{-(n_J-1-m_j)})^{1/(n_{J+1}-m_{J+1})} <= s_{J+1} < 1`.
pub fn is_adapted(params: &RescaleParams, beta: u32, next: &RescaleStep) -> bool {
    if next.e == 0 || next.n1 <= next.m1 {
        return false;
    }
    let n_j = params.steps.last().map_or(params.n, |s| s.n1) as i64;
    let budget: i64 = beta as i64
        - params
            .steps
            .iter()
            .map(|s| s.e as i64 * (n_j - 1 - s.m1 as i64))
            .sum::<i64>();
    (next.e as i64) * (next.n1 - next.m1) as i64 <= budget
}
