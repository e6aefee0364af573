use std::collections::HashMap;
use std::fmt;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::padic::{PadicContext, PadicMatrix, PadicScalar, PadicVector};

/// Largest set the generators will build.
pub const MAX_POINTS: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// Every base-`p` digit of every coordinate lies in `digits`.
    Cantor {
        digits: Vec<u64>,
    },
    /// Digit-subtree sampling with `branching` children per node.
    AlphaRegular {
        alpha: f64,
        branching: u64,
        seed: u64,
    },
    Points,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Cantor { digits } => write!(f, "cantor{digits:?}"),
            Generator::AlphaRegular {
                alpha,
                branching,
                seed,
            } => {
                write!(
                    f,
                    "alpha_regular(alpha={alpha}, branching={branching}, seed={seed})"
                )
            }
            Generator::Points => write!(f, "points"),
        }
    }
}

/// A finite subset of `Z_p^n`, each point stored as its residue vector mod `p^{l0}`.
/// Points are sorted and distinct.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteFractalSet {
    p: u64,
    n: usize,
    l0: u32,
    points: Vec<Vec<u64>>,
    generator: Generator,
}

fn modulus(p: u64, k: u32) -> Result<u64> {
    p.checked_pow(k)
        .filter(|m| *m < 1 << 62)
        .map_or_else(|| invalid(format!("p^{k} is too large for p = {p}")), Ok)
}

fn digit_vector(p: u64, n: usize, mut child: u64) -> Vec<u64> {
    let mut v = vec![0; n];
    for d in v.iter_mut() {
        *d = child % p;
        child /= p;
    }
    v
}

impl FiniteFractalSet {
    pub fn from_points(p: u64, n: usize, l0: u32, mut points: Vec<Vec<u64>>) -> Result<Self> {
        crate::padic::PadicContext::new(p, 1)?;
        let m = modulus(p, l0)?;
        if n == 0 {
            return invalid("a fractal set needs n >= 1");
        }
        for x in &points {
            if x.len() != n {
                return invalid(format!("point {x:?} does not have {n} coordinates"));
            }
            if x.iter().any(|&c| c >= m) {
                return invalid(format!("point {x:?} is not a residue vector mod p^{l0}"));
            }
        }
        let before = points.len();
        points.sort_unstable();
        points.dedup();
        if points.len() != before {
            return invalid(format!(
                "{} repeated points at depth {l0}",
                before - points.len()
            ));
        }
        Ok(Self {
            p,
            n,
            l0,
            points,
            generator: Generator::Points,
        })
    }

    pub fn cantor(p: u64, n: usize, l0: u32, digits: &[u64]) -> Result<Self> {
        let mut digits = digits.to_vec();
        digits.sort_unstable();
        digits.dedup();
        if digits.is_empty() || digits.iter().any(|&d| d >= p) {
            return invalid(format!(
                "Cantor digits {digits:?} must be a nonempty subset of 0..{p}"
            ));
        }
        let size = (digits.len() as f64).powi((n as u32 * l0) as i32);
        if size > MAX_POINTS as f64 {
            return invalid(format!("Cantor set would have {size} points"));
        }
        let mut coords = vec![0u64];
        let mut scale = 1u64;
        for _ in 0..l0 {
            coords = coords
                .iter()
                .flat_map(|&c| digits.iter().map(move |&d| c + d * scale))
                .collect();
            scale *= p;
        }
        let mut points = vec![vec![]];
        for _ in 0..n {
            points = points
                .into_iter()
                .flat_map(|v: Vec<u64>| {
                    coords.iter().map(move |&c| {
                        let mut w = v.clone();
                        w.push(c);
                        w
                    })
                })
                .collect();
        }
        let mut f = Self::from_points(p, n, l0, points)?;
        f.generator = Generator::Cantor { digits };
        Ok(f)
    }

    /// All of `[0, p^l)^n`.
    pub fn full_grid(p: u64, n: usize, l: u32) -> Result<Self> {
        Self::cantor(p, n, l, &(0..p).collect::<Vec<_>>())
    }

    /// Each node of the depth-`l0` digit tree keeps `ceil(p^alpha)` of its `p^n` children,
    /// chosen by a ChaCha8 stream seeded with `seed`.
    pub fn alpha_regular(p: u64, n: usize, l0: u32, alpha: f64, seed: u64) -> Result<Self> {
        let children = modulus(p, n as u32)?;
        if !(alpha > 0.0) || alpha > n as f64 {
            return invalid(format!("alpha = {alpha} must lie in (0, {n}]"));
        }
        let branching = ((p as f64).powf(alpha) - 1e-9)
            .ceil()
            .clamp(1.0, children as f64) as u64;
        let size = (branching as f64).powi(l0 as i32);
        if size > MAX_POINTS as f64 {
            return invalid(format!("alpha-regular set would have {size} points"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = vec![vec![0u64; n]];
        let mut scale = 1u64;
        for _ in 0..l0 {
            let mut next = Vec::with_capacity(points.len() * branching as usize);
            for x in &points {
                let mut picks = sample(&mut rng, children as usize, branching as usize).into_vec();
                picks.sort_unstable();
                for c in picks {
                    let d = digit_vector(p, n, c as u64);
                    next.push(x.iter().zip(&d).map(|(a, b)| a + b * scale).collect());
                }
            }
            points = next;
            scale *= p;
        }
        let mut f = Self::from_points(p, n, l0, points)?;
        f.generator = Generator::AlphaRegular {
            alpha,
            branching,
            seed,
        };
        Ok(f)
    }

    /// `F1 x F2` inside `Z_p^{n1 + n2}`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.p != other.p || self.l0 != other.l0 {
            return invalid("product needs the same prime and depth");
        }
        if (self.len() as f64) * (other.len() as f64) > MAX_POINTS as f64 {
            return invalid("product set is too large");
        }
        let points = self
            .points
            .iter()
            .flat_map(|x| {
                other
                    .points
                    .iter()
                    .map(move |y| x.iter().chain(y).copied().collect())
            })
            .collect();
        Self::from_points(self.p, self.n + other.n, self.l0, points)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> u32 {
        self.l0
    }

    pub fn points(&self) -> &[Vec<u64>] {
        &self.points
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_padic(&self, ctx: PadicContext) -> Vec<PadicVector> {
        self.points
            .iter()
            .map(|x| PadicVector::new(ctx, x.iter().map(|&c| ctx.int(c as i64)).collect()))
            .collect()
    }

    /// Number of points in each occupied ball `x + p^k Z_p^n`, keyed by the residue of `x`.
    pub fn ball_counts(&self, k: u32) -> Result<HashMap<Vec<u64>, u64>> {
        if k > self.l0 {
            return invalid(format!(
                "scale p^-{k} is finer than the set's depth {}",
                self.l0
            ));
        }
        let m = modulus(self.p, k)?;
        let mut out = HashMap::new();
        for x in &self.points {
            *out.entry(x.iter().map(|c| c % m).collect()).or_insert(0) += 1;
        }
        Ok(out)
    }
}

fn check_projection(p: u64, n: usize, m: usize) -> Result<()> {
    if p < n as u64 {
        return invalid(format!(
            "the projection needs p > n - 1 so its factorials are units (p = {p}, n = {n})"
        ));
    }
    if m == 0 || m > n {
        return invalid(format!("projection rank m = {m} must lie in 1..={n}"));
    }
    Ok(())
}

/// The `m x n` matrix of `Pi_t`: entry `(i, j)` is `t^{j-i}/(j-i)!` for `j >= i`.
pub fn projection_matrix(
    ctx: PadicContext,
    n: usize,
    m: usize,
    t: &PadicScalar,
) -> Result<PadicMatrix> {
    check_projection(ctx.p, n, m)?;
    if !t.is_integral() {
        return invalid("the projection parameter t must lie in Z_p");
    }
    let mut fact = vec![ctx.one()];
    for d in 1..n {
        let next = &fact[d - 1] * ctx.int(d as i64);
        fact.push(next);
    }
    let inv: Vec<PadicScalar> = fact.iter().map(|f| f.inv()).collect::<Result<_>>()?;
    Ok(PadicMatrix::from_fn(ctx, m, n, |i, j| {
        if j < i {
            ctx.zero()
        } else {
            t.pow((j - i) as u32) * &inv[j - i]
        }
    }))
}

/// `Pi_t^{(m)}` applied to every point of `F`, with multiplicity.
pub fn project(
    ctx: PadicContext,
    f: &FiniteFractalSet,
    t: &PadicScalar,
    m: usize,
) -> Result<Vec<PadicVector>> {
    if ctx.p != f.prime() {
        return invalid("context prime differs from the set's prime");
    }
    let a = projection_matrix(ctx, f.dim(), m, t)?;
    Ok(f.to_padic(ctx).iter().map(|x| a.mul_vec(x)).collect())
}

/// `Pi_t` reduced mod `p^k`, for `t` given as a residue. Images of points of `Z_p^n` mod `p^k`
/// depend only on `t mod p^k` and the points mod `p^k`.
#[derive(Clone, Debug)]
pub struct ProjectionKernel {
    n: usize,
    m: usize,
    modulus: u64,
    coeffs: Vec<u64>,
}

impl ProjectionKernel {
    pub fn new(p: u64, n: usize, m: usize, t: u64, k: u32) -> Result<Self> {
        check_projection(p, n, m)?;
        let modulus = modulus(p, k)?;
        let ctx = PadicContext::new(p, k.max(1))?;
        let a = projection_matrix(ctx, n, 1, &ctx.int((t % modulus) as i64))?;
        let coeffs = (0..n)
            .map(|d| a.get(0, d).residue_u64(k))
            .collect::<Result<_>>()?;
        Ok(Self {
            n,
            m,
            modulus,
            coeffs,
        })
    }

    pub fn apply(&self, x: &[u64]) -> Vec<u64> {
        let md = self.modulus as u128;
        (0..self.m)
            .map(|i| {
                (i..self.n).fold(0u128, |acc, j| {
                    (acc + self.coeffs[j - i] as u128 * (x[j] as u128 % md)) % md
                }) as u64
            })
            .collect()
    }
}

/// Counts of the pushforward `nu_t` on the balls `y + p^k Z_p^m`, keyed by `y mod p^k`.
/// Each point of `F` carries mass `1/#F`.
pub fn pushforward_counts(
    f: &FiniteFractalSet,
    t: u64,
    m: usize,
    k: u32,
) -> Result<HashMap<Vec<u64>, u64>> {
    if k > f.depth() {
        return invalid(format!(
            "scale p^-{k} is finer than the set's depth {}",
            f.depth()
        ));
    }
    let ker = ProjectionKernel::new(f.prime(), f.dim(), m, t, k)?;
    let mut out = HashMap::new();
    for x in f.points() {
        *out.entry(ker.apply(x)).or_insert(0) += 1;
    }
    Ok(out)
}

/// One row of the pushforward mass table.
#[derive(Clone, Debug, PartialEq)]
pub struct BallMass {
    pub t: u64,
    pub center: Vec<u64>,
    pub k: u32,
    pub mass: Ratio<u64>,
}

/// The occupied balls of `nu_t` at scale `p^-k`, sorted by center; masses sum to 1.
pub fn nu_t_masses(f: &FiniteFractalSet, t: u64, m: usize, k: u32) -> Result<Vec<BallMass>> {
    if f.is_empty() {
        return invalid("the pushforward of an empty set is not a probability measure");
    }
    let total = f.len() as u64;
    let mut rows: Vec<BallMass> = pushforward_counts(f, t, m, k)?
        .into_iter()
        .map(|(center, c)| BallMass {
            t,
            center,
            k,
            mass: Ratio::new(c, total),
        })
        .collect();
    rows.sort_by(|a, b| a.center.cmp(&b.center));
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleProfile {
    pub k: u32,
    /// Largest number of points in one ball of radius `p^-k`.
    pub max_count: u64,
    pub center: Vec<u64>,
}

/// `C = max_{x, b0 <= b} [#(F ∩ B(x,b))/#F] (b/b1)^{-alpha}` over `b = p^{-k}`, `0 <= k <= k0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrostmanReport {
    pub alpha: f64,
    pub k0: u32,
    pub k1: u32,
    pub total: u64,
    pub ln_constant: f64,
    pub constant: f64,
    pub witness_center: Vec<u64>,
    pub witness_k: u32,
    pub profile: Vec<ScaleProfile>,
}

impl FrostmanReport {
    /// Witness mass as an exact fraction.
    pub fn witness_mass(&self) -> Ratio<u64> {
        Ratio::new(self.profile[self.witness_k as usize].max_count, self.total)
    }
}

/// Exact Frostman constant at scales `b0 = p^-k0 <= b` relative to `b1 = p^-k1`. Balls of radius
/// at least 1 all hold the whole set, so `k = 0` stands in for every larger radius.
pub fn frostman_constant(
    f: &FiniteFractalSet,
    alpha: f64,
    k0: u32,
    k1: u32,
) -> Result<FrostmanReport> {
    if f.is_empty() {
        return invalid("the Frostman constant of an empty set is undefined");
    }
    if k1 > k0 {
        return invalid(format!("need b0 <= b1, got b0 = p^-{k0}, b1 = p^-{k1}"));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return invalid(format!("alpha = {alpha} must be finite and nonnegative"));
    }
    let total = f.len() as u64;
    let lnp = (f.prime() as f64).ln();
    let mut profile = Vec::new();
    let mut best: Option<(f64, u32)> = None;
    for k in 0..=k0 {
        let counts = f.ball_counts(k)?;
        let (center, max_count) = counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .expect("nonempty set");
        let v = (max_count as f64 / total as f64).ln() + alpha * (k as f64 - k1 as f64) * lnp;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, k));
        }
        profile.push(ScaleProfile {
            k,
            max_count,
            center,
        });
    }
    let (ln_constant, witness_k) = best.expect("at least one scale");
    Ok(FrostmanReport {
        alpha,
        k0,
        k1,
        total,
        ln_constant,
        constant: ln_constant.exp(),
        witness_center: profile[witness_k as usize].center.clone(),
        witness_k,
        profile,
    })
}

/// `c_alpha^{delta0}(nu) = sup_{x, r > delta0} nu(B(x,r))/r^alpha` for the uniform measure on `F`,
/// with `delta0 = p^-k0`.
pub fn c_alpha(f: &FiniteFractalSet, alpha: f64, k0: u32) -> Result<FrostmanReport> {
    frostman_constant(f, alpha, k0, 0)
}
