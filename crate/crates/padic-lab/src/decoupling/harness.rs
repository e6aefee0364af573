use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{invalid, LabError, Result};
use crate::fourier::{lq_norm, LatticeFunction};
use crate::padic::{PadicContext, PadicMatrix, PadicVector};

use super::caps::{Cap, CapSystem, FunctionTuple};
use super::ratio::{
    decoupling_ratio, flat_bound, lq_power_sum, sample_spectra, sample_tuple, trial_rng, Strategy,
};

/// Relative slack for the per-tuple identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
/// Slack for inequalities that can hold with equality.
const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LemmaId {
    Flat,
    Interpolation,
    AffineInvariance,
    Local,
    Tensorization,
    Cylindrical,
    Multiplicativity,
    Recoupling,
    Parabola,
}

impl LemmaId {
    pub const ALL: [LemmaId; 9] = [
        LemmaId::Flat,
        LemmaId::Interpolation,
        LemmaId::AffineInvariance,
        LemmaId::Local,
        LemmaId::Tensorization,
        LemmaId::Cylindrical,
        LemmaId::Multiplicativity,
        LemmaId::Recoupling,
        LemmaId::Parabola,
    ];

    /// Sup-level statements that a lower bound can only falsify.
    pub fn one_sided(&self) -> bool {
        matches!(self, LemmaId::Interpolation | LemmaId::Multiplicativity)
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaId::Flat => "flat",
            LemmaId::Interpolation => "interpolation",
            LemmaId::AffineInvariance => "affine",
            LemmaId::Local => "local",
            LemmaId::Tensorization => "tensor",
            LemmaId::Cylindrical => "cylindrical",
            LemmaId::Multiplicativity => "multiplicativity",
            LemmaId::Recoupling => "recoupling",
            LemmaId::Parabola => "parabola",
        })
    }
}

impl FromStr for LemmaId {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| LabError::InvalidParameter(format!("unknown lemma '{s}'")))
    }
}

/// Parameters of one randomized harness instance. `count` is the number of caps and must be a
/// power of `p`; the caps partition `Z_p^dim` into cosets of a random lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnessInstance {
    pub p: u64,
    pub dim: usize,
    pub count: usize,
    pub q: f64,
    pub r: f64,
    pub strategy: Strategy,
    pub seed: u64,
    pub trial: u64,
}

impl HarnessInstance {
    /// First 16 hex digits of the SHA-256 of the instance description.
    pub fn hash(&self) -> String {
        let text = format!(
            "p={};dim={};count={};q={};r={};strategy={};seed={};trial={}",
            self.p, self.dim, self.count, self.q, self.r, self.strategy, self.seed, self.trial
        );
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn log_count(&self) -> Result<u32> {
        let mut k = 0u32;
        let mut c = 1usize;
        while c < self.count {
            c *= self.p as usize;
            k += 1;
        }
        if c != self.count {
            return invalid(format!(
                "cap count {} is not a power of p = {}",
                self.count, self.p
            ));
        }
        Ok(k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationRecord {
    pub lemma: LemmaId,
    pub instance_hash: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub seed: u64,
    pub one_sided: bool,
}

impl VerificationRecord {
    pub const CSV_HEADER: &'static str = "lemma,instance_hash,lhs,rhs,pass,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.12e},{:.12e},{},{}",
            self.lemma, self.instance_hash, self.lhs, self.rhs, self.pass, self.seed
        )
    }
}

/// A random element of `GL_d(Z)` (unit lower times unit upper triangular).
fn random_unimodular<R: Rng>(ctx: PadicContext, d: usize, rng: &mut R) -> PadicMatrix {
    let lo = PadicMatrix::from_fn(ctx, d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => ctx.one(),
        std::cmp::Ordering::Greater => ctx.int(rng.random_range(-2..=2)),
        std::cmp::Ordering::Less => ctx.zero(),
    });
    let up = PadicMatrix::from_fn(ctx, d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => ctx.one(),
        std::cmp::Ordering::Less => ctx.int(rng.random_range(-2..=2)),
        std::cmp::Ordering::Greater => ctx.zero(),
    });
    lo.mul(&up)
}

/// `U diag(p^{k_i})` with a random split `sum k_i = k`.
fn random_lattice<R: Rng>(ctx: PadicContext, d: usize, k: u32, rng: &mut R) -> PadicMatrix {
    let mut exps = vec![0u32; d];
    for _ in 0..k {
        exps[rng.random_range(0..d)] += 1;
    }
    let diag: Vec<_> = exps.iter().map(|&e| ctx.p_power(e as i64)).collect();
    random_unimodular(ctx, d, rng).mul(&PadicMatrix::diagonal(ctx, &diag))
}

/// A random partition of `Z_p^d` into `p^k` lattice cosets.
pub fn random_partition<R: Rng>(
    ctx: PadicContext,
    d: usize,
    k: u32,
    rng: &mut R,
) -> Result<CapSystem> {
    CapSystem::lattice_partition(ctx, &random_lattice(ctx, d, k, rng))
}

/// Spatial grid with one extra level of frequency resolution beyond what the caps need.
fn roomy_grid(caps: &CapSystem) -> (u32, u32) {
    let (a, b) = caps.grid();
    (a + 1, b)
}

fn record(
    lemma: LemmaId,
    inst: &HarnessInstance,
    lhs: f64,
    rhs: f64,
    pass: bool,
) -> VerificationRecord {
    VerificationRecord {
        lemma,
        instance_hash: inst.hash(),
        lhs,
        rhs,
        pass,
        seed: inst.seed,
        one_sided: lemma.one_sided(),
    }
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= IDENTITY_TOLERANCE * x.abs().max(y.abs()).max(1e-300)
}

fn at_most(x: f64, y: f64) -> bool {
    x <= y * (1.0 + INEQUALITY_SLACK) + INEQUALITY_SLACK
}

/// `G(xi) = F(A^{-1}(xi - v))` for a spectrum `F`, on a frequency grid large enough to hold the
/// image and fine enough to resolve it.
pub fn resample_spectrum(
    ctx: PadicContext,
    spectrum: &LatticeFunction,
    a: &PadicMatrix,
    shift: &PadicVector,
) -> Result<LatticeFunction> {
    let a_inv = a.inverse()?;
    let image = Cap::new(shift.clone(), a.clone())?;
    let support = spectrum.a() + image.extent().max(0) as u32;
    let cells = spectrum.b() + image.depth().max(0) as u32;
    let mut failure = None;
    let g =
        LatticeFunction::from_point_fn(ctx, spectrum.dim(), support, cells, |xi| {
            match spectrum.value_at(&a_inv.mul_vec(&xi.sub(shift))) {
                Ok(z) => z,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

fn base_tuple<R: Rng>(
    inst: &HarnessInstance,
    rng: &mut R,
) -> Result<(CapSystem, (u32, u32), FunctionTuple)> {
    let ctx = PadicContext::with_default_precision(inst.p)?;
    let caps = random_partition(ctx, inst.dim, inst.log_count()?, rng)?;
    let grid = roomy_grid(&caps);
    let tuple = sample_nonzero(&caps, grid, inst.q, inst.r, inst.strategy, rng)?;
    Ok((caps, grid, tuple))
}

fn sample_nonzero<R: Rng>(
    caps: &CapSystem,
    grid: (u32, u32),
    q: f64,
    r: f64,
    strategy: Strategy,
    rng: &mut R,
) -> Result<FunctionTuple> {
    sample_tuple(caps, grid.0, grid.1, q, r, strategy, rng)
}

/// Runs one lemma on one instance.
pub fn lemma_harness(lemma: LemmaId, inst: &HarnessInstance) -> Result<VerificationRecord> {
    let mut rng = trial_rng(inst.seed, inst.trial);
    let rng = &mut rng;
    match lemma {
        LemmaId::Flat => {
            let (caps, _, tuple) = base_tuple(inst, rng)?;
            let lhs = decoupling_ratio(&tuple)?;
            let rhs = flat_bound(caps.len(), inst.q, inst.r);
            Ok(record(lemma, inst, lhs, rhs, at_most(lhs, rhs)))
        }
        LemmaId::Interpolation => {
            if !(inst.r >= 2.0) {
                return invalid("interpolation between L^2 and L^inf needs r >= 2");
            }
            let (caps, _, tuple) = base_tuple(inst, rng)?;
            let lhs = decoupling_ratio(&tuple)?;
            let alpha = 2.0 / inst.r;
            let n = caps.len();
            let rhs = flat_bound(n, inst.q, 2.0).powf(alpha)
                * flat_bound(n, inst.q, f64::INFINITY).powf(1.0 - alpha);
            Ok(record(lemma, inst, lhs, rhs, at_most(lhs, rhs)))
        }
        LemmaId::AffineInvariance => {
            let (caps, _, tuple) = base_tuple(inst, rng)?;
            let ctx = caps.context();
            let d = inst.dim;
            let mut diag = vec![ctx.one(); d];
            diag[0] = ctx.p_power(1);
            let a = PadicMatrix::diagonal(ctx, &diag).mul(&random_unimodular(ctx, d, rng));
            let shift = PadicVector::new(
                ctx,
                (0..d)
                    .map(|_| ctx.int(rng.random_range(0..ctx.p as i64 * 3)))
                    .collect(),
            );
            let moved = caps.transformed(&a, &shift)?;
            let spectra: Vec<LatticeFunction> = tuple
                .functions()
                .iter()
                .map(|f| resample_spectrum(ctx, &crate::fourier::fourier_transform(f), &a, &shift))
                .collect::<Result<_>>()?;
            let image = FunctionTuple::from_spectra(moved, &spectra, inst.q, inst.r)?;
            let lhs = decoupling_ratio(&image)?;
            let rhs = decoupling_ratio(&tuple)?;
            Ok(record(lemma, inst, lhs, rhs, close(lhs, rhs)))
        }
        LemmaId::Local => local_check(inst, rng),
        LemmaId::Tensorization | LemmaId::Cylindrical => {
            let (caps, grid, tuple) = base_tuple(inst, rng)?;
            let ctx = caps.context();
            let (other_caps, other) = if lemma == LemmaId::Tensorization {
                let c2 = random_partition(ctx, 1, 1, rng)?;
                let g2 = roomy_grid(&c2);
                let t2 = sample_nonzero(&c2, g2, inst.q, inst.r, inst.strategy, rng)?;
                (c2, t2)
            } else {
                // the single cylinder cap is the whole frequency grid of the second factor
                let (a, b) = grid;
                let cap = Cap::new(
                    PadicVector::zeros(ctx, 1),
                    PadicMatrix::diagonal(ctx, &[ctx.p_power(-(b as i64))]),
                )?;
                let c2 = CapSystem::new(ctx, vec![cap], "cylinder fibre")?;
                let spectra = sample_spectra(&c2, a, b, Strategy::GaussianCoefficients, rng)?;
                let t2 = FunctionTuple::from_spectra(c2.clone(), &spectra, inst.q, inst.r)?;
                (c2, t2)
            };
            let prod_caps = caps.product(&other_caps)?;
            let mut fs = Vec::with_capacity(prod_caps.len());
            for f in tuple.functions() {
                for g in other.functions() {
                    fs.push(f.tensor(g)?);
                }
            }
            let prod = FunctionTuple::new(prod_caps, fs, inst.q, inst.r)?;
            let lhs = decoupling_ratio(&prod)?;
            let rhs = if lemma == LemmaId::Tensorization {
                decoupling_ratio(&tuple)? * decoupling_ratio(&other)?
            } else {
                decoupling_ratio(&tuple)?
            };
            Ok(record(lemma, inst, lhs, rhs, close(lhs, rhs)))
        }
        LemmaId::Multiplicativity => {
            let ctx = PadicContext::with_default_precision(inst.p)?;
            let k = inst.log_count()?;
            if k < 2 {
                return invalid(
                    "multiplicativity needs at least p^2 caps to split into two levels",
                );
            }
            let coarse_k = rng.random_range(1..k);
            let coarse = random_lattice(ctx, inst.dim, coarse_k, rng);
            let fine = coarse.mul(&random_lattice(ctx, inst.dim, k - coarse_k, rng));
            let caps = CapSystem::lattice_partition(ctx, &fine)?;
            let grid = roomy_grid(&caps);
            let tuple = sample_nonzero(&caps, grid, inst.q, inst.r, inst.strategy, rng)?;
            let lhs = decoupling_ratio(&tuple)?;
            let sub = inst.p.pow(k - coarse_k) as usize;
            let rhs = flat_bound(inst.p.pow(coarse_k) as usize, inst.q, inst.r)
                * flat_bound(sub, inst.q, inst.r);
            Ok(record(lemma, inst, lhs, rhs, at_most(lhs, rhs)))
        }
        LemmaId::Recoupling => {
            let (caps, _, tuple) = base_tuple(inst, rng)?;
            let r = inst.r;
            let lhs = lq_power_sum(tuple.functions(), 2.0, r)?;
            let rhs = (caps.len() as f64).powf(0.5 - 1.0 / r) * lq_norm(&tuple.sum(), r)?;
            Ok(record(lemma, inst, lhs, rhs, at_most(lhs, rhs)))
        }
        LemmaId::Parabola => {
            let ctx = PadicContext::with_default_precision(inst.p)?;
            let caps = CapSystem::parabola(ctx, 1)?;
            let grid = caps.grid();
            let omega = parabola_cells(ctx, grid)?;
            let covered = caps.covered_cells(grid.0, grid.1)?;
            let exact = caps.pairwise_disjoint(grid.0, grid.1)? && covered == omega;
            let tuple = sample_nonzero(&caps, grid, inst.q, inst.r, inst.strategy, rng)?;
            let lhs = decoupling_ratio(&tuple)?;
            let rhs = flat_bound(caps.len(), inst.q, inst.r);
            Ok(record(lemma, inst, lhs, rhs, exact && at_most(lhs, rhs)))
        }
    }
}

/// Number of frequency cells of the grid inside `{|x| <= 1, |y - x^2| <= p^{-2}}`.
fn parabola_cells(ctx: PadicContext, grid: (u32, u32)) -> Result<usize> {
    let freq = LatticeFunction::zeros(ctx.p, 2, grid.1, grid.0)?;
    let mut count = 0;
    for i in 0..freq.len() {
        let x = freq.point_of(ctx, &freq.unflatten(i));
        let d = &x[1] - &(&x[0] * &x[0]);
        if x[0].is_integral() && d.valuation().is_none_or(|v| v >= 2) {
            count += 1;
        }
    }
    Ok(count)
}

/// Local decoupling on the balls `B(x, eta)`, `eta = max ||A_theta^{-1}||`: the `L^r` mass splits
/// exactly over the balls, every localized piece keeps its Fourier support, and the global ratio
/// is at most the largest local one.
fn local_check<R: Rng>(inst: &HarnessInstance, rng: &mut R) -> Result<VerificationRecord> {
    let (caps, grid, tuple) = base_tuple(inst, rng)?;
    let ctx = caps.context();
    let (a, b) = grid;
    let e = caps.depth();
    if e < -(b as i64) || e >= a as i64 {
        return invalid("grid too coarse for a nontrivial ball decomposition");
    }
    let r = inst.r;
    let global = decoupling_ratio(&tuple)?;
    let total = tuple.sum();
    let step = ctx.p.pow((a as i64 - e) as u32);
    let d = inst.dim;
    let mut max_local: f64 = 0.0;
    let mut pieces = 0.0;
    let mut ok = true;
    // balls x + p^{-e} Z_p^d are the index classes k mod p^{a-e}
    for ball in crate::padic::cell_representatives(ctx.p, (a as i64 - e) as u32, d) {
        let indicator = LatticeFunction::from_index_fn(ctx.p, d, a, b, |k| {
            if k.iter().zip(&ball).all(|(&c, &o)| (c % step) == o) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })?;
        let local: Vec<LatticeFunction> = tuple
            .functions()
            .iter()
            .map(|f| f.mul(&indicator))
            .collect::<Result<_>>()?;
        let local = FunctionTuple::new(caps.clone(), local, inst.q, r)?;
        if local.is_zero() {
            continue;
        }
        let sum_local = lq_norm(&local.sum(), r)?;
        if r.is_finite() {
            pieces += sum_local.powf(r);
        } else {
            pieces = pieces.max(sum_local);
        }
        if lq_power_sum(local.functions(), inst.q, r)? > 0.0 {
            max_local = max_local.max(decoupling_ratio(&local)?);
        }
    }
    let whole = lq_norm(&total, r)?;
    let whole = if r.is_finite() { whole.powf(r) } else { whole };
    ok &= close(pieces, whole);
    Ok(record(
        LemmaId::Local,
        inst,
        global,
        max_local,
        ok && at_most(global, max_local),
    ))
}

/// Runs `trials` instances derived from `base` (trial index `0..trials`) in parallel.
pub fn run_harness(
    lemma: LemmaId,
    base: &HarnessInstance,
    trials: u64,
) -> Result<Vec<VerificationRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = HarnessInstance {
                trial: t,
                ..base.clone()
            };
            lemma_harness(lemma, &inst)
        })
        .collect()
}
