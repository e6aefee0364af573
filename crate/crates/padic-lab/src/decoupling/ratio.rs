use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, LabError, Result};
use crate::fourier::{lq_norm, LatticeFunction};
use crate::padic::{PadicContext, PadicVector};

use super::caps::{CapSystem, FunctionTuple};

/// `||sum f_theta||_r / (sum ||f_theta||_r^q)^{1/q}`.
pub fn decoupling_ratio(tuple: &FunctionTuple) -> Result<f64> {
    let (q, r) = (tuple.q(), tuple.r());
    let num = lq_norm(&tuple.sum(), r)?;
    let den = lq_power_sum(tuple.functions(), q, r)?;
    if den == 0.0 {
        return invalid("decoupling ratio of an all-zero tuple");
    }
    Ok(num / den)
}

/// `(sum_theta ||f_theta||_r^q)^{1/q}`.
pub(crate) fn lq_power_sum(fs: &[LatticeFunction], q: f64, r: f64) -> Result<f64> {
    let mut s = 0.0;
    for f in fs {
        s += lq_norm(f, r)?.powf(q);
    }
    Ok(s.powf(1.0 / q))
}

/// `(#Theta)^{1 - 1/r - 1/q}`.
pub fn flat_bound(count: usize, q: f64, r: f64) -> f64 {
    (count as f64).powf(1.0 - 1.0 / r - 1.0 / q)
}

/// How a random tuple is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// One randomly chosen cap carries a wave packet, the rest vanish.
    SingleWavePacket,
    /// Every cap carries its indicator in phase, so all packets peak together at the origin.
    ConstantPhase,
    /// Independent complex Gaussian values on every frequency cell of every cap.
    GaussianCoefficients,
    /// Each cap carries one wave packet at a random position with a random phase.
    RandomPhases,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::SingleWavePacket,
        Strategy::ConstantPhase,
        Strategy::GaussianCoefficients,
        Strategy::RandomPhases,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::SingleWavePacket => "single-packet",
            Strategy::ConstantPhase => "constant-phase",
            Strategy::GaussianCoefficients => "gaussian",
            Strategy::RandomPhases => "random-phases",
        })
    }
}

impl FromStr for Strategy {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| LabError::InvalidParameter(format!("unknown strategy '{s}'")))
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// A random spatial point of `p^{-a} Z_p^d` at the grid resolution.
fn random_position<R: Rng>(
    ctx: PadicContext,
    d: usize,
    a: u32,
    b: u32,
    rng: &mut R,
) -> PadicVector {
    let side = ctx.p.pow(a + b);
    let s = ctx.p_power(-(a as i64));
    PadicVector::new(
        ctx,
        (0..d)
            .map(|_| &s * &ctx.int(rng.random_range(0..side) as i64))
            .collect(),
    )
}

/// Spectra for one draw on spatial grid `(a, b)`.
pub fn sample_spectra<R: Rng>(
    caps: &CapSystem,
    a: u32,
    b: u32,
    strategy: Strategy,
    rng: &mut R,
) -> Result<Vec<LatticeFunction>> {
    let ctx = caps.context();
    let d = caps.dim();
    let masks = caps.cell_masks(a, b)?;
    let active = rng.random_range(0..caps.len());
    let mut out = Vec::with_capacity(caps.len());
    for (i, mask) in masks.iter().enumerate() {
        let mut f = LatticeFunction::zeros(ctx.p, d, b, a)?;
        match strategy {
            Strategy::GaussianCoefficients => {
                for (z, &m) in f.values_mut().iter_mut().zip(mask) {
                    if m {
                        *z = gaussian(rng);
                    }
                }
            }
            _ => {
                for (z, &m) in f.values_mut().iter_mut().zip(mask) {
                    if m {
                        *z = Complex64::new(1.0, 0.0);
                    }
                }
                match strategy {
                    Strategy::SingleWavePacket if i != active => {
                        f = f.scale(Complex64::new(0.0, 0.0))
                    }
                    Strategy::SingleWavePacket | Strategy::RandomPhases => {
                        let x = random_position(ctx, d, a, b, rng);
                        let phase = Complex64::from_polar(
                            1.0,
                            rng.random_range(0.0..std::f64::consts::TAU),
                        );
                        // the transform of a packet at x carries chi(-x . xi)
                        f = f.modulate(&x.scale(&ctx.int(-1)))?.scale(phase);
                    }
                    _ => {}
                }
            }
        }
        out.push(f);
    }
    Ok(out)
}

/// A certified random tuple on grid `(a, b)`.
pub fn sample_tuple<R: Rng>(
    caps: &CapSystem,
    a: u32,
    b: u32,
    q: f64,
    r: f64,
    strategy: Strategy,
    rng: &mut R,
) -> Result<FunctionTuple> {
    let spectra = sample_spectra(caps, a, b, strategy, rng)?;
    FunctionTuple::from_spectra(caps.clone(), &spectra, q, r)
}

/// Per-trial generator: a function of `(seed, trial)` only, so sweeps do not depend on the
/// number of worker threads.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Lower-bound search summary: the best certified ratio found, an optional conjectured value,
/// and the natural log of a known upper bound.
#[derive(Clone, Debug)]
pub struct DecouplingEstimate {
    pub lower_bound: f64,
    pub witness_strategy: Strategy,
    pub witness_trial: u64,
    pub conjectured: Option<f64>,
    pub log_upper_bound: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// Runs `trials` draws of every strategy and keeps the largest ratio.
pub fn estimate(
    caps: &CapSystem,
    grid: (u32, u32),
    q: f64,
    r: f64,
    trials: u64,
    seed: u64,
) -> Result<DecouplingEstimate> {
    if trials == 0 {
        return invalid("need at least one trial");
    }
    caps.cell_masks(grid.0, grid.1)?;
    let results: Vec<(f64, Strategy, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, Strategy, u64)> {
            let mut rng = trial_rng(seed, t);
            let mut best = (0.0, Strategy::SingleWavePacket, t);
            for s in Strategy::ALL {
                let tuple = sample_tuple(caps, grid.0, grid.1, q, r, s, &mut rng)?;
                let v = decoupling_ratio(&tuple)?;
                if v > best.0 {
                    best = (v, s, t);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let best = results
        .into_iter()
        .fold((0.0, Strategy::SingleWavePacket, 0), |acc, x| {
            if x.0 > acc.0 {
                x
            } else {
                acc
            }
        });
    Ok(DecouplingEstimate {
        lower_bound: best.0,
        witness_strategy: best.1,
        witness_trial: best.2,
        conjectured: None,
        log_upper_bound: None,
        trials,
        seed,
    })
}
