use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::exceptional::{exceptional_sets, ExceptionalParams, Threshold};
use super::fractal::{nu_t_masses, FiniteFractalSet};
use super::tubes::{kakeya_experiment, KakeyaParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    AlphaRegular {
        seed: u64,
        #[serde(default)]
        alpha: Option<f64>,
    },
    Cantor {
        digits: Vec<u64>,
    },
    Points {
        points: Vec<Vec<u64>>,
    },
}

/// Inputs of a projection run. `b0` and `b1` must be powers `p^-k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    pub p: u64,
    pub n: usize,
    pub m: usize,
    pub l0: u32,
    pub b0: f64,
    pub b1: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub threshold_exponent: Option<f64>,
    #[serde(default)]
    pub bad_t_level: Option<f64>,
    #[serde(default = "one")]
    pub kakeya_min_points: u64,
}

fn one() -> u64 {
    1
}

/// Bodies of the three output tables, each with its header row.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionOutputs {
    pub nu_t_masses: String,
    pub exceptional: String,
    pub kakeya: String,
}

/// The `k` with `b = p^-k`, rejecting anything that is not such a power.
pub fn scale_exponent(p: u64, b: f64) -> Result<u32> {
    if !(b > 0.0 && b <= 1.0) {
        return invalid(format!("scale {b} must lie in (0, 1]"));
    }
    let k = (-b.ln() / (p as f64).ln()).round();
    if k > 60.0 || ((p as f64).powi(-(k as i32)) - b).abs() > 1e-9 * b {
        return invalid(format!("scale {b} is not a power p^-k for p = {p}"));
    }
    Ok(k as u32)
}

fn power_fraction(p: u64, k: u32) -> String {
    if k == 0 {
        "1".into()
    } else {
        format!("1/{}", p.pow(k))
    }
}

impl ProjectionConfig {
    pub fn build_set(&self) -> Result<FiniteFractalSet> {
        match &self.generator {
            GeneratorConfig::AlphaRegular { seed, alpha } => FiniteFractalSet::alpha_regular(
                self.p,
                self.n,
                self.l0,
                alpha.unwrap_or(self.alpha),
                *seed,
            ),
            GeneratorConfig::Cantor { digits } => {
                FiniteFractalSet::cantor(self.p, self.n, self.l0, digits)
            }
            GeneratorConfig::Points { points } => {
                FiniteFractalSet::from_points(self.p, self.n, self.l0, points.clone())
            }
        }
    }

    /// `(k0, k1)` with `b0 = p^-k0`, `b1 = p^-k1`.
    pub fn scales(&self) -> Result<(u32, u32)> {
        let k0 = scale_exponent(self.p, self.b0)?;
        let k1 = scale_exponent(self.p, self.b1)?;
        if k1 > k0 {
            return invalid(format!(
                "need b0 <= b1, got b0 = {}, b1 = {}",
                self.b0, self.b1
            ));
        }
        if k0 > self.l0 {
            return invalid(format!(
                "b0 = {} is finer than the set's depth l0 = {}",
                self.b0, self.l0
            ));
        }
        Ok((k0, k1))
    }

    pub fn validate(&self) -> Result<()> {
        self.scales()?;
        if self.m == 0 || self.m > self.n {
            return invalid(format!("m = {} must lie in 1..={}", self.m, self.n));
        }
        if self.p < self.n as u64 {
            return invalid(format!(
                "the projection needs p > n - 1 (p = {}, n = {})",
                self.p, self.n
            ));
        }
        if !(self.epsilon > 0.0) {
            return invalid(format!("epsilon = {} must be positive", self.epsilon));
        }
        if !(self.alpha > 0.0) {
            return invalid(format!("alpha = {} must be positive", self.alpha));
        }
        Ok(())
    }
}

/// Sweeps every scale `b = p^-k` with `b0 <= b <= b1`: pushforward masses and exceptional sets
/// at each, and the Kakeya count at each `delta > b0`.
pub fn run_projection_experiment(cfg: &ProjectionConfig) -> Result<ProjectionOutputs> {
    cfg.validate()?;
    let (k0, k1) = cfg.scales()?;
    let f = cfg.build_set()?;
    let p = cfg.p;

    let mut masses = String::from("t,center,b,mass\n");
    for k in k1..=k0 {
        for t in 0..p.pow(k) {
            for row in nu_t_masses(&f, t, cfg.m, k)? {
                let center: Vec<String> = row.center.iter().map(|c| c.to_string()).collect();
                writeln!(
                    masses,
                    "{t},{},{},{}",
                    center.join(";"),
                    power_fraction(p, k),
                    row.mass
                )
                .unwrap();
            }
        }
    }

    let mut par = ExceptionalParams::new(cfg.m, cfg.alpha, cfg.epsilon, k0);
    par.threshold = cfg.threshold_exponent.map(Threshold::Exponent);
    par.bad_t_level = cfg.bad_t_level;
    let mut exceptional = String::from("b,bad_t_fraction,worst_t,bad_w_fraction\n");
    for k in k1..=k0 {
        let rec = exceptional_sets(&f, &par, k)?;
        writeln!(
            exceptional,
            "{},{},{},{}",
            power_fraction(p, k),
            rec.bad_t_fraction(),
            rec.worst().t,
            rec.bad_w_fraction()
        )
        .unwrap();
    }

    let kp = KakeyaParams {
        m: cfg.m,
        alpha: cfg.alpha,
        eps: cfg.epsilon,
        k0,
        min_points: cfg.kakeya_min_points,
    };
    let mut kakeya = String::from("delta,W_count,incidence_min,incidence_max,log_bound\n");
    for k in k1..k0 {
        let row = kakeya_experiment(&f, &kp, k)?;
        writeln!(
            kakeya,
            "{},{},{},{},{:.6e}",
            power_fraction(p, k),
            row.w_count,
            row.incidence_min,
            row.incidence_max,
            row.log_bound
        )
        .unwrap();
    }
    Ok(ProjectionOutputs {
        nu_t_masses: masses,
        exceptional,
        kakeya,
    })
}
