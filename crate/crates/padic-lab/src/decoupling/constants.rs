use std::fmt;
use std::str::FromStr;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::error::{invalid, LabError, Result};

/// Working precision in bits.
pub const CONSTANT_PRECISION: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstantKind {
    /// `C_eps` of the restricted projection theorem.
    Proj,
    /// `C_{n,p,eps}(c)` of the Kakeya-type incidence bound.
    Kakeya,
    /// `D_{n,p,eps}` of the plate decoupling proposition.
    DecProp,
    /// `C_{n,eps}` of moment-curve decoupling.
    MomentCurve,
    /// The explicit bound for `J_{s,n}(N)`.
    VinoBound,
}

impl ConstantKind {
    pub const ALL: [ConstantKind; 5] = [
        ConstantKind::Proj,
        ConstantKind::Kakeya,
        ConstantKind::DecProp,
        ConstantKind::MomentCurve,
        ConstantKind::VinoBound,
    ];
}

impl fmt::Display for ConstantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstantKind::Proj => "proj",
            ConstantKind::Kakeya => "kakeya",
            ConstantKind::DecProp => "decprop",
            ConstantKind::MomentCurve => "momentcurve",
            ConstantKind::VinoBound => "vinobound",
        })
    }
}

impl FromStr for ConstantKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        ConstantKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| LabError::InvalidParameter(format!("unknown constant '{s}'")))
    }
}

/// Inputs for every constant; each kind reads only the fields it needs. `ln_big_n` is `log N`
/// so that `N` far beyond `f64` can be used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantParams {
    pub n: u32,
    pub p: u64,
    pub eps: f64,
    pub c: f64,
    pub alpha: f64,
    pub s: u32,
    pub ln_big_n: f64,
}

impl Default for ConstantParams {
    fn default() -> Self {
        Self {
            n: 3,
            p: 5,
            eps: 0.1,
            c: 1.0,
            alpha: 1.0,
            s: 2,
            ln_big_n: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantValue {
    pub kind: ConstantKind,
    /// Natural log of the constant; infinite when it leaves the `f64` range.
    pub ln: f64,
    /// `log10 |ln C|`, finite whenever `ln C != 0`.
    pub log10_abs_ln: f64,
    pub negative: bool,
    /// `ln C` in decimal at full working precision.
    pub decimal: String,
    /// The explicit `O(sqrt eps)` loss in the exponent, where the statement gives one.
    pub sqrt_eps_loss: Option<f64>,
    /// For the counting bound: whether `N` clears the threshold of the statement.
    pub threshold_met: Option<bool>,
}

struct Ctx {
    cc: Consts,
}

impl Ctx {
    fn new() -> Result<Self> {
        Consts::new()
            .map(|cc| Self { cc })
            .map_err(|e| LabError::InvalidParameter(format!("astro-float: {e:?}")))
    }
    fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, CONSTANT_PRECISION)
    }
    fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(CONSTANT_PRECISION, RM, &mut self.cc)
    }
    fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(CONSTANT_PRECISION, RM, &mut self.cc)
    }
    fn to_f64(&mut self, x: &BigFloat) -> Result<f64> {
        let s = self.decimal(x)?;
        s.parse::<f64>()
            .map_err(|e| LabError::InvalidParameter(format!("cannot read back '{s}': {e}")))
    }
    fn decimal(&mut self, x: &BigFloat) -> Result<String> {
        x.format(Radix::Dec, RM, &mut self.cc)
            .map_err(|e| LabError::InvalidParameter(format!("astro-float: {e:?}")))
    }
}

fn add(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.add(b, CONSTANT_PRECISION, RM)
}
fn sub(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.sub(b, CONSTANT_PRECISION, RM)
}
fn mul(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.mul(b, CONSTANT_PRECISION, RM)
}
fn div(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.div(b, CONSTANT_PRECISION, RM)
}

/// `10^4 (log p) eps^{-a n log n} n^{b n^2}`.
fn tower(c: &mut Ctx, p: u64, n: u32, eps: f64, a: f64, b: f64) -> BigFloat {
    let nn = c.f(n as f64);
    let ln_n = c.ln(&nn);
    let ln_eps = c.ln(&c.f(eps));
    let ln_p = c.ln(&c.f(p as f64));
    // -a n log n log eps + b n^2 log n
    let e1 = mul(&mul(&c.f(-a * n as f64), &ln_n), &ln_eps);
    let e2 = mul(&c.f(b * (n as f64) * (n as f64)), &ln_n);
    let big = c.exp(&add(&e1, &e2));
    mul(&mul(&c.f(1e4), &ln_p), &big)
}

/// `log(e^x + e^y)`.
fn log_sum_exp(c: &mut Ctx, x: &BigFloat, y: &BigFloat) -> BigFloat {
    let (hi, lo) = if x.cmp(y).is_some_and(|o| o >= 0) {
        (x, y)
    } else {
        (y, x)
    };
    let tail = c.exp(&sub(lo, hi));
    add(hi, &c.ln(&add(&c.f(1.0), &tail)))
}

/// `log log N` from which the counting bound is stated.
pub fn vino_threshold_lnln(n: u32) -> f64 {
    let n = n as f64;
    3.0 * n * (4.0 * n * n.ln() + 1.0)
}

fn check_common(par: &ConstantParams) -> Result<()> {
    if par.n == 0 {
        return invalid("n must be positive");
    }
    if par.p < 2 {
        return invalid(format!("p = {} is not a prime", par.p));
    }
    Ok(())
}

/// Natural-log evaluation of the explicit constants.
pub fn constant_evaluator(kind: ConstantKind, par: &ConstantParams) -> Result<ConstantValue> {
    check_common(par)?;
    let mut c = Ctx::new()?;
    let n = par.n;
    let eps_ok = par.eps.is_finite() && par.eps > 0.0;
    let (value, sqrt_eps_loss, threshold_met) = match kind {
        ConstantKind::Proj => {
            if !(par.alpha > 0.0) || !eps_ok || par.eps >= par.alpha / 100.0 {
                return invalid(format!(
                    "the projection constant needs eps in (0, alpha/100) = (0, {}), got eps = {}",
                    par.alpha / 100.0,
                    par.eps
                ));
            }
            if !(par.c > 0.0) {
                return invalid("the dimension-condition constant C must be positive");
            }
            let t = tower(&mut c, par.p, n, par.eps, 5.0, 20.0);
            let head = c.f(4f64.ln() + par.c.max(1.0).ln());
            (
                add(&head, &t),
                Some(4.0 * 10f64.powi(10 * n as i32) * par.eps.sqrt()),
                None,
            )
        }
        ConstantKind::Kakeya => {
            if !eps_ok {
                return invalid(format!(
                    "the Kakeya constant needs eps > 0, got {}",
                    par.eps
                ));
            }
            if !(par.c > 0.0) {
                return invalid("the Kakeya constant needs c > 0");
            }
            let t = tower(&mut c, par.p, n, par.eps, 5.0, 20.0);
            let lnc = c.ln(&c.f(par.c));
            let head = div(&lnc, &c.f(par.eps));
            let head = if head.is_positive() { c.f(0.0) } else { head };
            (
                sub(&head, &t),
                Some(10f64.powi(10 * n as i32) * par.eps.sqrt()),
                None,
            )
        }
        ConstantKind::DecProp => {
            if !eps_ok {
                return invalid(format!("D_(n,p,eps) needs eps > 0, got {}", par.eps));
            }
            (tower(&mut c, par.p, n, par.eps, 5.0, 10.0), None, None)
        }
        ConstantKind::MomentCurve => {
            if !eps_ok {
                return invalid(format!("C_(n,eps) needs eps > 0, got {}", par.eps));
            }
            (tower(&mut c, par.p, n, par.eps, 4.0, 10.0), None, None)
        }
        ConstantKind::VinoBound => {
            if par.s < 2 || n < 2 {
                return invalid(format!(
                    "the counting bound needs s, n >= 2, got s = {}, n = {n}",
                    par.s
                ));
            }
            if !(par.ln_big_n.is_finite() && par.ln_big_n > 0.0) {
                return invalid("the counting bound needs N > 1");
            }
            let nf = n as f64;
            let expo = 1.0 - 1.0 / (4.0 * nf * nf.ln() + 1.0);
            let ln_big_n = c.f(par.ln_big_n);
            let lnln = c.ln(&ln_big_n);
            let powed = c.exp(&mul(&c.f(expo), &lnln));
            let three_n = c.exp(&c.f(3.0 * nf));
            let head = mul(&mul(&c.f(1e5 * par.s as f64), &three_n), &powed);
            let s = par.s as f64;
            let t = 2.0 * s - nf * (nf + 1.0) / 2.0;
            let x = mul(&c.f(s), &ln_big_n);
            let y = mul(&c.f(t), &ln_big_n);
            let tail = log_sum_exp(&mut c, &x, &y);
            let met = par.ln_big_n.ln() >= vino_threshold_lnln(n);
            (add(&head, &tail), None, Some(met))
        }
    };
    let decimal = c.decimal(&value)?;
    let ln = c.to_f64(&value)?;
    let negative = value.is_negative();
    let mag = value.abs();
    let log10_abs_ln = if mag.is_zero() {
        f64::NEG_INFINITY
    } else {
        let l = mag.log10(CONSTANT_PRECISION, RM, &mut c.cc);
        c.to_f64(&l)?
    };
    Ok(ConstantValue {
        kind,
        ln,
        log10_abs_ln,
        negative,
        decimal,
        sqrt_eps_loss,
        threshold_met,
    })
}
