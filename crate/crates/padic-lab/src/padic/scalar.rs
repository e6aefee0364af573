use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{LabError, Result};

pub const DEFAULT_PRECISION: u32 = 32;

thread_local! {
    static POWERS: RefCell<HashMap<u64, Vec<BigUint>>> = RefCell::new(HashMap::new());
}

/// `p^k` as a big integer, cached per thread.
pub fn pow_p(p: u64, k: u32) -> BigUint {
    POWERS.with(|cell| {
        let mut map = cell.borrow_mut();
        let table = map.entry(p).or_insert_with(|| vec![BigUint::one()]);
        while table.len() <= k as usize {
            let next = table.last().unwrap() * p;
            table.push(next);
        }
        table[k as usize].clone()
    })
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits off the largest power of `p` dividing a nonzero `x`.
pub(crate) fn split_valuation(mut x: BigUint, p: u64) -> (i64, BigUint) {
    debug_assert!(!x.is_zero());
    let mut v = 0i64;
    loop {
        let (q, r) = x.div_rem(&BigUint::from(p));
        if !r.is_zero() {
            return (v, x);
        }
        x = q;
        v += 1;
    }
}

fn modpow_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u128;
    let mut b = (base % m) as u128;
    let m128 = m as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    base = acc as u64;
    base
}

/// Inverse of a unit modulo `p^n` by Newton iteration `x <- x(2 - ux)`,
/// starting from Fermat's inverse modulo `p`.
pub(crate) fn hensel_inverse(u: &BigUint, p: u64, n: u32) -> BigUint {
    let u0 = (u % p).to_u64().unwrap();
    debug_assert!(u0 != 0);
    let mut x = BigUint::from(modpow_u64(u0, p - 2, p));
    let mut k = 1u32;
    while k < n {
        k = (2 * k).min(n);
        let m = pow_p(p, k);
        let ux = (u % &m) * &x % &m;
        let two = BigUint::from(2u32) % &m;
        let t = (two + &m - ux) % &m;
        x = x * t % &m;
    }
    x % pow_p(p, n)
}

#[derive(Clone, Debug)]
enum Repr {
    /// `abs: None` is the exact zero; `Some(k)` means "zero modulo p^k", i.e. an underflow.
    Zero {
        abs: Option<i64>,
    },
    Unit {
        val: i64,
        unit: BigUint,
    },
}

/// An element of Q_p known to `prec` significant digits: `p^val * unit`,
/// with `unit` a residue modulo `p^prec` not divisible by `p`.
#[derive(Clone, Debug)]
pub struct PadicScalar {
    p: u64,
    prec: u32,
    repr: Repr,
}

/// Prime and working precision shared by a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PadicContext {
    pub p: u64,
    pub prec: u32,
}

impl PadicContext {
    pub fn new(p: u64, prec: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(LabError::NotPrime(p));
        }
        if prec == 0 {
            return Err(LabError::InvalidParameter(
                "precision must be at least 1".into(),
            ));
        }
        Ok(Self { p, prec })
    }

    pub fn with_default_precision(p: u64) -> Result<Self> {
        Self::new(p, DEFAULT_PRECISION)
    }

    pub fn zero(&self) -> PadicScalar {
        PadicScalar::zero(self.p, self.prec)
    }

    pub fn one(&self) -> PadicScalar {
        self.int(1)
    }

    pub fn int(&self, x: i64) -> PadicScalar {
        PadicScalar::from_bigint(self.p, self.prec, &BigInt::from(x))
    }

    pub fn bigint(&self, x: &BigInt) -> PadicScalar {
        PadicScalar::from_bigint(self.p, self.prec, x)
    }

    /// The rational `num/den`; `den` must be nonzero.
    pub fn rational(&self, num: i64, den: i64) -> Result<PadicScalar> {
        let d = self.int(den).inv()?;
        Ok(self.int(num) * d)
    }

    /// `p^k` for any integer `k`.
    pub fn p_power(&self, k: i64) -> PadicScalar {
        PadicScalar::from_parts(self.p, self.prec, k, BigUint::one())
    }
}

impl PadicScalar {
    pub fn zero(p: u64, prec: u32) -> Self {
        Self {
            p,
            prec,
            repr: Repr::Zero { abs: None },
        }
    }

    /// An element known only to vanish modulo `p^k` (an underflowed zero).
    pub fn zero_mod(p: u64, prec: u32, k: i64) -> Self {
        Self {
            p,
            prec,
            repr: Repr::Zero { abs: Some(k) },
        }
    }

    /// Builds `p^val * unit`; `unit` is reduced modulo `p^prec` and must be prime to `p`.
    pub fn from_parts(p: u64, prec: u32, val: i64, unit: BigUint) -> Self {
        let unit = unit % pow_p(p, prec);
        assert!(!(&unit % p).is_zero(), "unit divisible by p");
        Self {
            p,
            prec,
            repr: Repr::Unit { val, unit },
        }
    }

    pub fn from_bigint(p: u64, prec: u32, x: &BigInt) -> Self {
        if x.is_zero() {
            return Self::zero(p, prec);
        }
        let (v, mag) = split_valuation(x.magnitude().clone(), p);
        let m = pow_p(p, prec);
        let mut unit = mag % &m;
        if x.sign() == Sign::Minus {
            unit = &m - unit;
        }
        Self {
            p,
            prec,
            repr: Repr::Unit { val: v, unit },
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Relative precision in digits.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn context(&self) -> PadicContext {
        PadicContext {
            p: self.p,
            prec: self.prec,
        }
    }

    /// `None` for zero (valuation +infinity).
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::Unit { val, .. } => Some(*val),
        }
    }

    pub fn unit(&self) -> Option<&BigUint> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::Unit { unit, .. } => Some(unit),
        }
    }

    /// Absolute precision: the value is known modulo `p^k`. `None` for exact zero.
    pub fn absolute_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { abs } => *abs,
            Repr::Unit { val, .. } => Some(val + self.prec as i64),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { .. })
    }

    /// True when the value is a zero produced by cancellation below the working precision.
    pub fn underflowed(&self) -> bool {
        matches!(self.repr, Repr::Zero { abs: Some(_) })
    }

    pub fn is_integral(&self) -> bool {
        self.valuation().is_none_or(|v| v >= 0)
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == Some(0)
    }

    pub fn norm(&self) -> PadicNorm {
        PadicNorm {
            p: self.p,
            val: self.valuation(),
        }
    }

    fn check_prime(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(LabError::PrimeMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        Ok(add_impl(self, other))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        Ok(mul_impl(self, other))
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.repr {
            Repr::Zero { .. } => Err(LabError::DivisionByZero),
            Repr::Unit { val, unit } => Ok(Self {
                p: self.p,
                prec: self.prec,
                repr: Repr::Unit {
                    val: -val,
                    unit: hensel_inverse(unit, self.p, self.prec),
                },
            }),
        }
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.check_prime(other)?;
        Ok(mul_impl(self, &other.inv()?))
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut acc = Self::from_bigint(self.p, self.prec, &BigInt::one());
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        acc
    }

    pub fn powi(&self, e: i64) -> Result<Self> {
        if e >= 0 {
            Ok(self.pow(e as u32))
        } else {
            Ok(self.inv()?.pow((-e) as u32))
        }
    }

    /// Equality at working precision: the difference vanishes at the precision it is known to.
    pub fn eq_padic(&self, other: &Self) -> bool {
        self.p == other.p && (self - other).is_zero()
    }

    /// Reduces the relative precision to `prec` digits (never increases it).
    pub fn with_precision(&self, prec: u32) -> Self {
        let prec = prec.max(1).min(self.prec);
        let repr = match &self.repr {
            Repr::Zero { abs } => Repr::Zero { abs: *abs },
            Repr::Unit { val, unit } => Repr::Unit {
                val: *val,
                unit: unit % pow_p(self.p, prec),
            },
        };
        Self {
            p: self.p,
            prec,
            repr,
        }
    }

    /// Residue modulo `p^k` of an integral element, as a big integer in `[0, p^k)`.
    pub fn residue(&self, k: u32) -> Result<BigUint> {
        match &self.repr {
            Repr::Zero { .. } => Ok(BigUint::zero()),
            Repr::Unit { val, unit } => {
                if *val < 0 {
                    return Err(LabError::InvalidParameter(format!(
                        "residue of a non-integral element (valuation {val})"
                    )));
                }
                if *val >= k as i64 {
                    return Ok(BigUint::zero());
                }
                let m = pow_p(self.p, k);
                Ok(unit * pow_p(self.p, *val as u32) % m)
            }
        }
    }

    pub fn residue_u64(&self, k: u32) -> Result<u64> {
        self.residue(k)?
            .to_u64()
            .ok_or_else(|| LabError::InvalidParameter("residue does not fit in 64 bits".into()))
    }

    /// The representative `p^val * unit` as an exact rational (unit taken in `[0, p^prec)`).
    pub fn to_rational(&self) -> BigRational {
        match &self.repr {
            Repr::Zero { .. } => BigRational::zero(),
            Repr::Unit { val, unit } => {
                let u = BigInt::from(unit.clone());
                if *val >= 0 {
                    BigRational::from_integer(u * BigInt::from(pow_p(self.p, *val as u32)))
                } else {
                    BigRational::new(u, BigInt::from(pow_p(self.p, (-val) as u32)))
                }
            }
        }
    }

    /// The p-adic fractional part `{x}_p` in `[0, 1)`, exact.
    pub fn fractional_part(&self) -> BigRational {
        match &self.repr {
            Repr::Zero { .. } => BigRational::zero(),
            Repr::Unit { val, unit } => {
                if *val >= 0 {
                    return BigRational::zero();
                }
                let k = (-val) as u32;
                let den = pow_p(self.p, k);
                // digits below p^0 are the lowest k digits of the unit
                let num = unit % &den;
                BigRational::new(BigInt::from(num), BigInt::from(den))
            }
        }
    }

    /// Signed representative of an integral element in `(-p^k/2, p^k/2]`, handy for printing.
    pub fn balanced_residue(&self, k: u32) -> Result<BigInt> {
        let r = BigInt::from(self.residue(k)?);
        let m = BigInt::from(pow_p(self.p, k));
        if &r * 2 > m {
            Ok(r - m)
        } else {
            Ok(r)
        }
    }
}

fn add_impl(x: &PadicScalar, y: &PadicScalar) -> PadicScalar {
    let p = x.p;
    let prec = x.prec.max(y.prec);
    match (&x.repr, &y.repr) {
        (Repr::Zero { abs: None }, _) => y.clone(),
        (_, Repr::Zero { abs: None }) => x.clone(),
        (Repr::Zero { abs: Some(a) }, Repr::Zero { abs: Some(b) }) => PadicScalar {
            p,
            prec,
            repr: Repr::Zero {
                abs: Some(*a.min(b)),
            },
        },
        (Repr::Zero { abs: Some(k) }, Repr::Unit { .. }) => absorb(y, *k),
        (Repr::Unit { .. }, Repr::Zero { abs: Some(k) }) => absorb(x, *k),
        (Repr::Unit { val: v1, unit: u1 }, Repr::Unit { val: v2, unit: u2 }) => {
            let a = (v1 + x.prec as i64).min(v2 + y.prec as i64);
            let w0 = (*v1).min(*v2);
            let span = (a - w0) as u32;
            let m = pow_p(p, span);
            let mut s = BigUint::zero();
            for (v, u) in [(v1, u1), (v2, u2)] {
                let shift = (v - w0) as u32;
                if shift < span {
                    s += u * pow_p(p, shift);
                }
            }
            s %= &m;
            if s.is_zero() {
                return PadicScalar {
                    p,
                    prec,
                    repr: Repr::Zero { abs: Some(a) },
                };
            }
            let (e, unit) = split_valuation(s, p);
            let val = w0 + e;
            let rel = (a - val) as u32;
            PadicScalar {
                p,
                prec: rel,
                repr: Repr::Unit { val, unit },
            }
        }
    }
}

/// Adds an element known only modulo `p^k` to the nonzero `y`.
fn absorb(y: &PadicScalar, k: i64) -> PadicScalar {
    let v = y.valuation().unwrap();
    let a = k.min(v + y.prec as i64);
    if a <= v {
        PadicScalar {
            p: y.p,
            prec: y.prec,
            repr: Repr::Zero { abs: Some(a) },
        }
    } else {
        y.with_precision((a - v) as u32)
    }
}

fn mul_impl(x: &PadicScalar, y: &PadicScalar) -> PadicScalar {
    let p = x.p;
    match (&x.repr, &y.repr) {
        (Repr::Zero { abs: None }, _) | (_, Repr::Zero { abs: None }) => {
            PadicScalar::zero(p, x.prec.max(y.prec))
        }
        (Repr::Zero { abs: Some(a) }, other) | (other, Repr::Zero { abs: Some(a) }) => {
            let extra = match other {
                Repr::Zero { abs: Some(b) } => *b,
                Repr::Unit { val, .. } => *val,
                Repr::Zero { abs: None } => unreachable!(),
            };
            PadicScalar {
                p,
                prec: x.prec.max(y.prec),
                repr: Repr::Zero {
                    abs: Some(a + extra),
                },
            }
        }
        (Repr::Unit { val: v1, unit: u1 }, Repr::Unit { val: v2, unit: u2 }) => {
            let prec = x.prec.min(y.prec);
            let m = pow_p(p, prec);
            let unit = (u1 % &m) * (u2 % &m) % &m;
            PadicScalar {
                p,
                prec,
                repr: Repr::Unit { val: v1 + v2, unit },
            }
        }
    }
}

fn neg_impl(x: &PadicScalar) -> PadicScalar {
    match &x.repr {
        Repr::Zero { .. } => x.clone(),
        Repr::Unit { val, unit } => {
            let m = pow_p(x.p, x.prec);
            PadicScalar {
                p: x.p,
                prec: x.prec,
                repr: Repr::Unit {
                    val: *val,
                    unit: &m - unit,
                },
            }
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&PadicScalar> for &PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: &PadicScalar) -> PadicScalar {
                assert_eq!(self.p, rhs.p, "prime mismatch");
                $body(self, rhs)
            }
        }
        impl $tr<PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: &PadicScalar) -> PadicScalar {
                (&self).$method(rhs)
            }
        }
        impl $tr<PadicScalar> for &PadicScalar {
            type Output = PadicScalar;
            fn $method(self, rhs: PadicScalar) -> PadicScalar {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, add_impl);
binop!(Mul, mul, mul_impl);
binop!(Sub, sub, |a: &PadicScalar, b: &PadicScalar| add_impl(
    a,
    &neg_impl(b)
));
binop!(Div, div, |a: &PadicScalar, b: &PadicScalar| mul_impl(
    a,
    &b.inv().expect("division by zero")
));

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        neg_impl(&self)
    }
}

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        neg_impl(self)
    }
}

/// p-adic equality at working precision. Not transitive in general.
impl PartialEq for PadicScalar {
    fn eq(&self, other: &Self) -> bool {
        self.eq_padic(other)
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero { abs: None } => write!(f, "0"),
            Repr::Zero { abs: Some(k) } => write!(f, "O({}^{})", self.p, k),
            Repr::Unit { val, unit } => {
                write!(
                    f,
                    "{}*{}^{} + O({}^{})",
                    unit,
                    self.p,
                    val,
                    self.p,
                    val + self.prec as i64
                )
            }
        }
    }
}

/// An exact p-adic absolute value `p^{-val}`; `val = None` is `|0| = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PadicNorm {
    pub p: u64,
    pub val: Option<i64>,
}

impl PadicNorm {
    pub fn one(p: u64) -> Self {
        Self { p, val: Some(0) }
    }

    pub fn zero(p: u64) -> Self {
        Self { p, val: None }
    }

    /// `p^k` as a norm.
    pub fn p_pow(p: u64, k: i64) -> Self {
        Self { p, val: Some(-k) }
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    /// log_p of the norm, `None` for zero.
    pub fn log_p(&self) -> Option<i64> {
        self.val.map(|v| -v)
    }

    pub fn to_f64(&self) -> f64 {
        match self.val {
            None => 0.0,
            Some(v) => (self.p as f64).powi(-(v as i32)),
        }
    }

    pub fn to_rational(&self) -> BigRational {
        match self.val {
            None => BigRational::zero(),
            Some(v) if v <= 0 => {
                BigRational::from_integer(BigInt::from(pow_p(self.p, (-v) as u32)))
            }
            Some(v) => BigRational::new(BigInt::one(), BigInt::from(pow_p(self.p, v as u32))),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            p: self.p,
            val: match (self.val, other.val) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            },
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        Self {
            p: self.p,
            val: self.val.map(|v| v * k),
        }
    }

    /// Reciprocal; `None` for the zero norm.
    pub fn recip(&self) -> Option<Self> {
        self.val.map(|v| Self {
            p: self.p,
            val: Some(-v),
        })
    }
}

impl PartialOrd for PadicNorm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PadicNorm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.val, other.val) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => b.cmp(&a),
        }
    }
}

impl fmt::Display for PadicNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.val {
            None => write!(f, "0"),
            Some(v) => write!(f, "{}^{}", self.p, -v),
        }
    }
}

/// Signed integer valuation of a nonzero rational, used by oracles.
pub fn rational_valuation(x: &BigRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let (vn, _) = split_valuation(x.numer().abs().to_biguint().unwrap(), p);
    let (vd, _) = split_valuation(x.denom().abs().to_biguint().unwrap(), p);
    Some(vn - vd)
}
