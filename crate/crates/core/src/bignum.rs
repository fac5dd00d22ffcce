//! Binary fixed-point reals and complex numbers at a chosen precision.
//!
//! A [`BigReal`] is `mantissa * 2^-prec` with an arbitrary-size mantissa,
//! so large magnitudes cost bits but never overflow. Binary operations work
//! at the larger of the operand precisions; each rounds once (error at most
//! one unit in the last place).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigReal {
    mant: BigInt,
    prec: u32,
}

/// `round(n / 2^shift)` with ties away from zero.
fn round_shift(n: &BigInt, shift: u32) -> BigInt {
    if shift == 0 {
        return n.clone();
    }
    let half = BigInt::one() << (shift - 1);
    if n.is_negative() {
        -((-n + half) >> shift)
    } else {
        (n + half) >> shift
    }
}

/// Nearest-integer division.
fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    let (q, r) = n.div_mod_floor(d);
    let twice = &r * 2u32;
    let ge_half = if d.is_positive() { twice >= *d } else { twice <= *d };
    if ge_half {
        q + 1
    } else {
        q
    }
}

impl BigReal {
    pub fn zero(prec: u32) -> Self {
        Self { mant: BigInt::zero(), prec }
    }

    pub fn from_int<T: Into<BigInt>>(n: T, prec: u32) -> Self {
        Self { mant: n.into() << prec, prec }
    }

    /// Nearest representable value to `num / den`.
    pub fn from_ratio<T: Into<BigInt>>(num: T, den: T, prec: u32) -> Self {
        let den = den.into();
        assert!(!den.is_zero(), "zero denominator");
        Self { mant: round_div(&(num.into() << prec), &den), prec }
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite());
        let (m, e) = decompose_f64(x);
        // x = m * 2^e
        let shift = e + prec as i64;
        let mant = if shift >= 0 {
            m << shift as u32
        } else {
            round_shift(&m, (-shift) as u32)
        };
        Self { mant, prec }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    /// Same value at another precision (rounded when reducing).
    pub fn with_prec(&self, prec: u32) -> Self {
        let mant = match prec.cmp(&self.prec) {
            Ordering::Equal => self.mant.clone(),
            Ordering::Greater => &self.mant << (prec - self.prec),
            Ordering::Less => round_shift(&self.mant, self.prec - prec),
        };
        Self { mant, prec }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u32) {
        let prec = self.prec.max(other.prec);
        (
            self.with_prec(prec).mant,
            other.with_prec(prec).mant,
            prec,
        )
    }

    pub fn abs(&self) -> Self {
        Self { mant: self.mant.abs(), prec: self.prec }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        Self { mant: &self.mant * k, prec: self.prec }
    }

    pub fn div_int(&self, k: &BigInt) -> Self {
        Self { mant: round_div(&self.mant, k), prec: self.prec }
    }

    /// Multiply by `2^k`.
    pub fn shl(&self, k: i64) -> Self {
        let mant = if k >= 0 {
            &self.mant << k as u32
        } else {
            round_shift(&self.mant, (-k) as u32)
        };
        Self { mant, prec: self.prec }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        let (a, b, prec) = self.aligned(rhs);
        assert!(!b.is_zero(), "division by zero");
        Self { mant: round_div(&(a << prec), &b), prec }
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "square root of a negative value");
        Self { mant: (&self.mant << self.prec).sqrt(), prec: self.prec }
    }

    /// Nearest integer.
    pub fn round(&self) -> BigInt {
        round_shift(&self.mant, self.prec)
    }

    pub fn floor(&self) -> BigInt {
        &self.mant >> self.prec
    }

    /// `|self - round(self)|`.
    pub fn distance_to_integer(&self) -> BigReal {
        (self.clone() - BigReal::from_int(self.round(), self.prec)).abs()
    }

    /// `log2 |x|`, approximately; `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.mant.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.mant.bits();
        let keep = bits.min(60);
        let top = (self.mant.abs() >> (bits - keep)).to_u64().expect("60 bits");
        (top as f64).log2() + (bits - keep) as f64 - self.prec as f64
    }

    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let keep = bits.min(62);
        let top = (&self.mant >> (bits - keep)).to_i64().expect("62 bits");
        let exp = (bits - keep) as i64 - self.prec as i64;
        top as f64 * 2f64.powi(exp.clamp(-2000, 2000) as i32)
    }

    /// `π` via Machin's formula.
    pub fn pi(prec: u32) -> Self {
        let work = prec + 32;
        let atan_inv = |x: u32| -> BigInt {
            // atan(1/x) = sum (-1)^k / ((2k+1) x^(2k+1))
            let x = BigInt::from(x);
            let x2 = &x * &x;
            let mut power = (BigInt::one() << work) / &x;
            let mut sum = BigInt::zero();
            let mut k = 0u32;
            while !power.is_zero() {
                let term = &power / (2 * k + 1);
                if k % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
                power /= &x2;
                k += 1;
            }
            sum
        };
        let mant = atan_inv(5) * 16 - atan_inv(239) * 4;
        Self { mant, prec: work }.with_prec(prec)
    }
}

fn decompose_f64(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { Sign::Minus } else { Sign::Plus };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    (BigInt::from_biguint(sign, m.into()), e)
}

impl Add for BigReal {
    type Output = BigReal;
    fn add(self, rhs: BigReal) -> BigReal {
        let (a, b, prec) = self.aligned(&rhs);
        BigReal { mant: a + b, prec }
    }
}

impl Sub for BigReal {
    type Output = BigReal;
    fn sub(self, rhs: BigReal) -> BigReal {
        let (a, b, prec) = self.aligned(&rhs);
        BigReal { mant: a - b, prec }
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal { mant: -self.mant, prec: self.prec }
    }
}

impl Mul for &BigReal {
    type Output = BigReal;
    fn mul(self, rhs: &BigReal) -> BigReal {
        let (a, b, prec) = self.aligned(rhs);
        BigReal { mant: round_shift(&(a * b), prec), prec }
    }
}

impl Mul for BigReal {
    type Output = BigReal;
    fn mul(self, rhs: BigReal) -> BigReal {
        &self * &rhs
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (a, b, _) = self.aligned(other);
        Some(a.cmp(&b))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigComplex {
    pub re: BigReal,
    pub im: BigReal,
}

impl BigComplex {
    pub fn new(re: BigReal, im: BigReal) -> Self {
        Self { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Self::new(BigReal::zero(prec), BigReal::zero(prec))
    }

    pub fn one(prec: u32) -> Self {
        Self::new(BigReal::from_int(1, prec), BigReal::zero(prec))
    }

    pub fn from_real(re: BigReal) -> Self {
        let prec = re.prec();
        Self::new(re, BigReal::zero(prec))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        Self::new(self.re.with_prec(prec), self.im.with_prec(prec))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> BigReal {
        &self.re * &self.re + &self.im * &self.im
    }

    /// `log2 |z|`, approximately.
    pub fn log2_abs(&self) -> f64 {
        let a = self.re.log2_abs();
        let b = self.im.log2_abs();
        let hi = a.max(b);
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + 0.5 * (1.0 + (2.0 * (a.min(b) - hi)).exp2()).log2()
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::new(self.re.mul_int(k), self.im.mul_int(k))
    }

    pub fn shl(&self, k: i64) -> Self {
        Self::new(self.re.shl(k), self.im.shl(k))
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut acc = BigComplex::one(self.prec());
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.square();
            }
        }
        acc
    }

    pub fn div(&self, rhs: &Self) -> Self {
        let n = rhs.norm_sqr();
        let num = self * &rhs.conj();
        Self::new(num.re.div(&n), num.im.div(&n))
    }

    /// `e^z` with absolute error about `2^-prec` where `prec` is the
    /// precision of `z`.
    pub fn exp(&self) -> Self {
        let prec = self.prec();
        let size = self.log2_abs().max(0.0).ceil() as u32;
        // halve |z| below 2^-r, sum the series, square back up
        let r = ((prec as f64).sqrt() / 2.0).ceil() as u32;
        let s = size + r;
        let growth = (self.re.to_f64().max(0.0) / std::f64::consts::LN_2).ceil() as u32;
        let work = prec + s + growth + 32;
        let w = self.with_prec(work).shl(-(s as i64));
        let mut sum = BigComplex::one(work);
        let mut term = BigComplex::one(work);
        let mut k = 1u32;
        loop {
            term = &term * &w;
            term = Self::new(
                term.re.div_int(&BigInt::from(k)),
                term.im.div_int(&BigInt::from(k)),
            );
            if term.re.is_zero() && term.im.is_zero() {
                break;
            }
            sum = sum + term.clone();
            k += 1;
        }
        for _ in 0..s {
            sum = sum.square();
        }
        sum.with_prec(prec)
    }
}

impl Add for BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: BigComplex) -> BigComplex {
        BigComplex::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: BigComplex) -> BigComplex {
        BigComplex::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex::new(-self.re, -self.im)
    }
}

impl Mul for &BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: &BigComplex) -> BigComplex {
        // one rounding per component
        let prec = self.prec().max(rhs.prec());
        let a = self.re.with_prec(prec);
        let b = self.im.with_prec(prec);
        let c = rhs.re.with_prec(prec);
        let d = rhs.im.with_prec(prec);
        let re = a.mantissa() * c.mantissa() - b.mantissa() * d.mantissa();
        let im = a.mantissa() * d.mantissa() + b.mantissa() * c.mantissa();
        BigComplex::new(
            BigReal { mant: round_shift(&re, prec), prec },
            BigReal { mant: round_shift(&im, prec), prec },
        )
    }
}

impl Mul for BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: BigComplex) -> BigComplex {
        &self * &rhs
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}
