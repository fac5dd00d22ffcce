//! Numerical singular moduli: `J(d1, d2)^2` from `j` evaluated at CM points.
//!
//! `j(tau) = E4(q)^3 / (q prod (1 - q^n)^24)` with `q = e^{2 pi i tau}`,
//! evaluated in fixed-point arithmetic with explicit truncation bounds.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::factorize;
use crate::bignum::{BigComplex, BigReal};
use crate::degrees::{rational_string, ArithDegree, DegreeError};
use crate::fields::{is_fundamental, unit_count, CmPairConfig, ConfigError};
use crate::hecke::intersection_number;

/// Largest precision tried before giving up.
pub const PRECISION_CAP: u32 = 1 << 16;

/// Largest number of q-expansion terms accepted.
const MAX_TERMS: usize = 1 << 20;

/// Rounding gate: `|Pi|` must be within this of an integer.
pub const ROUNDING_GATE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} is not a negative fundamental discriminant")]
    BadDiscriminant(i64),
    #[error("q-expansion needs more than {MAX_TERMS} terms (Im tau = {0:.4})")]
    Infeasible(f64),
    #[error("precision exhausted: rounding unresolved at {0} bits")]
    PrecisionExhausted(u32),
    #[error("oracle prime {0} does not fit in 64 bits")]
    LargePrime(BigUint),
    #[error(transparent)]
    Degree(#[from] DegreeError),
}

/// Positive definite form `a x^2 + b x y + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ReducedForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl ReducedForm {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        a > 0 && b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    /// `tau = (-b + sqrt(d)) / 2a` at `prec` bits.
    pub fn cm_point(&self, prec: u32) -> BigComplex {
        let d = self.discriminant();
        let two_a = BigInt::from(2 * self.a);
        let re = BigReal::from_ratio(BigInt::from(-self.b), two_a.clone(), prec);
        let im = BigReal::from_int(-d, prec).sqrt().div_int(&two_a);
        BigComplex::new(re, im)
    }

    /// `Im tau` as a float.
    pub fn imag_part(&self) -> f64 {
        ((-self.discriminant()) as f64).sqrt() / (2 * self.a) as f64
    }
}

/// One reduced form per class of discriminant `d`, ascending in `(a, b)`.
pub fn reduced_forms(d: i64) -> Result<Vec<ReducedForm>, OracleError> {
    if d >= 0 || !is_fundamental(d) {
        return Err(OracleError::BadDiscriminant(d));
    }
    let n = -d;
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= n {
        for b in -a + 1..=a {
            if (b - d).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let f = ReducedForm { a, b, c: num / (4 * a) };
            if f.is_reduced() {
                out.push(f);
            }
        }
        a += 1;
    }
    Ok(out)
}

fn log2_add(x: f64, y: f64) -> f64 {
    let hi = x.max(y);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (1.0 + (x.min(y) - hi).exp2()).log2()
}

fn sigma3(n: usize) -> Vec<u128> {
    let mut s = vec![0u128; n + 1];
    for k in 1..=n {
        let cube = (k as u128).pow(3);
        let mut j = k;
        while j <= n {
            s[j] += cube;
            j += k;
        }
    }
    s
}

/// Truncation point and working precision for `j` near `q` with
/// `log2 |q| = lq < 0`.
fn series_plan(lq: f64, target_bits: u32) -> Option<(usize, u32)> {
    let r = lq.exp2();
    if r >= 0.5 {
        return None;
    }
    let lr = lq;
    // crude size bounds for E4 and prod (1 - q^n)
    let mut e4 = 0f64;
    let mut low = 0f64;
    for n in 1..200 {
        e4 += 240.0 * (n as f64).powi(4) * r.powi(n);
        low += (1.0 - r.powi(n)).log2();
    }
    let e4_bits = (1.0 + e4).log2();
    let budget = target_bits as f64 + (-lq) + 3.0 * e4_bits + 24.0 * (-low) + 16.0;
    let one_minus = (1.0 - r).log2();
    let mut n = 1usize;
    loop {
        if n > MAX_TERMS {
            return None;
        }
        let nf = n as f64;
        let ratio = r * ((nf + 2.0) / (nf + 1.0)).powi(4);
        if ratio < 1.0 {
            // sum_{k>n} 240 k^4 r^k
            let e4_tail =
                240f64.log2() + 4.0 * (nf + 1.0).log2() + lr * (nf + 1.0) - (1.0 - ratio).log2();
            // |prod_{k>n} (1 - q^k)^24 - 1|
            let eta_tail = 48f64.log2() + lr * (nf + 1.0) - 2.0 * one_minus;
            if log2_add(e4_tail, eta_tail) < -budget {
                let work = budget.ceil() as u32 + nf.log2().ceil() as u32 + 64;
                return Some((n, work));
            }
        }
        n += 1;
    }
}

/// `j(tau)` at `prec` bits, treating `tau` as exact.
///
/// Absolute error is below `2^(-prec/2)` whenever `tau` carries at least
/// `prec/2 + log2|j| + 8` bits.
pub fn j_invariant(tau: &BigComplex, prec: u32) -> Result<BigComplex, OracleError> {
    let y = tau.im.to_f64();
    let lq = -2.0 * std::f64::consts::PI * y / std::f64::consts::LN_2;
    let (terms, work) = series_plan(lq, prec).ok_or(OracleError::Infeasible(y))?;
    let tau = tau.with_prec(work.max(tau.prec()));
    let work = tau.prec();
    let two_pi = BigReal::pi(work).shl(1);
    let i_two_pi_tau = BigComplex::new(-(&two_pi * &tau.im), &two_pi * &tau.re);
    let q = i_two_pi_tau.exp();
    let q_inv = (-i_two_pi_tau).exp();

    let sig = sigma3(terms);
    let mut qn = q.clone();
    let mut e4 = BigComplex::one(work);
    let mut eta = BigComplex::one(work);
    for s in sig.iter().skip(1) {
        e4 = e4 + qn.scale(&BigInt::from(240u128 * s));
        eta = &eta * &(BigComplex::one(work) - qn.clone());
        qn = &qn * &q;
    }
    let e4_cubed = &e4.square() * &e4;
    let delta = eta.pow(24);
    let j = (&q_inv * &e4_cubed).div(&delta);
    Ok(j.with_prec(prec))
}

/// Starting precision for `(d1, d2)`.
pub fn initial_precision(d1: i64, d2: i64) -> Result<u32, OracleError> {
    let forms = reduced_forms(d1)?.len() + reduced_forms(d2)?.len();
    let im_max = ((d1 * d2).unsigned_abs() as f64).sqrt() / 2.0;
    let per_form = 2.0 * std::f64::consts::PI * im_max / std::f64::consts::LN_2;
    Ok(64 + (3.02 * per_form * forms as f64).ceil() as u32)
}

/// Outcome of one successful `gz_square` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GzSquare {
    #[serde(serialize_with = "display_string")]
    pub value: BigUint,
    /// Rounded `|Pi|` before the `8/(w1 w2)` power.
    #[serde(serialize_with = "display_string")]
    pub product: BigUint,
    pub precision: u32,
    /// Bound used in the rounding gate.
    pub error_bound: f64,
    /// Observed distance of `|Re Pi|` from the integer.
    pub distance: f64,
    /// `log2 (|Im Pi| / |Pi|)`; `None` when `Im Pi` vanished exactly.
    pub imag_ratio_log2: Option<f64>,
}

fn display_string<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// `Pi = prod (j(tau1) - j(tau2))` over all class pairs at `prec` bits.
pub fn class_product(d1: i64, d2: i64, prec: u32) -> Result<(BigComplex, f64), OracleError> {
    let f1 = reduced_forms(d1)?;
    let f2 = reduced_forms(d2)?;
    let forms: Vec<ReducedForm> = f1.iter().chain(f2.iter()).copied().collect();
    let js: Vec<BigComplex> = forms
        .par_iter()
        .map(|f| {
            let mag = 2.0 * std::f64::consts::PI * f.imag_part() / std::f64::consts::LN_2;
            let tau = f.cm_point(prec + mag.ceil() as u32 + 64);
            j_invariant(&tau, prec + mag.ceil() as u32 + 16)
        })
        .collect::<Result<_, _>>()?;
    let (j1, j2) = js.split_at(f1.len());
    let mut product = BigComplex::one(prec + 64);
    let mut rel = 0f64;
    let each = 1.0 - (prec as f64) / 2.0;
    for a in j1 {
        for b in j2 {
            let diff = a.clone() - b.clone();
            let ld = diff.log2_abs();
            rel = if rel == 0.0 { each - ld } else { log2_add(rel, each - ld) };
            product = &product * &diff;
        }
    }
    let prec_out = product.prec();
    Ok((product.with_prec(prec_out), rel))
}

/// Exact `n^(8 / (w1 w2))`, or `None` when `n` is not a perfect power of
/// the required shape.
fn exact_power(n: &BigUint, w: u32) -> Option<BigUint> {
    let cube_root = |x: &BigUint| {
        let r = x.cbrt();
        (&r * &r * &r == *x).then_some(r)
    };
    match w {
        4 => Some(n * n),
        8 => Some(n.clone()),
        12 => cube_root(n).map(|r| &r * &r),
        24 => cube_root(n),
        _ => None,
    }
}

fn gz_at(d1: i64, d2: i64, w: u32, prec: u32) -> Result<Option<GzSquare>, OracleError> {
    let (pi, rel_log2) = class_product(d1, d2, prec)?;
    let abs_log2 = pi.log2_abs();
    let err_log2 = abs_log2 + rel_log2;
    let rounded = pi.re.round();
    let distance = pi.re.distance_to_integer().to_f64();
    let imag = pi.im.abs().to_f64();
    let error_bound = err_log2.exp2();
    let imag_ratio_log2 = (!pi.im.is_zero()).then(|| pi.im.log2_abs() - abs_log2);
    if distance + error_bound > ROUNDING_GATE || imag + error_bound > ROUNDING_GATE {
        return Ok(None);
    }
    let product = rounded.abs().to_biguint().expect("absolute value");
    if product.is_zero() {
        return Ok(None);
    }
    Ok(exact_power(&product, w).map(|value| GzSquare {
        value,
        product,
        precision: prec,
        error_bound,
        distance,
        imag_ratio_log2,
    }))
}

/// `J(d1, d2)^2`, doubling precision until the rounding gate passes.
pub fn gz_square(d1: i64, d2: i64, prec: Option<u32>) -> Result<GzSquare, OracleError> {
    CmPairConfig::validate(d1, d2, 1, 1)?;
    let w = unit_count(d1) * unit_count(d2);
    let mut p = match prec {
        Some(p) => p.max(64),
        None => initial_precision(d1, d2)?,
    };
    loop {
        if let Some(out) = gz_at(d1, d2, w, p)? {
            return Ok(out);
        }
        if p >= PRECISION_CAP {
            return Err(OracleError::PrecisionExhausted(p));
        }
        p = (p * 2).min(PRECISION_CAP);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeComparison {
    pub p: u64,
    pub oracle_exponent: u32,
    /// Formula coefficient as an exact rational string.
    pub formula_coeff: String,
    /// `formula_coeff / oracle_exponent`, when the exponent is nonzero.
    pub ratio: Option<String>,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GzComparison {
    pub d1: i64,
    pub d2: i64,
    pub oracle: GzSquare,
    #[serde(serialize_with = "exponent_strings")]
    pub oracle_exponents: BTreeMap<u64, u32>,
    pub formula: ArithDegree,
    pub primes: Vec<PrimeComparison>,
    pub pass: bool,
}

fn exponent_strings<S: serde::Serializer>(m: &BTreeMap<u64, u32>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (p, e) in m {
        map.serialize_entry(&p.to_string(), &e.to_string())?;
    }
    map.end()
}

/// Factor `J(d1, d2)^2` and compare with the `dB = 1, m = 1` intersection
/// number prime by prime.
pub fn gz_compare(d1: i64, d2: i64, prec: Option<u32>) -> Result<GzComparison, OracleError> {
    let config = CmPairConfig::validate(d1, d2, 1, 1)?;
    let oracle = gz_square(d1, d2, prec)?;
    let mut oracle_exponents = BTreeMap::new();
    if !oracle.value.is_one() {
        for (p, e) in factorize(&oracle.value) {
            let small = p.to_u64().ok_or_else(|| OracleError::LargePrime(p.clone()))?;
            oracle_exponents.insert(small, e);
        }
    }
    let formula = intersection_number(&config)?;
    let mut support: Vec<u64> = oracle_exponents.keys().copied().collect();
    support.extend(formula.support());
    support.sort_unstable();
    support.dedup();
    let primes: Vec<PrimeComparison> = support
        .into_iter()
        .map(|p| {
            let e = oracle_exponents.get(&p).copied().unwrap_or(0);
            let c = formula.coefficient(p);
            let ratio = (e > 0).then(|| rational_string(&(&c / BigRational::from_integer(e.into()))));
            PrimeComparison {
                p,
                oracle_exponent: e,
                formula_coeff: rational_string(&c),
                ratio,
                equal: c == BigRational::from_integer(e.into()),
            }
        })
        .collect();
    let pass = primes.iter().all(|row| row.equal);
    Ok(GzComparison {
        d1,
        d2,
        oracle,
        oracle_exponents,
        formula,
        primes,
        pass,
    })
}
