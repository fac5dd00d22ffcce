//! The real quadratic field `F = Q(sqrt(d1 d2))` and the biquadratic
//! field `K = Q(sqrt d1, sqrt d2)`.
//!
//! Ideals of `O_F` are kept in factored form, keyed by [`PrimeF`]. Every
//! formula downstream only reads valuations and the ideal-counting function
//! `rho`, so no other ideal representation exists.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use num_integer::Integer;
use num_rational::BigRational;
use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{self, kronecker, MonicQuadratic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("NotNegative: discriminant {0} is not negative")]
    NotNegative(i64),
    #[error("NotFundamental: {0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("NotCoprime: gcd({0}, {1}) = {2}")]
    NotCoprime(i64, i64, i64),
    #[error("DBNotEvenSquarefree: {0} is not a squarefree product of an even number of primes")]
    DbNotEvenSquarefree(i64),
    #[error("DBPrimeNotInert: {0} is not inert in both imaginary quadratic fields")]
    DbPrimeNotInert(u64),
    #[error("NonpositiveM: Hecke index {0} must be positive")]
    NonpositiveM(i64),
}

impl ConfigError {
    /// Stable violation name used in machine-readable output.
    pub fn name(&self) -> &'static str {
        match self {
            ConfigError::NotNegative(_) => "NotNegative",
            ConfigError::NotFundamental(_) => "NotFundamental",
            ConfigError::NotCoprime(..) => "NotCoprime",
            ConfigError::DbNotEvenSquarefree(_) => "DBNotEvenSquarefree",
            ConfigError::DbPrimeNotInert(_) => "DBPrimeNotInert",
            ConfigError::NonpositiveM(_) => "NonpositiveM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero element has no valuation")]
    ZeroElement,
    #[error("prime {0} does not lie in the field's prime table")]
    ForeignPrime(u64),
    #[error("norm {0} is outside the supported integer range")]
    Overflow(i128),
    #[error(transparent)]
    Arith(#[from] arith::ArithError),
}

/// Is `d` the discriminant of a quadratic field?
pub fn is_fundamental(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let k = d / 4;
            matches!(k.rem_euclid(4), 2 | 3) && is_squarefree(k.unsigned_abs())
        }
        _ => false,
    }
}

fn is_squarefree(n: u64) -> bool {
    n != 0 && arith::factorize_u64(n).iter().all(|&(_, e)| e == 1)
}

/// Order of the unit group of the imaginary quadratic order of discriminant `d`.
pub fn unit_count(d: i64) -> u32 {
    match d {
        -3 => 6,
        -4 => 4,
        _ => 2,
    }
}

/// A validated problem instance `(d1, d2, dB, m)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CmPairConfig {
    d1: i64,
    d2: i64,
    #[serde(rename = "dB")]
    db: u64,
    m: u64,
    #[serde(rename = "D")]
    disc: i64,
    w1: u32,
    w2: u32,
    #[serde(skip)]
    db_primes: Vec<u64>,
}

impl CmPairConfig {
    pub fn validate(d1: i64, d2: i64, db: i64, m: i64) -> Result<Self, ConfigError> {
        for d in [d1, d2] {
            if d >= 0 {
                return Err(ConfigError::NotNegative(d));
            }
        }
        let g = d1.gcd(&d2);
        if g != 1 {
            return Err(ConfigError::NotCoprime(d1, d2, g));
        }
        for d in [d1, d2] {
            if !is_fundamental(d) {
                return Err(ConfigError::NotFundamental(d));
            }
        }
        if db < 1 {
            return Err(ConfigError::DbNotEvenSquarefree(db));
        }
        let factors = arith::factorize_u64(db as u64);
        if factors.iter().any(|&(_, e)| e > 1) || factors.len() % 2 == 1 {
            return Err(ConfigError::DbNotEvenSquarefree(db));
        }
        let db_primes: Vec<u64> = factors.iter().map(|&(p, _)| p).collect();
        for &p in &db_primes {
            let inert = |d: i64| kronecker(d, p as i64) == Ok(-1);
            if !(inert(d1) && inert(d2)) {
                return Err(ConfigError::DbPrimeNotInert(p));
            }
        }
        if m < 1 {
            return Err(ConfigError::NonpositiveM(m));
        }
        Ok(Self {
            d1,
            d2,
            db: db as u64,
            m: m as u64,
            disc: d1 * d2,
            w1: unit_count(d1),
            w2: unit_count(d2),
            db_primes,
        })
    }

    pub fn d1(&self) -> i64 {
        self.d1
    }

    pub fn d2(&self) -> i64 {
        self.d2
    }

    pub fn db(&self) -> u64 {
        self.db
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Discriminant `D = d1 d2` of `F`.
    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn w1(&self) -> u32 {
        self.w1
    }

    pub fn w2(&self) -> u32 {
        self.w2
    }

    /// Primes dividing `dB`, ascending.
    pub fn db_primes(&self) -> &[u64] {
        &self.db_primes
    }

    /// Same pair and quaternion data with a different Hecke index.
    pub fn with_m(&self, m: u64) -> Self {
        assert!(m >= 1);
        Self { m, ..self.clone() }
    }

    pub fn element(&self, x: i64, y: i64) -> FElement {
        FElement::new(x, y, self.disc)
    }

    /// `sqrt D = 2w - D`.
    pub fn sqrt_disc(&self) -> FElement {
        self.element(-self.disc, 2)
    }

    /// `O_F`-generator `w = (D + sqrt D)/2` minimal polynomial.
    pub fn generator_poly(&self) -> MonicQuadratic {
        MonicQuadratic::discriminant_generator(self.disc)
    }

    /// The prime(s) of `F` above the rational prime `p`.
    pub fn primes_above(&self, p: u64) -> Vec<PrimeF> {
        splitting_in_f(p, self)
    }

    /// Exponent of `prime` in the principal ideal `(e)`.
    pub fn val(&self, e: &FElement, prime: &PrimeF) -> Result<u32, FieldError> {
        val(e, prime, self)
    }

    pub fn ideal_of(&self, e: &FElement) -> Result<FIdeal, FieldError> {
        ideal_of(e, self)
    }

    pub fn different(&self) -> FIdeal {
        different(self)
    }
}

impl fmt::Display for CmPairConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "d1={} d2={} dB={} m={} (D={}, w1={}, w2={})",
            self.d1, self.d2, self.db, self.m, self.disc, self.w1, self.w2
        )
    }
}

/// An element `x + y w` of `O_F`, with `w = (D + sqrt D)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FElement {
    x: i64,
    y: i64,
    disc: i64,
}

impl FElement {
    pub fn new(x: i64, y: i64, disc: i64) -> Self {
        Self { x, y, disc }
    }

    pub fn coords(&self) -> (i64, i64) {
        (self.x, self.y)
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn trace(&self) -> i128 {
        2 * self.x as i128 + self.y as i128 * self.disc as i128
    }

    pub fn norm(&self) -> i128 {
        let (x, y, d) = (self.x as i128, self.y as i128, self.disc as i128);
        x * x + x * y * d + y * y * ((d * d - d) / 4)
    }

    /// The Galois conjugate `x + y w'`, `w' = D - w`.
    pub fn conjugate(&self) -> Self {
        Self {
            x: self.x + self.y * self.disc,
            y: -self.y,
            disc: self.disc,
        }
    }
}

impl Mul for FElement {
    type Output = FElement;

    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.disc, rhs.disc, "elements of different fields");
        // w^2 = D w - (D^2 - D)/4
        let d = self.disc as i128;
        let c = (d * d - d) / 4;
        let (x1, y1, x2, y2) = (
            self.x as i128,
            self.y as i128,
            rhs.x as i128,
            rhs.y as i128,
        );
        let yy = y1 * y2;
        let x = x1 * x2 - yy * c;
        let y = x1 * y2 + x2 * y1 + yy * d;
        FElement {
            x: x.try_into().expect("product fits in i64"),
            y: y.try_into().expect("product fits in i64"),
            disc: self.disc,
        }
    }
}

impl fmt::Display for FElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}w", self.x, self.y)
    }
}

/// Decomposition type of a rational prime in `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "type")]
pub enum PrimeTag {
    /// `root` is the residue of `w` modulo the prime; `conjugate` is false for
    /// the canonical (smaller) root.
    Split { root: u64, conjugate: bool },
    Inert,
    Ramified,
}

/// Behaviour of a prime of `F` in the unramified quadratic extension `K/F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum KSplitting {
    SplitInK,
    InertInK,
}

/// A prime ideal of `O_F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PrimeF {
    p: u64,
    tag: PrimeTag,
    k_splitting: KSplitting,
}

impl PrimeF {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn tag(&self) -> PrimeTag {
        self.tag
    }

    pub fn k_splitting(&self) -> KSplitting {
        self.k_splitting
    }

    /// Residue degree over `Q`.
    pub fn residue_degree(&self) -> u32 {
        match self.tag {
            PrimeTag::Inert => 2,
            _ => 1,
        }
    }

    /// Absolute norm `|O_F / p|`.
    pub fn norm(&self) -> u64 {
        self.p.pow(self.residue_degree())
    }

    /// Residue of `sqrt D = 2w - D` at a split prime.
    pub fn sqrt_disc_residue(&self, disc: i64) -> Option<u64> {
        match self.tag {
            PrimeTag::Split { root, .. } => {
                Some(arith::residue(2 * root as i128 - disc as i128, self.p))
            }
            _ => None,
        }
    }
}

impl fmt::Display for PrimeF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            PrimeTag::Split { root, .. } => write!(f, "P{}[w={}]", self.p, root),
            PrimeTag::Inert => write!(f, "P{}[inert]", self.p),
            PrimeTag::Ramified => write!(f, "P{}[ram]", self.p),
        }
    }
}

/// The prime(s) of `F` above `p`: a conjugate pair when `(D | p) = 1`.
pub fn splitting_in_f(p: u64, config: &CmPairConfig) -> Vec<PrimeF> {
    assert!(arith::is_prime_u64(p), "{p} is not prime");
    let d = config.disc();
    let with_k = |tag: PrimeTag| PrimeF {
        p,
        tag,
        k_splitting: splitting_in_k(p, tag, config),
    };
    match kronecker(d, p as i64).expect("p is nonzero") {
        1 => {
            let roots = config.generator_poly().roots_mod_prime(p);
            debug_assert_eq!(roots.len(), 2);
            roots
                .into_iter()
                .enumerate()
                .map(|(i, root)| {
                    with_k(PrimeTag::Split {
                        root,
                        conjugate: i == 1,
                    })
                })
                .collect()
        }
        -1 => vec![with_k(PrimeTag::Inert)],
        _ => vec![with_k(PrimeTag::Ramified)],
    }
}

/// Splitting of a prime of `F` over `p` in `K/F`.
///
/// Inert primes of `F` split in `K`. A prime with residue field `F_p` splits
/// in `K` exactly when `p` splits in `Q(sqrt d_j)` for a `d_j` prime to `p`.
pub fn splitting_in_k(p: u64, tag: PrimeTag, config: &CmPairConfig) -> KSplitting {
    if tag == PrimeTag::Inert {
        return KSplitting::SplitInK;
    }
    let p_i = p as i64;
    let dj = if config.d1() % p_i != 0 {
        config.d1()
    } else {
        debug_assert!(config.d2() % p_i != 0, "coprime discriminants");
        config.d2()
    };
    match kronecker(dj, p_i).expect("p is nonzero") {
        1 => KSplitting::SplitInK,
        -1 => KSplitting::InertInK,
        _ => unreachable!("d_j is prime to p"),
    }
}

/// Exponent of `prime` in `(e)`.
pub fn val(e: &FElement, prime: &PrimeF, config: &CmPairConfig) -> Result<u32, FieldError> {
    if e.is_zero() {
        return Err(FieldError::ZeroElement);
    }
    let p = prime.p();
    let norm_ord = arith::ord_p(e.norm(), p);
    match prime.tag() {
        PrimeTag::Inert => Ok(norm_ord / 2),
        PrimeTag::Ramified => Ok(norm_ord),
        PrimeTag::Split { conjugate, .. } => {
            if norm_ord == 0 {
                return Ok(0);
            }
            let k = norm_ord + 1;
            let f = config.generator_poly();
            if p.checked_pow(k).is_none() {
                return Ok(split_val_by_content(e, p, norm_ord, &f, conjugate));
            }
            let c = arith::lift_root(&f, p, k, conjugate as usize)?;
            let modulus = p.pow(k);
            let (x, y) = e.coords();
            let image = (x as i128 + y as i128 * c as i128).rem_euclid(modulus as i128);
            if image == 0 {
                // ord at both primes sums to norm_ord < k
                unreachable!("valuation exceeds norm valuation");
            }
            Ok(arith::ord_p(image, p))
        }
    }
}

/// Split valuation without lifting: after removing the `p`-content of `e`
/// only one of the two primes over `p` can divide it.
fn split_val_by_content(e: &FElement, p: u64, norm_ord: u32, f: &MonicQuadratic, conjugate: bool) -> u32 {
    let (x, y) = e.coords();
    let content = arith::ord_p(num_integer::gcd(x, y) as i128, p);
    let scale = (p as i128).pow(content);
    let (x, y) = (x as i128 / scale, y as i128 / scale);
    let root = f.roots_mod_prime(p)[conjugate as usize];
    if (x + y * root as i128).rem_euclid(p as i128) == 0 {
        norm_ord - content
    } else {
        content
    }
}

/// Factored principal ideal `(e)`.
pub fn ideal_of(e: &FElement, config: &CmPairConfig) -> Result<FIdeal, FieldError> {
    if e.is_zero() {
        return Err(FieldError::ZeroElement);
    }
    let n = e.norm();
    let abs: u64 = n.unsigned_abs().try_into().map_err(|_| FieldError::Overflow(n))?;
    let mut ideal = FIdeal::unit();
    for (p, _) in arith::factorize_u64(abs) {
        for prime in splitting_in_f(p, config) {
            let v = val(e, &prime, config)?;
            if v > 0 {
                ideal.factors.insert(prime, v as i32);
            }
        }
    }
    Ok(ideal)
}

/// The different `(sqrt D)` of `F`.
pub fn different(config: &CmPairConfig) -> FIdeal {
    let sqrt_d = config.sqrt_disc();
    let mut ideal = FIdeal::unit();
    for (p, _) in arith::factorize_u64(config.disc().unsigned_abs()) {
        let primes = splitting_in_f(p, config);
        debug_assert_eq!(primes.len(), 1);
        let v = val(&sqrt_d, &primes[0], config).expect("sqrt D is nonzero");
        ideal.factors.insert(primes[0], v as i32);
    }
    ideal
}

/// A fractional ideal of `O_F` as a map from primes to nonzero exponents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FIdeal {
    factors: BTreeMap<PrimeF, i32>,
}

impl FIdeal {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn prime(p: PrimeF) -> Self {
        Self::prime_power(p, 1)
    }

    pub fn prime_power(p: PrimeF, e: i32) -> Self {
        let mut factors = BTreeMap::new();
        if e != 0 {
            factors.insert(p, e);
        }
        Self { factors }
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.factors.values().all(|&e| e >= 0)
    }

    pub fn exponent(&self, p: &PrimeF) -> i32 {
        self.factors.get(p).copied().unwrap_or(0)
    }

    pub fn factors(&self) -> impl Iterator<Item = (&PrimeF, i32)> {
        self.factors.iter().map(|(p, &e)| (p, e))
    }

    pub fn inverse(&self) -> Self {
        Self {
            factors: self.factors.iter().map(|(p, &e)| (*p, -e)).collect(),
        }
    }

    /// Factors lying over the rational prime `ell`.
    pub fn local_part(&self, ell: u64) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .filter(|(p, _)| p.p() == ell)
                .map(|(p, &e)| (*p, e))
                .collect(),
        }
    }

    /// Rational primes below the support.
    pub fn support_primes(&self) -> Vec<u64> {
        let mut ps: Vec<u64> = self.factors.keys().map(|p| p.p()).collect();
        ps.dedup();
        ps
    }

    /// Absolute norm, a positive rational.
    pub fn norm(&self) -> BigRational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (p, &e) in &self.factors {
            let q = BigInt::from(p.norm()).pow(e.unsigned_abs());
            if e > 0 {
                num *= q;
            } else {
                den *= q;
            }
        }
        BigRational::new(num, den)
    }
}

impl Mul for &FIdeal {
    type Output = FIdeal;

    fn mul(self, rhs: &FIdeal) -> FIdeal {
        let mut factors = self.factors.clone();
        for (p, &e) in &rhs.factors {
            let entry = factors.entry(*p).or_insert(0);
            *entry += e;
            if *entry == 0 {
                factors.remove(p);
            }
        }
        FIdeal { factors }
    }
}

impl Mul for FIdeal {
    type Output = FIdeal;

    fn mul(self, rhs: FIdeal) -> FIdeal {
        &self * &rhs
    }
}

impl fmt::Display for FIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "O_F");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(p, e)| if *e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Number of ideals of `O_K` of relative norm `P^k` for a single prime `P`.
pub fn rho_local(splitting: KSplitting, k: i32) -> u64 {
    if k < 0 {
        return 0;
    }
    match splitting {
        KSplitting::SplitInK => k as u64 + 1,
        KSplitting::InertInK => u64::from(k % 2 == 0),
    }
}

/// Number of ideals of `O_K` with relative norm `b`; zero off the integral ideals.
pub fn rho(b: &FIdeal) -> u64 {
    b.factors()
        .map(|(p, e)| rho_local(p.k_splitting(), e))
        .product()
}

/// `rho` restricted to the primes over `ell`.
pub fn rho_at(b: &FIdeal, ell: u64) -> u64 {
    rho(&b.local_part(ell))
}
