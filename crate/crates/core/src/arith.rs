//! Exact number-theoretic kernel.
//!
//! Kronecker symbols, integer factorization (trial division followed by
//! Pollard rho), square roots and Hensel lifting modulo prime powers, and
//! arithmetic in the quadratic extension `F_{p^2}`.
//!
//! Everything here is pure and deterministic: random choices (Pollard rho
//! polynomial constants, Miller-Rabin witnesses) come from fixed sequences.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("kronecker symbol with modulus 0")]
    ZeroModulus,
    #[error("non-Henselian input: {0} has no simple root mod {1}")]
    NonHenselian(MonicQuadratic, u64),
    #[error("modulus {0}^{1} exceeds the 64-bit working range")]
    ModulusOverflow(u64, u32),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is a square mod {1}; its roots lie in F_p")]
    SquareModP(i64, u64),
    #[error("{0} is divisible by {1}")]
    DivisibleByP(i64, u64),
    #[error("F_4 has no odd-characteristic square-root presentation")]
    CharacteristicTwo,
}

/// Kronecker symbol `(a | n)`.
///
/// Uses `(a | 2) = +1` for `a ≡ ±1 (mod 8)`, `-1` for `a ≡ ±3 (mod 8)`, and
/// `(a | -1) = sign(a)`.
pub fn kronecker(a: i64, n: i64) -> Result<i32, ArithError> {
    if n == 0 {
        return Err(ArithError::ZeroModulus);
    }
    let mut result = 1i32;
    let mut n = n as i128;
    let a = a as i128;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    n >>= twos;
    if twos > 0 {
        if a % 2 == 0 {
            return Ok(0);
        }
        if twos % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    Ok(result * jacobi(a.rem_euclid(n), n))
}

/// Jacobi symbol for odd positive `n` and `0 <= a < n`.
fn jacobi(mut a: i128, mut n: i128) -> i32 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut result = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Residue of a signed integer in `[0, m)`.
#[inline]
pub(crate) fn residue(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// Exponent of the prime `p` in a nonzero integer.
pub fn ord_p(n: i128, p: u64) -> u32 {
    assert!(n != 0, "ord_p of zero");
    let p = p as i128;
    let mut n = n.abs();
    let mut k = 0;
    while n % p == 0 {
        n /= p;
        k += 1;
    }
    k
}

const MR_BASES_U64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES_U64 {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES_U64 {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller-Rabin with the first twenty primes as witnesses; exact below
/// 2^64, probabilistic above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if n.is_even() {
        return false;
    }
    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    const BASES: [u32; 20] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    ];
    'witness: for &a in &BASES {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

const TRIAL_LIMIT: u64 = 1_000_000;

fn push_factor<T: PartialEq>(out: &mut Vec<(T, u32)>, p: T) {
    if let Some(entry) = out.iter_mut().find(|(q, _)| *q == p) {
        entry.1 += 1;
    } else {
        out.push((p, 1));
    }
}

/// Brent's variant of Pollard rho; returns a nontrivial factor of the odd
/// composite `n`.
fn rho_u64(n: u64) -> u64 {
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut r = 1u64;
        let mut q = 1u64;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let steps = std::cmp::min(128, r - k);
                for _ in 0..steps {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += steps;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

fn split_u64(n: u64, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        push_factor(out, n);
        return;
    }
    let d = rho_u64(n);
    split_u64(d, out);
    split_u64(n / d, out);
}

/// Prime factorization of a 64-bit integer, primes ascending.
pub fn factorize_u64(n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut out = Vec::new();
    let mut n = n;
    let mut p = 2u64;
    while p <= TRIAL_LIMIT && p * p <= n {
        while n % p == 0 {
            n /= p;
            push_factor(&mut out, p);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        if n < p * p {
            push_factor(&mut out, n);
        } else {
            split_u64(n, &mut out);
        }
    }
    out.sort_unstable();
    out
}

fn rho_big(n: &BigUint) -> BigUint {
    let two = BigUint::from(2u32);
    for c in 1u32.. {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut x = two.clone();
        let mut y = two.clone();
        let mut g = BigUint::one();
        let mut steps = 0u64;
        while g.is_one() && steps < 1 << 24 {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            g = diff.gcd(n);
            steps += 1;
        }
        if !g.is_one() && &g != n {
            return g;
        }
    }
    unreachable!()
}

fn split_big(n: BigUint, out: &mut Vec<(BigUint, u32)>) {
    if n.is_one() {
        return;
    }
    if let Some(small) = n.to_u64() {
        for (p, e) in factorize_u64(small) {
            for _ in 0..e {
                push_factor(out, BigUint::from(p));
            }
        }
        return;
    }
    if is_probable_prime(&n) {
        push_factor(out, n);
        return;
    }
    // rho is hopeless on p^k with large p; remaining factors exceed 2^19
    for k in (2..=n.bits() as u32 / 19).rev() {
        let r = n.nth_root(k);
        if r.pow(k) == n {
            let mut sub = Vec::new();
            split_big(r, &mut sub);
            for (p, e) in sub {
                for _ in 0..e * k {
                    push_factor(out, p.clone());
                }
            }
            return;
        }
    }
    let d = rho_big(&n);
    let rest = &n / &d;
    split_big(d, out);
    split_big(rest, out);
}

/// Prime factorization of an arbitrary positive integer, primes ascending.
///
/// Trial division to 10^6, then Pollard rho. Primality of cofactors is
/// exact below 2^64 and probabilistic above.
pub fn factorize(n: &BigUint) -> Vec<(BigUint, u32)> {
    assert!(!n.is_zero(), "factorize requires n >= 1");
    if let Some(small) = n.to_u64() {
        return factorize_u64(small)
            .into_iter()
            .map(|(p, e)| (BigUint::from(p), e))
            .collect();
    }
    let mut out = Vec::new();
    let mut n = n.clone();
    let mut p = 2u32;
    while (p as u64) <= TRIAL_LIMIT {
        if (&n % p).is_zero() {
            let mut e = 0;
            while (&n % p).is_zero() {
                n /= p;
                e += 1;
            }
            out.push((BigUint::from(p), e));
        }
        if n.is_one() {
            break;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    split_big(n, &mut out);
    out.sort();
    out
}

/// Square root of `a` modulo an odd prime `p` (Tonelli-Shanks), if one
/// exists. Returns the smaller of the two roots.
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if p == 2 || a == 0 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let z = smallest_nonresidue(p);
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r.min(p - r))
}

/// Smallest positive quadratic nonresidue modulo an odd prime.
pub fn smallest_nonresidue(p: u64) -> u64 {
    assert!(p > 2);
    (2..p)
        .find(|&n| pow_mod(n, (p - 1) / 2, p) == p - 1)
        .expect("odd prime has a nonresidue")
}

/// The monic quadratic `x^2 + b x + c` over the integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonicQuadratic {
    pub b: i64,
    pub c: i64,
}

impl MonicQuadratic {
    pub fn new(b: i64, c: i64) -> Self {
        Self { b, c }
    }

    /// `x^2 - d`.
    pub fn pure(d: i64) -> Self {
        Self { b: 0, c: -d }
    }

    /// Minimal polynomial `x^2 - d x + (d^2 - d)/4` of `(d + sqrt d)/2` for
    /// a discriminant `d ≡ 0, 1 (mod 4)`.
    pub fn discriminant_generator(d: i64) -> Self {
        let d = d as i128;
        let c = (d * d - d) / 4;
        Self {
            b: -(d as i64),
            c: c.try_into().expect("generator constant fits in i64"),
        }
    }

    pub fn discriminant(&self) -> i128 {
        let b = self.b as i128;
        b * b - 4 * self.c as i128
    }

    pub fn eval_mod(&self, x: u64, m: u64) -> u64 {
        let x2 = mul_mod(x, x, m);
        let bx = mul_mod(residue(self.b as i128, m), x, m);
        ((x2 as u128 + bx as u128 + residue(self.c as i128, m) as u128) % m as u128) as u64
    }

    fn derivative_mod(&self, x: u64, m: u64) -> u64 {
        ((2 * x as u128 + residue(self.b as i128, m) as u128) % m as u128) as u64
    }

    /// The other root modulo `m`, given one root `r`: `-b - r`.
    pub fn conjugate_root(&self, r: u64, m: u64) -> u64 {
        residue(-(self.b as i128) - r as i128, m)
    }

    /// Roots modulo the prime `p`, ascending.
    pub fn roots_mod_prime(&self, p: u64) -> Vec<u64> {
        if p == 2 {
            return (0..2).filter(|&x| self.eval_mod(x, 2) == 0).collect();
        }
        let disc = residue(self.discriminant(), p);
        let Some(s) = sqrt_mod_prime(disc, p) else {
            return Vec::new();
        };
        let inv2 = p.div_ceil(2);
        let minus_b = residue(-(self.b as i128), p);
        let r1 = mul_mod((minus_b + s) % p, inv2, p);
        let r2 = mul_mod((minus_b + p - s) % p, inv2, p);
        let mut roots = vec![r1.min(r2), r1.max(r2)];
        roots.dedup();
        roots
    }
}

impl fmt::Display for MonicQuadratic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^2 + ({})x + ({})", self.b, self.c)
    }
}

/// Lifts the canonical (smaller) simple root of `f` mod `p` to a root mod
/// `p^k` by Newton iteration.
pub fn hensel_root(f: &MonicQuadratic, p: u64, k: u32) -> Result<u64, ArithError> {
    lift_root(f, p, k, 0)
}

/// Root lifting from the canonical (`which = 0`) or other (`which = 1`)
/// root mod `p`.
pub(crate) fn lift_root(
    f: &MonicQuadratic,
    p: u64,
    k: u32,
    which: usize,
) -> Result<u64, ArithError> {
    assert!(k >= 1, "precision exponent must be positive");
    if !is_prime_u64(p) {
        return Err(ArithError::NotPrime(p));
    }
    let roots = f.roots_mod_prime(p);
    let simple: Vec<u64> = roots
        .into_iter()
        .filter(|&r| f.derivative_mod(r, p) != 0)
        .collect();
    let Some(&root) = simple.get(which) else {
        return Err(ArithError::NonHenselian(*f, p));
    };
    let modulus = p
        .checked_pow(k)
        .ok_or(ArithError::ModulusOverflow(p, k))?;
    let mut c = root;
    let mut precision = p;
    while precision < modulus {
        precision = precision.saturating_mul(precision).min(modulus);
        let fc = f.eval_mod(c, precision);
        let dfc = f.derivative_mod(c, precision);
        let inv = mod_inverse(dfc, precision).expect("derivative is a unit");
        c = (c as u128 + precision as u128 - mul_mod(fc, inv, precision) as u128) as u64
            % precision;
    }
    Ok(c % modulus)
}

/// Inverse of `a` modulo `m` when `gcd(a, m) = 1`.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Presentation of `F_{p^2}`: `F_p[t]/(t^2 - n)` for odd `p` with `n` the
/// smallest nonresidue, `F_2[t]/(t^2 + t + 1)` for `p = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp2Field {
    p: u64,
    nonresidue: u64,
}

impl Fp2Field {
    pub fn new(p: u64) -> Result<Self, ArithError> {
        if !is_prime_u64(p) {
            return Err(ArithError::NotPrime(p));
        }
        let nonresidue = if p == 2 { 1 } else { smallest_nonresidue(p) };
        Ok(Self { p, nonresidue })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `n` with `t^2 = n` (odd `p`).
    pub fn nonresidue(&self) -> u64 {
        self.nonresidue
    }

    pub fn element(&self, c0: i64, c1: i64) -> Fp2Element {
        Fp2Element {
            field: *self,
            c0: residue(c0 as i128, self.p),
            c1: residue(c1 as i128, self.p),
        }
    }

    pub fn zero(&self) -> Fp2Element {
        self.element(0, 0)
    }

    pub fn one(&self) -> Fp2Element {
        self.element(1, 0)
    }

    pub fn generator(&self) -> Fp2Element {
        self.element(0, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp2Element {
    field: Fp2Field,
    c0: u64,
    c1: u64,
}

impl Fp2Element {
    pub fn field(&self) -> Fp2Field {
        self.field
    }

    pub fn coords(&self) -> (u64, u64) {
        (self.c0, self.c1)
    }

    pub fn is_zero(&self) -> bool {
        self.c0 == 0 && self.c1 == 0
    }

    /// Lies in the prime field.
    pub fn in_base_field(&self) -> bool {
        self.c1 == 0
    }

    /// `x -> x^p`.
    pub fn frobenius(&self) -> Self {
        let p = self.field.p;
        if p == 2 {
            // t^2 = t + 1
            Self { c0: (self.c0 + self.c1) % 2, ..*self }
        } else {
            Self { c1: (p - self.c1) % p, ..*self }
        }
    }

    /// `x * x^p`, an element of `F_p`.
    pub fn norm(&self) -> u64 {
        let n = *self * self.frobenius();
        debug_assert!(n.in_base_field());
        n.c0
    }

    pub fn inverse(&self) -> Option<Self> {
        let inv_norm = mod_inverse(self.norm(), self.field.p)?;
        let conj = self.frobenius();
        let p = self.field.p;
        Some(Self {
            c0: mul_mod(conj.c0, inv_norm, p),
            c1: mul_mod(conj.c1, inv_norm, p),
            ..*self
        })
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut acc = self.field.one();
        let mut base = *self;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }
}

impl fmt::Display for Fp2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}t (mod {})", self.c0, self.c1, self.field.p)
    }
}

impl Add for Fp2Element {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.field, rhs.field, "mixed F_p^2 presentations");
        let p = self.field.p;
        Self {
            c0: (self.c0 + rhs.c0) % p,
            c1: (self.c1 + rhs.c1) % p,
            ..self
        }
    }
}

impl Neg for Fp2Element {
    type Output = Self;
    fn neg(self) -> Self {
        let p = self.field.p;
        Self {
            c0: (p - self.c0) % p,
            c1: (p - self.c1) % p,
            ..self
        }
    }
}

impl Sub for Fp2Element {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for Fp2Element {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.field, rhs.field, "mixed F_p^2 presentations");
        let p = self.field.p;
        let a0b0 = mul_mod(self.c0, rhs.c0, p);
        let a1b1 = mul_mod(self.c1, rhs.c1, p);
        let cross = (mul_mod(self.c0, rhs.c1, p) + mul_mod(self.c1, rhs.c0, p)) % p;
        if p == 2 {
            Self {
                c0: (a0b0 + a1b1) % 2,
                c1: (cross + a1b1) % 2,
                ..self
            }
        } else {
            Self {
                c0: (a0b0 + mul_mod(a1b1, self.field.nonresidue, p)) % p,
                c1: cross,
                ..self
            }
        }
    }
}

/// Square root of `d` in `F_{p^2}` outside `F_p`, for odd `p` with
/// `(d | p) = -1`.
///
/// The root is `r t` with `r^2 = d / n`; the canonical choice takes the
/// smaller of `r, p - r`. The other root is its Frobenius conjugate.
pub fn fp2_sqrt(d: i64, p: u64) -> Result<Fp2Element, ArithError> {
    if p == 2 {
        return Err(ArithError::CharacteristicTwo);
    }
    let field = Fp2Field::new(p)?;
    let dr = residue(d as i128, p);
    if dr == 0 {
        return Err(ArithError::DivisibleByP(d, p));
    }
    if pow_mod(dr, (p - 1) / 2, p) == 1 {
        return Err(ArithError::SquareModP(d, p));
    }
    let ratio = mul_mod(dr, mod_inverse(field.nonresidue, p).expect("unit"), p);
    let r = sqrt_mod_prime(ratio, p).expect("product of two nonresidues is a residue");
    Ok(field.element(0, r as i64))
}
