//! CM combinatorial data: totally positive trace-`m` elements of the inverse
//! different, and ring homomorphisms `O_K -> O_B / m_B`.

use std::fmt;

use num_integer::Roots;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{fp2_sqrt, mod_inverse, Fp2Element, Fp2Field};
use crate::fields::{CmPairConfig, FElement, FIdeal, PrimeF, PrimeTag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CmError {
    #[error("prime {0} does not divide dB")]
    PrimeNotOverDb(u64),
    #[error("theta image of w at {0} matches no prime label")]
    KernelMismatch(u64),
}

/// `alpha` of trace `m` in the inverse different, stored through its
/// companion `e = (a + m sqrt D)/2` with `(alpha) D = (e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlphaElement {
    a: i64,
    m: u64,
    companion: FElement,
}

impl AlphaElement {
    /// `None` unless `a ≡ mD (mod 2)` and `a^2 < m^2 D`.
    pub fn new(a: i64, config: &CmPairConfig) -> Option<Self> {
        let m = config.m() as i64;
        let d = config.disc();
        if (a - m * d).rem_euclid(2) != 0 {
            return None;
        }
        if (a as i128).pow(2) >= (m as i128).pow(2) * d as i128 {
            return None;
        }
        let companion = config.element((a - m * d) / 2, m);
        Some(Self {
            a,
            m: m as u64,
            companion,
        })
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn companion(&self) -> &FElement {
        &self.companion
    }

    /// `|N(e)| = (m^2 D - a^2)/4`.
    pub fn companion_norm(&self) -> u64 {
        let d = self.companion.disc() as i128;
        let m = self.m as i128;
        let a = self.a as i128;
        ((m * m * d - a * a) / 4) as u64
    }
}

impl fmt::Display for AlphaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}*sqrt(D))/(2 sqrt(D))", self.a, self.m)
    }
}

/// All `alpha`, ascending in `a`.
pub fn enumerate_alphas(config: &CmPairConfig) -> Vec<AlphaElement> {
    let m = config.m() as i128;
    let bound = m * m * config.disc() as i128;
    // largest a with a^2 < m^2 D
    let a_max = (bound - 1).sqrt() as i64;
    (-a_max..=a_max)
        .filter_map(|a| AlphaElement::new(a, config))
        .collect()
}

/// Images of the generator `(d + sqrt d)/2` of an imaginary quadratic
/// ring of integers in `F_{p^2}`, for `p` inert in it. Canonical root first.
pub fn generator_images(d: i64, field: Fp2Field) -> [Fp2Element; 2] {
    let p = field.p();
    let roots = if p == 2 {
        let t = field.generator();
        [t, t.frobenius()]
    } else {
        let s = fp2_sqrt(d, p).expect("p is inert in Q(sqrt d)");
        let half = mod_inverse(2, p).expect("odd p") as i64;
        let half = field.element(half, 0);
        let d = field.element(d, 0);
        [(d + s) * half, (d - s) * half]
    };
    let c = (d as i128 * d as i128 - d as i128) / 4;
    let c = field.element(c.rem_euclid(p as i128) as i64, 0);
    let dd = field.element(d, 0);
    for r in roots {
        debug_assert!((r * r - dd * r + c).is_zero());
    }
    roots
}

/// `theta` restricted to one prime `p | dB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThetaLocal {
    p: u64,
    flip1: bool,
    flip2: bool,
    r1: Fp2Element,
    r2: Fp2Element,
    kernel: PrimeF,
}

impl ThetaLocal {
    fn new(config: &CmPairConfig, p: u64, flip1: bool, flip2: bool) -> Result<Self, CmError> {
        let field = Fp2Field::new(p).expect("dB primes are prime");
        let r1 = generator_images(config.d1(), field)[flip1 as usize];
        let r2 = generator_images(config.d2(), field)[flip2 as usize];
        // w = D + 2 g1 g2 - d2 g1 - d1 g2 in O_K
        let k = |n: i64| field.element(n, 0);
        let w_image =
            k(config.disc()) + k(2) * r1 * r2 - k(config.d2()) * r1 - k(config.d1()) * r2;
        if !w_image.in_base_field() {
            return Err(CmError::KernelMismatch(p));
        }
        let residue = w_image.coords().0;
        let kernel = config
            .primes_above(p)
            .into_iter()
            .find(|q| matches!(q.tag(), PrimeTag::Split { root, .. } if root == residue))
            .ok_or(CmError::KernelMismatch(p))?;
        Ok(Self {
            p,
            flip1,
            flip2,
            r1,
            r2,
            kernel,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Whether the non-canonical embedding of `O_{K_1}` (resp. `O_{K_2}`) is used.
    pub fn flips(&self) -> (bool, bool) {
        (self.flip1, self.flip2)
    }

    /// Images of the generators of `O_{K_1}`, `O_{K_2}`.
    pub fn generator_roots(&self) -> (Fp2Element, Fp2Element) {
        (self.r1, self.r2)
    }

    /// Images `s1, s2` of `sqrt d1, sqrt d2` (odd `p` only).
    pub fn square_roots(&self, config: &CmPairConfig) -> Option<(Fp2Element, Fp2Element)> {
        if self.p == 2 {
            return None;
        }
        let f = self.r1.field();
        let s = |r: Fp2Element, d: i64| f.element(2, 0) * r - f.element(d, 0);
        Some((s(self.r1, config.d1()), s(self.r2, config.d2())))
    }

    /// The prime of `F` over `p` contained in the kernel.
    pub fn kernel_prime(&self) -> PrimeF {
        self.kernel
    }
}

/// A ring homomorphism `O_K -> O_B / m_B = prod_{p | dB} F_{p^2}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ThetaHom {
    locals: Vec<ThetaLocal>,
}

impl ThetaHom {
    /// The unique homomorphism for `dB = 1`.
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn locals(&self) -> &[ThetaLocal] {
        &self.locals
    }

    pub fn a_theta(&self) -> FIdeal {
        a_theta(self)
    }

    /// Compact label such as `11:+-,23:++` (empty for `dB = 1`).
    pub fn label(&self) -> String {
        let sign = |b: bool| if b { '-' } else { '+' };
        self.locals
            .iter()
            .map(|l| format!("{}:{}{}", l.p, sign(l.flip1), sign(l.flip2)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaSummary {
    pub label: String,
    pub a_theta: String,
}

impl From<&ThetaHom> for ThetaSummary {
    fn from(t: &ThetaHom) -> Self {
        Self {
            label: t.label(),
            a_theta: t.a_theta().to_string(),
        }
    }
}

/// All `4^r` homomorphisms, lexicographic in `(p, flip1, flip2)`.
pub fn enumerate_thetas(config: &CmPairConfig) -> Vec<ThetaHom> {
    let mut thetas = vec![ThetaHom::trivial()];
    for &p in config.db_primes() {
        let choices: Vec<ThetaLocal> = [(false, false), (false, true), (true, false), (true, true)]
            .into_iter()
            .map(|(f1, f2)| ThetaLocal::new(config, p, f1, f2).expect("consistent embedding data"))
            .collect();
        thetas = thetas
            .into_iter()
            .flat_map(|t| {
                choices.iter().map(move |c| {
                    let mut locals = t.locals.clone();
                    locals.push(*c);
                    ThetaHom { locals }
                })
            })
            .collect();
    }
    thetas
}

/// `ker(theta) ∩ O_F`.
pub fn a_theta(theta: &ThetaHom) -> FIdeal {
    theta
        .locals
        .iter()
        .fold(FIdeal::unit(), |acc, l| acc * FIdeal::prime(l.kernel))
}

pub fn theta_kernel_contains(theta: &ThetaHom, prime: &PrimeF) -> Result<bool, CmError> {
    theta
        .locals
        .iter()
        .find(|l| l.p == prime.p())
        .map(|l| l.kernel == *prime)
        .ok_or(CmError::PrimeNotOverDb(prime.p()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn cfg(d1: i64, d2: i64, db: i64, m: i64) -> CmPairConfig {
        CmPairConfig::validate(d1, d2, db, m).unwrap()
    }

    fn a_values(c: &CmPairConfig) -> Vec<i64> {
        enumerate_alphas(c).iter().map(|a| a.a()).collect()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(a_values(&cfg(-3, -4, 1, 1)), vec![-2, 0, 2]);
        assert_eq!(a_values(&cfg(-7, -4, 1, 1)), vec![-4, -2, 0, 2, 4]);
        let heegner = a_values(&cfg(-3, -163, 1, 1));
        assert_eq!(heegner.len(), 22);
        assert_eq!(heegner.first(), Some(&-21));
        assert!(heegner.iter().all(|a| a % 2 != 0));
    }

    #[test]
    fn companion_identities() {
        let c = cfg(-7, -4, 1, 3);
        for alpha in enumerate_alphas(&c) {
            let e = alpha.companion();
            assert_eq!(e.trace(), alpha.a() as i128);
            assert_eq!(e.norm().unsigned_abs() as u64, alpha.companion_norm());
            assert!(e.norm() < 0);
        }
    }

    #[test]
    fn theta_counts() {
        assert_eq!(enumerate_thetas(&cfg(-3, -4, 1, 1)), vec![ThetaHom::trivial()]);
        assert!(ThetaHom::trivial().a_theta().is_unit());
        assert_eq!(enumerate_thetas(&cfg(-3, -4, 253, 1)).len(), 16);
    }

    #[test]
    fn four_prime_quaternion_discriminant() {
        // 11, 23, 59, 71 are all inert in Q(sqrt -3) and Q(sqrt -4)
        let c = cfg(-3, -4, 11 * 23 * 59 * 71, 1);
        assert_eq!(enumerate_thetas(&c).len(), 256);
    }

    #[test]
    fn a_theta_example_at_11() {
        let c = cfg(-3, -4, 253, 1);
        let thetas = enumerate_thetas(&c);
        let local = thetas[0].locals()[0];
        let (s1, s2) = local.square_roots(&c).unwrap();
        assert_eq!(s1.coords(), (0, 2));
        assert_eq!(s2.coords(), (0, 3));
        // s1 s2 = 12 ≡ 1: the prime where sqrt 12 ≡ 1
        assert_eq!(local.kernel_prime().sqrt_disc_residue(12), Some(1));
        let flipped = thetas[4].locals()[0];
        assert_eq!(flipped.flips(), (false, true));
        assert_eq!(flipped.square_roots(&c).unwrap().1.coords(), (0, 8));
        assert_eq!(flipped.kernel_prime().sqrt_disc_residue(12), Some(10));
    }

    #[test]
    fn kernel_membership() {
        let c = cfg(-3, -4, 253, 1);
        let theta = &enumerate_thetas(&c)[0];
        let kernel11 = theta.locals()[0].kernel_prime();
        let other = c.primes_above(11).into_iter().find(|p| *p != kernel11).unwrap();
        assert_eq!(theta_kernel_contains(theta, &kernel11), Ok(true));
        assert_eq!(theta_kernel_contains(theta, &other), Ok(false));
        let p3 = c.primes_above(3)[0];
        assert_eq!(theta_kernel_contains(theta, &p3), Err(CmError::PrimeNotOverDb(3)));
    }

    #[test]
    fn a_theta_balanced_and_squarefree() {
        let c = cfg(-3, -4, 253, 1);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for t in enumerate_thetas(&c) {
            let a = t.a_theta();
            assert!(a.is_integral());
            assert!(a.factors().all(|(_, e)| e == 1));
            assert_eq!(a.norm(), num_rational::BigRational::from_integer(253.into()));
            *counts.entry(a.to_string()).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        assert!(counts.values().all(|&n| n == 4));
    }

    #[test]
    fn dyadic_quaternion_prime() {
        // 2 is inert in Q(sqrt -3) and Q(sqrt -19) (both ≡ 5 mod 8), as is 29
        let c = cfg(-3, -19, 2 * 29, 1);
        assert_eq!(c.db_primes(), &[2, 29]);
        let thetas = enumerate_thetas(&c);
        assert_eq!(thetas.len(), 16);
        for t in &thetas {
            let l = t.locals()[0];
            let (f1, f2) = l.flips();
            let base = thetas[0].locals()[0].kernel_prime();
            assert_eq!(l.kernel_prime() == base, f1 == f2);
        }
    }

    #[test]
    fn conjugation_rules() {
        let c = cfg(-7, -4, 3 * 19, 2);
        for t in enumerate_thetas(&c) {
            for l in t.locals() {
                let base =
                    ThetaLocal::new(&c, l.p(), false, false).unwrap().kernel_prime();
                let (f1, f2) = l.flips();
                assert_eq!(l.kernel_prime() == base, f1 == f2);
            }
        }
    }
}
