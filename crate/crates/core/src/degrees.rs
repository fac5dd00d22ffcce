//! Arithmetic degrees of the zero-dimensional CM stacks.
//!
//! Every ideal that appears in the degree formulas has the shape
//! `alpha * (stuff) * D`, which the companion element `e` of `alpha` turns
//! into the integral ideal `(e) * (stuff)`. One factorization of `N(e)` per
//! `alpha` drives the whole computation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cmdata::{theta_kernel_contains, AlphaElement, CmError, ThetaHom};
use crate::fields::{
    rho, rho_at, CmPairConfig, FIdeal, FieldError, KSplitting, PrimeF,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DegreeError {
    #[error("difference set is not the singleton {0}")]
    NotSingletonDiff(PrimeF),
    #[error("classical formula requires a split quaternion algebra, got dB = {0}")]
    RequiresSplitAlgebra(u64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Cm(#[from] CmError),
}

/// Formal combination `sum c_p log p` with exact nonnegative coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ArithDegree {
    coeffs: BTreeMap<u64, BigRational>,
}

impl ArithDegree {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn log_of(p: u64, c: BigRational) -> Self {
        let mut d = Self::zero();
        d.add_term(p, c);
        d
    }

    fn add_term(&mut self, p: u64, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(p).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&p);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, p: u64) -> BigRational {
        self.coeffs.get(&p).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `(p, c_p)` with `c_p != 0`, ascending in `p`.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.coeffs.iter().map(|(p, c)| (*p, c))
    }

    pub fn support(&self) -> Vec<u64> {
        self.coeffs.keys().copied().collect()
    }

    /// Integer coefficients, or `None` if some coefficient is fractional.
    pub fn integer_coefficients(&self) -> Option<BTreeMap<u64, BigInt>> {
        self.coeffs
            .iter()
            .map(|(p, c)| c.is_integer().then(|| (*p, c.to_integer())))
            .collect()
    }

    pub fn is_nonnegative_integral(&self) -> bool {
        self.coeffs.values().all(|c| c.is_integer() && !c.is_negative())
    }

    pub fn scaled(&self, k: i64) -> Self {
        let k = BigRational::from_integer(k.into());
        let mut out = Self::zero();
        for (p, c) in &self.coeffs {
            out.add_term(*p, c * &k);
        }
        out
    }

    /// Floating approximation of `sum c_p ln p`.
    pub fn log_value(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(p, c)| c.to_f64().unwrap_or(f64::NAN) * (*p as f64).ln())
            .sum()
    }
}

impl AddAssign<&ArithDegree> for ArithDegree {
    fn add_assign(&mut self, rhs: &ArithDegree) {
        for (p, c) in &rhs.coeffs {
            self.add_term(*p, c.clone());
        }
    }
}

impl Add for ArithDegree {
    type Output = ArithDegree;
    fn add(mut self, rhs: ArithDegree) -> ArithDegree {
        self += &rhs;
        self
    }
}

impl std::iter::Sum for ArithDegree {
    fn sum<I: Iterator<Item = ArithDegree>>(iter: I) -> Self {
        iter.fold(ArithDegree::zero(), Add::add)
    }
}

/// `"n"` for integers, `"n/d"` otherwise.
pub fn rational_string(c: &BigRational) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl Serialize for ArithDegree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.coeffs.len()))?;
        for (p, c) in &self.coeffs {
            map.serialize_entry(&p.to_string(), &rational_string(c))?;
        }
        map.end()
    }
}

impl fmt::Display for ArithDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(p, c)| format!("{}*log({p})", rational_string(c)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// The local ring length variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LengthBranch {
    /// `½ ord_p(alpha p D)`
    Nu,
    /// `½ ord_p(alpha)`
    NuPrime,
}

/// The ideal `alpha * D = (e)`.
fn alpha_d_ideal(alpha: &AlphaElement, config: &CmPairConfig) -> Result<FIdeal, FieldError> {
    config.ideal_of(alpha.companion())
}

fn half(n: i64) -> BigRational {
    BigRational::new(n.into(), 2.into())
}

/// Primes `p` of `F` with `chi_p(alpha a_theta D) = -1`, ascending.
pub fn diff_set(
    alpha: &AlphaElement,
    theta: &ThetaHom,
    config: &CmPairConfig,
) -> Result<Vec<PrimeF>, DegreeError> {
    let ideal = alpha_d_ideal(alpha, config)? * theta.a_theta();
    Ok(ideal
        .factors()
        .filter(|(p, e)| p.k_splitting() == KSplitting::InertInK && e % 2 != 0)
        .map(|(p, _)| *p)
        .collect())
}

pub fn local_length(
    alpha: &AlphaElement,
    prime: &PrimeF,
    branch: LengthBranch,
    config: &CmPairConfig,
) -> Result<BigRational, DegreeError> {
    let v = config.val(alpha.companion(), prime)? as i64;
    Ok(match branch {
        LengthBranch::Nu => half(v + 1),
        LengthBranch::NuPrime => {
            let diff_ord = config.different().exponent(prime) as i64;
            half(v - diff_ord)
        }
    })
}

/// Local factor at `ell` of `rho(alpha a_theta^-1 p^-1 D)`.
pub fn orbital_integral(
    ell: u64,
    alpha: &AlphaElement,
    theta: &ThetaHom,
    p_diff: &PrimeF,
    config: &CmPairConfig,
) -> Result<u64, DegreeError> {
    if diff_set(alpha, theta, config)? != [*p_diff] {
        return Err(DegreeError::NotSingletonDiff(*p_diff));
    }
    let p = p_diff.p();
    let kernel_prime_over = |q: u64| {
        theta
            .locals()
            .iter()
            .find(|l| l.p() == q)
            .map(|l| FIdeal::prime(l.kernel_prime()))
            .unwrap_or_else(FIdeal::unit)
    };
    let local = alpha_d_ideal(alpha, config)?.local_part(ell);
    let ideal = if ell != p {
        if config.db() % ell != 0 {
            local
        } else {
            local * kernel_prime_over(ell).inverse()
        }
    } else {
        local * FIdeal::prime(*p_diff).inverse() * kernel_prime_over(p).inverse()
    };
    Ok(rho_at(&ideal, ell))
}

/// One evaluated `(alpha, theta)` term with its intermediate quantities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTerm {
    pub diff: Vec<PrimeF>,
    pub branch: Option<LengthBranch>,
    pub length: Option<BigRational>,
    pub rho: Option<u64>,
    pub degree: ArithDegree,
}

impl DegreeTerm {
    fn vanishing(diff: Vec<PrimeF>) -> Self {
        Self {
            diff,
            branch: None,
            length: None,
            rho: None,
            degree: ArithDegree::zero(),
        }
    }
}

/// `deg(X_{theta, alpha})` together with `Diff`, the length factor and `rho`.
pub fn degree_term(
    alpha: &AlphaElement,
    theta: &ThetaHom,
    config: &CmPairConfig,
) -> Result<DegreeTerm, DegreeError> {
    let diff = diff_set(alpha, theta, config)?;
    let [prime] = diff[..] else {
        return Ok(DegreeTerm::vanishing(diff));
    };
    let p = prime.p();
    let branch = if config.db() % p == 0 && theta_kernel_contains(theta, &prime)? {
        LengthBranch::NuPrime
    } else {
        LengthBranch::Nu
    };
    let length = local_length(alpha, &prime, branch, config)?;
    let remainder =
        alpha_d_ideal(alpha, config)? * theta.a_theta().inverse() * FIdeal::prime(prime).inverse();
    let r = rho(&remainder);
    let c = &length * BigRational::from_integer(r.into());
    assert!(
        c.is_integer() && !c.is_negative(),
        "degree coefficient {c} at {prime} is not a nonnegative integer"
    );
    Ok(DegreeTerm {
        diff,
        branch: Some(branch),
        length: Some(length),
        rho: Some(r),
        degree: ArithDegree::log_of(p, c),
    })
}

pub fn degree_x(
    alpha: &AlphaElement,
    theta: &ThetaHom,
    config: &CmPairConfig,
) -> Result<ArithDegree, DegreeError> {
    Ok(degree_term(alpha, theta, config)?.degree)
}

/// `½ log p · ord_p(alpha p D) · rho(alpha p^-1 D)` for the split algebra,
/// computed without the quaternionic machinery.
pub fn degree_x_classical(
    alpha: &AlphaElement,
    config: &CmPairConfig,
) -> Result<ArithDegree, DegreeError> {
    if config.db() != 1 {
        return Err(DegreeError::RequiresSplitAlgebra(config.db()));
    }
    let ideal = config.ideal_of(alpha.companion())?;
    let mut diff = ideal
        .factors()
        .filter(|(p, e)| p.k_splitting() == KSplitting::InertInK && e % 2 == 1);
    let (Some((prime, ord)), None) = (diff.next(), diff.next()) else {
        return Ok(ArithDegree::zero());
    };
    let rho_rest: u64 = ideal
        .factors()
        .map(|(q, e)| {
            let e = if q == prime { e - 1 } else { e };
            match q.k_splitting() {
                KSplitting::SplitInK => e as u64 + 1,
                KSplitting::InertInK => u64::from(e % 2 == 0),
            }
        })
        .product();
    let c = half(ord as i64 + 1) * BigRational::from_integer(rho_rest.into());
    Ok(ArithDegree::log_of(prime.p(), c))
}

/// Fourier coefficient `a_alpha = 4 deg(X_alpha)` of the derivative of the
/// incoherent Eisenstein series.
pub fn eisenstein_coeff(
    alpha: &AlphaElement,
    config: &CmPairConfig,
) -> Result<ArithDegree, DegreeError> {
    Ok(degree_x_classical(alpha, config)?.scaled(4))
}
