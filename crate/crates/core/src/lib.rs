//! Exact arithmetic intersection numbers of CM divisors on modular and
//! Shimura curves, with a numerical singular-moduli cross-check.
//!
//! The pipeline runs `fields` (the real quadratic field `F = Q(sqrt(d1 d2))`
//! and its ideals) into `cmdata` (trace-`m` elements and local embeddings),
//! `degrees` (one term per pair) and `hecke` (totals). `gzoracle` checks
//! the unramified case against `J(d1, d2)^2`.

pub mod arith;
pub mod bignum;
pub mod cli;
pub mod cmdata;
pub mod degrees;
pub mod fields;
pub mod gzoracle;
pub mod hecke;

pub use cmdata::{enumerate_alphas, enumerate_thetas, AlphaElement, ThetaHom};
pub use degrees::{degree_x, degree_x_classical, ArithDegree};
pub use fields::{CmPairConfig, ConfigError, FIdeal, PrimeF};
pub use gzoracle::{gz_compare, gz_square, reduced_forms};
pub use hecke::{intersection_number, report, IntersectionReport};
