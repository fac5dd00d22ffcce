#![allow(dead_code)]

use shimura_cm::arith::{is_prime_u64, kronecker};
use shimura_cm::fields::{is_fundamental, CmPairConfig};

/// Negative fundamental discriminants with `|d| <= bound`, descending.
pub fn discriminants(bound: i64) -> Vec<i64> {
    (1..=bound).map(|n| -n).filter(|&d| is_fundamental(d)).collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Unordered coprime pairs `(d1, d2)` with `|d_i| <= bound`.
pub fn coprime_pairs(bound: i64) -> Vec<(i64, i64)> {
    let ds = discriminants(bound);
    let mut out = Vec::new();
    for (i, &d1) in ds.iter().enumerate() {
        for &d2 in &ds[i + 1..] {
            if gcd(d1, d2) == 1 {
                out.push((d1, d2));
            }
        }
    }
    out
}

/// Products of two distinct primes below `limit` inert in both fields.
pub fn two_prime_db(d1: i64, d2: i64, limit: u64) -> Vec<i64> {
    let inert: Vec<u64> = (2..limit)
        .filter(|&p| is_prime_u64(p))
        .filter(|&p| {
            kronecker(d1, p as i64).unwrap() == -1 && kronecker(d2, p as i64).unwrap() == -1
        })
        .collect();
    let mut out = Vec::new();
    for (i, &p) in inert.iter().enumerate() {
        for &q in &inert[i + 1..] {
            out.push((p * q) as i64);
        }
    }
    out
}

pub fn config(d1: i64, d2: i64, db: i64, m: i64) -> CmPairConfig {
    CmPairConfig::validate(d1, d2, db, m).unwrap()
}
