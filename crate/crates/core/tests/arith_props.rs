use num_bigint::BigUint;
use num_traits::One;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use shimura_cm::arith::{
    factorize, factorize_u64, fp2_sqrt, hensel_root, kronecker, Fp2Field, MonicQuadratic,
};

fn powmod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

fn trial_is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn small_primes(limit: u64) -> Vec<u64> {
    (2..limit).filter(|&p| trial_is_prime(p)).collect()
}

#[test]
fn kronecker_is_multiplicative_in_the_top_argument() {
    for n in -200i64..=200 {
        if n == 0 {
            continue;
        }
        let table: Vec<i32> = (-200i64..=200).map(|a| kronecker(a, n).unwrap()).collect();
        for a in -200i64..=200 {
            let ka = table[(a + 200) as usize];
            for b in -200i64..=200 {
                // (0/-1) = 1 while (a/-1) = sign(a): no multiplicativity there
                if n == -1 && (a == 0 || b == 0) {
                    continue;
                }
                let kb = table[(b + 200) as usize];
                assert_eq!(ka * kb, kronecker(a * b, n).unwrap(), "a={a} b={b} n={n}");
            }
        }
    }
}

#[test]
fn kronecker_matches_euler_criterion() {
    for p in small_primes(300).into_iter().filter(|&p| p > 2) {
        for a in -300i64..=300 {
            let r = powmod(a.rem_euclid(p as i64) as u128, (p as u128 - 1) / 2, p as u128);
            let euler = match r {
                0 => 0,
                1 => 1,
                _ => -1,
            };
            assert_eq!(kronecker(a, p as i64).unwrap(), euler, "({a}/{p})");
        }
    }
    // (a/2) depends on a mod 8
    for a in -64i64..=64 {
        let want = match a.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
        assert_eq!(kronecker(a, 2).unwrap(), want);
    }
}

#[test]
fn hensel_roots_on_random_quadratics() {
    let primes = small_primes(1000);
    let mut rng = StdRng::seed_from_u64(7);
    let mut lifted = 0;
    while lifted < 1000 {
        let p = primes[rng.gen_range(0..primes.len())];
        let kmax = (62.0 / (p as f64).log2()).floor() as u32;
        let k = rng.gen_range(1..=kmax.max(1));
        let f = MonicQuadratic::new(rng.gen_range(-1_000_000..=1_000_000), rng.gen_range(-1_000_000..=1_000_000));
        let modulus = (p as u128).pow(k);
        let eval = |x: u128| {
            let b = (f.b as i128).rem_euclid(modulus as i128) as u128;
            let c = (f.c as i128).rem_euclid(modulus as i128) as u128;
            (x * x % modulus + b * x % modulus + c) % modulus
        };
        // brute-force simple roots mod p
        let simple: Vec<u64> = (0..p)
            .filter(|&x| {
                let x = x as u128;
                let pm = p as u128;
                let fx = (x * x + (f.b as i128).rem_euclid(pm as i128) as u128 * x
                    + (f.c as i128).rem_euclid(pm as i128) as u128)
                    % pm;
                let dfx = (2 * x + (f.b as i128).rem_euclid(pm as i128) as u128) % pm;
                fx == 0 && dfx != 0
            })
            .collect();
        match hensel_root(&f, p, k) {
            Ok(c) => {
                assert_eq!(simple.first().copied(), Some(c % p));
                assert_eq!(eval(c as u128), 0, "f({c}) mod {p}^{k} for {f:?}");
                let other = ((-(f.b as i128) - c as i128).rem_euclid(modulus as i128)) as u128;
                assert_eq!(eval(other), 0);
                lifted += 1;
            }
            Err(_) => assert!(simple.is_empty(), "{f:?} has simple roots mod {p}"),
        }
    }
}

#[test]
fn fp2_field_laws_on_random_triples() {
    let primes = small_primes(500);
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..1000 {
        let p = primes[rng.gen_range(0..primes.len())];
        let f = Fp2Field::new(p).unwrap();
        let mut pick = || f.element(rng.gen_range(0..p as i64), rng.gen_range(0..p as i64));
        let (x, y, z) = (pick(), pick(), pick());
        assert_eq!((x * y) * z, x * (y * z));
        assert_eq!(x * (y + z), x * y + x * z);
        assert_eq!(x + y, y + x);
        assert_eq!(x * y, y * x);
        assert_eq!(x - x, f.zero());
        assert_eq!(x.frobenius().frobenius(), x);
        assert_eq!((x * y).frobenius(), x.frobenius() * y.frobenius());
        assert_eq!(x.pow(p), x.frobenius());
        if !x.is_zero() {
            assert_eq!(x * x.inverse().unwrap(), f.one());
            // norm = x^(p+1) lies in F_p
            assert_eq!(x.pow(p + 1).coords(), (x.norm(), 0));
        } else {
            assert!(x.inverse().is_none());
        }
    }
}

#[test]
fn fp2_square_roots_are_anti_invariant() {
    for p in small_primes(400).into_iter().filter(|&p| p > 2) {
        for d in -60i64..0 {
            if kronecker(d, p as i64).unwrap() != -1 {
                assert!(fp2_sqrt(d, p).is_err(), "d={d} p={p}");
                continue;
            }
            let s = fp2_sqrt(d, p).unwrap();
            let f = s.field();
            assert_eq!(s * s, f.element(d, 0));
            assert_eq!(s.frobenius(), -s);
            assert!(!s.in_base_field());
            assert!(2 * s.coords().1 < p);
        }
    }
}

#[test]
fn factorize_round_trips_exhaustively() {
    for n in 1u64..=100_000 {
        let f = factorize_u64(n);
        let mut prod = 1u64;
        let mut last = 0;
        for &(p, e) in &f {
            assert!(p > last && trial_is_prime(p), "n={n} factor {p}");
            last = p;
            prod *= p.pow(e);
        }
        assert_eq!(prod, n);
    }
}

#[test]
fn factorize_round_trips_on_random_40_bit_values() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..100 {
        let n: u64 = rng.gen_range(1u64 << 39..1u64 << 40);
        let f = factorize(&BigUint::from(n));
        let mut prod = BigUint::one();
        for (p, e) in &f {
            let p64 = u64::try_from(p).unwrap();
            assert!(trial_is_prime(p64));
            prod *= p.pow(*e);
        }
        assert_eq!(prod, BigUint::from(n));
    }
}

#[test]
fn factorize_products_of_large_primes() {
    // semiprimes and prime powers above 64 bits
    let p = BigUint::from(1_000_000_007u64);
    let q = BigUint::from(998_244_353u64);
    let r = BigUint::from(4_294_967_311u64);
    let n = &p * &q * &r * &r;
    assert_eq!(factorize(&n), vec![(q, 1), (p, 1), (r, 2)]);
}
