//! Integer factorization: trial division for machine words, plus a
//! Pollard-rho splitter with an iteration budget for the big determinants
//! produced by the prime-candidate stage.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Factorization of a machine integer by trial division.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Deterministic Miller–Rabin for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u128(a as u128, d, n as u128);
        if x == 1 || x == (n - 1) as u128 {
            continue;
        }
        for _ in 0..s - 1 {
            x = x * x % n as u128;
            if x == (n - 1) as u128 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pow_mod_u128(mut b: u128, mut e: u64, m: u128) -> u128 {
    let mut acc = 1u128;
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

/// Factorization of a big integer: trial division to 10^6, then
/// Pollard-rho (Brent) with an iteration budget on remaining cofactors.
/// Fails with the surviving composite when the budget runs out.
pub fn factor_bigint(n: &BigInt, rho_budget: u64) -> Result<Vec<(BigInt, u32)>> {
    let mut n = n.abs();
    if n.is_zero() {
        return Ok(vec![]);
    }
    let mut out: Vec<(BigInt, u32)> = Vec::new();
    let push = |p: BigInt, e: u32, out: &mut Vec<(BigInt, u32)>| {
        if let Some(slot) = out.iter_mut().find(|(q, _)| *q == p) {
            slot.1 += e;
        } else {
            out.push((p, e));
        }
    };
    // trial division
    let mut p = 2u64;
    while p <= 1_000_000 {
        let pb = BigInt::from(p);
        if (&pb * &pb) > n {
            break;
        }
        let mut e = 0;
        while (&n % &pb).is_zero() {
            n /= &pb;
            e += 1;
        }
        if e > 0 {
            push(pb, e, &mut out);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n.is_one() {
        out.sort();
        return Ok(out);
    }
    // remaining cofactors via rho
    let mut stack = vec![n];
    while let Some(c) = stack.pop() {
        if c.is_one() {
            continue;
        }
        if is_probable_prime(&c) {
            push(c, 1, &mut out);
            continue;
        }
        match pollard_rho(&c, rho_budget) {
            Some(d) => {
                stack.push(&c / &d);
                stack.push(d);
            }
            None => return Err(Error::FactorizationIncomplete(c.to_string())),
        }
    }
    out.sort();
    Ok(out)
}

/// Miller–Rabin with fixed witnesses; exact below 3.3e24, overwhelming
/// confidence beyond (inputs here are determinant supports, not
/// adversarial).
pub fn is_probable_prime(n: &BigInt) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    let one = BigInt::one();
    let two = BigInt::from(2);
    let nm1 = n - &one;
    let mut d = nm1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d /= &two;
        s += 1;
    }
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
        let ab = BigInt::from(a);
        let mut x = ab.modpow(&d, n);
        if x.is_one() || x == nm1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: &BigInt, budget: u64) -> Option<BigInt> {
    if n.is_even() {
        return Some(BigInt::from(2));
    }
    let one = BigInt::one();
    for c in 1u64..20 {
        let cb = BigInt::from(c);
        let mut x = BigInt::from(2);
        let mut y = BigInt::from(2);
        let mut d = BigInt::one();
        let mut iter = 0u64;
        while d.is_one() {
            if iter >= budget {
                break;
            }
            iter += 1;
            x = (&x * &x + &cb) % n;
            y = (&y * &y + &cb) % n;
            y = (&y * &y + &cb) % n;
            let diff = if x > y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break;
            }
            d = diff.gcd(n);
        }
        if d > one && &d < n {
            return Some(d);
        }
    }
    None
}

/// Formats a factored positive integer like `2^5*3^2`, with `1` for one.
pub fn format_factored(f: &[(BigInt, u32)]) -> String {
    if f.is_empty() {
        return "1".to_string();
    }
    f.iter()
        .map(|(p, e)| {
            if *e == 1 {
                p.to_string()
            } else {
                format!("{p}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}
