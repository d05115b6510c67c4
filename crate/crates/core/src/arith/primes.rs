//! 64-bit primality, factorization and modular helpers.
//!
//! Primality is deterministic Miller-Rabin on 64-bit inputs. Complete
//! factorization runs trial division over a sieved prime table and then
//! Brent's variant of Pollard rho; anything that cannot be certified
//! squarefree-complete is a hard error upstream.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::{Error, Result};

/// Primes below 10^4, enough trial division to shrink desk-scale inputs
/// into Pollard rho range.
pub static SMALL_PRIMES: Lazy<Vec<u64>> = Lazy::new(|| sieve(10_000));

pub fn sieve(bound: u64) -> Vec<u64> {
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            out.push(p as u64);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += p;
            }
        }
    }
    out
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
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

/// Deterministic Miller-Rabin for all 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
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

fn pollard_rho(n: u64) -> u64 {
    // Brent's cycle detection with batched gcd: differences are folded
    // into a running product so the gcd runs once per batch.
    debug_assert!(n > 3 && n % 2 == 1);
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let (mut g, mut x, mut ys) = (1u64, 0u64, 2u64);
        while g == 1 && r <= 1 << 24 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0u64;
            while k < r && g == 1 {
                ys = y;
                let lim = 128.min(r - k);
                for _ in 0..lim {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += lim;
            }
            r <<= 1;
        }
        if g == n {
            // The batch overshot; replay stepwise from the last checkpoint.
            g = 1;
            while g == 1 {
                ys = f(ys);
                g = gcd_u64(x.abs_diff(ys), n);
            }
        }
        if g != n && g != 1 {
            return g;
        }
        c += 1;
    }
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Complete factorization of a positive 64-bit integer.
pub fn factor_u64(mut n: u64) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    for &p in SMALL_PRIMES.iter() {
        if p * p > n {
            break;
        }
        while n % p == 0 {
            *out.entry(p).or_insert(0) += 1;
            n /= p;
        }
    }
    let mut stack = Vec::new();
    if n > 1 {
        stack.push(n);
    }
    while let Some(m) = stack.pop() {
        if is_prime_u64(m) {
            *out.entry(m).or_insert(0) += 1;
        } else {
            let d = pollard_rho(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    out
}

/// Complete factorization of |n| for a nonzero big integer, certified by
/// deterministic primality of every reported factor. Fails if the part
/// left after trial division does not fit in 64 bits.
pub fn factor_bigint(n: &BigInt) -> Result<BTreeMap<u64, u32>> {
    let mut m = n.abs();
    if m.is_zero() {
        return Err(Error::ZeroSquareClass);
    }
    let mut out = BTreeMap::new();
    for &p in SMALL_PRIMES.iter() {
        if m.is_one() {
            break;
        }
        let bp = BigInt::from(p);
        while (&m % &bp).is_zero() {
            *out.entry(p).or_insert(0) += 1;
            m /= &bp;
        }
    }
    if m.is_one() {
        return Ok(out);
    }
    let rest = m.to_u64().ok_or_else(|| Error::FactorTooLarge(n.to_string()))?;
    for (p, e) in factor_u64(rest) {
        *out.entry(p).or_insert(0) += e;
    }
    Ok(out)
}

/// Inverse of `a` modulo `m` for gcd(a, m) = 1.
pub fn inv_mod(a: u64, m: u64) -> u64 {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "inv_mod of non-unit");
    (t.rem_euclid(m as i128)) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small_and_carmichael() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(101));
        assert!(is_prime_u64(4_294_967_311));
        assert!(!is_prime_u64(561)); // Carmichael
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(u64::MAX));
    }

    #[test]
    fn factor_roundtrip() {
        let f = factor_u64(2u64.pow(10) * 3 * 3 * 999_983);
        assert_eq!(f.get(&2), Some(&10));
        assert_eq!(f.get(&3), Some(&2));
        assert_eq!(f.get(&999_983), Some(&1));
        let n: u64 = f.iter().map(|(p, e)| p.pow(*e)).product();
        assert_eq!(n, 2u64.pow(10) * 9 * 999_983);
    }

    #[test]
    fn inverse() {
        let m = 3u64.pow(5);
        for a in 1..m {
            if gcd_u64(a, m) == 1 {
                assert_eq!(mul_mod(a, inv_mod(a, m), m), 1);
            }
        }
    }
}
