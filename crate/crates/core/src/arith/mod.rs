//! Exact rational and p-adic primitives: valuations, residue symbols,
//! Hilbert symbols at every place of Q, and Hensel-certified local power
//! tests. Everything here is a pure function of its inputs.

pub mod primes;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Rat, Result};
use primes::{factor_bigint, inv_mod, is_prime_u64, pow_mod};

/// A place of Q: the real place or a finite prime.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Place {
    Real,
    Finite(u64),
}

impl Place {
    pub fn finite(p: u64) -> Result<Place> {
        if is_prime_u64(p) {
            Ok(Place::Finite(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn prime(&self) -> Option<u64> {
        match self {
            Place::Real => None,
            Place::Finite(p) => Some(*p),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "real"),
            Place::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Place {
    type Err = Error;

    fn from_str(s: &str) -> Result<Place> {
        match s {
            "real" | "oo" | "inf" | "infinity" => Ok(Place::Real),
            _ => {
                let p: u64 = s
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad place: {s:?}")))?;
                Place::finite(p)
            }
        }
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Place {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Place, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A class in Q^x / Q^{x2}, represented by its unique squarefree integer.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SquareClass(BigInt);

impl SquareClass {
    pub fn of(t: &Rat) -> Result<SquareClass> {
        square_class(t)
    }

    pub fn representative(&self) -> &BigInt {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Odd-exponent primes of the representative.
    pub fn support(&self) -> Result<Vec<u64>> {
        if self.0.is_one() || self.0 == BigInt::from(-1) {
            return Ok(Vec::new());
        }
        Ok(factor_bigint(&self.0)?.into_keys().collect())
    }
}

impl fmt::Display for SquareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for SquareClass {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for SquareClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<SquareClass, D::Error> {
        let s = String::deserialize(d)?;
        let n: BigInt = s
            .parse()
            .map_err(|_| serde::de::Error::custom("bad square class"))?;
        Ok(SquareClass(n))
    }
}

/// p-adic valuation of a nonzero big integer.
pub fn int_valuation(n: &BigInt, p: u64) -> i64 {
    debug_assert!(!n.is_zero());
    let bp = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0i64;
    loop {
        let (q, r) = m.div_rem(&bp);
        if !r.is_zero() {
            return v;
        }
        v += 1;
        m = q;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn valuation(r: &Rat, p: u64) -> Result<i64> {
    if r.is_zero() {
        return Err(Error::ZeroValuation);
    }
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(int_valuation(r.numer(), p) - int_valuation(r.denom(), p))
}

/// Legendre symbol (u/p) for an odd prime p.
pub fn legendre(u: &BigInt, p: u64) -> Result<i32> {
    if p == 2 {
        return Err(Error::EvenPrimeLegendre);
    }
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    let r = u.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits");
    Ok(legendre_u64(r, p))
}

/// Legendre symbol via Euler's criterion; `u` is already reduced mod p.
pub fn legendre_u64(u: u64, p: u64) -> i32 {
    if u % p == 0 {
        return 0;
    }
    if pow_mod(u, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Legendre symbol of the p-unit part of a nonzero rational at an odd
/// prime p: strip p from numerator and denominator, then multiply the two
/// symbols (a denominator contributes the same symbol as its inverse).
fn legendre_unit_part(r: &Rat, p: u64) -> i32 {
    let strip = |n: &BigInt| {
        let bp = BigInt::from(p);
        let mut m = n.clone();
        while (&m % &bp).is_zero() {
            m /= &bp;
        }
        m
    };
    let n = strip(r.numer());
    let d = strip(r.denom());
    let ln = legendre_u64(n.mod_floor(&BigInt::from(p)).to_u64().unwrap(), p);
    let ld = legendre_u64(d.mod_floor(&BigInt::from(p)).to_u64().unwrap(), p);
    ln * ld
}

/// Residue mod 8 of the 2-unit part of a nonzero rational. An odd square
/// is 1 mod 8, so the denominator acts as its own inverse.
fn odd_part_mod8(r: &Rat) -> u64 {
    let odd = |n: &BigInt| {
        let mut m = n.clone();
        while m.is_even() {
            m /= 2;
        }
        m.mod_floor(&BigInt::from(8)).to_u64().unwrap()
    };
    odd(r.numer()) * odd(r.denom()) % 8
}

/// Hilbert symbol (a, b)_v: +1 iff y^2 = a z^2 + b w^2 has a nonzero
/// solution over Q_v. Real place by sign test, odd p by the tame formula,
/// p = 2 by the mod-8 unit formula.
pub fn hilbert_symbol(a: &Rat, b: &Rat, v: Place) -> Result<i32> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroHilbertArgument);
    }
    match v {
        Place::Real => Ok(if a.is_negative() && b.is_negative() { -1 } else { 1 }),
        Place::Finite(2) => {
            let alpha = valuation(a, 2)?;
            let beta = valuation(b, 2)?;
            let ua = odd_part_mod8(a);
            let ub = odd_part_mod8(b);
            let eps = |u: u64| u % 4 == 3;
            let omega = |u: u64| u == 3 || u == 5;
            let mut exp = eps(ua) & eps(ub);
            if alpha.rem_euclid(2) == 1 {
                exp ^= omega(ub);
            }
            if beta.rem_euclid(2) == 1 {
                exp ^= omega(ua);
            }
            Ok(if exp { -1 } else { 1 })
        }
        Place::Finite(p) => {
            let alpha = valuation(a, p)?;
            let beta = valuation(b, p)?;
            let la = legendre_unit_part(a, p);
            let lb = legendre_unit_part(b, p);
            let mut s = 1i32;
            if alpha.rem_euclid(2) == 1 && beta.rem_euclid(2) == 1 && p % 4 == 3 {
                s = -s;
            }
            if beta.rem_euclid(2) == 1 {
                s *= la;
            }
            if alpha.rem_euclid(2) == 1 {
                s *= lb;
            }
            Ok(s)
        }
    }
}

/// Residue of a v-adic unit rational modulo p^k.
fn unit_residue(r: &Rat, p: u64, k: u32) -> u64 {
    let m = p.pow(k);
    let bm = BigInt::from(m);
    let n = r.numer().mod_floor(&bm).to_u64().unwrap();
    let d = r.denom().mod_floor(&bm).to_u64().unwrap();
    primes::mul_mod(n, inv_mod(d, m), m)
}

/// Whether t lies in Q_v^{x m}.
///
/// Finite v with p not dividing m: m must divide v_p(t) and the unit part
/// must be an m-th power in the residue field. Finite v with p dividing
/// m: decided by an exhaustive unit congruence modulo p^{2 v_p(m) + 1},
/// which Hensel's lemma certifies as sufficient. Real place: t > 0 or m
/// odd.
pub fn is_mth_power_local(t: &Rat, v: Place, m: u32) -> Result<bool> {
    if t.is_zero() || m == 0 {
        return Err(Error::BadPowerTest);
    }
    match v {
        Place::Real => Ok(m % 2 == 1 || t.is_positive()),
        Place::Finite(p) => {
            let val = valuation(t, p)?;
            if val.rem_euclid(m as i64) != 0 {
                return Ok(false);
            }
            // Unit part of t at p.
            let unit = {
                let bp = Rat::from(BigInt::from(p));
                let mut u = t.clone();
                let mut v = val;
                while v > 0 {
                    u /= &bp;
                    v -= 1;
                }
                while v < 0 {
                    u *= &bp;
                    v += 1;
                }
                u
            };
            if m as u64 % p != 0 {
                // Residue-field test; 1 + pZ_p is uniquely m-divisible.
                let g = primes::gcd_u64(m as u64, p - 1);
                let u0 = unit_residue(&unit, p, 1);
                Ok(pow_mod(u0, (p - 1) / g, p) == 1)
            } else {
                let e = {
                    let mut e = 0u32;
                    let mut mm = m as u64;
                    while mm % p == 0 {
                        e += 1;
                        mm /= p;
                    }
                    e
                };
                let k = 2 * e + 1;
                let modulus = p.pow(k);
                let target = unit_residue(&unit, p, k);
                for x in 0..modulus {
                    if x % p != 0 && pow_mod(x, m as u64, modulus) == target {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

/// The squarefree integer d with t/d a rational square.
pub fn square_class(t: &Rat) -> Result<SquareClass> {
    if t.is_zero() {
        return Err(Error::ZeroSquareClass);
    }
    let prod = t.numer() * t.denom();
    let mut rep = BigInt::one();
    for (p, e) in factor_bigint(&prod)? {
        if e % 2 == 1 {
            rep *= BigInt::from(p);
        }
    }
    if prod.is_negative() {
        rep = -rep;
    }
    Ok(SquareClass(rep))
}

/// Whether t is the square of a rational.
pub fn is_rational_square(t: &Rat) -> bool {
    if t.is_negative() {
        return false;
    }
    if t.is_zero() {
        return true;
    }
    let sq = |n: &BigInt| {
        let r = n.sqrt();
        &(&r * &r) == n
    };
    sq(t.numer()) && sq(t.denom())
}
