//! Exact univariate polynomial arithmetic over Q: separability,
//! factorization into irreducibles, discriminants and resultants, and the
//! bad-place set S of a conic bundle.

mod factor;
pub mod sturm;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::primes::{factor_bigint, sieve};
use crate::arith::{int_valuation, Place};
use crate::{Error, Rat, Result};

/// Univariate polynomial with exact rational coefficients, ascending
/// degree. The zero polynomial has an empty coefficient vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rat>) -> Poly {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rat) -> Poly {
        Poly::new(vec![c])
    }

    pub fn from_int_coeffs(coeffs: &[i64]) -> Poly {
        Poly::new(coeffs.iter().map(|&c| Rat::from(BigInt::from(c))).collect())
    }

    pub fn from_bigint_coeffs(coeffs: &[BigInt]) -> Poly {
        Poly::new(coeffs.iter().map(|c| Rat::from(c.clone())).collect())
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rat::from(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Rat) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Rat::one())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Euclidean division; the divisor must be nonzero.
    pub fn divmod(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let dd = d.degree().unwrap();
        let lead = d.leading().unwrap();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![Rat::zero(); rem.len() - dd];
        while rem.len() > dd {
            let q = rem.last().unwrap() / lead;
            let shift = rem.len() - 1 - dd;
            for (i, c) in d.coeffs.iter().enumerate() {
                let upd = &rem[shift + i] - c * &q;
                rem[shift + i] = upd;
            }
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
            // Guard against a nonzero stale top coefficient after exact
            // cancellation failed to trim (cannot happen, but keep the
            // loop well-founded).
            quot[shift] = q;
            if rem.len() > shift + dd {
                unreachable!("division did not reduce the degree");
            }
        }
        (Poly::new(quot), Poly { coeffs: rem })
    }

    pub fn rem(&self, d: &Poly) -> Poly {
        self.divmod(d).1
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some(l) => self.scale(&(Rat::one() / l)),
        }
    }

    /// True iff gcd(P, P') is constant.
    pub fn is_separable(&self) -> Result<bool> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if self.degree() == Some(0) {
            return Ok(true);
        }
        Ok(self.gcd(&self.derivative()).degree() == Some(0))
    }

    /// Writes P = c * F with F a primitive integer polynomial (content 1,
    /// positive leading coefficient for nonzero P) and c rational.
    pub fn primitive_integer(&self) -> (Rat, Vec<BigInt>) {
        if self.is_zero() {
            return (Rat::zero(), Vec::new());
        }
        let mut den = BigInt::one();
        for c in &self.coeffs {
            den = den.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * &den / c.denom())
            .collect();
        let mut content = BigInt::zero();
        for c in &ints {
            content = content.gcd(c);
        }
        if ints.last().unwrap().is_negative() {
            content = -content;
        }
        let out: Vec<BigInt> = ints.iter().map(|c| c / &content).collect();
        (Rat::new(content, den), out)
    }

    /// Substitution x -> s*x.
    pub fn compose_scale(&self, s: &Rat) -> Poly {
        let mut pw = Rat::one();
        Poly::new(
            self.coeffs
                .iter()
                .map(|c| {
                    let out = c * &pw;
                    pw = &pw * s;
                    out
                })
                .collect(),
        )
    }

    /// The reversal x^d * P(1/x) with d = deg P.
    pub fn reversed(&self) -> Poly {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Poly::new(coeffs)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|c| {
                if c.denom().is_one() {
                    c.numer().to_string()
                } else {
                    format!("{}/{}", c.numer(), c.denom())
                }
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Poly {
    type Err = Error;

    /// Comma-separated coefficients, ascending degree, each an integer or
    /// integer/integer (for example "-6,0,5,0,-1").
    fn from_str(s: &str) -> Result<Poly> {
        let cleaned = s.replace('\u{2212}', "-");
        let mut coeffs = Vec::new();
        for tok in cleaned.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                return Err(Error::Invalid(format!("empty coefficient in {s:?}")));
            }
            let rat = match tok.split_once('/') {
                None => {
                    let n: BigInt = tok
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad coefficient {tok:?}")))?;
                    Rat::from(n)
                }
                Some((n, d)) => {
                    let n: BigInt = n
                        .trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad coefficient {tok:?}")))?;
                    let d: BigInt = d
                        .trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad coefficient {tok:?}")))?;
                    if d.is_zero() {
                        return Err(Error::Invalid(format!("zero denominator in {tok:?}")));
                    }
                    Rat::new(n, d)
                }
            };
            coeffs.push(rat);
        }
        Ok(Poly::new(coeffs))
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Poly, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Complete factorization over Q: a nonzero constant times monic
/// irreducible factors, each with multiplicity one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    #[serde(with = "crate::rat_string")]
    pub lc: Rat,
    pub factors: Vec<Poly>,
}

impl Factorization {
    pub fn product(&self) -> Poly {
        let mut acc = Poly::constant(self.lc.clone());
        for f in &self.factors {
            acc = acc.mul(f);
        }
        acc
    }
}

/// Complete irreducible factorization over Q of a nonconstant separable
/// polynomial of degree at most 8. Factors are monic and deterministically
/// ordered by degree, then lexicographically on the ascending coefficient
/// sequence.
pub fn factorize(p: &Poly) -> Result<Factorization> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let deg = p.degree().unwrap();
    if deg == 0 {
        return Err(Error::ConstantPolynomial);
    }
    if deg > 8 {
        return Err(Error::DegreeTooLarge(deg));
    }
    if !p.is_separable()? {
        return Err(Error::Inseparable);
    }
    let lc = p.leading().unwrap().clone();
    let mut factors = factor::factor_monic_rational(&p.monic());
    factors.sort_by(|a, b| {
        a.degree()
            .cmp(&b.degree())
            .then_with(|| a.coeffs().cmp(b.coeffs()))
    });
    Ok(Factorization { lc, factors })
}

/// Resultant of two nonzero polynomials, by the Euclidean recursion
/// Res(f, g) = (-1)^{deg f * deg g} lc(g)^{deg f - deg r} Res(g, r).
pub fn resultant(p: &Poly, q: &Poly) -> Result<Rat> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    fn go(f: &Poly, g: &Poly) -> Rat {
        let n = f.degree().unwrap();
        let m = g.degree().unwrap();
        if m == 0 {
            return pow_rat(g.leading().unwrap(), n as u32);
        }
        if n == 0 {
            return pow_rat(f.leading().unwrap(), m as u32);
        }
        let r = f.rem(g);
        if r.is_zero() {
            return Rat::zero();
        }
        let dr = r.degree().unwrap();
        let mut out = pow_rat(g.leading().unwrap(), (n - dr) as u32) * go(g, &r);
        if n % 2 == 1 && m % 2 == 1 {
            out = -out;
        }
        out
    }
    Ok(go(p, q))
}

fn pow_rat(base: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= base;
    }
    acc
}

/// Discriminant (-1)^{n(n-1)/2} Res(P, P') / lc(P).
pub fn disc(p: &Poly) -> Result<Rat> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let n = p.degree().unwrap();
    if n == 0 {
        return Ok(Rat::one());
    }
    if n == 1 {
        return Ok(Rat::one());
    }
    let res = resultant(p, &p.derivative())?;
    let mut out = res / p.leading().unwrap();
    if (n * (n - 1) / 2) % 2 == 1 {
        out = -out;
    }
    Ok(out)
}

fn primes_of_rat(r: &Rat, out: &mut BTreeSet<u64>) -> Result<()> {
    if r.is_zero() {
        return Ok(());
    }
    for n in [r.numer(), r.denom()] {
        if !n.is_one() && *n != BigInt::from(-1) {
            out.extend(factor_bigint(n)?.into_keys());
        }
    }
    Ok(())
}

/// The a-independent part of the bad-place set: the real place, 2, primes
/// of the leading coefficient and of every coefficient denominator,
/// primes of the discriminant of the product of monic factors, and primes
/// of every pairwise resultant of factors.
pub fn s0_formula(p: &Poly, fact: &Factorization) -> Result<BTreeSet<Place>> {
    let mut primes = BTreeSet::new();
    primes.insert(2);
    primes_of_rat(&Rat::from(p.leading().unwrap().numer().clone()), &mut primes)?;
    for c in p.coeffs() {
        if !c.denom().is_one() {
            primes.extend(factor_bigint(c.denom())?.into_keys());
        }
    }
    let monic_product = Factorization {
        lc: Rat::one(),
        factors: fact.factors.clone(),
    }
    .product();
    primes_of_rat(&disc(&monic_product)?, &mut primes)?;
    for i in 0..fact.factors.len() {
        for j in i + 1..fact.factors.len() {
            primes_of_rat(&resultant(&fact.factors[i], &fact.factors[j])?, &mut primes)?;
        }
    }
    let mut out: BTreeSet<Place> = primes.into_iter().map(Place::Finite).collect();
    out.insert(Place::Real);
    Ok(out)
}

/// The bad-place set of Lemma-style good-reduction arguments, padded with
/// every prime below 100 so that small residue fields never have to carry
/// a surjectivity promise.
pub fn s0_places(p: &Poly, fact: &Factorization) -> Result<BTreeSet<Place>> {
    let mut out = s0_formula(p, fact)?;
    out.extend(sieve(100).into_iter().map(Place::Finite));
    Ok(out)
}

/// Bad places of the pair (a, P): the a-independent formula set together
/// with every prime at which a has nonzero valuation. For v outside this
/// set, the surface has Q_v-points and every invariant vector at v is 0.
pub fn bad_places(a: &Rat, p: &Poly) -> Result<BTreeSet<Place>> {
    if a.is_zero() {
        return Err(Error::ZeroTwist);
    }
    let fact = factorize(p)?;
    let mut out = s0_formula(p, &fact)?;
    for n in [a.numer(), a.denom()] {
        if !n.is_one() && *n != BigInt::from(-1) {
            out.extend(factor_bigint(n)?.into_keys().map(Place::Finite));
        }
    }
    Ok(out)
}

/// v_p of a nonzero polynomial: the minimum coefficient valuation.
pub fn poly_valuation(p: &Poly, prime: u64) -> i64 {
    p.coeffs()
        .iter()
        .filter(|c| !c.is_zero())
        .map(|c| int_valuation(c.numer(), prime) - int_valuation(c.denom(), prime))
        .min()
        .expect("nonzero polynomial")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(s: &str) -> Poly {
        s.parse().unwrap()
    }

    #[test]
    fn parse_display_roundtrip() {
        let p = poly("-6,0,5,0,-1");
        assert_eq!(p.degree(), Some(4));
        assert_eq!(p.to_string(), "-6,0,5,0,-1");
        let q = poly("1/2, -3, 0, 2/3");
        assert_eq!(q.to_string(), "1/2,-3,0,2/3");
        assert!("1,,2".parse::<Poly>().is_err());
        assert!("1,2/0".parse::<Poly>().is_err());
        // Unicode minus, as printed in some front ends.
        assert_eq!(poly("\u{2212}6,0,5,0,\u{2212}1"), p);
    }

    #[test]
    fn separability_examples() {
        assert!(poly("-2,0,1").is_separable().unwrap());
        assert!(!poly("0,0,1").is_separable().unwrap());
        // (3 - x^2)(x^2 - 2) expanded.
        assert!(poly("-6,0,5,0,-1").is_separable().unwrap());
        assert!(Poly::zero().is_separable().is_err());
    }

    #[test]
    fn division_and_gcd() {
        let p = poly("-6,0,5,0,-1");
        let f = poly("-3,0,1");
        let (q, r) = p.divmod(&f);
        assert!(r.is_zero());
        assert_eq!(q.mul(&f), p);
        let g = poly("-2,0,1").mul(&poly("1,1"));
        assert_eq!(poly("-2,0,1").gcd(&g), poly("-2,0,1"));
    }

    /// Sylvester-determinant oracle, independent of the Euclidean route.
    fn sylvester_resultant(p: &Poly, q: &Poly) -> Rat {
        let n = p.degree().unwrap();
        let m = q.degree().unwrap();
        if n == 0 && m == 0 {
            return Rat::one();
        }
        let size = n + m;
        let mut mat = vec![vec![Rat::zero(); size]; size];
        for row in 0..m {
            for (i, c) in p.coeffs().iter().enumerate() {
                mat[row][row + n - i] = c.clone();
            }
        }
        for row in 0..n {
            for (i, c) in q.coeffs().iter().enumerate() {
                mat[m + row][row + m - i] = c.clone();
            }
        }
        // Fraction-full Gaussian elimination; exact over Q.
        let mut det = Rat::one();
        for col in 0..size {
            let pivot = (col..size).find(|&r| !mat[r][col].is_zero());
            let Some(pr) = pivot else { return Rat::zero() };
            if pr != col {
                mat.swap(pr, col);
                det = -det;
            }
            let pv = mat[col][col].clone();
            det *= &pv;
            for r in col + 1..size {
                let factor = &mat[r][col] / &pv;
                for c in col..size {
                    let upd = &mat[r][c] - &factor * &mat[col][c];
                    mat[r][c] = upd;
                }
            }
        }
        det
    }

    #[test]
    fn resultant_and_disc_examples() {
        let f = poly("-3,0,1");
        let g = poly("-2,0,1");
        assert_eq!(resultant(&f, &g).unwrap(), Rat::from(BigInt::from(1)));
        assert_eq!(sylvester_resultant(&f, &g), Rat::from(BigInt::from(1)));
        assert_eq!(disc(&g).unwrap(), Rat::from(BigInt::from(8)));
        assert_eq!(disc(&poly("0,-1,0,1")).unwrap(), Rat::from(BigInt::from(4)));
        assert!(resultant(&f, &Poly::zero()).is_err());
        assert!(disc(&Poly::zero()).is_err());
    }

    #[test]
    fn resultant_matches_sylvester_on_samples() {
        let samples = [
            ("-6,0,5,0,-1", "2,3,1"),
            ("1,1,1,1", "5,-2,0,0,1"),
            ("0,-1,0,1", "-3,0,1"),
            ("7,0,0,1", "1,2"),
        ];
        for (a, b) in samples {
            let p = poly(a);
            let q = poly(b);
            assert_eq!(
                resultant(&p, &q).unwrap(),
                sylvester_resultant(&p, &q),
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn disc_product_rule() {
        let cases = [("-2,0,1", "1,1"), ("-3,0,1", "-2,0,1"), ("1,0,0,1", "4,1")];
        for (a, b) in cases {
            let p = poly(a);
            let q = poly(b);
            let lhs = disc(&p.mul(&q)).unwrap();
            let r = resultant(&p, &q).unwrap();
            let rhs = disc(&p).unwrap() * disc(&q).unwrap() * &r * &r;
            assert_eq!(lhs, rhs, "{a} * {b}");
        }
    }

    #[test]
    fn bad_places_examples() {
        let p = poly("-6,0,5,0,-1");
        let a = Rat::from(BigInt::from(-1));
        let s = bad_places(&a, &p).unwrap();
        // disc(x^2-3) = 12, disc(x^2-2) = 8, Res = 1: primes 2 and 3.
        let expected: BTreeSet<Place> =
            [Place::Real, Place::Finite(2), Place::Finite(3)].into_iter().collect();
        assert_eq!(s, expected);

        let s7 = bad_places(&Rat::from(BigInt::from(7)), &poly("0,-1,0,1")).unwrap();
        assert!(s7.contains(&Place::Finite(7)));

        let s2 = bad_places(&Rat::from(BigInt::from(1)), &poly("-2,0,1")).unwrap();
        let expected2: BTreeSet<Place> = [Place::Real, Place::Finite(2)].into_iter().collect();
        assert_eq!(s2, expected2);
    }

    #[test]
    fn s0_is_independent_of_a_and_padded() {
        let p = poly("-6,0,5,0,-1");
        let fact = factorize(&p).unwrap();
        let s0 = s0_places(&p, &fact).unwrap();
        assert!(s0.contains(&Place::Finite(97)));
        assert!(!s0.contains(&Place::Finite(101)));
        for a in [-1i64, 7, 30] {
            let s = bad_places(&Rat::from(BigInt::from(a)), &p).unwrap();
            let formula = s0_formula(&p, &fact).unwrap();
            assert!(s.is_superset(&formula));
        }
    }
}
