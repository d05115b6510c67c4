//! Decides Brauer-Manin obstructions to the Hasse principle for conic
//! bundles `y^2 - a z^2 = P(x)` over the rationals, and runs the
//! experiments built on top of that engine: the finiteness scan over
//! square classes, the odd-valuation surjectivity check, and the twist
//! family whose solvability certifies non-squares.
//!
//! All arithmetic is exact. Verdicts are discrete and every local
//! computation is certified by Hensel-style stability bounds; when a
//! residue class cannot be decided at the requested precision the engine
//! reports an error instead of guessing.

pub mod arith;
pub mod engine;
pub mod experiments;
pub mod poly;

mod error;

pub use error::{Error, Result};

/// Rationals serialized as "num/den" strings.
pub mod rat_string {
    use super::Rat;
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }

    pub fn parse_rat(s: &str) -> std::result::Result<Rat, String> {
        let s = s.trim().replace('\u{2212}', "-");
        let (n, d) = match s.split_once('/') {
            None => (s.as_str(), "1"),
            Some((n, d)) => (n, d),
        };
        let n: BigInt = n.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
        let d: BigInt = d.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
        if d == BigInt::from(0) {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Rat::new(n, d))
    }
}

/// Exact arbitrary-precision rational, the scalar type of the whole crate.
pub type Rat = num_rational::BigRational;

pub use arith::{Place, SquareClass};
pub use engine::{BrauerBasis, ConicBundle, ObstructionReport, Verdict};
pub use poly::{Factorization, Poly};
