//! The obstruction engine: builds the F2-basis of Br X / Br k for the
//! conic bundle y^2 - a z^2 = P(x), computes per-place invariant-value
//! sets on the smooth projective model, and decides the Brauer-Manin
//! obstruction by a Minkowski-sum test over the bad places.

pub(crate) mod local;
pub(crate) mod real;
mod search;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{hilbert_symbol, square_class, valuation, Place, SquareClass};
use crate::poly::{factorize, s0_formula, s0_places, Factorization};
use crate::{Error, Poly, Rat, Result};

pub use search::small_point_search;

/// The conic bundle y^2 - a z^2 = P(x), with a normalized to its
/// squarefree integer representative (the isomorphism class only depends
/// on the square class of a), the factorization of P, and the bad-place
/// set S.
#[derive(Clone, Debug)]
pub struct ConicBundle {
    a: Rat,
    p: Poly,
    fact: Factorization,
    s: BTreeSet<Place>,
    s0: BTreeSet<Place>,
    s0_formula: BTreeSet<Place>,
}

impl ConicBundle {
    pub fn new(a: &Rat, p: &Poly) -> Result<ConicBundle> {
        if a.is_zero() {
            return Err(Error::ZeroTwist);
        }
        let fact = factorize(p)?;
        let a_norm = Rat::from(square_class(a)?.representative().clone());
        let s0_formula = s0_formula(p, &fact)?;
        let s0 = s0_places(p, &fact)?;
        let mut s = s0_formula.clone();
        for (prime, _) in crate::arith::primes::factor_bigint(a_norm.numer())? {
            s.insert(Place::Finite(prime));
        }
        Ok(ConicBundle {
            a: a_norm,
            p: p.clone(),
            fact,
            s,
            s0,
            s0_formula,
        })
    }

    /// The squarefree integer representative of a.
    pub fn a(&self) -> &Rat {
        &self.a
    }

    pub fn poly(&self) -> &Poly {
        &self.p
    }

    pub fn factorization(&self) -> &Factorization {
        &self.fact
    }

    /// Bad places: the a-independent formula set plus the support of a.
    pub fn bad_place_set(&self) -> &BTreeSet<Place> {
        &self.s
    }

    /// The a-independent part of S, padded with all primes below 100 (the
    /// surjectivity promise excludes small residue fields).
    pub fn s0(&self) -> &BTreeSet<Place> {
        &self.s0
    }

    pub fn s0_formula(&self) -> &BTreeSet<Place> {
        &self.s0_formula
    }

    pub fn a_is_square(&self) -> bool {
        self.a.is_one()
    }
}

/// F2-basis of the cokernel of Br k -> Br X. Each generator is a subset
/// of factor indices; the class it represents is (a, prod_{j in gen} Q_j).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrauerBasis {
    pub rank: usize,
    pub generators: Vec<Vec<usize>>,
}

impl BrauerBasis {
    pub(crate) fn masks(&self) -> Vec<u32> {
        self.generators
            .iter()
            .map(|g| g.iter().fold(0u32, |m, &j| m | (1 << j)))
            .collect()
    }
}

/// Basis of the admissible subgroup E modulo the full-support relation
/// vector, by Gaussian elimination in factor-index pivot order. E is all
/// of F2^m when deg P is odd, and the even-total-degree subgroup when
/// deg P is even.
pub fn brauer_basis(x: &ConicBundle) -> Result<BrauerBasis> {
    if x.a_is_square() {
        return Err(Error::Invalid(
            "a is a square: the Brauer set is all of X(A) and no basis is needed".into(),
        ));
    }
    let degs: Vec<usize> = x
        .fact
        .factors
        .iter()
        .map(|f| f.degree().expect("irreducible factor is nonzero"))
        .collect();
    let m = degs.len();
    let deg_p = x.p.degree().expect("nonconstant");
    let admissible = |v: u32| -> bool {
        if deg_p % 2 == 1 {
            return true;
        }
        (0..m).map(|j| ((v >> j) & 1) as usize * degs[j]).sum::<usize>() % 2 == 0
    };
    let full: u32 = (1 << m) - 1;
    debug_assert!(admissible(full));
    // Row-reduce with the relation vector first, then candidates in
    // increasing factor-index order.
    let mut pivots: Vec<u32> = Vec::new();
    let reduce = |mut v: u32, pivots: &[u32]| -> u32 {
        for &piv in pivots {
            let lead = 31 - piv.leading_zeros();
            if (v >> lead) & 1 == 1 {
                v ^= piv;
            }
        }
        v
    };
    let insert = |v: u32, pivots: &mut Vec<u32>| -> bool {
        let r = reduce(v, pivots);
        if r == 0 {
            return false;
        }
        pivots.push(r);
        pivots.sort_by_key(|p| std::cmp::Reverse(31 - p.leading_zeros()));
        true
    };
    insert(full, &mut pivots);
    let mut generators = Vec::new();
    for v in 1..=full {
        if admissible(v) && insert(v, &mut pivots) {
            generators.push((0..m).filter(|j| (v >> j) & 1 == 1).collect::<Vec<_>>());
        }
    }
    Ok(BrauerBasis {
        rank: generators.len(),
        generators,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NoAdelicPoint,
    Obstructed,
    NotObstructed,
}

use crate::rat_string;

/// The set W_v of invariant vectors realized by local points at v. Each
/// coordinate is 0 or 1 (local invariant 0 or 1/2).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantVectorSet {
    pub place: Place,
    pub vectors: BTreeSet<Vec<u8>>,
}

impl InvariantVectorSet {
    pub(crate) fn from_bits(place: Place, bits: u128, rank: usize) -> InvariantVectorSet {
        let mut vectors = BTreeSet::new();
        for idx in 0..(1u32 << rank) {
            if bits >> idx & 1 == 1 {
                vectors.insert((0..rank).map(|i| ((idx >> i) & 1) as u8).collect());
            }
        }
        InvariantVectorSet { place, vectors }
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_full(&self, rank: usize) -> bool {
        self.vectors.len() == 1 << rank
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Witness {
    /// a is a square: an explicit rational point.
    RationalPoint {
        #[serde(with = "rat_string")]
        x: Rat,
        #[serde(with = "rat_string")]
        y: Rat,
        #[serde(with = "rat_string")]
        z: Rat,
    },
    /// Rank 0: no class can obstruct.
    TrivialBrauerGroup,
    /// Some completion has no points at all.
    EmptyPlace { place: Place },
    /// A per-place selection of invariant vectors summing to zero.
    Selection { choices: BTreeMap<Place, Vec<u8>> },
    /// The Minkowski sum of the W_v misses the zero vector.
    NoZeroSum { reachable: BTreeSet<Vec<u8>> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObstructionReport {
    pub verdict: Verdict,
    /// Squarefree representative of a.
    pub a_class: SquareClass,
    pub rank: usize,
    /// Only places of S are stored; all others are certified {0}.
    pub per_place: BTreeMap<Place, InvariantVectorSet>,
    pub witness: Witness,
}

/// Options shared by the engine entry points.
#[derive(Clone, Copy, Debug, Default)]
pub struct EngineOptions {
    /// Extra certification margin and subdivision budget.
    pub precision: u32,
    /// Re-verify the good-place certificate by enumeration for primes
    /// outside S up to a bound.
    pub paranoid: bool,
}

pub(crate) struct PlaceAnalysis {
    pub bits: u128,
    pub has_point: bool,
}

pub(crate) fn place_analysis(
    x: &ConicBundle,
    gen_masks: &[u32],
    v: Place,
    precision: u32,
) -> Result<PlaceAnalysis> {
    match v {
        Place::Real => real::analyze_real(x, gen_masks),
        Place::Finite(p) => local::analyze_finite(x, gen_masks, p, precision),
    }
}

/// True iff the smooth projective model has a Q_v-point. For v outside S
/// the good-reduction certificate applies and the answer is true.
pub fn local_points_exist(x: &ConicBundle, v: Place, opts: EngineOptions) -> Result<bool> {
    if x.a_is_square() {
        return Ok(true);
    }
    if !x.s.contains(&v) && !opts.paranoid {
        return Ok(true);
    }
    let basis = brauer_basis(x)?;
    let analysis = place_analysis(x, &basis.masks(), v, opts.precision)?;
    Ok(analysis.has_point)
}

/// The invariant vector set W_v.
pub fn invariant_vector_set(
    x: &ConicBundle,
    v: Place,
    basis: &BrauerBasis,
    opts: EngineOptions,
) -> Result<InvariantVectorSet> {
    if !x.s.contains(&v) && !opts.paranoid {
        return Ok(InvariantVectorSet::from_bits(v, 1, basis.rank));
    }
    let analysis = place_analysis(x, &basis.masks(), v, opts.precision)?;
    Ok(InvariantVectorSet::from_bits(v, analysis.bits, basis.rank))
}

fn minkowski_sum(a: u128, b: u128, rank: usize) -> u128 {
    let size = 1u32 << rank;
    let mut out = 0u128;
    for i in 0..size {
        if a >> i & 1 == 0 {
            continue;
        }
        for j in 0..size {
            if b >> j & 1 == 1 {
                out |= 1 << (i ^ j);
            }
        }
    }
    out
}

/// Decides the Brauer-Manin obstruction for X.
pub fn brauer_manin_obstructed(x: &ConicBundle, opts: EngineOptions) -> Result<ObstructionReport> {
    let a_class = square_class(&x.a)?;
    if x.a_is_square() {
        // y^2 - z^2 = c is solvable for every c; exhibit the point over x = 0.
        let c = x.p.eval(&Rat::zero());
        let two = Rat::from(BigInt::from(2));
        let witness = Witness::RationalPoint {
            x: Rat::zero(),
            y: (&c + Rat::one()) / &two,
            z: (&c - Rat::one()) / &two,
        };
        return Ok(ObstructionReport {
            verdict: Verdict::NotObstructed,
            a_class,
            rank: 0,
            per_place: BTreeMap::new(),
            witness,
        });
    }
    let basis = brauer_basis(x)?;
    let masks = basis.masks();
    if opts.paranoid {
        verify_good_places(x, &masks, opts.precision)?;
    }
    let places: Vec<Place> = x.s.iter().copied().collect();
    let mut per_place = BTreeMap::new();
    let mut analyses = Vec::new();
    for &v in &places {
        let analysis = place_analysis(x, &masks, v, opts.precision)?;
        per_place.insert(v, InvariantVectorSet::from_bits(v, analysis.bits, basis.rank));
        analyses.push(analysis);
    }
    if let Some(idx) = analyses.iter().position(|an| !an.has_point) {
        return Ok(ObstructionReport {
            verdict: Verdict::NoAdelicPoint,
            a_class,
            rank: basis.rank,
            per_place,
            witness: Witness::EmptyPlace { place: places[idx] },
        });
    }
    if basis.rank == 0 {
        return Ok(ObstructionReport {
            verdict: Verdict::NotObstructed,
            a_class,
            rank: 0,
            per_place,
            witness: Witness::TrivialBrauerGroup,
        });
    }
    // Fold the Minkowski sum, keeping prefixes for witness extraction.
    let mut prefix = vec![1u128];
    for an in &analyses {
        let last = *prefix.last().unwrap();
        prefix.push(minkowski_sum(last, an.bits, basis.rank));
    }
    let total = *prefix.last().unwrap();
    if total & 1 == 1 {
        // Zero vector reachable: backtrack a selection.
        let mut choices = BTreeMap::new();
        let mut target = 0u32;
        for (i, an) in analyses.iter().enumerate().rev() {
            let before = prefix[i];
            let w = (0..(1u32 << basis.rank))
                .find(|&w| an.bits >> w & 1 == 1 && before >> (target ^ w) & 1 == 1)
                .expect("reachable prefix");
            choices.insert(
                places[i],
                (0..basis.rank).map(|b| ((w >> b) & 1) as u8).collect(),
            );
            target ^= w;
        }
        debug_assert_eq!(target, 0);
        return Ok(ObstructionReport {
            verdict: Verdict::NotObstructed,
            a_class,
            rank: basis.rank,
            per_place,
            witness: Witness::Selection { choices },
        });
    }
    let reachable = InvariantVectorSet::from_bits(Place::Real, total, basis.rank).vectors;
    Ok(ObstructionReport {
        verdict: Verdict::Obstructed,
        a_class,
        rank: basis.rank,
        per_place,
        witness: Witness::NoZeroSum { reachable },
    })
}

/// Paranoid re-verification of the good-place certificate: enumerate W_p
/// for primes outside S up to 200 and insist on {0} with points.
fn verify_good_places(x: &ConicBundle, masks: &[u32], precision: u32) -> Result<()> {
    for p in crate::arith::primes::sieve(200) {
        let v = Place::Finite(p);
        if x.s.contains(&v) {
            continue;
        }
        let an = local::analyze_finite(x, masks, p, precision)?;
        if !(an.has_point && an.bits == 1) {
            return Err(Error::Invalid(format!(
                "good-place certificate failed at p = {p}: bits {:#b}, points {}",
                an.bits, an.has_point
            )));
        }
    }
    Ok(())
}

/// The computable content of the odd-valuation surjectivity lemma:
/// whether W_v is all of F2^r. Only promised (and only callable) for v
/// outside S0(P) with v(a) odd.
pub fn surjectivity_check(x: &ConicBundle, v: Place, opts: EngineOptions) -> Result<bool> {
    let Place::Finite(p) = v else {
        return Err(Error::SurjectivityPrecondition(
            "the real place is always in S0".into(),
        ));
    };
    if x.s0.contains(&v) {
        return Err(Error::SurjectivityPrecondition(format!("{p} lies in S0(P)")));
    }
    if valuation(&x.a, p)?.rem_euclid(2) != 1 {
        return Err(Error::SurjectivityPrecondition(format!(
            "v_{p}(a) is even for a = {}",
            x.a
        )));
    }
    let basis = brauer_basis(x)?;
    let set = invariant_vector_set(x, v, &basis, opts)?;
    Ok(set.is_full(basis.rank))
}

/// Local solvability of the genus-one-style curve y^2 = P(x) at v, by the
/// same certified x-enumeration the conic engine uses.
pub fn curve_locally_solvable(x: &ConicBundle, v: Place, precision: u32) -> Result<bool> {
    match v {
        Place::Real => Ok(real::curve_solvable_real(x)),
        Place::Finite(p) => local::curve_solvable_finite(x, p, precision),
    }
}

/// Direct evaluation of the basis classes at a rational point of X:
/// the invariant vector of (x0, y0, z0) at the place v.
pub fn point_vector(
    x: &ConicBundle,
    basis: &BrauerBasis,
    x0: &Rat,
    v: Place,
) -> Result<Vec<u8>> {
    let factors = &x.fact.factors;
    let mut out = Vec::with_capacity(basis.rank);
    for gen in &basis.generators {
        let mut val = Rat::one();
        for &j in gen {
            val *= factors[j].eval(x0);
        }
        let sym = if val.is_zero() {
            // Complementary representative.
            let mut comp = x.fact.lc.clone();
            for (j, f) in factors.iter().enumerate() {
                if !gen.contains(&j) {
                    comp *= f.eval(x0);
                }
            }
            hilbert_symbol(&x.a, &comp, v)?
        } else {
            hilbert_symbol(&x.a, &val, v)?
        };
        out.push(if sym == 1 { 0 } else { 1 });
    }
    Ok(out)
}
