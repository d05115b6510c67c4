//! Real-place invariants by exact sign analysis. The real roots of the
//! factors cut R into finitely many intervals; on each interval every
//! factor has a certified constant sign, so the invariant vector of any
//! point there is determined. Roots themselves carry the singular-fiber
//! point with the complementary-representative invariant, and the fiber
//! at infinity is read off the leading coefficient.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::engine::{ConicBundle, PlaceAnalysis};
use crate::poly::sturm::{isolate_real_roots, roots_in, sturm_chain};
use crate::{Poly, Rat, Result};

struct RealRoot {
    factor: usize,
    lo: Rat,
    hi: Rat,
}

impl RealRoot {
    fn exact(&self) -> bool {
        self.lo == self.hi
    }
}

fn half(r: &Rat) -> Rat {
    r / Rat::from(BigInt::from(2))
}

/// Halves an isolating interval, keeping the root.
fn bisect(chain: &[Poly], root: &mut RealRoot) {
    let mid = half(&(&root.lo + &root.hi));
    if roots_in(chain, &root.lo, &mid) == 1 {
        root.hi = mid;
    } else {
        root.lo = mid;
    }
}

/// All real roots of the monic factors, as pairwise disjoint closed
/// intervals (degenerate for the rational roots of the linear factors),
/// sorted increasingly.
fn disjoint_roots(factors: &[Poly]) -> Vec<RealRoot> {
    let mut chains: Vec<Option<Vec<Poly>>> = Vec::with_capacity(factors.len());
    let mut roots = Vec::new();
    for (j, f) in factors.iter().enumerate() {
        if f.degree() == Some(1) {
            chains.push(None);
            let r = -f.coeff(0);
            roots.push(RealRoot {
                factor: j,
                lo: r.clone(),
                hi: r,
            });
        } else {
            chains.push(Some(sturm_chain(f)));
            for (lo, hi) in isolate_real_roots(f) {
                roots.push(RealRoot { factor: j, lo, hi });
            }
        }
    }
    for _ in 0..10_000 {
        roots.sort_by(|a, b| (&a.lo, &a.hi).cmp(&(&b.lo, &b.hi)));
        let clash = (1..roots.len()).find(|&i| roots[i].lo <= roots[i - 1].hi);
        let Some(i) = clash else {
            return roots;
        };
        for k in [i - 1, i] {
            if !roots[k].exact() {
                let chain = chains[roots[k].factor].as_ref().expect("deg >= 2 factor");
                bisect(chain, &mut roots[k]);
            }
        }
    }
    unreachable!("root separation did not terminate");
}

fn sign(r: &Rat) -> i32 {
    debug_assert!(!r.is_zero());
    if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Invariant vector index from per-factor signs, given a < 0: the i-th
/// coordinate is 1 exactly when the generator value is negative. A root
/// factor is replaced by the complementary representative.
fn vector_index(
    gen_masks: &[u32],
    all: u32,
    lc_sign: i32,
    signs: &[Option<i32>],
    root: Option<usize>,
) -> u32 {
    let mut idx = 0u32;
    for (i, &mask) in gen_masks.iter().enumerate() {
        let (bits, base) = match root {
            Some(k) if mask >> k & 1 == 1 => (all ^ mask, lc_sign),
            _ => (mask, 1),
        };
        let mut s = base;
        for (j, sj) in signs.iter().enumerate() {
            if bits >> j & 1 == 1 {
                s *= sj.expect("sign of a non-vanishing factor");
            }
        }
        if s < 0 {
            idx |= 1 << i;
        }
    }
    idx
}

pub(crate) fn analyze_real(x: &ConicBundle, gen_masks: &[u32]) -> Result<PlaceAnalysis> {
    // a > 0: the conic y^2 - a z^2 = c has real points for every c and
    // all real symbols are +1.
    if x.a().is_positive() {
        return Ok(PlaceAnalysis {
            bits: 1,
            has_point: true,
        });
    }
    let fact = x.factorization();
    let factors = &fact.factors;
    let m = factors.len();
    let all: u32 = (1 << m) - 1;
    let lc_sign = sign(&fact.lc);
    let deg_p = x.poly().degree().expect("nonconstant");
    let roots = disjoint_roots(factors);
    let mut bits = 0u128;
    let mut has_point = false;

    // Sample points of the open regions between roots.
    let mut samples = Vec::new();
    if roots.is_empty() {
        samples.push(Rat::zero());
    } else {
        samples.push(&roots[0].lo - Rat::one());
        for w in roots.windows(2) {
            samples.push(half(&(&w[0].hi + &w[1].lo)));
        }
        samples.push(&roots[roots.len() - 1].hi + Rat::one());
    }
    for s in &samples {
        let signs: Vec<Option<i32>> = factors.iter().map(|f| Some(sign(&f.eval(s)))).collect();
        let p_sign = signs.iter().fold(lc_sign, |acc, sj| acc * sj.unwrap());
        if p_sign > 0 {
            has_point = true;
            bits |= 1 << vector_index(gen_masks, all, lc_sign, &signs, None);
        }
    }
    // Roots: the singular fiber always has its real point.
    for r in &roots {
        let signs: Vec<Option<i32>> = factors
            .iter()
            .enumerate()
            .map(|(j, f)| (j != r.factor).then(|| sign(&f.eval(&r.lo))))
            .collect();
        has_point = true;
        bits |= 1 << vector_index(gen_masks, all, lc_sign, &signs, Some(r.factor));
    }
    // Fiber at infinity.
    if deg_p % 2 == 0 {
        if lc_sign > 0 {
            has_point = true;
            bits |= 1;
        }
    } else {
        has_point = true;
        let degs: Vec<usize> = factors.iter().map(|f| f.degree().unwrap()).collect();
        let mut idx = 0u32;
        for (i, &mask) in gen_masks.iter().enumerate() {
            let d: usize = (0..m).filter(|&j| mask >> j & 1 == 1).map(|j| degs[j]).sum();
            if d % 2 == 1 && lc_sign < 0 {
                idx |= 1 << i;
            }
        }
        bits |= 1 << idx;
    }
    Ok(PlaceAnalysis { bits, has_point })
}

/// y^2 = P(x) has real points iff P is somewhere nonnegative.
pub(crate) fn curve_solvable_real(x: &ConicBundle) -> bool {
    let fact = x.factorization();
    if x.poly().degree().unwrap() % 2 == 1 || fact.lc.is_positive() {
        return true;
    }
    fact.factors.iter().any(|f| {
        f.degree() == Some(1) || !isolate_real_roots(f).is_empty()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::brauer_basis;

    fn bundle(a: i64, p: &str) -> ConicBundle {
        ConicBundle::new(&Rat::from(BigInt::from(a)), &p.parse().unwrap()).unwrap()
    }

    // Classic quartic: a = -1, P = (3 - x^2)(x^2 - 2). Real points need
    // P(x) >= 0, i.e. 2 <= x^2 <= 3; there x^2 - 3 <= 0, so the single
    // generator's invariant is constantly 1/2.
    #[test]
    fn iskovskikh_real_set_is_one() {
        let x = bundle(-1, "-6,0,5,0,-1");
        let basis = brauer_basis(&x).unwrap();
        let an = analyze_real(&x, &basis.masks()).unwrap();
        assert!(an.has_point);
        assert_eq!(an.bits, 0b10); // only the vector (1)
    }

    #[test]
    fn positive_twist_is_trivial() {
        let x = bundle(2, "-6,0,5,0,-1");
        let basis = brauer_basis(&x).unwrap();
        let an = analyze_real(&x, &basis.masks()).unwrap();
        assert!(an.has_point);
        assert_eq!(an.bits, 0b01);
    }

    // a = -1, P = x^2 - 2: points need |x| >= sqrt 2 and both vectors 0
    // appear; rank is 0 here (single factor of even degree), so the set
    // is {()} once a point exists.
    #[test]
    fn rank_zero_real() {
        let x = bundle(-1, "-2,0,1");
        let basis = brauer_basis(&x).unwrap();
        assert_eq!(basis.rank, 0);
        let an = analyze_real(&x, &basis.masks()).unwrap();
        assert!(an.has_point);
        assert_eq!(an.bits, 0b1);
    }

    // a = -1 and P everywhere negative: no real points at all.
    #[test]
    fn empty_real_locus() {
        // P = -(x^4 + 1)
        let x = bundle(-1, "-1,0,0,0,-1");
        let basis = brauer_basis(&x).unwrap();
        let an = analyze_real(&x, &basis.masks()).unwrap();
        assert!(!an.has_point);
        assert_eq!(an.bits, 0);
    }

    #[test]
    fn odd_degree_always_has_real_points() {
        let x = bundle(-1, "0,-2,0,0,0,1"); // x^5 - 2x = x(x^2-...) well, x(x^4 - 2)
        let basis = brauer_basis(&x).unwrap();
        let an = analyze_real(&x, &basis.masks()).unwrap();
        assert!(an.has_point);
        assert!(an.bits & 1 == 1 || an.bits != 0);
    }

    #[test]
    fn curve_reality() {
        assert!(curve_solvable_real(&bundle(5, "-6,0,5,0,-1")));
        assert!(!curve_solvable_real(&bundle(5, "-1,0,0,0,-1")));
        assert!(curve_solvable_real(&bundle(5, "0,1,0,1")));
    }
}
