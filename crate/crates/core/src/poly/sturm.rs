//! Sturm sequences and exact real-root isolation on rational intervals.
//! Used by the real-place analysis, which needs certified signs of every
//! factor on every interval cut out by the real roots.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::{Poly, Rat};

/// Sturm chain of a squarefree polynomial.
pub fn sturm_chain(p: &Poly) -> Vec<Poly> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        if chain[n - 1].is_zero() {
            chain.pop();
            return chain;
        }
        let r = chain[n - 2].rem(&chain[n - 1]).neg();
        if r.is_zero() {
            return chain;
        }
        chain.push(r);
    }
}

fn sign(r: &Rat) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn variations(signs: impl Iterator<Item = i32>) -> usize {
    let mut count = 0;
    let mut last = 0;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

pub fn variations_at(chain: &[Poly], x: &Rat) -> usize {
    variations(chain.iter().map(|q| sign(&q.eval(x))))
}

fn variations_at_infinity(chain: &[Poly], positive: bool) -> usize {
    variations(chain.iter().map(|q| {
        let Some(d) = q.degree() else { return 0 };
        let s = sign(q.leading().unwrap());
        if positive || d % 2 == 0 {
            s
        } else {
            -s
        }
    }))
}

/// Number of real roots in the half-open interval (lo, hi].
pub fn roots_in(chain: &[Poly], lo: &Rat, hi: &Rat) -> usize {
    variations_at(chain, lo) - variations_at(chain, hi)
}

/// Cauchy bound: all real roots lie in (-B, B).
pub fn root_bound(p: &Poly) -> Rat {
    let lead = p.leading().expect("nonzero polynomial");
    let max = p
        .coeffs()
        .iter()
        .map(|c| (c / lead).abs())
        .fold(Rat::zero(), |a, b| if b > a { b } else { a });
    max + Rat::one()
}

/// Isolating intervals (lo, hi] for the real roots of a squarefree
/// polynomial with no rational roots, sorted increasingly. Endpoints are
/// never roots.
pub fn isolate_real_roots(p: &Poly) -> Vec<(Rat, Rat)> {
    debug_assert!(p.is_separable().unwrap_or(false));
    let chain = sturm_chain(p);
    let b = root_bound(p);
    let total = variations_at(&chain, &-b.clone()) - variations_at(&chain, &b);
    debug_assert_eq!(
        total,
        variations_at_infinity(&chain, false) - variations_at_infinity(&chain, true)
    );
    let mut out = Vec::new();
    let mut stack = vec![(-b.clone(), b.clone(), total)];
    while let Some((lo, hi, count)) = stack.pop() {
        if count == 0 {
            continue;
        }
        if count == 1 {
            out.push((lo, hi));
            continue;
        }
        let mid = (&lo + &hi) / Rat::from(BigInt::from(2));
        assert!(
            !p.eval(&mid).is_zero(),
            "rational root hit during isolation; strip rational roots first"
        );
        let left = roots_in(&chain, &lo, &mid);
        stack.push((lo, mid.clone(), left));
        stack.push((mid, hi, count - left));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Bisects an isolating interval of `p` until `keep` accepts it.
pub fn refine_until(
    p: &Poly,
    interval: (Rat, Rat),
    keep: impl Fn(&(Rat, Rat)) -> bool,
) -> (Rat, Rat) {
    let chain = sturm_chain(p);
    let mut cur = interval;
    while !keep(&cur) {
        let mid = (&cur.0 + &cur.1) / Rat::from(BigInt::from(2));
        assert!(!p.eval(&mid).is_zero(), "rational root hit during refinement");
        cur = if roots_in(&chain, &cur.0, &mid) == 1 {
            (cur.0, mid)
        } else {
            (mid, cur.1)
        };
    }
    cur
}
