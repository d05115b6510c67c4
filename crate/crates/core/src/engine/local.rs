//! Certified enumeration of x-classes in P^1(Q_p).
//!
//! P^1(Q_p) is covered by finitely many balls (valuation window [-E, E]
//! with unit digits mod p^M, a zero ball, and a ball around infinity in
//! the w = 1/x chart). On each ball every tracked factor value is either
//! certified square-class stable by an exact Taylor bound, certified to
//! vanish at a unique point by a Hensel estimate, or the ball is
//! subdivided. Stable classes produce symbols directly; a vanishing
//! factor is replaced by its complementary representative. Nothing is
//! reported that is not certified, and exhausted subdivision budgets
//! surface as Error::Undecided.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{hilbert_symbol, int_valuation, is_mth_power_local, valuation, Place};
use crate::engine::{ConicBundle, PlaceAnalysis};
use crate::poly::disc;
use crate::{Error, Rat, Result};

#[derive(Clone)]
pub(crate) struct Mask {
    pub bits: u32,
    pub constant: Rat,
}

struct FactorLocal {
    prim: Vec<BigInt>,
    deriv: Vec<BigInt>,
    /// v_p of each primitive coefficient, None when zero.
    vc: Vec<Option<i64>>,
}

impl FactorLocal {
    fn new(prim: Vec<BigInt>, p: u64) -> FactorLocal {
        let deriv: Vec<BigInt> = prim
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigInt::from(i))
            .collect();
        let vc = prim
            .iter()
            .map(|c| (!c.is_zero()).then(|| int_valuation(c, p)))
            .collect();
        FactorLocal { prim, deriv, vc }
    }

    fn degree(&self) -> usize {
        self.prim.len() - 1
    }
}

pub(crate) struct Chart {
    factors: Vec<FactorLocal>,
    pub masks: Vec<Mask>,
    pub point: Mask,
    relevant: u32,
}

fn binom(n: usize, k: usize) -> u64 {
    let mut out = 1u64;
    for i in 0..k {
        out = out * (n - i) as u64 / (i + 1) as u64;
    }
    out
}

fn pow_bigint(base: u64, e: u32) -> BigInt {
    let mut out = BigInt::one();
    for _ in 0..e {
        out *= base;
    }
    out
}

fn rat_prime_pow(p: u64, e: i64) -> Rat {
    if e >= 0 {
        Rat::from(pow_bigint(p, e as u32))
    } else {
        Rat::new(BigInt::one(), pow_bigint(p, (-e) as u32))
    }
}

/// Homogeneous evaluation sum c_i num^i den^(d-i); the factor value at
/// num/den is this over den^d.
pub(crate) fn eval_homog(coeffs: &[BigInt], num: &BigInt, den: &BigInt) -> BigInt {
    let d = coeffs.len() - 1;
    let mut denpow = vec![BigInt::one(); d + 1];
    for i in 1..=d {
        denpow[i] = &denpow[i - 1] * den;
    }
    let mut acc = BigInt::zero();
    let mut numpow = BigInt::one();
    for (i, c) in coeffs.iter().enumerate() {
        acc += c * &numpow * &denpow[d - i];
        numpow = &numpow * num;
    }
    acc
}

enum FStatus {
    Stable(Rat),
    Root,
    Unstable,
}

/// Status of one factor on the ball center + p^n Z_p.
fn factor_status(
    f: &FactorLocal,
    p: u64,
    center: &Rat,
    center_val: Option<i64>,
    n: i64,
    margin: i64,
) -> FStatus {
    let d = f.degree();
    let num = center.numer();
    let den = center.denom();
    let vden = int_valuation(den, p).max(0);
    let fhat = eval_homog(&f.prim, num, den);
    if fhat.is_zero() {
        return FStatus::Root;
    }
    let vf = int_valuation(&fhat, p) - d as i64 * vden;
    // Lower bound on v(F(x) - F(center)) over the ball, via the Taylor
    // coefficients T_dd = sum_{j >= dd} C(j, dd) c_j center^(j - dd):
    // v(T_dd) >= min_j [v(C(j,dd)) + v(c_j) + (j - dd) v(center)], and the
    // dd-th term moves by at least dd * n.
    let mut diff_bound = i64::MAX;
    for dd in 1..=d {
        let tmin = match center_val {
            None => f.vc[dd].unwrap_or(i64::MAX),
            Some(e) => (dd..=d)
                .filter_map(|j| {
                    f.vc[j].map(|v| {
                        int_valuation(&BigInt::from(binom(j, dd)), p) + v + (j - dd) as i64 * e
                    })
                })
                .min()
                .unwrap_or(i64::MAX),
        };
        if tmin != i64::MAX {
            diff_bound = diff_bound.min(tmin + dd as i64 * n);
        }
    }
    if diff_bound >= vf + margin {
        let value = Rat::new(fhat, den.pow(d as u32));
        return FStatus::Stable(value);
    }
    // Hensel: a unique root of F lies in the ball when v(F) > 2 v(F') and
    // v(F) - v(F') >= n at the center.
    if d >= 1 {
        let dhat = eval_homog(&f.deriv, num, den);
        if !dhat.is_zero() {
            let vd = int_valuation(&dhat, p) - (d as i64 - 1) * vden;
            if vf > 2 * vd && vf - vd >= n {
                return FStatus::Root;
            }
        }
    }
    FStatus::Unstable
}

/// Handler outcome: true short-circuits the whole enumeration.
type Handler<'a> = dyn FnMut(&Chart, Option<usize>, &[Option<Rat>]) -> Result<bool> + 'a;

#[allow(clippy::too_many_arguments)]
fn explore(
    chart: &Chart,
    p: u64,
    center: Rat,
    n: i64,
    depth_left: u32,
    margin: i64,
    handler: &mut Handler,
) -> Result<bool> {
    let center_val = if center.is_zero() {
        None
    } else {
        Some(valuation(&center, p).expect("nonzero"))
    };
    let mut values: Vec<Option<Rat>> = vec![None; chart.factors.len()];
    let mut root: Option<usize> = None;
    let mut split = false;
    for (k, f) in chart.factors.iter().enumerate() {
        if chart.relevant >> k & 1 == 0 {
            continue;
        }
        match factor_status(f, p, &center, center_val, n, margin) {
            FStatus::Stable(v) => values[k] = Some(v),
            FStatus::Root => {
                if root.is_some() {
                    split = true;
                    break;
                }
                root = Some(k);
            }
            FStatus::Unstable => {
                split = true;
                break;
            }
        }
    }
    if !split {
        return handler(chart, root, &values);
    }
    if depth_left == 0 {
        return Err(Error::Undecided {
            place: Place::Finite(p),
            precision: margin as u32,
            detail: format!("subdivision budget exhausted near x = {center} + O(p^{n})"),
        });
    }
    let step = rat_prime_pow(p, n);
    let mut offset = Rat::zero();
    for _ in 0..p {
        if explore(
            chart,
            p,
            &center + &offset,
            n + 1,
            depth_left - 1,
            margin,
            handler,
        )? {
            return Ok(true);
        }
        offset += &step;
    }
    Ok(false)
}

fn build_charts(x: &ConicBundle, gen_masks: &[u32], p: u64) -> (Chart, Chart) {
    let fact = x.factorization();
    let m = fact.factors.len();
    let deg_p = x.poly().degree().expect("nonconstant");
    // Affine chart: the monic factors themselves.
    let mut aff_factors = Vec::with_capacity(m);
    let mut aff_consts = Vec::with_capacity(m);
    for f in &fact.factors {
        let (c, prim) = f.primitive_integer();
        aff_factors.push(FactorLocal::new(prim, p));
        aff_consts.push(c);
    }
    let all: u32 = (1 << m) - 1;
    let prod_consts = |bits: u32, consts: &[Rat]| -> Rat {
        let mut out = Rat::one();
        for (j, c) in consts.iter().enumerate() {
            if bits >> j & 1 == 1 {
                out *= c;
            }
        }
        out
    };
    let aff_masks: Vec<Mask> = gen_masks
        .iter()
        .map(|&bits| Mask {
            bits,
            constant: prod_consts(bits, &aff_consts),
        })
        .collect();
    let aff_point = Mask {
        bits: all,
        constant: &fact.lc * prod_consts(all, &aff_consts),
    };
    let aff_relevant = aff_masks.iter().fold(aff_point.bits, |r, mk| r | mk.bits);
    let affine = Chart {
        factors: aff_factors,
        masks: aff_masks,
        point: aff_point,
        relevant: aff_relevant,
    };
    // Infinity chart in w = 1/x: factor 0 is w itself and factor j+1 is
    // the reversal w^(deg Q_j) Q_j(1/w); each mask gains the w bit when
    // its total degree is odd.
    let mut inf_factors = vec![FactorLocal::new(vec![BigInt::zero(), BigInt::one()], p)];
    let mut inf_consts = Vec::with_capacity(m);
    for f in &fact.factors {
        let (c, prim) = f.reversed().primitive_integer();
        inf_factors.push(FactorLocal::new(prim, p));
        inf_consts.push(c);
    }
    let degs: Vec<usize> = fact.factors.iter().map(|f| f.degree().unwrap()).collect();
    let lift = |bits: u32| -> u32 {
        let d: usize = (0..m).filter(|&j| bits >> j & 1 == 1).map(|j| degs[j]).sum();
        (bits << 1) | (d % 2) as u32
    };
    let inf_masks: Vec<Mask> = gen_masks
        .iter()
        .map(|&bits| Mask {
            bits: lift(bits),
            constant: prod_consts(bits, &inf_consts),
        })
        .collect();
    let inf_point = Mask {
        bits: (all << 1) | (deg_p % 2) as u32,
        constant: &fact.lc * prod_consts(all, &inf_consts),
    };
    let inf_relevant = inf_masks.iter().fold(inf_point.bits, |r, mk| r | mk.bits);
    let infinity = Chart {
        factors: inf_factors,
        masks: inf_masks,
        point: inf_point,
        relevant: inf_relevant,
    };
    (affine, infinity)
}

/// Valuation window E and unit precision M for the ball cover at p.
fn parameters(x: &ConicBundle, p: u64, precision: u32) -> Result<(i64, u32)> {
    let vals: Vec<i64> = x
        .poly()
        .coeffs()
        .iter()
        .filter(|c| !c.is_zero())
        .map(|c| valuation(c, p).expect("nonzero"))
        .collect();
    let spread = vals.iter().max().unwrap() - vals.iter().min().unwrap();
    let d = disc(x.poly())?;
    let dv = valuation(&d, p)?;
    let e = spread.max(2) + dv.max(0) + 1 + precision as i64;
    // The formula value is a sound starting precision, but enumerating
    // p^M unit digits up front is wasteful: certified adaptive
    // subdivision refines exactly where stability fails, so the initial
    // digit count is capped and the budget does the rest.
    let mut m_val = (valuation(&(Rat::from(BigInt::from(4)) * x.a() * &d), p)? + 2).max(1) as u32;
    while m_val > 1 && pow_bigint(p, m_val) > BigInt::from(64) {
        m_val -= 1;
    }
    Ok((e, m_val))
}

fn enumerate(
    x: &ConicBundle,
    gen_masks: &[u32],
    p: u64,
    precision: u32,
    handler: &mut Handler,
) -> Result<()> {
    let (e_bound, m_val) = parameters(x, p, precision)?;
    let (affine, infinity) = build_charts(x, gen_masks, p);
    // The margin is exactly the square-class threshold: a unit 1 + eps
    // with v(eps) >= 1 (>= 3 at p = 2) is a square, so a larger margin
    // cannot change any decision -- it only forces ~margin extra
    // subdivision levels on every ball, i.e. a p^k blowup. Precision
    // therefore widens the window and the depth budget instead.
    let margin = if p == 2 { 3 } else { 1 };
    let depth = 30 + 2 * precision;
    let pm = pow_bigint(p, m_val);
    for e in -e_bound..=e_bound {
        let pe = rat_prime_pow(p, e);
        let mut u = BigInt::one();
        while u < pm {
            if (&u % p) != BigInt::zero() {
                let center = &pe * Rat::from(u.clone());
                if explore(&affine, p, center, e + m_val as i64, depth, margin, handler)? {
                    return Ok(());
                }
            }
            u += 1;
        }
    }
    // Zero ball and the ball around infinity.
    if explore(&affine, p, Rat::zero(), e_bound + 1, depth, margin, handler)? {
        return Ok(());
    }
    explore(&infinity, p, Rat::zero(), e_bound + 1, depth, margin, handler)?;
    Ok(())
}

/// Symbol of (a, generator value) on a decided class. A vanishing factor
/// inside the mask is replaced by the complementary representative
/// point * mask, which the admissibility parity keeps away from the root.
fn mask_symbol(
    a: &Rat,
    chart: &Chart,
    mask: &Mask,
    root: Option<usize>,
    values: &[Option<Rat>],
    v: Place,
) -> Result<i32> {
    let (bits, constant) = match root {
        Some(k) if mask.bits >> k & 1 == 1 => (
            chart.point.bits ^ mask.bits,
            &chart.point.constant * &mask.constant,
        ),
        _ => (mask.bits, mask.constant.clone()),
    };
    if let Some(k) = root {
        debug_assert_eq!(bits >> k & 1, 0, "complement still meets the root factor");
    }
    let mut val = constant;
    for (j, value) in values.iter().enumerate() {
        if bits >> j & 1 == 1 {
            val *= value.as_ref().expect("stable factor value");
        }
    }
    hilbert_symbol(a, &val, v)
}

pub(crate) fn analyze_finite(
    x: &ConicBundle,
    gen_masks: &[u32],
    p: u64,
    precision: u32,
) -> Result<PlaceAnalysis> {
    let v = Place::Finite(p);
    let a = x.a().clone();
    let rank = gen_masks.len();
    let size = 1u32 << rank;
    let full: u128 = if size == 128 {
        u128::MAX
    } else {
        (1u128 << size) - 1
    };
    let mut bits = 0u128;
    let mut has_point = false;
    let mut handler = |chart: &Chart, root: Option<usize>, values: &[Option<Rat>]| -> Result<bool> {
        let on_branch = root.is_some_and(|k| chart.point.bits >> k & 1 == 1);
        if !on_branch {
            // Conic over the class is constant: a point exists iff
            // (a, P(x)) = +1 there.
            let mut val = chart.point.constant.clone();
            for (j, value) in values.iter().enumerate() {
                if chart.point.bits >> j & 1 == 1 {
                    val *= value.as_ref().expect("stable factor value");
                }
            }
            if hilbert_symbol(&a, &val, v)? == -1 {
                return Ok(false);
            }
        }
        has_point = true;
        let mut idx = 0u32;
        for (i, mask) in chart.masks.iter().enumerate() {
            if mask_symbol(&a, chart, mask, root, values, v)? == -1 {
                idx |= 1 << i;
            }
        }
        bits |= 1 << idx;
        Ok(bits == full)
    };
    enumerate(x, gen_masks, p, precision, &mut handler)?;
    Ok(PlaceAnalysis { bits, has_point })
}

pub(crate) fn curve_solvable_finite(x: &ConicBundle, p: u64, precision: u32) -> Result<bool> {
    let v = Place::Finite(p);
    let mut found = false;
    let mut handler = |chart: &Chart, root: Option<usize>, values: &[Option<Rat>]| -> Result<bool> {
        if root.is_some_and(|k| chart.point.bits >> k & 1 == 1) {
            // y = 0 over the branch point.
            found = true;
            return Ok(true);
        }
        let mut val = chart.point.constant.clone();
        for (j, value) in values.iter().enumerate() {
            if chart.point.bits >> j & 1 == 1 {
                val *= value.as_ref().expect("stable factor value");
            }
        }
        if is_mth_power_local(&val, v, 2)? {
            found = true;
            return Ok(true);
        }
        Ok(false)
    };
    enumerate(x, &[], p, precision, &mut handler)?;
    Ok(found)
}
