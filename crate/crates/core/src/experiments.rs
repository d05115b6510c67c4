//! The three paper-level experiments: a finiteness scan over square
//! classes of the twist parameter, the non-square twist family over a
//! self-certified obstructed base pair, and local square-membership
//! queries.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{is_mth_power_local, square_class, Place, SquareClass};
use crate::engine::{
    brauer_manin_obstructed, curve_locally_solvable, ConicBundle, EngineOptions,
    ObstructionReport, Verdict,
};
use crate::{Error, Poly, Rat, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub poly: Poly,
    pub range: u64,
    #[serde(rename = "obstructedClasses")]
    pub obstructed_classes: BTreeSet<SquareClass>,
    #[serde(rename = "perClassReports")]
    pub per_class_reports: BTreeMap<SquareClass, ObstructionReport>,
    #[serde(rename = "S0")]
    pub s0: BTreeSet<Place>,
    /// Classes the engine could not decide (nonempty only under
    /// allow_undecided).
    pub undecided: BTreeSet<SquareClass>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyVerdict {
    #[serde(with = "crate::rat_string")]
    pub t: Rat,
    #[serde(with = "crate::rat_string")]
    pub b: Rat,
    pub verdict: Verdict,
    /// Places of S where the twisted surface has no local point.
    #[serde(rename = "localFailures")]
    pub local_failures: BTreeSet<Place>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    pub classes: BTreeSet<SquareClass>,
    /// Places where y^2 = P(x) itself is locally insolvable.
    #[serde(rename = "F")]
    pub f_places: BTreeSet<Place>,
    pub undecided: BTreeSet<SquareClass>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ScanOptions {
    pub engine: EngineOptions,
    pub allow_undecided: bool,
}

/// Squarefree integers 1 <= n <= bound.
fn squarefree_up_to(bound: u64) -> Vec<u64> {
    let mut free = vec![true; bound as usize + 1];
    let mut d = 2u64;
    while d * d <= bound {
        let mut k = d * d;
        while k <= bound {
            free[k as usize] = false;
            k += d * d;
        }
        d += 1;
    }
    (1..=bound).filter(|&n| free[n as usize]).collect()
}

fn scan_classes<F>(
    bound: u64,
    allow_undecided: bool,
    run: F,
) -> Result<(Vec<(SquareClass, ObstructionReport)>, BTreeSet<SquareClass>)>
where
    F: Fn(i64) -> Result<ObstructionReport> + Sync,
{
    let mut params: Vec<i64> = Vec::new();
    for n in squarefree_up_to(bound) {
        params.push(n as i64);
        params.push(-(n as i64));
    }
    let outcomes: Vec<(i64, Result<ObstructionReport>)> = params
        .par_iter()
        .map(|&a| (a, run(a)))
        .collect();
    let mut reports = Vec::new();
    let mut undecided = BTreeSet::new();
    for (a, outcome) in outcomes {
        let class = square_class(&Rat::from(BigInt::from(a)))?;
        match outcome {
            Ok(report) => reports.push((class, report)),
            Err(err @ Error::Undecided { .. }) => {
                if !allow_undecided {
                    return Err(err);
                }
                undecided.insert(class);
            }
            Err(err) => return Err(err),
        }
    }
    Ok((reports, undecided))
}

/// Theorem 1.2 at desk scale: decide the obstruction for every square
/// class with a squarefree representative up to `bound` and assert that
/// the obstructed ones stay inside the subgroup generated by -1 and the
/// primes of S0(P).
pub fn finiteness_scan(p: &Poly, bound: u64, opts: ScanOptions) -> Result<ScanResult> {
    if bound == 0 {
        return Err(Error::Invalid("bound must be positive".into()));
    }
    let probe = ConicBundle::new(&Rat::from(BigInt::from(-1)), p)?;
    let s0 = probe.s0().clone();
    let (reports, undecided) = scan_classes(bound, opts.allow_undecided, |a| {
        let x = ConicBundle::new(&Rat::from(BigInt::from(a)), p)?;
        brauer_manin_obstructed(&x, opts.engine)
    })?;
    let mut obstructed = BTreeSet::new();
    let mut per_class = BTreeMap::new();
    for (class, report) in reports {
        if report.verdict == Verdict::Obstructed {
            obstructed.insert(class.clone());
        }
        per_class.insert(class, report);
    }
    // Structural consequence of the finiteness proof: an obstructed class
    // has no odd valuation outside S0.
    for class in &obstructed {
        for q in class.support()? {
            if !s0.contains(&Place::Finite(q)) {
                return Err(Error::Invalid(format!(
                    "obstructed class {class} has odd valuation at {q} outside S0"
                )));
            }
        }
    }
    Ok(ScanResult {
        poly: p.clone(),
        range: bound,
        obstructed_classes: obstructed,
        per_class_reports: per_class,
        s0,
        undecided,
    })
}

/// Verifies that (b, P) is an obstructed base pair.
fn certify_base(b: &Rat, p: &Poly, opts: EngineOptions) -> Result<ConicBundle> {
    let base = ConicBundle::new(b, p)?;
    let report = brauer_manin_obstructed(&base, opts)?;
    if report.verdict != Verdict::Obstructed {
        return Err(Error::Invalid(format!(
            "base pair (b = {b}, P = {p}) is not obstructed: {:?}",
            report.verdict
        )));
    }
    Ok(base)
}

fn family_verdict(t: &Rat, b: &Rat, p: &Poly, opts: EngineOptions) -> Result<FamilyVerdict> {
    if t.is_zero() {
        return Err(Error::ZeroTwist);
    }
    let x = ConicBundle::new(&(t * b), p)?;
    let report = brauer_manin_obstructed(&x, opts)?;
    let local_failures = report
        .per_place
        .iter()
        .filter(|(_, set)| set.is_empty())
        .map(|(v, _)| *v)
        .collect();
    Ok(FamilyVerdict {
        t: t.clone(),
        b: b.clone(),
        verdict: report.verdict,
        local_failures,
    })
}

/// The twist U_t : y^2 - t b z^2 = P(x) of a configured obstructed base
/// pair; squares t reproduce the base verdict by construction.
pub fn nonsquare_family(t: &Rat, b: &Rat, p: &Poly, opts: EngineOptions) -> Result<FamilyVerdict> {
    certify_base(b, p, opts)?;
    family_verdict(t, b, p, opts)
}

/// The finitely many square classes t (besides 1) whose twist fails to
/// have rational points for Brauer-Manin reasons, together with the set F
/// of places where y^2 = P(x) is itself locally insolvable.
pub fn exceptional_classes(
    b: &Rat,
    p: &Poly,
    bound: u64,
    opts: ScanOptions,
) -> Result<ExceptionalReport> {
    if bound == 0 {
        return Err(Error::Invalid("bound must be positive".into()));
    }
    let base = certify_base(b, p, opts.engine)?;
    // F: check every place of the padded S0; outside it the curve has
    // good reduction at p >= 100 and points exist by Weil bounds.
    let mut f_places = BTreeSet::new();
    for &v in base.s0() {
        if !curve_locally_solvable(&base, v, opts.engine.precision)? {
            f_places.insert(v);
        }
    }
    let (reports, undecided) = scan_classes(bound, opts.allow_undecided, |t| {
        let x = ConicBundle::new(&(Rat::from(BigInt::from(t)) * b), p)?;
        brauer_manin_obstructed(&x, opts.engine)
    })?;
    let mut classes = BTreeSet::new();
    for (class, report) in reports {
        if matches!(report.verdict, Verdict::Obstructed | Verdict::NoAdelicPoint)
            && !class.is_one()
        {
            classes.insert(class);
        }
    }
    Ok(ExceptionalReport {
        classes,
        f_places,
        undecided,
    })
}

/// S_v / N_v membership: whether t is a square in the completion Q_v.
pub fn sv_membership(t: &Rat, v: Place) -> Result<bool> {
    is_mth_power_local(t, v, 2)
}
