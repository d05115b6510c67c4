//! Acceptance gate: the eight go/no-go checks for the obstruction
//! engine, each with a pinned runtime budget where one applies. Every
//! test prints a single PASS line with its measured time.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use obstrukt_core::arith::{hilbert_symbol, square_class, valuation, Place};
use obstrukt_core::engine::{
    brauer_manin_obstructed, local_points_exist, small_point_search, surjectivity_check,
    EngineOptions,
};
use obstrukt_core::experiments::{
    exceptional_classes, finiteness_scan, nonsquare_family, sv_membership, ScanOptions,
};
use obstrukt_core::{ConicBundle, Poly, Rat, Verdict};

fn int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// The classical counterexample surface: y^2 + z^2 = (3 - x^2)(x^2 - 2).
fn golden_poly() -> Poly {
    "-6,0,5,0,-1".parse().unwrap()
}

fn budget(name: &str, start: Instant, limit: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < limit,
        "{name}: {elapsed:?} exceeded the {limit:?} budget"
    );
    println!("PASS {name} ({elapsed:?} < {limit:?})");
}

// Criterion 1: Hilbert reciprocity on 500 pseudorandom pairs of height
// <= 10^3; the symbol product over the ramified places is exactly +1.
#[test]
fn criterion_1_hilbert_reciprocity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let a = loop {
            let n = rng.gen_range(-1000i64..=1000);
            if n != 0 {
                break rat(n, rng.gen_range(1i64..=1000));
            }
        };
        let b = loop {
            let n = rng.gen_range(-1000i64..=1000);
            if n != 0 {
                break rat(n, rng.gen_range(1i64..=1000));
            }
        };
        let mut primes = vec![2u64];
        primes.extend(square_class(&a).unwrap().support().unwrap());
        primes.extend(square_class(&b).unwrap().support().unwrap());
        primes.sort_unstable();
        primes.dedup();
        let mut product = hilbert_symbol(&a, &b, Place::Real).unwrap();
        for p in primes {
            product *= hilbert_symbol(&a, &b, Place::Finite(p)).unwrap();
        }
        assert_eq!(product, 1, "reciprocity failed for a={a} b={b}");
    }
    budget(
        "[criterion 1] Hilbert reciprocity, 500 pairs",
        start,
        Duration::from_secs(5),
    );
}

// Criterion 2: the golden verdict on a = -1, P = (3-x^2)(x^2-2):
// Obstructed, locally solvable at every place of S, no rational point up
// to height 10^4, and real invariant set exactly {1/2}.
#[test]
fn criterion_2_golden_verdict() {
    let start = Instant::now();
    let x = ConicBundle::new(&int(-1), &golden_poly()).unwrap();
    let opts = EngineOptions::default();
    let report = brauer_manin_obstructed(&x, opts).unwrap();
    assert_eq!(report.verdict, Verdict::Obstructed);
    assert_eq!(report.rank, 1);
    for &v in x.bad_place_set() {
        assert!(
            local_points_exist(&x, v, opts).unwrap(),
            "no local points at {v}"
        );
    }
    let real = &report.per_place[&Place::Real];
    let half: BTreeSet<Vec<u8>> = [vec![1u8]].into_iter().collect();
    assert_eq!(real.vectors, half, "real invariant set is not {{1/2}}");
    assert_eq!(
        small_point_search(&x, 10_000),
        None,
        "found a rational point on the obstructed surface"
    );
    budget(
        "[criterion 2] Iskovskikh golden verdict, search to 10^4",
        start,
        Duration::from_secs(30),
    );
}

// Criterion 3: the finiteness scan stays inside the subgroup generated
// by -1 and the primes of S0(P), and is already complete at bound 500.
#[test]
fn criterion_3_finiteness_scan() {
    let start = Instant::now();
    let p = golden_poly();
    let scan500 = finiteness_scan(&p, 500, ScanOptions::default()).unwrap();
    let s0_primes: BTreeSet<u64> = scan500
        .s0
        .iter()
        .filter_map(|v| v.prime())
        .collect();
    for class in &scan500.obstructed_classes {
        for q in class.support().unwrap() {
            assert!(
                s0_primes.contains(&q),
                "class {class} escapes the subgroup <-1, S0 primes>"
            );
        }
    }
    let scan1000 = finiteness_scan(&p, 1000, ScanOptions::default()).unwrap();
    assert_eq!(
        scan500.obstructed_classes, scan1000.obstructed_classes,
        "obstructed classes grew when the bound doubled"
    );
    budget(
        "[criterion 3] finiteness scan, bounds 500 and 1000",
        start,
        Duration::from_secs(600),
    );
}

/// The 20 smallest primes outside the padded S0 (every prime < 100 is
/// inside), all below 500.
fn lemma_primes(x: &ConicBundle) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 101u64;
    while out.len() < 20 {
        assert!(p <= 500);
        if obstrukt_core::arith::primes::is_prime_u64(p)
            && !x.s0().contains(&Place::Finite(p))
        {
            out.push(p);
        }
        p += 2;
    }
    out
}

// Criterion 4: for a = p with p outside S0 and v_p(a) odd, the local
// invariant map at p is surjective and the verdict is never Obstructed.
#[test]
fn criterion_4_odd_valuation_surjectivity() {
    let start = Instant::now();
    let p = golden_poly();
    let probe = ConicBundle::new(&int(-1), &p).unwrap();
    let opts = EngineOptions::default();
    for q in lemma_primes(&probe) {
        let x = ConicBundle::new(&int(q as i64), &p).unwrap();
        assert_eq!(valuation(x.a(), q).unwrap(), 1);
        assert!(
            surjectivity_check(&x, Place::Finite(q), opts).unwrap(),
            "W_{q} is not all of F2^r"
        );
        let report = brauer_manin_obstructed(&x, opts).unwrap();
        assert_ne!(report.verdict, Verdict::Obstructed, "a = {q} obstructed");
    }
    budget(
        "[criterion 4] surjectivity at 20 primes outside S0",
        start,
        Duration::from_secs(300),
    );
}

// Criterion 5: the twist family over the obstructed base: t = 1 is
// Obstructed, and the exceptional class set excludes class 1 and is
// stable from bound 200 to 400.
#[test]
fn criterion_5_twist_family() {
    let start = Instant::now();
    let p = golden_poly();
    let b = int(-1);
    let opts = EngineOptions::default();
    let t1 = nonsquare_family(&int(1), &b, &p, opts).unwrap();
    assert_eq!(t1.verdict, Verdict::Obstructed, "t = 1 must be obstructed");
    let scan_opts = ScanOptions::default();
    let at200 = exceptional_classes(&b, &p, 200, scan_opts).unwrap();
    let one = square_class(&int(1)).unwrap();
    assert!(!at200.classes.contains(&one), "class 1 must be excluded");
    assert!(at200.undecided.is_empty());
    let at400 = exceptional_classes(&b, &p, 400, scan_opts).unwrap();
    assert_eq!(
        at200.classes, at400.classes,
        "exceptional classes changed from bound 200 to 400"
    );
    println!(
        "PASS [criterion 5] twist family: {} exceptional classes, stable 200 -> 400 ({:?})",
        at200.classes.len(),
        start.elapsed()
    );
}

// Criterion 6: consistency oracle. Across the surfaces of criteria 2-5
// (all contained in the |a| <= 500 scan family), a found rational point
// always comes with verdict NotObstructed.
#[test]
fn criterion_6_points_imply_not_obstructed() {
    let start = Instant::now();
    let p = golden_poly();
    let scan = finiteness_scan(&p, 500, ScanOptions::default()).unwrap();
    let mut violations = 0usize;
    let mut found = 0usize;
    for (class, report) in &scan.per_class_reports {
        let x = ConicBundle::new(&Rat::from(class.representative().clone()), &p).unwrap();
        if let Some((x0, y0, z0)) = small_point_search(&x, 50) {
            found += 1;
            // The point really lies on the surface.
            assert_eq!(&y0 * &y0 - x.a() * &z0 * &z0, x.poly().eval(&x0));
            if report.verdict != Verdict::NotObstructed {
                violations += 1;
            }
        }
    }
    assert!(found > 0, "the oracle never fired");
    assert_eq!(violations, 0, "{violations} surfaces with points yet not NotObstructed");
    println!(
        "PASS [criterion 6] consistency oracle: {found} points found, zero violations ({:?})",
        start.elapsed()
    );
}

// Criterion 7: recomputing criteria 2 and 4 with precision raised by 2
// changes nothing (reports serialize bit-identically; they carry no
// timing fields).
#[test]
fn criterion_7_precision_stability() {
    let start = Instant::now();
    let p = golden_poly();
    let lo = EngineOptions { precision: 0, paranoid: false };
    let hi = EngineOptions { precision: 2, paranoid: false };
    let probe = ConicBundle::new(&int(-1), &p).unwrap();
    let mut surfaces = vec![int(-1)];
    surfaces.extend(lemma_primes(&probe).into_iter().map(|q| int(q as i64)));
    for a in surfaces {
        let x = ConicBundle::new(&a, &p).unwrap();
        let low = brauer_manin_obstructed(&x, lo).unwrap();
        let high = brauer_manin_obstructed(&x, hi).unwrap();
        assert_eq!(
            serde_json::to_string(&low).unwrap(),
            serde_json::to_string(&high).unwrap(),
            "precision changed the report for a = {a}"
        );
    }
    println!(
        "PASS [criterion 7] precision stability on criteria 2 and 4 surfaces ({:?})",
        start.elapsed()
    );
}

// Criterion 8: sv_membership vs a brute-force square search in Z/p^k,
// k = v_p(4t) + 3, for 200 random (t, p).
#[test]
fn criterion_8_sv_membership_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let primes: Vec<u64> = obstrukt_core::arith::primes::sieve(100);
    let mut checked = 0usize;
    while checked < 200 {
        let p = primes[rng.gen_range(0..primes.len())];
        // u/d coprime to p, times a controlled power of p.
        let u = {
            let n = rng.gen_range(-30i64..=30);
            if n == 0 || n.unsigned_abs() % p == 0 {
                continue;
            }
            n
        };
        let d = {
            let n = rng.gen_range(1i64..=30);
            if n as u64 % p == 0 {
                continue;
            }
            n
        };
        let e = rng.gen_range(0i64..=2);
        let t = rat(u, d) * Rat::from(BigInt::from(p).pow(e as u32));
        // Clear the denominator by a square: same square class, integer.
        let cleared: BigInt = t.numer() * t.denom();
        let k = (valuation(&(Rat::from(BigInt::from(4)) * &t), p).unwrap() + 3) as u32;
        let modulus = BigInt::from(p).pow(k);
        let Ok(modulus_u) = u64::try_from(&modulus) else {
            continue;
        };
        if modulus_u > 20_000_000 {
            continue; // keep the brute force bounded
        }
        let target = u64::try_from(&((&cleared % &modulus + &modulus) % &modulus)).unwrap();
        let mut square = false;
        // x and modulus - x square identically; half the range suffices.
        for x in 0..=modulus_u / 2 {
            if (x as u128 * x as u128 % modulus_u as u128) as u64 == target {
                square = true;
                break;
            }
        }
        assert_eq!(
            sv_membership(&t, Place::Finite(p)).unwrap(),
            square,
            "disagreement at t={t} p={p} k={k}"
        );
        checked += 1;
    }
    println!(
        "PASS [criterion 8] sv membership vs brute force, 200 samples ({:?})",
        start.elapsed()
    );
}
