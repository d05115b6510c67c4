//! Rational point search by x-height. For each x = m/n the fiber is the
//! conic y^2 - a z^2 = P(x); candidates failing local solvability at the
//! places of 2 a P(x) are rejected exactly, survivors get a bounded
//! search for one solution. The hot loop runs on machine integers: a
//! homogenized i128 evaluation plus an exact Hilbert-symbol screen at
//! the real place, 2, and every odd prime below 1000, so only the rare
//! survivors touch bignums.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::arith::primes::{factor_u64, inv_mod, sieve};
use crate::arith::{hilbert_symbol, legendre_u64, square_class, valuation, Place};
use crate::engine::ConicBundle;
use crate::{Rat, Result};

/// Integer square root check with the root returned.
fn rational_sqrt(t: &Rat) -> Option<Rat> {
    if t.is_negative() {
        return None;
    }
    let n = t.numer().sqrt();
    let d = t.denom().sqrt();
    if &(&n * &n) == t.numer() && &(&d * &d) == t.denom() {
        Some(Rat::new(n, d))
    } else {
        None
    }
}

/// One solution of y^2 - a z^2 = c by bounded search (c != 0). The a = 1
/// case is solved in closed form.
fn solve_conic(a: &Rat, c: &Rat) -> Option<(Rat, Rat)> {
    let two = Rat::from(BigInt::from(2));
    if a.is_one() {
        return Some(((c + Rat::one()) / &two, (c - Rat::one()) / &two));
    }
    for q in 1i64..=6 {
        for s in 0i64..=60 {
            let z = Rat::new(BigInt::from(s), BigInt::from(q));
            let t = c + a * &z * &z;
            if let Some(y) = rational_sqrt(&t) {
                return Some((y, z));
            }
        }
    }
    None
}

/// Everywhere-local solvability of y^2 - a z^2 = c, by Hilbert symbols
/// over the real place and the odd support of 2ac. Errors (a factor of c
/// resists certification) are treated as unknown.
fn fiber_locally_solvable(a: &Rat, c: &Rat) -> Result<bool> {
    if hilbert_symbol(a, c, Place::Real)? == -1 {
        return Ok(false);
    }
    if hilbert_symbol(a, c, Place::Finite(2))? == -1 {
        return Ok(false);
    }
    let mut primes = square_class(a)?.support()?;
    primes.extend(square_class(c)?.support()?);
    primes.sort_unstable();
    primes.dedup();
    for p in primes {
        if p != 2 && hilbert_symbol(a, c, Place::Finite(p))? == -1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Homogenized i128 evaluation of an integer polynomial when the height
/// bound keeps every term in range.
struct FastEval {
    coeffs: Vec<i128>,
}

impl FastEval {
    fn build(prim: &[BigInt], height: u64) -> Option<FastEval> {
        let coeffs: Option<Vec<i128>> = prim.iter().map(|c| i128::try_from(c).ok()).collect();
        let coeffs = coeffs?;
        let d = coeffs.len() as u32 - 1;
        // Worst case sum |c_i| h^d must stay clear of overflow.
        let h = i128::try_from(height).ok()?;
        let mut bound: i128 = 0;
        let mut pw: i128 = 1;
        for _ in 0..d {
            pw = pw.checked_mul(h)?;
        }
        for c in &coeffs {
            bound = bound.checked_add(c.checked_abs()?.checked_mul(pw)?)?;
        }
        Some(FastEval { coeffs })
    }

    fn eval(&self, m: i128, n: i128) -> i128 {
        // Homogeneous Horner: sum c_i m^i n^(d-i).
        let mut acc = 0i128;
        let mut np = 1i128;
        for c in self.coeffs.iter().rev() {
            acc = acc * m + c * np;
            np *= n;
        }
        acc
    }
}

/// Floor integer square root by Newton descent from above.
fn isqrt_u64(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = 1u64 << (64 - n.leading_zeros()).div_ceil(2);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

fn val_unit_i128(mut x: i128, q: i128) -> (i64, u64) {
    debug_assert!(x != 0);
    let mut v = 0;
    while x % q == 0 {
        x /= q;
        v += 1;
    }
    (v, x.rem_euclid(q) as u64)
}

/// Data for one odd screening prime: everything about a and the constant
/// pc that the symbol (a, P(x))_q needs, reduced once.
struct ScreenPrime {
    q: u64,
    alpha_odd: bool,
    /// Legendre of the unit part of a.
    leg_ua: i32,
    /// v_q of the constant pc.
    cval: i64,
    /// Unit part of pc mod q.
    cunit: u64,
    /// The primitive coefficients reduced mod q (ascending), so the
    /// divisibility probe q | chat avoids i128 division.
    pm: Vec<u64>,
}

impl ScreenPrime {
    fn chat_mod(&self, m: i64, n: u64) -> u64 {
        let q = self.q;
        let mq = m.rem_euclid(q as i64) as u64;
        let nq = n % q;
        let mut acc = 0u64;
        let mut np = 1u64;
        for c in self.pm.iter().rev() {
            acc = (acc * mq + c * np) % q;
            np = np * nq % q;
        }
        acc
    }
}

/// Exact machine-integer local solvability screen for the fiber over
/// m/n, with c = pc * chat / n^d. Covers the real place, 2, and all odd
/// primes below 1000; a reject here equals hilbert_symbol = -1.
struct Screen {
    d: u32,
    a: Rat,
    pc: Rat,
    a_neg: bool,
    pc_neg: bool,
    /// 2-adic data: (v_2 parity, odd part mod 8) for a and pc.
    a2: (bool, u64),
    c2: (i64, u64),
    odd: Vec<ScreenPrime>,
    /// Primes >= 1000 with odd valuation in a or pc; None when their
    /// supports could not be certified (forces the exact fallback).
    big_fixed: Option<Vec<u64>>,
}

/// Odd part of a nonzero BigInt, reduced mod 8 (sign respected).
fn odd_mod8(x: &BigInt) -> u64 {
    let tz = x.trailing_zeros().unwrap_or(0);
    let m = (x >> tz) & BigInt::from(7);
    u64::try_from(&m).expect("residue fits")
}

fn two_adic(r: &Rat) -> (i64, u64) {
    let v = valuation(r, 2).expect("nonzero");
    // Odd residues are their own inverses mod 8.
    (v, odd_mod8(r.numer()) * odd_mod8(r.denom()) % 8)
}

/// (v_2, odd part mod 8) of a nonzero machine integer.
fn two_adic_i128(x: i128) -> (i64, u64) {
    debug_assert!(x != 0);
    let tz = x.trailing_zeros();
    (tz as i64, (x >> tz).rem_euclid(8) as u64)
}

impl Screen {
    fn build(a: &Rat, pc: &Rat, prim: &[BigInt], d: u32) -> Screen {
        let mut odd = Vec::new();
        for q in sieve(1000) {
            if q == 2 {
                continue;
            }
            let va = valuation(a, q).expect("a nonzero");
            let ua_mod = unit_mod(a, q, va);
            let vc = valuation(pc, q).expect("pc nonzero");
            let qi = BigInt::from(q);
            let pm = prim
                .iter()
                .map(|c| u64::try_from(&((c % &qi + &qi) % &qi)).expect("residue fits"))
                .collect();
            odd.push(ScreenPrime {
                q,
                alpha_odd: va % 2 != 0,
                leg_ua: legendre_u64(ua_mod, q),
                cval: vc,
                cunit: unit_mod(pc, q, vc),
                pm,
            });
        }
        let big_fixed = (|| -> Result<Vec<u64>> {
            let mut v = square_class(a)?.support()?;
            v.extend(square_class(pc)?.support()?);
            v.retain(|&q| q >= 1000);
            v.sort_unstable();
            v.dedup();
            Ok(v)
        })()
        .ok();
        Screen {
            d,
            a: a.clone(),
            pc: pc.clone(),
            a_neg: a.is_negative(),
            pc_neg: pc.is_negative(),
            a2: {
                let (v, u) = two_adic(a);
                (v % 2 != 0, u)
            },
            c2: two_adic(pc),
            odd,
            big_fixed,
        }
    }

    /// Second stage for screen survivors: decide every remaining place
    /// (odd primes >= 1000 dividing a, pc, chat or n) exactly in machine
    /// arithmetic. Some(true) = some symbol is -1; Some(false) = the
    /// fiber is everywhere locally solvable; None = out of range, use
    /// the exact fallback.
    fn reject_large(&self, chat: i128, n: u64) -> Option<bool> {
        use crate::arith::primes::{is_prime_u64, mul_mod, pow_mod, SMALL_PRIMES};
        let mag = u64::try_from(chat.unsigned_abs()).ok()?;
        let fixed = self.big_fixed.as_ref()?;
        // Collect every prime >= 1000 that could carry a -1 symbol: trial
        // divisors of chat, divisors of n, and the fixed support of a and
        // pc. Whatever remains of chat afterwards is handled by Hilbert
        // reciprocity below, mostly without factoring.
        let mut qs: std::collections::BTreeMap<u64, (i64, i64)> = std::collections::BTreeMap::new();
        let mut rest = mag;
        for &p in SMALL_PRIMES.iter() {
            if p * p > rest {
                break;
            }
            if rest % p == 0 {
                let mut v = 0i64;
                while rest % p == 0 {
                    rest /= p;
                    v += 1;
                }
                if p >= 1000 {
                    qs.insert(p, (v, 0));
                }
            }
        }
        for (q, e) in factor_u64(n) {
            if q >= 1000 {
                let entry = qs.entry(q).or_insert((0, 0));
                entry.1 = e as i64;
                while rest % q == 0 {
                    rest /= q;
                    entry.0 += 1;
                }
            }
        }
        for &q in fixed {
            let entry = qs.entry(q).or_insert((0, 0));
            while rest % q == 0 {
                rest /= q;
                entry.0 += 1;
            }
        }
        for (&q, &(vchat, vn)) in &qs {
            let va = valuation(&self.a, q).expect("a nonzero");
            let vpc = valuation(&self.pc, q).expect("pc nonzero");
            let alpha = va.rem_euclid(2);
            let beta = (vpc + vchat - self.d as i64 * vn).rem_euclid(2);
            if alpha == 0 && beta == 0 {
                continue;
            }
            let mut sym = 1i32;
            if alpha == 1 && beta == 1 && q % 4 == 3 {
                sym = -sym;
            }
            if beta == 1 && legendre_u64(unit_mod(&self.a, q, va), q) == -1 {
                sym = -sym;
            }
            if alpha == 1 {
                // Unit part of c = pc * chat / n^d at q.
                let mut uch = mag / q.pow(vchat as u32) % q;
                if chat < 0 {
                    uch = (q - uch) % q;
                }
                let un = n / q.pow(vn as u32) % q;
                let mut u = mul_mod(unit_mod(&self.pc, q, vpc), uch, q);
                u = mul_mod(u, inv_mod(pow_mod(un, self.d as u64, q), q), q);
                if legendre_u64(u, q) == -1 {
                    sym = -sym;
                }
            }
            if sym == -1 {
                return Some(true);
            }
        }
        // The cofactor's primes are > 10^4, coprime to a, pc and n, so
        // alpha = 0 and beta = v_q(rest) there. Every other place is now
        // certified +1, so Hilbert reciprocity forces the product of the
        // remaining symbols to +1: a prime cofactor is decided for free,
        // and a perfect square has every beta even.
        if rest > 1 && !is_prime_u64(rest) {
            let s = isqrt_u64(rest);
            if s * s != rest {
                for (q, e) in factor_u64(rest) {
                    if e % 2 == 1 && legendre_u64(unit_mod(&self.a, q, 0), q) == -1 {
                        return Some(true);
                    }
                }
            }
        }
        Some(false)
    }

    /// True when some local symbol is certainly -1 for c = pc chat / n^d,
    /// with chat the primitive part evaluated at (m, n).
    fn reject(&self, chat: i128, m: i64, n: u64) -> bool {
        // Real place.
        if self.a_neg && (self.pc_neg != (chat < 0)) {
            return true;
        }
        // q = 2: (a, c)_2 = (-1)^(eps(ua) eps(uc) + alpha w(uc) + beta w(ua)).
        let (v2c, u2c) = two_adic_i128(chat);
        let tz = n.trailing_zeros();
        let (v2n, u2n) = (tz as i64, (n >> tz) % 8);
        let beta = self.c2.0 + v2c - self.d as i64 * v2n;
        let mut uc = self.c2.1 * u2c % 8;
        // Divide by (odd part of n)^d: odd residues are self-inverse mod 8.
        let mut npart = 1u64;
        for _ in 0..self.d {
            npart = npart * u2n % 8;
        }
        uc = uc * npart % 8;
        let eps = |u: u64| -> u64 { (u % 4 == 3) as u64 };
        let omega = |u: u64| -> u64 { matches!(u % 8, 3 | 5) as u64 };
        let exp = eps(self.a2.1) * eps(uc)
            + (self.a2.0 as u64) * omega(uc)
            + (beta.rem_euclid(2) as u64) * omega(self.a2.1);
        if exp % 2 == 1 {
            return true;
        }
        // Odd primes: (a, c)_q = (-1)^(alpha beta eps(q)) leg(ua)^beta leg(uc)^alpha.
        for sp in &self.odd {
            let q = sp.q;
            let qi = q as i128;
            let fast_skip = !sp.alpha_odd
                && sp.cval % 2 == 0
                && n % q != 0
                && sp.chat_mod(m, n) != 0;
            if fast_skip {
                continue;
            }
            let (vc, uc) = val_unit_i128(chat, qi);
            let (vn, un) = if n % q == 0 {
                val_unit_i128(n as i128, qi)
            } else {
                (0, n % q)
            };
            let beta = (sp.cval + vc - self.d as i64 * vn).rem_euclid(2);
            let mut sym = 1i32;
            if sp.alpha_odd && beta == 1 && q % 4 == 3 {
                sym = -sym;
            }
            if beta == 1 && sp.leg_ua == -1 {
                sym = -sym;
            }
            if sp.alpha_odd {
                let mut u = sp.cunit * uc % q;
                if vn != 0 || un != 1 {
                    let inv = inv_mod(crate::arith::primes::pow_mod(un, self.d as u64, q), q);
                    u = u * inv % q;
                }
                if legendre_u64(u, q) == -1 {
                    sym = -sym;
                }
            }
            if sym == -1 {
                return true;
            }
        }
        false
    }
}

fn unit_mod(r: &Rat, q: u64, v: i64) -> u64 {
    let unit = r * rat_pow(q, -v);
    let qi = BigInt::from(q);
    let red = |x: &BigInt| u64::try_from(&((x % &qi + &qi) % &qi)).expect("residue fits");
    crate::arith::primes::mul_mod(red(unit.numer()), inv_mod(red(unit.denom()), q), q)
}

fn rat_pow(q: u64, e: i64) -> Rat {
    let b = BigInt::from(q);
    if e >= 0 {
        Rat::from(b.pow(e as u32))
    } else {
        Rat::new(BigInt::one(), b.pow((-e) as u32))
    }
}

/// First rational point (x, y, z) on y^2 - a z^2 = P(x) with
/// |num x|, den x <= height_bound, scanning heights increasingly;
/// None when the bounded search exhausts.
pub fn small_point_search(x: &ConicBundle, height_bound: u64) -> Option<(Rat, Rat, Rat)> {
    let a = x.a().clone();
    let (pc, prim) = x.poly().primitive_integer();
    let d = prim.len() - 1;
    let fast = FastEval::build(&prim, height_bound);
    let screen = fast
        .as_ref()
        .map(|_| Screen::build(&a, &pc, &prim, d as u32));
    let check = |m: i64, n: u64| -> Option<(Rat, Rat, Rat)> {
        // certified = both screen stages proved the fiber everywhere
        // locally solvable, so the exact filter can be skipped.
        let mut certified = false;
        let chat: BigInt = match &fast {
            Some(f) => {
                let v = f.eval(m as i128, n as i128);
                if v != 0 {
                    let sc = screen.as_ref().expect("built with fast");
                    if sc.reject(v, m, n) {
                        return None;
                    }
                    match sc.reject_large(v, n) {
                        Some(true) => return None,
                        Some(false) => certified = true,
                        None => {}
                    }
                }
                BigInt::from(v)
            }
            None => super::local::eval_homog(&prim, &BigInt::from(m), &BigInt::from(n)),
        };
        let xq = Rat::new(BigInt::from(m), BigInt::from(n));
        let c = &pc * Rat::new(chat, BigInt::from(n).pow(d as u32));
        if c.is_zero() {
            return Some((xq, Rat::zero(), Rat::zero()));
        }
        if !certified {
            match fiber_locally_solvable(&a, &c) {
                Ok(false) => return None,
                Ok(true) | Err(_) => {}
            }
        }
        let (y, z) = solve_conic(&a, &c)?;
        Some((xq, y, z))
    };
    for h in 1..=height_bound {
        // Coprimality sieve for this shell: n (or |m|) coprime to h.
        let mut blocked = vec![false; h as usize + 1];
        if h > 1 {
            for (q, _) in factor_u64(h) {
                let mut k = 0u64;
                while k <= h {
                    blocked[k as usize] = true;
                    k += q;
                }
            }
        }
        // Height shell max(|m|, n) = h, in (n, m) lexicographic order.
        let mut shell: Vec<(i64, u64)> = Vec::with_capacity(4 * h as usize + 2);
        for n in 1..h {
            if !blocked[n as usize] {
                shell.push((-(h as i64), n));
                shell.push((h as i64, n));
            }
        }
        for m in -(h as i64)..=h as i64 {
            if !blocked[m.unsigned_abs() as usize] {
                shell.push((m, h));
            }
        }
        let found = shell
            .par_iter()
            .with_min_len(4096)
            .find_map_first(|&(m, n)| check(m, n));
        if found.is_some() {
            return found;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn bundle(a: i64, p: &str) -> ConicBundle {
        ConicBundle::new(&Rat::from(BigInt::from(a)), &p.parse().unwrap()).unwrap()
    }

    fn on_surface(x: &ConicBundle, pt: &(Rat, Rat, Rat)) {
        let (x0, y, z) = pt;
        assert_eq!(y * y - x.a() * z * z, x.poly().eval(x0));
    }

    #[test]
    fn split_twist_always_finds_points() {
        let x = bundle(1, "-2,0,1");
        let pt = small_point_search(&x, 10).expect("a = 1 fibers are solvable");
        on_surface(&x, &pt);
    }

    #[test]
    fn sum_of_squares_circle() {
        let x = bundle(-1, "1,0,1"); // y^2 + z^2 = x^2 + 1
        let pt = small_point_search(&x, 10).expect("x = 0 works");
        on_surface(&x, &pt);
    }

    #[test]
    fn branch_point_is_found() {
        let x = bundle(-1, "-3,2"); // P = 2x - 3, root at 3/2
        let pt = small_point_search(&x, 10).expect("root fiber");
        on_surface(&x, &pt);
    }

    #[test]
    fn fast_eval_matches_bigint() {
        let p: crate::Poly = "-6,0,5,0,-1".parse().unwrap();
        let (_, prim) = p.primitive_integer();
        let f = FastEval::build(&prim, 100).unwrap();
        for (m, n) in [(3i64, 2u64), (-7, 5), (99, 100), (0, 1)] {
            let big = super::super::local::eval_homog(&prim, &BigInt::from(m), &BigInt::from(n));
            assert_eq!(BigInt::from(f.eval(m as i128, n as i128)), big);
        }
    }

    // The machine-integer screen must agree with the exact local filter:
    // a reject means some Hilbert symbol is -1.
    #[test]
    fn screen_agrees_with_exact_symbols() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for a_int in [-1i64, -2, 3, -15, 30, 7] {
            for poly in ["-6,0,5,0,-1", "1,0,1", "0,-2,0,0,0,1", "-4,0,6"] {
                let x = bundle(a_int, poly);
                let a = x.a().clone();
                let (pc, prim) = x.poly().primitive_integer();
                let d = prim.len() as u32 - 1;
                let fast = FastEval::build(&prim, 500).unwrap();
                let screen = Screen::build(&a, &pc, &prim, d);
                for _ in 0..300 {
                    let m = rng.gen_range(-500i64..=500);
                    let n = rng.gen_range(1u64..=500);
                    let chat = fast.eval(m as i128, n as i128);
                    if chat == 0 {
                        continue;
                    }
                    let c = &pc
                        * Rat::new(BigInt::from(chat), BigInt::from(n).pow(d));
                    let rejected = screen.reject(chat, m, n);
                    let mut bad = hilbert_symbol(&a, &c, Place::Real).unwrap() == -1
                        || hilbert_symbol(&a, &c, Place::Finite(2)).unwrap() == -1;
                    if !bad {
                        for q in sieve(1000) {
                            if q != 2 && hilbert_symbol(&a, &c, Place::Finite(q)).unwrap() == -1 {
                                bad = true;
                                break;
                            }
                        }
                    }
                    assert_eq!(rejected, bad, "a={a_int} poly={poly} m={m} n={n}");
                    if !rejected {
                        // The second stage must agree with the exact
                        // everywhere-local filter.
                        if let Some(r) = screen.reject_large(chat, n) {
                            let solvable = fiber_locally_solvable(&a, &c).unwrap();
                            assert_eq!(r, !solvable, "a={a_int} poly={poly} m={m} n={n}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn no_points_on_the_classic_quartic() {
        let x = bundle(-1, "-6,0,5,0,-1");
        assert!(small_point_search(&x, 200).is_none());
    }
}
