//! Factorization of monic squarefree polynomials over Q: Berlekamp at a
//! small good prime, linear Hensel lifting to a Landau-Mignotte modulus,
//! then subset recombination. Degree is capped at 8 upstream, so the
//! recombination stage is a handful of subsets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::primes::{inv_mod, mul_mod, SMALL_PRIMES};
use crate::{Poly, Rat};

type FpPoly = Vec<u64>;

fn trim(mut v: FpPoly) -> FpPoly {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn deg(v: &FpPoly) -> usize {
    debug_assert!(!v.is_empty());
    v.len() - 1
}

#[cfg(test)]
fn fp_add(a: &FpPoly, b: &FpPoly, p: u64) -> FpPoly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p
            })
            .collect(),
    )
}

fn fp_sub(a: &FpPoly, b: &FpPoly, p: u64) -> FpPoly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                (a.get(i).copied().unwrap_or(0) + p - b.get(i).copied().unwrap_or(0) % p) % p
            })
            .collect(),
    )
}

fn fp_mul(a: &FpPoly, b: &FpPoly, p: u64) -> FpPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    trim(out)
}

fn fp_scale(a: &FpPoly, s: u64, p: u64) -> FpPoly {
    trim(a.iter().map(|&x| mul_mod(x, s, p)).collect())
}

/// Division with remainder; the divisor must be nonzero.
fn fp_divmod(a: &FpPoly, d: &FpPoly, p: u64) -> (FpPoly, FpPoly) {
    assert!(!d.is_empty());
    let dd = deg(d);
    let inv_lead = inv_mod(*d.last().unwrap(), p);
    let mut rem = a.clone();
    if rem.len() <= dd {
        return (Vec::new(), trim(rem));
    }
    let mut quot = vec![0u64; rem.len() - dd];
    while rem.len() > dd {
        let q = mul_mod(*rem.last().unwrap(), inv_lead, p);
        let shift = rem.len() - 1 - dd;
        if q != 0 {
            for (i, &c) in d.iter().enumerate() {
                let sub = mul_mod(c, q, p);
                rem[shift + i] = (rem[shift + i] + p - sub) % p;
            }
        }
        rem.pop();
        while rem.last() == Some(&0) {
            rem.pop();
        }
        quot[shift] = q;
    }
    (trim(quot), rem)
}

fn fp_rem(a: &FpPoly, d: &FpPoly, p: u64) -> FpPoly {
    fp_divmod(a, d, p).1
}

fn fp_monic(a: &FpPoly, p: u64) -> FpPoly {
    match a.last() {
        None => Vec::new(),
        Some(&l) => fp_scale(a, inv_mod(l, p), p),
    }
}

fn fp_gcd(a: &FpPoly, b: &FpPoly, p: u64) -> FpPoly {
    let mut x = a.clone();
    let mut y = b.clone();
    while !y.is_empty() {
        let r = fp_rem(&x, &y, p);
        x = y;
        y = r;
    }
    fp_monic(&x, p)
}

/// Bezout coefficients (s, t) with s*a + t*b = 1 for coprime a, b.
fn fp_bezout(a: &FpPoly, b: &FpPoly, p: u64) -> (FpPoly, FpPoly) {
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (vec![1u64], Vec::new());
    let (mut t0, mut t1) = (Vec::new(), vec![1u64]);
    while !r1.is_empty() {
        let (q, r) = fp_divmod(&r0, &r1, p);
        let ns = fp_sub(&s0, &fp_mul(&q, &s1, p), p);
        let nt = fp_sub(&t0, &fp_mul(&q, &t1, p), p);
        (r0, r1) = (r1, r);
        (s0, s1) = (s1, ns);
        (t0, t1) = (t1, nt);
    }
    assert_eq!(r0.len(), 1, "bezout of non-coprime polynomials");
    let inv = inv_mod(r0[0], p);
    (fp_scale(&s0, inv, p), fp_scale(&t0, inv, p))
}

/// x^e mod f.
fn fp_pow_x(e: u64, f: &FpPoly, p: u64) -> FpPoly {
    let mut base = fp_rem(&vec![0, 1], f, p);
    let mut acc = vec![1u64];
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = fp_rem(&fp_mul(&acc, &base, p), f, p);
        }
        base = fp_rem(&fp_mul(&base, &base, p), f, p);
        e >>= 1;
    }
    acc
}

/// Deterministic Berlekamp factorization of a monic squarefree f mod p.
fn berlekamp(f: &FpPoly, p: u64) -> Vec<FpPoly> {
    let n = deg(f);
    if n == 1 {
        return vec![f.clone()];
    }
    // Columns of Q are x^{ip} mod f.
    let xp = fp_pow_x(p, f, p);
    let mut cols: Vec<FpPoly> = Vec::with_capacity(n);
    let mut cur = vec![1u64];
    for _ in 0..n {
        cols.push(cur.clone());
        cur = fp_rem(&fp_mul(&cur, &xp, p), f, p);
    }
    // Row-reduce (Q - I) over F_p and read off a nullspace basis.
    let mut mat = vec![vec![0u64; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &c) in col.iter().enumerate() {
            mat[i][j] = c;
        }
        mat[j][j] = (mat[j][j] + p - 1) % p;
    }
    let mut pivot_col_of_row = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pr) = (row..n).find(|&r| mat[r][col] != 0) else {
            continue;
        };
        mat.swap(row, pr);
        let inv = inv_mod(mat[row][col], p);
        for c in 0..n {
            mat[row][c] = mul_mod(mat[row][c], inv, p);
        }
        for r in 0..n {
            if r != row && mat[r][col] != 0 {
                let factor = mat[r][col];
                for c in 0..n {
                    let sub = mul_mod(factor, mat[row][c], p);
                    mat[r][c] = (mat[r][c] + p - sub) % p;
                }
            }
        }
        pivot_col_of_row.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    let pivots: std::collections::BTreeSet<usize> = pivot_col_of_row.iter().copied().collect();
    let mut basis: Vec<FpPoly> = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u64; n];
        v[free] = 1;
        for (r, &pc) in pivot_col_of_row.iter().enumerate() {
            v[pc] = (p - mat[r][free] % p) % p;
        }
        basis.push(trim(v));
    }
    let k = basis.len();
    let mut factors = vec![f.clone()];
    if k == 1 {
        return factors;
    }
    'outer: for v in &basis {
        if deg(v) == 0 {
            continue;
        }
        for s in 0..p {
            let mut next = Vec::with_capacity(factors.len());
            for h in &factors {
                if deg(h) == 1 {
                    next.push(h.clone());
                    continue;
                }
                let mut vs = v.clone();
                vs[0] = (vs[0] + p - s % p) % p;
                let g = fp_gcd(&fp_rem(&trim(vs), h, p), h, p);
                if g.len() > 1 && deg(&g) < deg(h) {
                    let (q, r) = fp_divmod(h, &g, p);
                    debug_assert!(r.is_empty());
                    next.push(g);
                    next.push(q);
                } else {
                    next.push(h.clone());
                }
            }
            factors = next;
            if factors.len() == k {
                break 'outer;
            }
        }
    }
    assert_eq!(factors.len(), k, "berlekamp split incomplete");
    factors
}

type ZPoly = Vec<BigInt>;

fn z_mul_mod(a: &ZPoly, b: &ZPoly, m: &BigInt) -> ZPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = (&out[i + j] + x * y).mod_floor(m);
        }
    }
    while out.last().is_some_and(Zero::is_zero) {
        out.pop();
    }
    out
}

fn z_reduce(a: &[BigInt], p: u64) -> FpPoly {
    let bp = BigInt::from(p);
    trim(
        a.iter()
            .map(|c| c.mod_floor(&bp).to_u64().unwrap())
            .collect(),
    )
}

fn fp_to_z(a: &FpPoly) -> ZPoly {
    a.iter().map(|&c| BigInt::from(c)).collect()
}

/// One Hensel pair lift: from f = g*h (mod p) to modulus at least `target`.
/// f, g, h monic, f known modulo a power of p at least `target`.
fn hensel_pair(f: &ZPoly, g0: &FpPoly, h0: &FpPoly, p: u64, target: &BigInt) -> (ZPoly, ZPoly) {
    let (s, _t) = fp_bezout(g0, h0, p);
    let bp = BigInt::from(p);
    let mut m = bp.clone();
    let mut g = fp_to_z(g0);
    let mut h = fp_to_z(h0);
    while &m < target {
        // e = (f - g*h) / m, reduced mod p.
        let gh = poly_mul_int(&g, &h);
        let diff: ZPoly = (0..f.len().max(gh.len()))
            .map(|i| {
                let a = f.get(i).cloned().unwrap_or_else(BigInt::zero);
                let b = gh.get(i).cloned().unwrap_or_else(BigInt::zero);
                let d = a - b;
                debug_assert!((&d % &m).is_zero());
                d / &m
            })
            .collect();
        let e = z_reduce(&diff, p);
        let dh = fp_rem(&fp_mul(&s, &e, p), h0, p);
        let (dg, r) = fp_divmod(&fp_sub(&e, &fp_mul(&dh, g0, p), p), h0, p);
        debug_assert!(r.is_empty(), "hensel correction not divisible");
        for (i, c) in dg.iter().enumerate() {
            if g.len() <= i {
                g.resize(i + 1, BigInt::zero());
            }
            g[i] += &m * BigInt::from(*c);
        }
        for (i, c) in dh.iter().enumerate() {
            if h.len() <= i {
                h.resize(i + 1, BigInt::zero());
            }
            h[i] += &m * BigInt::from(*c);
        }
        m *= &bp;
    }
    (g, h)
}

fn poly_mul_int(a: &ZPoly, b: &ZPoly) -> ZPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Lifts the full mod-p factor list of a monic f to modulus `target`.
fn lift_tree(f: &ZPoly, local: &[FpPoly], p: u64, target: &BigInt) -> Vec<ZPoly> {
    if local.len() == 1 {
        let mut out: ZPoly = f.iter().map(|c| c.mod_floor(target)).collect();
        while out.last().is_some_and(Zero::is_zero) {
            out.pop();
        }
        return vec![out];
    }
    let mid = local.len() / 2;
    let mut g0 = vec![1u64];
    for q in &local[..mid] {
        g0 = fp_mul(&g0, q, p);
    }
    let mut h0 = vec![1u64];
    for q in &local[mid..] {
        h0 = fp_mul(&h0, q, p);
    }
    let (g, h) = hensel_pair(f, &g0, &h0, p, target);
    let mut out = lift_tree(&g, &local[..mid], p, target);
    out.extend(lift_tree(&h, &local[mid..], p, target));
    out
}

/// Exact division of integer polynomials with monic divisor; None if the
/// division does not come out exactly over Z.
fn exact_div_int(f: &ZPoly, d: &ZPoly) -> Option<ZPoly> {
    debug_assert!(d.last().map(|c| c.is_one()) == Some(true));
    if f.len() < d.len() {
        return None;
    }
    let dd = d.len() - 1;
    let mut rem = f.to_vec();
    let mut quot = vec![BigInt::zero(); f.len() - dd];
    while rem.len() > dd {
        let q = rem.last().unwrap().clone();
        let shift = rem.len() - 1 - dd;
        for (i, c) in d.iter().enumerate() {
            let upd = &rem[shift + i] - c * &q;
            rem[shift + i] = upd;
        }
        while rem.last().is_some_and(Zero::is_zero) {
            rem.pop();
        }
        quot[shift] = q;
    }
    if rem.is_empty() {
        Some(quot)
    } else {
        None
    }
}

fn symmetric(c: &BigInt, m: &BigInt) -> BigInt {
    let r = c.mod_floor(m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}

/// Factors a monic squarefree rational polynomial into monic irreducible
/// factors over Q (unordered).
pub fn factor_monic_rational(f: &Poly) -> Vec<Poly> {
    let n = f.degree().expect("nonzero");
    debug_assert!(f.leading().unwrap().is_one());
    if n == 1 {
        return vec![f.clone()];
    }
    // Clear denominators by x -> x/D, which keeps the polynomial monic.
    let mut d = BigInt::one();
    for c in f.coeffs() {
        d = d.lcm(c.denom());
    }
    let drat = Rat::from(d.clone());
    let scaled = f
        .compose_scale(&(Rat::one() / &drat))
        .scale(&pow_rat_int(&drat, n as u32));
    let g: ZPoly = scaled
        .coeffs()
        .iter()
        .map(|c| {
            debug_assert!(c.denom().is_one());
            c.numer().clone()
        })
        .collect();

    // Smallest prime keeping g squarefree mod p.
    let p = *SMALL_PRIMES
        .iter()
        .find(|&&p| {
            let gp = z_reduce(&g, p);
            if gp.len() != n + 1 {
                return false;
            }
            let dgp = fp_derivative(&gp, p);
            if dgp.is_empty() {
                return false;
            }
            fp_gcd(&gp, &dgp, p).len() == 1
        })
        .expect("a good prime below 10^4 exists for squarefree desk-scale input");

    let mut local = berlekamp(&z_reduce(&g, p), p);
    local.sort();
    if local.len() == 1 {
        return vec![f.clone()];
    }

    // Landau-Mignotte style bound: coefficients of any monic factor of g
    // are below 2^n * (1 + |g|_2).
    let norm_sq: BigInt = g.iter().map(|c| c * c).sum();
    let bound = (BigInt::one() << n) * (norm_sq.sqrt() + 2);
    let mut target = BigInt::from(p);
    while target <= &bound * 2 {
        target *= p;
    }

    let mut lifted = lift_tree(&g, &local, p, &target);
    let mut current = g;
    let mut found: Vec<ZPoly> = Vec::new();
    'restart: loop {
        let r = lifted.len();
        if r <= 1 {
            break;
        }
        for size in 1..=r / 2 {
            for mask in subsets(r, size) {
                let mut cand: ZPoly = vec![BigInt::one()];
                for (i, piece) in lifted.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        cand = z_mul_mod(&cand, piece, &target);
                    }
                }
                let cand: ZPoly = cand.iter().map(|c| symmetric(c, &target)).collect();
                if !cand.last().map(|c| c.is_one()).unwrap_or(false) {
                    continue;
                }
                if let Some(q) = exact_div_int(&current, &cand) {
                    found.push(cand);
                    current = q;
                    lifted = lifted
                        .into_iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) == 0)
                        .map(|(_, v)| v)
                        .collect();
                    continue 'restart;
                }
            }
        }
        break;
    }
    if current.len() > 1 {
        found.push(current);
    }

    // Undo the scaling: h(x) -> h(Dx) normalized monic.
    found
        .iter()
        .map(|h| Poly::from_bigint_coeffs(h).compose_scale(&drat).monic())
        .collect()
}

fn fp_derivative(a: &FpPoly, p: u64) -> FpPoly {
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| mul_mod(c, i as u64 % p, p))
            .collect(),
    )
}

fn pow_rat_int(base: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= base;
    }
    acc
}

fn subsets(n: usize, size: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize == size {
            out.push(mask);
        }
    }
    out
}
