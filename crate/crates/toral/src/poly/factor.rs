//! Factorization over ℚ: factor modulo a good small prime, Hensel-lift the
//! modular factors, then recombine subsets under a Mignotte coefficient
//! bound. Degrees are capped at [`FACTOR_DEGREE_CAP`], which keeps subset
//! recombination and coefficient growth trivial.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{IntPoly, FACTOR_DEGREE_CAP};
use crate::error::{Error, Result};

/// Factor a nonzero integer polynomial into irreducible primitive factors
/// over ℚ with positive leading coefficients, paired with multiplicities.
/// The product of `factor^multiplicity` equals the input up to content.
pub fn factor_rational(f: &IntPoly) -> Result<Vec<(IntPoly, u32)>> {
    if f.is_zero() {
        return Err(Error::InvalidInput(
            "cannot factor the zero polynomial".into(),
        ));
    }
    if f.degree() > FACTOR_DEGREE_CAP {
        return Err(Error::DegreeCap {
            got: f.degree(),
            cap: FACTOR_DEGREE_CAP,
        });
    }
    let pp = f.primitive_part();
    if pp.degree() == 0 {
        return Ok(vec![]);
    }
    let sqf = pp
        .div_exact(&pp.gcd(&pp.derivative()))
        .expect("gcd(f, f') divides f")
        .primitive_part();

    let irreducibles = if sqf.is_monic() {
        factor_squarefree_monic(&sqf)
    } else {
        // substitute x -> x/l and rescale to a monic polynomial, factor,
        // then undo the substitution factor by factor:
        // ŝ(x) = l^{n-1}·s(x/l) has coefficient a_i·l^{n-1-i} (and lc 1)
        let l = sqf.leading().unwrap().clone();
        let n = sqf.degree();
        let hat = IntPoly::new(
            (0..=n)
                .map(|i| {
                    if i == n {
                        BigInt::one()
                    } else {
                        sqf.coeff(i) * l.clone().pow((n - 1 - i) as u32)
                    }
                })
                .collect(),
        );
        debug_assert!(hat.is_monic());
        factor_squarefree_monic(&hat)
            .into_iter()
            .map(|g| substitute_scaled(&g, &l).primitive_part())
            .collect()
    };

    let mut out: Vec<(IntPoly, u32)> = Vec::new();
    for g in irreducibles {
        let mut mult = 0u32;
        let mut rem = pp.clone();
        while let Some(q) = rem.div_exact(&g) {
            mult += 1;
            rem = q;
        }
        debug_assert!(mult >= 1);
        out.push((g, mult));
    }
    out.sort_by(|a, b| (a.0.degree(), a.0.coeffs()).cmp(&(b.0.degree(), b.0.coeffs())));

    let mut check = IntPoly::one();
    for (g, e) in &out {
        check = check.mul(&g.pow(*e));
    }
    debug_assert_eq!(check, pp, "multiply-back must reproduce the primitive part");
    Ok(out)
}

/// g(l·x): coefficient i picks up a factor l^i.
fn substitute_scaled(g: &IntPoly, l: &BigInt) -> IntPoly {
    let mut scale = BigInt::one();
    IntPoly::new(
        g.coeffs()
            .iter()
            .map(|c| {
                let out = c * &scale;
                scale *= l;
                out
            })
            .collect(),
    )
}

/// Zassenhaus on a monic squarefree primitive polynomial.
fn factor_squarefree_monic(f: &IntPoly) -> Vec<IntPoly> {
    let n = f.degree();
    if n <= 1 {
        return vec![f.clone()];
    }
    let p = choose_working_prime(f);
    let f_mod = ModPoly::from_int_poly(f, p);
    let mut modular = factor_mod_p(&f_mod);
    if modular.len() == 1 {
        return vec![f.clone()];
    }
    modular.sort_by(|a, b| (a.degree(), &a.c).cmp(&(b.degree(), &b.c)));

    // p^e must exceed twice the Mignotte bound so centered representatives
    // of true factors are recovered exactly
    let height = f
        .coeffs()
        .iter()
        .map(|c| c.abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    let mignotte = (BigInt::one() << (n as u32)) * BigInt::from(n as u64 + 1) * height;
    let target = BigInt::from(2) * mignotte + 1;
    let mut e = 1u32;
    let mut pe = BigInt::from(p);
    while pe < target {
        pe *= BigInt::from(p);
        e += 1;
    }

    let f_reduced = IntPoly::new(f.coeffs().iter().map(|c| c.mod_floor(&pe)).collect());
    let lifted = hensel_lift_factors(&f_reduced, &modular, p, e);
    recombine(f.clone(), lifted, &pe)
}

/// Smallest odd prime keeping f squarefree mod p.
fn choose_working_prime(f: &IntPoly) -> u64 {
    let fp = f.derivative();
    let mut p = 3u64;
    loop {
        if is_small_prime(p) {
            let a = ModPoly::from_int_poly(f, p);
            let b = ModPoly::from_int_poly(&fp, p);
            if a.degree() == f.degree() && !b.is_zero() && a.gcd(&b).degree() == 0 {
                return p;
            }
        }
        p += 2;
        assert!(
            p < 1 << 20,
            "no working prime found (cannot happen: disc ≠ 0)"
        );
    }
}

fn is_small_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Subset recombination: try products of the lifted modular factors by
/// increasing subset size; every true factor of the monic input appears as
/// the centered representative of exactly one such product.
fn recombine(mut remaining: IntPoly, mut lifted: Vec<IntPoly>, pe: &BigInt) -> Vec<IntPoly> {
    let mut out = Vec::new();
    let mut size = 1usize;
    'outer: while 2 * size <= lifted.len() {
        for combo in combinations(lifted.len(), size) {
            let mut prod = IntPoly::one();
            for &i in &combo {
                prod = mul_mod_int(&prod, &lifted[i], pe);
            }
            let candidate = centered(&prod, pe);
            if let Some(q) = remaining.div_exact(&candidate) {
                out.push(candidate);
                remaining = q;
                for &i in combo.iter().rev() {
                    lifted.remove(i);
                }
                continue 'outer;
            }
        }
        size += 1;
    }
    if remaining.degree() >= 1 {
        out.push(remaining);
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn centered(a: &IntPoly, m: &BigInt) -> IntPoly {
    let half = m / 2;
    IntPoly::new(
        a.coeffs()
            .iter()
            .map(|c| {
                let r = c.mod_floor(m);
                if r > half {
                    r - m
                } else {
                    r
                }
            })
            .collect(),
    )
}

fn mul_mod_int(a: &IntPoly, b: &IntPoly, m: &BigInt) -> IntPoly {
    IntPoly::new(a.mul(b).coeffs().iter().map(|c| c.mod_floor(m)).collect())
}

fn sub_mod_int(a: &IntPoly, b: &IntPoly, m: &BigInt) -> IntPoly {
    IntPoly::new(a.sub(b).coeffs().iter().map(|c| c.mod_floor(m)).collect())
}

/// Lift a coprime factorization of `f` modulo p to modulo p^e, factor list
/// in, factor list out (split-in-half recursion over pair lifts).
fn hensel_lift_factors(f: &IntPoly, factors: &[ModPoly], p: u64, e: u32) -> Vec<IntPoly> {
    if factors.len() == 1 {
        return vec![f.clone()];
    }
    let mid = factors.len() / 2;
    let (left, right) = factors.split_at(mid);
    let g0 = left
        .iter()
        .fold(ModPoly::one(factors[0].p), |a, b| a.mul(b));
    let h0 = right
        .iter()
        .fold(ModPoly::one(factors[0].p), |a, b| a.mul(b));
    let (g, h) = hensel_lift_pair(f, &g0, &h0, p, e);
    let mut out = hensel_lift_factors(&g, left, p, e);
    out.extend(hensel_lift_factors(&h, right, p, e));
    out
}

/// Linear Hensel lift of a coprime monic pair: from f ≡ g·h (mod p) to
/// (mod p^e), one power of p per step.
fn hensel_lift_pair(f: &IntPoly, g0: &ModPoly, h0: &ModPoly, p: u64, e: u32) -> (IntPoly, IntPoly) {
    let (s, t) = g0.bezout(h0);
    let mut g = g0.to_int_poly();
    let mut h = h0.to_int_poly();
    let mut pi = BigInt::from(p);
    for _ in 1..e {
        let pnext = &pi * BigInt::from(p);
        let err = sub_mod_int(&f.sub(&g.mul(&h)), &IntPoly::zero(), &pnext);
        // err ≡ 0 mod p^i by the invariant; peel one power of p
        let d_int = IntPoly::new(
            err.coeffs()
                .iter()
                .map(|c| {
                    let (q, r) = c.div_rem(&pi);
                    debug_assert!(r.is_zero());
                    q
                })
                .collect(),
        );
        let d = ModPoly::from_int_poly(&d_int, p);
        let a = t.mul(&d).rem(g0);
        let num = d.sub(&a.mul(h0));
        let b = num.div_exact(g0);
        g = g.add(&a.to_int_poly().mul_scalar(&pi));
        h = h.add(&b.to_int_poly().mul_scalar(&pi));
        pi = pnext;
    }
    let _ = s;
    debug_assert_eq!(
        sub_mod_int(&f.sub(&g.mul(&h)), &IntPoly::zero(), &pi),
        IntPoly::zero()
    );
    (g, h)
}

/// Distinct-degree then deterministic equal-degree factorization of a monic
/// squarefree polynomial over GF(p), p odd.
fn factor_mod_p(f: &ModPoly) -> Vec<ModPoly> {
    let mut out = Vec::new();
    let mut remaining = f.make_monic();
    let p = f.p;
    let mut d = 1usize;
    while remaining.degree() > 0 {
        if 2 * d > remaining.degree() {
            out.push(remaining.clone());
            break;
        }
        // x^(p^d) mod remaining, built by d successive p-th powers
        let mut w = ModPoly::x(p);
        for _ in 0..d {
            w = w.powmod(&BigUint::from(p), &remaining);
        }
        let split = w.sub(&ModPoly::x(p)).gcd(&remaining);
        if split.degree() > 0 {
            equal_degree(&split, d, &mut out);
            remaining = remaining.div_exact(&split);
        }
        d += 1;
    }
    out
}

/// Split a product of distinct degree-d irreducibles over GF(p), p odd,
/// using a deterministic stream of test polynomials.
fn equal_degree(h: &ModPoly, d: usize, out: &mut Vec<ModPoly>) {
    if h.degree() == d {
        out.push(h.clone());
        return;
    }
    let p = h.p;
    let exp = (BigUint::from(p).pow(d as u32) - BigUint::one()) / BigUint::from(2u32);
    for u in CandidateStream::new(p) {
        let common = u.gcd(h);
        if common.degree() > 0 && common.degree() < h.degree() {
            equal_degree(&common, d, out);
            equal_degree(&h.div_exact(&common), d, out);
            return;
        }
        let w = u.powmod(&exp, h).sub(&ModPoly::one(p));
        let g = w.gcd(h);
        if g.degree() > 0 && g.degree() < h.degree() {
            equal_degree(&g, d, out);
            equal_degree(&h.div_exact(&g), d, out);
            return;
        }
    }
    unreachable!("candidate stream is unbounded");
}

/// Deterministic enumeration of monic polynomials over GF(p): degree 1
/// upward, coefficients counted in base p.
struct CandidateStream {
    p: u64,
    degree: usize,
    counter: BigUint,
    limit: BigUint,
}

impl CandidateStream {
    fn new(p: u64) -> Self {
        CandidateStream {
            p,
            degree: 1,
            counter: BigUint::zero(),
            limit: BigUint::from(p),
        }
    }
}

impl Iterator for CandidateStream {
    type Item = ModPoly;

    fn next(&mut self) -> Option<ModPoly> {
        if self.counter >= self.limit {
            self.degree += 1;
            self.counter = BigUint::zero();
            self.limit = BigUint::from(self.p).pow(self.degree as u32);
        }
        let mut c = vec![0u64; self.degree + 1];
        let mut k = self.counter.clone();
        let pb = BigUint::from(self.p);
        for slot in c.iter_mut().take(self.degree) {
            *slot = (&k % &pb).to_u64().unwrap();
            k /= &pb;
        }
        c[self.degree] = 1;
        self.counter += BigUint::one();
        Some(ModPoly::new(c, self.p))
    }
}

/// Dense polynomial over GF(p) with u64 coefficients (p < 2^31).
#[derive(Clone, Debug, PartialEq, Eq)]
struct ModPoly {
    c: Vec<u64>,
    p: u64,
}

impl ModPoly {
    fn new(coeffs: Vec<u64>, p: u64) -> Self {
        let mut c: Vec<u64> = coeffs.into_iter().map(|x| x % p).collect();
        while c.last() == Some(&0) {
            c.pop();
        }
        ModPoly { c, p }
    }

    fn from_int_poly(f: &IntPoly, p: u64) -> Self {
        let pb = BigInt::from(p);
        ModPoly::new(
            f.coeffs()
                .iter()
                .map(|c| c.mod_floor(&pb).to_u64().unwrap())
                .collect(),
            p,
        )
    }

    fn to_int_poly(&self) -> IntPoly {
        IntPoly::new(self.c.iter().map(|&c| BigInt::from(c)).collect())
    }

    fn zero(p: u64) -> Self {
        ModPoly { c: vec![], p }
    }

    fn one(p: u64) -> Self {
        ModPoly::new(vec![1], p)
    }

    fn x(p: u64) -> Self {
        ModPoly::new(vec![0, 1], p)
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    fn lc(&self) -> u64 {
        *self.c.last().unwrap_or(&0)
    }

    fn mul(&self, other: &ModPoly) -> ModPoly {
        if self.is_zero() || other.is_zero() {
            return ModPoly::zero(self.p);
        }
        let mut out = vec![0u64; self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            for (j, &b) in other.c.iter().enumerate() {
                out[i + j] = ((out[i + j] as u128 + a as u128 * b as u128) % self.p as u128) as u64;
            }
        }
        ModPoly::new(out, self.p)
    }

    fn sub(&self, other: &ModPoly) -> ModPoly {
        let n = self.c.len().max(other.c.len());
        ModPoly::new(
            (0..n)
                .map(|i| {
                    let a = self.c.get(i).copied().unwrap_or(0);
                    let b = other.c.get(i).copied().unwrap_or(0);
                    (a + self.p - b) % self.p
                })
                .collect(),
            self.p,
        )
    }

    fn scale(&self, s: u64) -> ModPoly {
        ModPoly::new(
            self.c
                .iter()
                .map(|&a| ((a as u128 * s as u128) % self.p as u128) as u64)
                .collect(),
            self.p,
        )
    }

    fn make_monic(&self) -> ModPoly {
        if self.is_zero() || self.lc() == 1 {
            return self.clone();
        }
        self.scale(mod_inverse(self.lc(), self.p))
    }

    /// Remainder of self by d (d nonzero).
    fn rem(&self, d: &ModPoly) -> ModPoly {
        let mut r = self.clone();
        let dinv = mod_inverse(d.lc(), self.p);
        while !r.is_zero() && r.degree() >= d.degree() {
            let shift = r.degree() - d.degree();
            let q = ((r.lc() as u128 * dinv as u128) % self.p as u128) as u64;
            let mut sub = vec![0u64; shift];
            sub.extend(
                d.c.iter()
                    .map(|&c| ((c as u128 * q as u128) % self.p as u128) as u64),
            );
            r = r.sub(&ModPoly::new(sub, self.p));
        }
        r
    }

    fn div_exact(&self, d: &ModPoly) -> ModPoly {
        let mut r = self.clone();
        let dinv = mod_inverse(d.lc(), self.p);
        let mut q = vec![0u64; self.c.len().saturating_sub(d.c.len()) + 1];
        while !r.is_zero() && r.degree() >= d.degree() {
            let shift = r.degree() - d.degree();
            let qc = ((r.lc() as u128 * dinv as u128) % self.p as u128) as u64;
            q[shift] = qc;
            let mut sub = vec![0u64; shift];
            sub.extend(
                d.c.iter()
                    .map(|&c| ((c as u128 * qc as u128) % self.p as u128) as u64),
            );
            r = r.sub(&ModPoly::new(sub, self.p));
        }
        debug_assert!(r.is_zero(), "division must be exact");
        ModPoly::new(q, self.p)
    }

    fn gcd(&self, other: &ModPoly) -> ModPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.make_monic()
    }

    /// Bezout pair (s, t) with s·self + t·other ≡ 1 (self, other coprime).
    fn bezout(&self, other: &ModPoly) -> (ModPoly, ModPoly) {
        let p = self.p;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (ModPoly::one(p), ModPoly::zero(p));
        let (mut t0, mut t1) = (ModPoly::zero(p), ModPoly::one(p));
        while !r1.is_zero() {
            // quotient of r0 by r1
            let mut q = ModPoly::zero(p);
            let mut r = r0.clone();
            let inv = mod_inverse(r1.lc(), p);
            while !r.is_zero() && r.degree() >= r1.degree() {
                let shift = r.degree() - r1.degree();
                let qc = ((r.lc() as u128 * inv as u128) % p as u128) as u64;
                let mut term = vec![0u64; shift + 1];
                term[shift] = qc;
                let term = ModPoly::new(term, p);
                q = q.sub(&term.scale(p - 1));
                r = r.sub(&term.mul(&r1));
            }
            (r0, r1) = (r1, r);
            (s0, s1) = (s1.clone(), s0.sub(&q.mul(&s1)));
            (t0, t1) = (t1.clone(), t0.sub(&q.mul(&t1)));
        }
        assert_eq!(r0.degree(), 0, "inputs must be coprime");
        let inv = mod_inverse(r0.lc(), p);
        (s0.scale(inv), t0.scale(inv))
    }

    fn powmod(&self, e: &BigUint, m: &ModPoly) -> ModPoly {
        let mut acc = ModPoly::one(self.p);
        let base = self.rem(m);
        for i in (0..e.bits()).rev() {
            acc = acc.mul(&acc).rem(m);
            if e.bit(i) {
                acc = acc.mul(&base).rem(m);
            }
        }
        acc
    }
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // extended Euclid on i128
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "not invertible");
    t.rem_euclid(p as i128) as u64
}
