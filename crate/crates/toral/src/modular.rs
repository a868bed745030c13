//! Modular integer machinery: p-adic valuations, multiplicative orders via
//! the lifting-the-exponent shortcut, root finding mod p, Hensel lifting of
//! simple roots, and the split-prime scan.
//!
//! Orders modulo p^k come out of a closed form instead of iteration: with
//! d the order of a mod p and t = v_p(a^d - 1), the order of a mod p^k is
//! d·p^{max(0, k-t)}.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::IntPoly;

/// Primes handled by the order/root machinery are kept below this bound so
/// trial division and exhaustive root scans stay cheap.
pub const PRIME_CAP: u64 = 1 << 20;

/// Default upper end of the split-prime scan.
pub const DEFAULT_SCAN_CAP: u64 = 1_000_000;

/// Exact p-adic valuation of a nonzero integer.
pub fn vp(m: &BigInt, p: u64) -> Result<u32> {
    if m.is_zero() {
        return Err(Error::ValuationOfZero);
    }
    let p = BigInt::from(p);
    let mut m = m.abs();
    let mut v = 0u32;
    loop {
        let (q, r) = m.div_rem(&p);
        if !r.is_zero() {
            return Ok(v);
        }
        v += 1;
        m = q;
    }
}

/// Deterministic Miller–Rabin, valid for all n < 2^64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let d = (n - 1) >> (n - 1).trailing_zeros();
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        let mut e = d;
        while e != n - 1 {
            x = mul_mod_u64(x, x, n);
            e <<= 1;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, a, m);
        }
        a = mul_mod_u64(a, a, m);
        e >>= 1;
    }
    acc
}

/// Order data of a modulo an odd prime p: the order d of a mod p together
/// with the stabilization exponent t = v_p(a^d - 1).
#[derive(Clone, Debug)]
pub struct OrderProfile {
    pub a: BigInt,
    pub p: u64,
    pub d: u64,
    pub t: u32,
}

impl OrderProfile {
    pub fn compute(a: &BigInt, p: u64) -> Result<OrderProfile> {
        check_odd_prime(p)?;
        let pb = BigInt::from(p);
        if a.mod_floor(&pb).is_zero() {
            return Err(Error::InvalidInput(format!("{a} ≡ 0 mod {p}")));
        }
        if a.abs().is_one() {
            return Err(Error::InvalidInput(
                "|a| = 1 has no finite stabilization exponent".into(),
            ));
        }
        let a_red = a.mod_floor(&pb).to_u64().unwrap();
        let d = divisors_sorted(p - 1)
            .into_iter()
            .find(|&m| pow_mod_u64(a_red, m, p) == 1)
            .expect("the order divides p-1");
        // t = v_p(a^d - 1), computed at growing precision: a^d itself may be
        // astronomically large, but a^d mod p^E pins the valuation once the
        // residue differs from 1
        let mut exp = 8u32;
        let t = loop {
            let pe = pb.clone().pow(exp);
            let r = a.modpow(&BigInt::from(d), &pe);
            if !r.is_one() {
                break vp(&(r - BigInt::one()), p)?;
            }
            exp *= 2;
        };
        Ok(OrderProfile {
            a: a.clone(),
            p,
            d,
            t,
        })
    }

    /// Multiplicative order of a mod p^k: d·p^{max(0, k-t)}.
    pub fn order_mod_pk(&self, k: u32) -> BigUint {
        let extra = k.saturating_sub(self.t);
        BigUint::from(self.d) * BigUint::from(self.p).pow(extra)
    }
}

/// Multiplicative order of a modulo p^k for an odd prime p, gcd(a, p) = 1,
/// |a| ≠ 1.
pub fn mult_order(a: &BigInt, p: u64, k: u32) -> Result<BigUint> {
    Ok(OrderProfile::compute(a, p)?.order_mod_pk(k))
}

fn check_odd_prime(p: u64) -> Result<()> {
    if p == 2 {
        return Err(Error::InvalidInput("p must be an odd prime".into()));
    }
    if p >= PRIME_CAP {
        return Err(Error::ModulusCap(format!("p = {p} exceeds {PRIME_CAP}")));
    }
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    Ok(())
}

fn divisors_sorted(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut powers = vec![1u64];
            while n.is_multiple_of(p) {
                n /= p;
                powers.push(powers.last().unwrap() * p);
            }
            divs = divs
                .iter()
                .flat_map(|d| powers.iter().map(move |q| d * q))
                .collect();
        }
        p += 1;
    }
    if n > 1 {
        divs = divs.iter().flat_map(|d| [*d, d * n]).collect();
    }
    divs.sort_unstable();
    divs
}

/// All roots of f mod p in [0, p), by exhaustive Horner evaluation.
pub fn roots_mod_p(f: &IntPoly, p: u64) -> Result<Vec<u64>> {
    if p >= PRIME_CAP {
        return Err(Error::ModulusCap(format!("p = {p} exceeds {PRIME_CAP}")));
    }
    let pb = BigInt::from(p);
    let coeffs: Vec<u64> = f
        .coeffs()
        .iter()
        .map(|c| c.mod_floor(&pb).to_u64().unwrap())
        .collect();
    let mut roots = Vec::new();
    for x in 0..p {
        let mut acc: u64 = 0;
        for c in coeffs.iter().rev() {
            acc = (((acc as u128) * (x as u128) + *c as u128) % p as u128) as u64;
        }
        if acc == 0 {
            roots.push(x);
        }
    }
    Ok(roots)
}

/// Certificate that f splits completely into distinct nonzero linear factors
/// mod p, with the nondivisibility witnesses p ∤ disc(f) and p ∤ f(0).
#[derive(Clone, Debug)]
pub struct SplitPrimeCert {
    pub p: u64,
    pub roots: Vec<u64>,
    pub disc: BigInt,
    pub f0: BigInt,
}

impl SplitPrimeCert {
    /// Re-checks every invariant against f: root count equals deg f, roots
    /// distinct and nonzero, and f ≡ ∏(x - a_i) mod p by expansion.
    pub fn verify(&self, f: &IntPoly) -> Result<()> {
        let n = f.degree();
        let pb = BigInt::from(self.p);
        if self.roots.len() != n {
            return Err(Error::ContractViolation(format!(
                "expected {n} roots, certificate has {}",
                self.roots.len()
            )));
        }
        let mut seen = self.roots.clone();
        seen.dedup();
        if seen.len() != self.roots.len() || self.roots.iter().any(|&a| a == 0 || a >= self.p) {
            return Err(Error::ContractViolation(
                "roots must be distinct and nonzero mod p".into(),
            ));
        }
        if (&self.disc % &pb).is_zero() || (&self.f0 % &pb).is_zero() {
            return Err(Error::ContractViolation("p divides disc(f)·f(0)".into()));
        }
        let mut prod = IntPoly::one();
        for &a in &self.roots {
            prod = prod.mul(&IntPoly::from_i64(&[-(a as i64), 1]));
        }
        let diff = f.sub(&prod);
        if diff.coeffs().iter().any(|c| !c.mod_floor(&pb).is_zero()) {
            return Err(Error::ContractViolation(
                "f does not expand to the product of its certified linear factors mod p".into(),
            ));
        }
        Ok(())
    }
}

/// Scan odd primes p ≥ p_min for the first `count` primes with
/// p ∤ disc(f)·f(0) and exactly deg f distinct nonzero roots mod p.
/// The caller is responsible for f being irreducible over ℚ. Exhausting the
/// scan cap means "none found below the cap", never "none exists".
pub fn find_split_primes(
    f: &IntPoly,
    count: usize,
    p_min: u64,
    scan_cap: u64,
) -> Result<Vec<SplitPrimeCert>> {
    let n = f.degree();
    if n == 0 || !f.is_monic() {
        return Err(Error::InvalidInput(
            "split-prime scan requires a monic polynomial of degree ≥ 1".into(),
        ));
    }
    let disc = if n == 1 {
        BigInt::one()
    } else {
        f.discriminant()?
    };
    let f0 = f.coeff(0);
    if disc.is_zero() {
        return Err(Error::InvalidInput(
            "polynomial has repeated roots; no split primes exist".into(),
        ));
    }
    let mut out = Vec::new();
    let mut p = p_min.max(3);
    if p.is_multiple_of(2) {
        p += 1;
    }
    while p <= scan_cap && out.len() < count {
        if is_prime(p) {
            let pb = BigInt::from(p);
            if !(&disc % &pb).is_zero() && !(&f0 % &pb).is_zero() {
                let roots = roots_mod_p(f, p)?;
                if roots.len() == n {
                    debug_assert!(roots.iter().all(|&a| a != 0));
                    let cert = SplitPrimeCert {
                        p,
                        roots,
                        disc: disc.clone(),
                        f0: f0.clone(),
                    };
                    cert.verify(f)?;
                    out.push(cert);
                }
            }
        }
        p += 2;
    }
    if out.len() < count {
        return Err(Error::ScanCapExhausted { cap: scan_cap });
    }
    Ok(out)
}

/// Hensel-lift a simple nonzero root of f mod p to a root mod p^k, one power
/// of p per step: write f(x_j) = p^l·r, solve f'(x_j)s + r ≡ 0 mod p, and
/// set x_{j+1} = x_j + p^l·s.
pub fn hensel_lift(f: &IntPoly, p: u64, root: u64, k: u32) -> Result<BigInt> {
    check_odd_prime(p)?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be ≥ 1".into()));
    }
    let pb = BigInt::from(p);
    if root == 0 || root.is_multiple_of(p) {
        return Err(Error::InvalidInput(format!("root {root} ≡ 0 mod {p}")));
    }
    let r0 = BigInt::from(root % p);
    if !f.eval_mod(&r0, &pb).is_zero() {
        return Err(Error::InvalidInput(format!(
            "{root} is not a root of f mod {p}"
        )));
    }
    let deriv = f.derivative();
    let d0 = deriv.eval_mod(&r0, &pb);
    if d0.is_zero() {
        return Err(Error::SingularDerivative {
            root: root.to_string(),
            p,
        });
    }
    let dinv = BigInt::from(inv_mod_p(d0.to_u64().unwrap(), p));

    let mut x = r0;
    let mut pj = pb.clone(); // p^j with x a root mod p^j
    for _ in 1..k {
        let pj1 = &pj * &pb;
        let val = f.eval_mod(&x, &pj1);
        if !val.is_zero() {
            let (r, rem) = val.div_rem(&pj);
            debug_assert!(rem.is_zero(), "f(x_j) must vanish mod p^j");
            let s = ((-r * &dinv).mod_floor(&pb)).to_u64().unwrap();
            x += &pj * BigInt::from(s);
        }
        pj = pj1;
        x = x.mod_floor(&pj);
    }
    debug_assert!(f.eval_mod(&x, &pj).is_zero());
    Ok(x)
}

fn inv_mod_p(a: u64, p: u64) -> u64 {
    pow_mod_u64(a, p - 2, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cat_poly() -> IntPoly {
        IntPoly::from_i64(&[1, -3, 1])
    }

    #[test]
    fn vp_examples() {
        assert_eq!(vp(&BigInt::from(3124), 11).unwrap(), 1);
        assert_eq!(vp(&BigInt::one(), 7).unwrap(), 0);
        assert_eq!(vp(&BigInt::from(1331), 11).unwrap(), 3);
        assert!(matches!(
            vp(&BigInt::zero(), 5),
            Err(Error::ValuationOfZero)
        ));
    }

    #[test]
    fn mult_order_examples() {
        assert_eq!(
            mult_order(&BigInt::from(5), 11, 1).unwrap(),
            BigUint::from(5u32)
        );
        assert_eq!(
            mult_order(&BigInt::from(5), 11, 3).unwrap(),
            BigUint::from(605u32)
        );
        // a ≡ 1 mod p has order 1 at level 1
        assert_eq!(
            mult_order(&BigInt::from(12), 11, 1).unwrap(),
            BigUint::one()
        );
        assert!(mult_order(&BigInt::from(22), 11, 1).is_err());
        assert!(mult_order(&BigInt::one(), 11, 1).is_err());
    }

    #[test]
    fn order_matches_bruteforce_small() {
        for p in [3u64, 5, 7, 11, 13] {
            for a in 2..p {
                for k in 1..=3u32 {
                    let modulus = BigInt::from(p).pow(k);
                    let mut x = BigInt::from(a).mod_floor(&modulus);
                    let mut brute = 1u64;
                    while !x.is_one() {
                        x = (x * BigInt::from(a)).mod_floor(&modulus);
                        brute += 1;
                    }
                    assert_eq!(
                        mult_order(&BigInt::from(a), p, k).unwrap(),
                        BigUint::from(brute),
                        "a={a} p={p} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn roots_mod_p_examples() {
        assert_eq!(roots_mod_p(&cat_poly(), 11).unwrap(), vec![5, 9]);
        assert_eq!(
            roots_mod_p(&IntPoly::from_i64(&[1, 0, 1]), 3).unwrap(),
            Vec::<u64>::new()
        );
        assert_eq!(roots_mod_p(&IntPoly::x(), 7).unwrap(), vec![0]);
        assert!(roots_mod_p(&IntPoly::x(), PRIME_CAP).is_err());
    }

    #[test]
    fn split_prime_scan_examples() {
        let certs = find_split_primes(&cat_poly(), 1, 3, DEFAULT_SCAN_CAP).unwrap();
        assert_eq!(certs[0].p, 11);
        assert_eq!(certs[0].roots, vec![5, 9]);

        // x² + 1 splits exactly at primes ≡ 1 mod 4
        let f = IntPoly::from_i64(&[1, 0, 1]);
        let certs = find_split_primes(&f, 2, 3, DEFAULT_SCAN_CAP).unwrap();
        assert_eq!(certs[0].p, 5);
        assert_eq!(certs[1].p, 13);

        // degree 1: first odd prime not dividing disc·f(0)
        let f = IntPoly::from_i64(&[-2, 1]);
        let certs = find_split_primes(&f, 1, 3, DEFAULT_SCAN_CAP).unwrap();
        assert_eq!(certs[0].p, 3);
        assert_eq!(certs[0].roots, vec![2]);
    }

    #[test]
    fn scan_cap_failure_is_explicit() {
        let f = IntPoly::from_i64(&[1, 0, 1]);
        assert!(matches!(
            find_split_primes(&f, 1, 3, 4),
            Err(Error::ScanCapExhausted { cap: 4 })
        ));
    }

    #[test]
    fn hensel_lift_examples() {
        let f = cat_poly();
        assert_eq!(hensel_lift(&f, 11, 5, 2).unwrap(), BigInt::from(38));
        assert_eq!(hensel_lift(&f, 11, 5, 1).unwrap(), BigInt::from(5));
        // the level-2 lifts of the two roots pair to sum ≡ 3 mod 121
        let b = hensel_lift(&f, 11, 9, 2).unwrap();
        assert!(f.eval_mod(&b, &BigInt::from(121)).is_zero());
        assert_eq!(
            (b + BigInt::from(38)).mod_floor(&BigInt::from(121)),
            BigInt::from(3)
        );
    }

    #[test]
    fn hensel_rejects_non_simple_roots() {
        let f = IntPoly::from_i64(&[1, -2, 1]); // (x-1)²
        assert!(matches!(
            hensel_lift(&f, 11, 1, 2),
            Err(Error::SingularDerivative { .. })
        ));
        assert!(hensel_lift(&cat_poly(), 11, 4, 2).is_err()); // not a root
    }

    #[test]
    fn hensel_tower_consistency() {
        let f = cat_poly();
        for k in 2..=10u32 {
            let hi = hensel_lift(&f, 11, 5, k).unwrap();
            let lo = hensel_lift(&f, 11, 5, k - 1).unwrap();
            let pk1 = BigInt::from(11).pow(k - 1);
            assert_eq!(hi.mod_floor(&pk1), lo);
            assert!(f.eval_mod(&hi, &BigInt::from(11).pow(k)).is_zero());
        }
    }

    proptest! {
        // v_p(x^k - y^k) = v_p(x - y) + v_p(k) when p | x-y, p ∤ x, y
        #[test]
        fn lifting_the_exponent_identity(seed_x in 1i64..400, mult in 1i64..40, k in 1u32..200) {
            let p = 7i64;
            let x = seed_x;
            prop_assume!(x % p != 0);
            let y = x + p * mult;
            prop_assume!(y % p != 0);
            let xb = BigInt::from(x);
            let yb = BigInt::from(y);
            let lhs = vp(&(xb.pow(k) - yb.pow(k)), p as u64).unwrap();
            let rhs = vp(&(xb - yb), p as u64).unwrap() + vp(&BigInt::from(k), p as u64).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
