//! Exact arithmetic on integer polynomials.
//!
//! Coefficients are arbitrary-precision integers stored constant-term first.
//! Monic polynomials of degree n are frequently handled through their
//! *recurrence coefficients* `c_0, ..., c_{n-1}`, defined by
//! `f(x) = x^n - c_{n-1} x^{n-1} - ... - c_1 x - c_0`; this is the sign
//! convention shared by the companion matrix and the induced linear
//! recurrence, and every module converts at its boundary.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

mod factor;

pub use factor::factor_rational;

/// Degree cap for rational factorization.
pub const FACTOR_DEGREE_CAP: usize = 8;

/// Dense integer polynomial, constant term first, no trailing zeros.
/// The zero polynomial is the empty coefficient vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        IntPoly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    pub fn one() -> Self {
        IntPoly::constant(BigInt::one())
    }

    pub fn x() -> Self {
        IntPoly::from_i64(&[0, 1])
    }

    pub fn constant(c: BigInt) -> Self {
        IntPoly::new(vec![c])
    }

    pub fn monomial(coeff: BigInt, deg: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); deg + 1];
        coeffs[deg] = coeff;
        IntPoly::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficient of x^i (zero beyond the stored length).
    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Leading coefficient; `None` for the zero polynomial.
    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| c.is_one())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation with every step reduced into `[0, m)`.
    pub fn eval_mod(&self, x: &BigInt, m: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = (acc * x + c).mod_floor(m);
        }
        acc
    }

    pub fn derivative(&self) -> IntPoly {
        if self.coeffs.len() <= 1 {
            return IntPoly::zero();
        }
        IntPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    /// gcd of all coefficients (non-negative); 0 for the zero polynomial.
    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    /// Content removed and leading coefficient made positive.
    pub fn primitive_part(&self) -> IntPoly {
        if self.is_zero() {
            return IntPoly::zero();
        }
        let mut c = self.content();
        if self.leading().unwrap().is_negative() {
            c = -c;
        }
        IntPoly::new(self.coeffs.iter().map(|a| a / &c).collect())
    }

    pub fn neg(&self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    pub fn mul_scalar(&self, s: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, mut e: u32) -> IntPoly {
        let mut base = self.clone();
        let mut acc = IntPoly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Pseudo-division: returns `(q, r, m)` with `m·self = q·d + r` and
    /// `deg r < deg d`. The multiplier `m` is a power of `lc(d)` (1 when `d`
    /// is monic, so the result is then the ordinary division).
    pub fn pseudo_divmod(&self, d: &IntPoly) -> Result<(IntPoly, IntPoly, BigInt)> {
        if d.is_zero() {
            return Err(Error::ZeroPolynomialDivision);
        }
        let lc_d = d.leading().unwrap().clone();
        let deg_d = d.degree();
        let mut q = IntPoly::zero();
        let mut r = self.clone();
        let mut mult = BigInt::one();
        while !r.is_zero() && r.degree() >= deg_d {
            let shift = r.degree() - deg_d;
            let lead = r.leading().unwrap().clone();
            // scale up, then cancel the leading term
            q = q.mul_scalar(&lc_d);
            r = r.mul_scalar(&lc_d);
            mult *= &lc_d;
            let term = IntPoly::monomial(lead, shift);
            q = q.add(&term);
            r = r.sub(&term.mul(d));
        }
        Ok((q, r, mult))
    }

    /// Division with remainder by a monic divisor (exact over ℤ).
    pub fn div_rem_monic(&self, d: &IntPoly) -> Result<(IntPoly, IntPoly)> {
        if !d.is_monic() {
            return Err(Error::NotMonic {
                lc: d.leading().map_or("0".into(), |c| c.to_string()),
            });
        }
        let (q, r, m) = self.pseudo_divmod(d)?;
        debug_assert!(m.is_one());
        Ok((q, r))
    }

    /// Exact quotient `self / d` over ℚ when it has integer coefficients;
    /// `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &IntPoly) -> Option<IntPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        let (q, r, m) = self.pseudo_divmod(d).ok()?;
        if !r.is_zero() {
            return None;
        }
        // m·self = q·d, so the true quotient is q/m
        let mut out = Vec::with_capacity(q.coeffs.len());
        for c in &q.coeffs {
            let (quot, rem) = c.div_rem(&m);
            if !rem.is_zero() {
                return None;
            }
            out.push(quot);
        }
        Some(IntPoly::new(out))
    }

    /// True iff `d` divides `self` over ℚ.
    pub fn divisible_by(&self, d: &IntPoly) -> bool {
        if self.is_zero() {
            return !d.is_zero();
        }
        self.pseudo_divmod(d)
            .map(|(_, r, _)| r.is_zero())
            .unwrap_or(false)
    }

    /// gcd over ℚ, returned as a primitive integer polynomial with positive
    /// leading coefficient (primitive pseudo-remainder sequence).
    pub fn gcd(&self, other: &IntPoly) -> IntPoly {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        if a.is_zero() {
            return b;
        }
        while !b.is_zero() {
            if a.degree() < b.degree() {
                std::mem::swap(&mut a, &mut b);
                continue;
            }
            let (_, r, _) = a.pseudo_divmod(&b).expect("nonzero divisor");
            a = b;
            b = r.primitive_part();
        }
        a
    }

    /// Resultant of `self` and `other` (Sylvester determinant, fraction-free).
    pub fn resultant(&self, other: &IntPoly) -> BigInt {
        if self.is_zero() || other.is_zero() {
            return BigInt::zero();
        }
        let (n, m) = (self.degree(), other.degree());
        if n == 0 {
            return self.coeffs[0].clone().pow(m as u32);
        }
        if m == 0 {
            return other.coeffs[0].clone().pow(n as u32);
        }
        let size = n + m;
        let mut s = vec![vec![BigInt::zero(); size]; size];
        for row in 0..m {
            for (i, c) in self.coeffs.iter().rev().enumerate() {
                s[row][row + i] = c.clone();
            }
        }
        for row in 0..n {
            for (i, c) in other.coeffs.iter().rev().enumerate() {
                s[m + row][row + i] = c.clone();
            }
        }
        bareiss_det(s)
    }

    /// Discriminant of a polynomial of degree ≥ 1, via
    /// `(-1)^{n(n-1)/2}·Res(f, f')/lc(f)`.
    pub fn discriminant(&self) -> Result<BigInt> {
        if self.is_zero() || self.degree() < 1 {
            return Err(Error::InvalidInput(
                "discriminant requires degree ≥ 1".into(),
            ));
        }
        let n = self.degree();
        let res = self.resultant(&self.derivative());
        let lc = self.leading().unwrap();
        let (d, rem) = res.div_rem(lc);
        debug_assert!(rem.is_zero(), "Res(f, f') is divisible by lc(f)");
        if (n * (n - 1) / 2) % 2 == 1 {
            Ok(-d)
        } else {
            Ok(d)
        }
    }

    /// Recurrence coefficients `c_0..c_{n-1}` of a monic polynomial, so that
    /// `f(x) = x^n - c_{n-1}x^{n-1} - ... - c_0`.
    pub fn recurrence_coeffs(&self) -> Result<Vec<BigInt>> {
        if !self.is_monic() {
            return Err(Error::NotMonic {
                lc: self.leading().map_or("0".into(), |c| c.to_string()),
            });
        }
        let n = self.degree();
        Ok((0..n).map(|i| -self.coeff(i)).collect())
    }

    /// Monic polynomial `x^n - c_{n-1}x^{n-1} - ... - c_0` from its
    /// recurrence coefficients.
    pub fn from_recurrence_coeffs(c: &[BigInt]) -> IntPoly {
        let mut coeffs: Vec<BigInt> = c.iter().map(|ci| -ci).collect();
        coeffs.push(BigInt::one());
        IntPoly::new(coeffs)
    }

    /// Smallest m with Φ_m dividing `self`, if any. Since deg Φ_m = φ(m) and
    /// φ(m) ≥ √(m/2), only m ≤ 2n² with φ(m) ≤ n need checking.
    pub fn root_of_unity_factor(&self) -> Option<u32> {
        if self.is_zero() {
            return None;
        }
        let n = self.degree();
        if n == 0 {
            return None;
        }
        let bound = 2 * (n as u32) * (n as u32);
        for m in 1..=bound {
            if euler_phi(m) as usize > n {
                continue;
            }
            if self.divisible_by(&cyclotomic(m)) {
                return Some(m);
            }
        }
        None
    }

    /// `base^exponent` in `ℤ[x]/(modulus_int, modulus_poly)`, coefficients
    /// canonical in `[0, modulus_int)`. Square-and-multiply.
    pub fn powmod_quotient(
        base: &IntPoly,
        exponent: &BigUint,
        modulus_poly: &IntPoly,
        modulus_int: &BigInt,
    ) -> Result<IntPoly> {
        if !modulus_poly.is_monic() || modulus_poly.degree() < 1 {
            return Err(Error::NotMonic {
                lc: modulus_poly.leading().map_or("0".into(), |c| c.to_string()),
            });
        }
        if modulus_int.sign() != num_bigint::Sign::Plus {
            return Err(Error::InvalidInput("modulus must be positive".into()));
        }
        let mut acc = reduce_quotient(&IntPoly::one(), modulus_poly, modulus_int);
        let mut b = reduce_quotient(base, modulus_poly, modulus_int);
        let bits = exponent.bits();
        for i in (0..bits).rev() {
            acc = reduce_quotient(&acc.mul(&acc), modulus_poly, modulus_int);
            if exponent.bit(i) {
                acc = reduce_quotient(&acc.mul(&b), modulus_poly, modulus_int);
            }
        }
        let _ = &mut b;
        Ok(acc)
    }
}

/// Reduce modulo a monic polynomial and a positive integer, coefficients in
/// `[0, m)`.
pub fn reduce_quotient(a: &IntPoly, f: &IntPoly, m: &BigInt) -> IntPoly {
    let (_, r) = a.div_rem_monic(f).expect("monic modulus");
    IntPoly::new(r.coeffs.iter().map(|c| c.mod_floor(m)).collect())
}

/// Multiplication in `ℤ[x]/(m, f)`.
pub fn mulmod_quotient(a: &IntPoly, b: &IntPoly, f: &IntPoly, m: &BigInt) -> IntPoly {
    reduce_quotient(&a.mul(b), f, m)
}

/// Euler's totient by trial division.
pub fn euler_phi(mut m: u32) -> u32 {
    let mut phi = 1u32;
    let mut p = 2u32;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut pk = 1;
            while m.is_multiple_of(p) {
                m /= p;
                pk *= p;
            }
            phi *= pk - pk / p;
        }
        p += 1;
    }
    if m > 1 {
        phi *= m - 1;
    }
    phi
}

/// The m-th cyclotomic polynomial, by exact division of x^m - 1.
pub fn cyclotomic(m: u32) -> IntPoly {
    let mut num = IntPoly::monomial(BigInt::one(), m as usize).sub(&IntPoly::one());
    for d in 1..m {
        if m.is_multiple_of(d) {
            num = num
                .div_exact(&cyclotomic(d))
                .expect("Φ_d divides x^m - 1 for d | m");
        }
    }
    num
}

/// Fraction-free Bareiss determinant of a square matrix (consumed).
pub(crate) fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero());
                a[i][j] = q;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}")?;
                    }
                    if i == 1 {
                        write!(f, "x")?;
                    } else {
                        write!(f, "x^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPoly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(coeffs: &[i64]) -> IntPoly {
        IntPoly::from_i64(coeffs)
    }

    #[test]
    fn product_difference_of_squares() {
        let prod = p(&[-1, 1]).mul(&p(&[1, 1]));
        assert_eq!(prod, p(&[-1, 0, 1]));
    }

    #[test]
    fn pseudo_divmod_monic_example() {
        let (q, r, m) = p(&[0, 0, 0, 1]).pseudo_divmod(&p(&[1, -3, 1])).unwrap();
        assert_eq!(q, p(&[3, 1]));
        assert_eq!(r, p(&[-3, 8]));
        assert!(m.is_one());
    }

    #[test]
    fn divide_by_zero_poly_rejected() {
        assert!(matches!(
            p(&[1, 1]).pseudo_divmod(&IntPoly::zero()),
            Err(Error::ZeroPolynomialDivision)
        ));
    }

    #[test]
    fn gcd_of_squarefree_poly_and_derivative_is_constant() {
        let f = p(&[1, -3, 1]);
        let g = f.gcd(&f.derivative());
        assert_eq!(g.degree(), 0);
    }

    #[test]
    fn gcd_divides_both_inputs() {
        let a = p(&[1, -3, 1]).mul(&p(&[-2, 1]));
        let b = p(&[1, -3, 1]).mul(&p(&[5, 1]));
        let g = a.gcd(&b);
        assert_eq!(g, p(&[1, -3, 1]));
        assert!(a.divisible_by(&g));
        assert!(b.divisible_by(&g));
    }

    #[test]
    fn discriminant_matches_quadratic_formula() {
        // b² - 4ac for monic quadratics
        assert_eq!(p(&[1, -3, 1]).discriminant().unwrap(), BigInt::from(5));
        assert_eq!(p(&[1, 0, 1]).discriminant().unwrap(), BigInt::from(-4));
        assert_eq!(p(&[1, -2, 1]).discriminant().unwrap(), BigInt::zero());
    }

    #[test]
    fn discriminant_zero_iff_gcd_with_derivative_nonconstant() {
        for f in [p(&[1, -2, 1]), p(&[1, -3, 1]), p(&[0, 0, 1]), p(&[2, 1])] {
            let disc_zero = f.discriminant().unwrap().is_zero();
            let gcd_nonconst = f.gcd(&f.derivative()).degree() > 0;
            assert_eq!(disc_zero, gcd_nonconst, "f = {f}");
        }
    }

    #[test]
    fn cyclotomic_small_values() {
        assert_eq!(cyclotomic(1), p(&[-1, 1]));
        assert_eq!(cyclotomic(2), p(&[1, 1]));
        assert_eq!(cyclotomic(4), p(&[1, 0, 1]));
        assert_eq!(cyclotomic(6), p(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), p(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn unity_root_detection() {
        assert_eq!(p(&[1, 0, 1]).root_of_unity_factor(), Some(4));
        assert_eq!(p(&[1, -3, 1]).root_of_unity_factor(), None);
        assert_eq!(p(&[-1, 1]).root_of_unity_factor(), Some(1));
        // x²-x+1 = Φ₆
        assert_eq!(p(&[1, -1, 1]).root_of_unity_factor(), Some(6));
    }

    #[test]
    fn powmod_quotient_examples() {
        let f = p(&[1, -3, 1]);
        // x^5 mod (11³, f) = 55x + 1310
        let r =
            IntPoly::powmod_quotient(&IntPoly::x(), &BigUint::from(5u32), &f, &BigInt::from(1331))
                .unwrap();
        assert_eq!(r, p(&[1310, 55]));
        // x^1 mod (p, f) = x
        let r1 =
            IntPoly::powmod_quotient(&IntPoly::x(), &BigUint::from(1u32), &f, &BigInt::from(11))
                .unwrap();
        assert_eq!(r1, IntPoly::x());
        // x^5 mod (11, f) = 1
        let r5 =
            IntPoly::powmod_quotient(&IntPoly::x(), &BigUint::from(5u32), &f, &BigInt::from(11))
                .unwrap();
        assert_eq!(r5, IntPoly::one());
    }

    #[test]
    fn recurrence_coeff_round_trip() {
        let f = p(&[1, -3, 1]);
        let c = f.recurrence_coeffs().unwrap();
        assert_eq!(c, vec![BigInt::from(-1), BigInt::from(3)]);
        assert_eq!(IntPoly::from_recurrence_coeffs(&c), f);
    }

    #[test]
    fn display_reads_naturally() {
        assert_eq!(p(&[1, -3, 1]).to_string(), "x^2 - 3x + 1");
        assert_eq!(p(&[-2, 0, 0, 1]).to_string(), "x^3 - 2");
        assert_eq!(IntPoly::zero().to_string(), "0");
    }

    proptest! {
        #[test]
        fn pseudo_divmod_reconstructs(a in prop::collection::vec(-20i64..20, 0..7),
                                      b in prop::collection::vec(-20i64..20, 1..5)) {
            let a = p(&a);
            let b = p(&b);
            prop_assume!(!b.is_zero());
            let (q, r, m) = a.pseudo_divmod(&b).unwrap();
            prop_assert_eq!(a.mul_scalar(&m), q.mul(&b).add(&r));
            prop_assert!(r.is_zero() || r.degree() < b.degree());
        }

        #[test]
        fn powmod_exponent_additivity(a in 0u64..1000, b in 0u64..1000) {
            let f = p(&[1, -3, 1]);
            let m = BigInt::from(121);
            let x = IntPoly::x();
            let pa = IntPoly::powmod_quotient(&x, &BigUint::from(a), &f, &m).unwrap();
            let pb = IntPoly::powmod_quotient(&x, &BigUint::from(b), &f, &m).unwrap();
            let pab = IntPoly::powmod_quotient(&x, &BigUint::from(a + b), &f, &m).unwrap();
            prop_assert_eq!(mulmod_quotient(&pa, &pb, &f, &m), pab);
        }
    }
}
