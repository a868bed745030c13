//! Linear recurrence sequences induced by an integer matrix and their
//! periods modulo prime powers.
//!
//! The induced sequence starts from (0, ..., 0, 1) and recurs with the
//! characteristic polynomial's recurrence coefficients. Modulo p^k its
//! period follows a rigid law: with T₁ the period mod p and t the
//! stabilization exponent (x^{T₁} ≡ 1 + p^t·r(x) mod f, p ∤ r), the period
//! is T₁ for k ≤ t and T₁·p^{k-t} beyond.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::modular;
use crate::poly::{mulmod_quotient, IntPoly};

/// Modulus cap for brute-force period search.
pub const BRUTE_MODULUS_CAP: u64 = 1_000_000;

/// Iteration cap for brute-force period search.
pub const BRUTE_ITER_CAP: u64 = 100_000_000;

/// A linear recurrence u_{m+n} = Σ_j coeffs\[j\]·u_{m+j} with initial window
/// `init`.
#[derive(Clone, Debug)]
pub struct RecurrenceSpec {
    pub coeffs: Vec<BigInt>,
    pub init: Vec<BigInt>,
}

impl RecurrenceSpec {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// The recurrence induced by a monic polynomial, starting (0, ..., 0, 1).
    pub fn induced_by_poly(f: &IntPoly) -> Result<RecurrenceSpec> {
        let coeffs = f.recurrence_coeffs()?;
        let n = coeffs.len();
        let mut init = vec![BigInt::zero(); n];
        init[n - 1] = BigInt::one();
        Ok(RecurrenceSpec { coeffs, init })
    }
}

/// The linear recurrence sequence induced by a matrix: coefficients from the
/// characteristic polynomial, initial window (0, ..., 0, 1).
pub fn induced_lrs(a: &IntMatrix) -> RecurrenceSpec {
    RecurrenceSpec::induced_by_poly(&a.char_poly()).expect("char poly is monic")
}

/// First `count` terms of the sequence modulo m, by direct iteration.
pub fn lrs_terms_mod(spec: &RecurrenceSpec, m: &BigInt, count: usize) -> Vec<BigInt> {
    let n = spec.order();
    let mut terms: Vec<BigInt> = spec.init.iter().map(|u| u.mod_floor(m)).collect();
    while terms.len() < count {
        let next: BigInt = spec
            .coeffs
            .iter()
            .zip(&terms[terms.len() - n..])
            .map(|(c, u)| c * u)
            .sum();
        terms.push(next.mod_floor(m));
    }
    terms.truncate(count);
    terms
}

/// Minimal period of the sequence mod m by state-vector iteration. Requires
/// gcd(m, c₀) = 1, which makes the sequence purely periodic.
pub fn lrs_period_bruteforce(spec: &RecurrenceSpec, m: u64, iter_cap: u64) -> Result<u64> {
    if m == 0 || m > BRUTE_MODULUS_CAP {
        return Err(Error::ModulusCap(format!(
            "modulus {m} outside (0, {BRUTE_MODULUS_CAP}]"
        )));
    }
    let mb = BigInt::from(m);
    if !spec.coeffs[0].gcd(&mb).is_one() {
        return Err(Error::NonCoprimeModulus { m: m.to_string() });
    }
    if m == 1 {
        return Ok(1);
    }
    let n = spec.order();
    let coeffs: Vec<u64> = spec
        .coeffs
        .iter()
        .map(|c| c.mod_floor(&mb).to_u64().unwrap())
        .collect();
    let init: Vec<u64> = spec
        .init
        .iter()
        .map(|u| u.mod_floor(&mb).to_u64().unwrap())
        .collect();
    let mut state = init.clone();
    for step in 1..=iter_cap {
        let next = state
            .iter()
            .zip(&coeffs)
            .fold(0u128, |acc, (&u, &c)| acc + u as u128 * c as u128)
            % m as u128;
        state.rotate_left(1);
        state[n - 1] = next as u64;
        if state == init {
            return Ok(step);
        }
    }
    Err(Error::IterationCap { cap: iter_cap })
}

/// Period profile of the recurrence induced by f modulo powers of p.
#[derive(Clone, Debug)]
pub struct LrsProfile {
    pub p: u64,
    /// Period mod p (minimal T with x^T ≡ 1 mod (p, f)).
    pub t1: u64,
    /// Stabilization exponent.
    pub t: u32,
}

impl LrsProfile {
    /// Period mod p^k: T₁ for k ≤ t, T₁·p^{k-t} beyond.
    pub fn period(&self, k: u32) -> BigUint {
        BigUint::from(self.t1) * BigUint::from(self.p).pow(k.saturating_sub(self.t))
    }

    /// Wire form of the profile at level k: {p, T1, t, k, Tk}.
    pub fn to_json(&self, k: u32) -> serde_json::Value {
        let tk: serde_json::Number =
            serde_json::from_str(&self.period(k).to_string()).expect("integer literal");
        serde_json::json!({
            "p": self.p,
            "T1": self.t1,
            "t": self.t,
            "k": k,
            "Tk": tk,
        })
    }
}

fn check_profile_preconditions(f: &IntPoly, p: u64) -> Result<()> {
    if p == 2 || !modular::is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not an odd prime")));
    }
    if f.coeff(0).mod_floor(&BigInt::from(p)).is_zero() {
        return Err(Error::InvalidInput(format!("p = {p} divides f(0)")));
    }
    if let Some(m) = f.root_of_unity_factor() {
        return Err(Error::InvalidInput(format!(
            "f has the {m}-th cyclotomic polynomial as a factor; no finite stabilization exponent"
        )));
    }
    Ok(())
}

/// Compute the period profile of f at the odd prime p, and the resulting
/// period mod p^k. T₁ is found by iterated multiplication by x in the
/// quotient ring mod (p, f); t is read off x^{T₁} computed mod
/// (p^{k+margin}, f), escalating the margin until the residue is visible.
pub fn lrs_period_profile(f: &IntPoly, p: u64, k: u32) -> Result<(LrsProfile, BigUint)> {
    check_profile_preconditions(f, p)?;
    let n = f.degree() as u32;
    let pb = BigInt::from(p);

    // group-order bound p^n caps the T₁ search
    let cap = BigUint::from(p).pow(n);
    let x = IntPoly::x();
    let mut y = crate::poly::reduce_quotient(&x, f, &pb);
    let mut t1: u64 = 1;
    while !y.is_one() {
        y = mulmod_quotient(&y, &x, f, &pb);
        t1 += 1;
        if BigUint::from(t1) > cap {
            return Err(Error::IterationCap {
                cap: cap.to_u64().unwrap_or(u64::MAX),
            });
        }
    }

    let mut margin = 4u32;
    let t = loop {
        let pe = pb.clone().pow(k + margin);
        let r = IntPoly::powmod_quotient(&x, &BigUint::from(t1), f, &pe)?;
        let e = r.sub(&IntPoly::one());
        if e.is_zero() {
            margin *= 2;
            continue;
        }
        let t = e
            .coeffs()
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| modular::vp(c, p).expect("nonzero coefficient"))
            .min()
            .unwrap();
        break t;
    };

    let profile = LrsProfile { p, t1, t };
    let tk = profile.period(k);
    Ok((profile, tk))
}

/// Certify a period claim independently of the formula: true iff
/// x^T ≡ 1 mod (p^k, f), i.e. iff the true period divides T.
pub fn lrs_certificate(f: &IntPoly, p: u64, k: u32, t: &BigUint) -> Result<bool> {
    check_profile_preconditions(f, p)?;
    if t.is_zero() {
        return Err(Error::InvalidInput("period candidate must be ≥ 1".into()));
    }
    let pe = BigInt::from(p).pow(k);
    let r = IntPoly::powmod_quotient(&IntPoly::x(), t, f, &pe)?;
    Ok(r.is_one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::{hensel_lift, mult_order};

    fn cat_spec() -> RecurrenceSpec {
        induced_lrs(&IntMatrix::from_i64(&[&[2, 1], &[1, 1]]))
    }

    #[test]
    fn induced_lrs_examples() {
        let s = cat_spec();
        assert_eq!(s.coeffs, vec![BigInt::from(-1), BigInt::from(3)]);
        assert_eq!(s.init, vec![BigInt::zero(), BigInt::one()]);

        let one = induced_lrs(&IntMatrix::from_i64(&[&[2]]));
        assert_eq!(one.coeffs, vec![BigInt::from(2)]);
        assert_eq!(one.init, vec![BigInt::one()]);

        let f = IntPoly::from_i64(&[-1, -1, 0, 1]);
        let s3 = RecurrenceSpec::induced_by_poly(&f).unwrap();
        assert_eq!(
            s3.coeffs,
            vec![BigInt::one(), BigInt::one(), BigInt::zero()]
        );
        assert_eq!(s3.init, vec![BigInt::zero(), BigInt::zero(), BigInt::one()]);
    }

    #[test]
    fn terms_mod_examples() {
        let terms = lrs_terms_mod(&cat_spec(), &BigInt::from(11), 7);
        let want: Vec<BigInt> = [0, 1, 3, 8, 10, 0, 1]
            .iter()
            .map(|&x| BigInt::from(x))
            .collect();
        assert_eq!(terms, want);

        let zeros = lrs_terms_mod(&cat_spec(), &BigInt::one(), 5);
        assert!(zeros.iter().all(|x| x.is_zero()));

        let big = lrs_terms_mod(&cat_spec(), &BigInt::from(1_000_000), 5);
        let want: Vec<BigInt> = [0, 1, 3, 8, 21].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(big, want);
    }

    #[test]
    fn brute_period_examples() {
        assert_eq!(lrs_period_bruteforce(&cat_spec(), 11, 1 << 20).unwrap(), 5);
        assert_eq!(
            lrs_period_bruteforce(&cat_spec(), 121, 1 << 20).unwrap(),
            55
        );
        let constant = RecurrenceSpec {
            coeffs: vec![BigInt::one()],
            init: vec![BigInt::one()],
        };
        assert_eq!(lrs_period_bruteforce(&constant, 7, 100).unwrap(), 1);
    }

    #[test]
    fn brute_period_rejects_non_coprime_modulus() {
        let spec = induced_lrs(&IntMatrix::from_i64(&[&[2, 0], &[0, 3]])); // c₀ = -6
        assert!(matches!(
            lrs_period_bruteforce(&spec, 10, 100),
            Err(Error::NonCoprimeModulus { .. })
        ));
        assert!(lrs_period_bruteforce(&spec, 2_000_000, 100).is_err());
    }

    #[test]
    fn profile_examples() {
        let f = IntPoly::from_i64(&[1, -3, 1]);
        let (profile, t1) = lrs_period_profile(&f, 11, 1).unwrap();
        assert_eq!((profile.t1, profile.t), (5, 1));
        assert_eq!(t1, BigUint::from(5u32));
        let (_, t3) = lrs_period_profile(&f, 11, 3).unwrap();
        assert_eq!(t3, BigUint::from(605u32));
    }

    #[test]
    fn profile_with_t_above_one_freezes_early_levels() {
        // ord_11(3) = 5 and 3^5 - 1 = 242 = 2·11², so t = 2: T₂ = T₁
        let f = IntPoly::from_i64(&[-3, 1]);
        let (profile, t2) = lrs_period_profile(&f, 11, 2).unwrap();
        assert_eq!((profile.t1, profile.t), (5, 2));
        assert_eq!(t2, BigUint::from(5u32));
        let spec = RecurrenceSpec::induced_by_poly(&f).unwrap();
        assert_eq!(lrs_period_bruteforce(&spec, 121, 1 << 20).unwrap(), 5);
        assert_eq!(profile.period(3), BigUint::from(55u32));
    }

    #[test]
    fn profile_rejects_unity_roots_and_bad_primes() {
        assert!(lrs_period_profile(&IntPoly::from_i64(&[1, 0, 1]), 11, 1).is_err());
        assert!(lrs_period_profile(&IntPoly::from_i64(&[1, -3, 1]), 2, 1).is_err());
        // p | f(0)
        assert!(lrs_period_profile(&IntPoly::from_i64(&[-11, 1]), 11, 1).is_err());
    }

    #[test]
    fn profile_wire_form() {
        let f = IntPoly::from_i64(&[1, -3, 1]);
        let (profile, _) = lrs_period_profile(&f, 11, 3).unwrap();
        assert_eq!(
            profile.to_json(3),
            serde_json::json!({"p": 11, "T1": 5, "t": 1, "k": 3, "Tk": 605})
        );
    }

    #[test]
    fn certificate_examples() {
        let f = IntPoly::from_i64(&[1, -3, 1]);
        assert!(lrs_certificate(&f, 11, 1, &BigUint::from(5u32)).unwrap());
        assert!(!lrs_certificate(&f, 11, 1, &BigUint::from(4u32)).unwrap());
        assert!(lrs_certificate(&f, 11, 2, &BigUint::from(55u32 * 121)).unwrap());
        assert!(lrs_certificate(&f, 11, 1, &BigUint::zero()).is_err());
    }

    #[test]
    fn certificate_true_iff_period_divides() {
        let f = IntPoly::from_i64(&[1, -3, 1]);
        let (_, tk) = lrs_period_profile(&f, 11, 2).unwrap();
        for t in 1u32..=120 {
            let holds = lrs_certificate(&f, 11, 2, &BigUint::from(t)).unwrap();
            assert_eq!(holds, (BigUint::from(t) % &tk).is_zero(), "T = {t}");
        }
    }

    #[test]
    fn formula_matches_bruteforce_on_fixtures() {
        let fixtures = [
            IntPoly::from_i64(&[1, -3, 1]),
            IntPoly::from_i64(&[-1, -1, 1]),
            IntPoly::from_i64(&[-1, -1, 0, 1]),
            IntPoly::from_i64(&[-2, 1]),
        ];
        for f in &fixtures {
            let spec = RecurrenceSpec::induced_by_poly(f).unwrap();
            for p in [3u64, 5, 7, 11, 13] {
                if f.coeff(0).mod_floor(&BigInt::from(p)).is_zero() {
                    continue;
                }
                for k in 1..=2u32 {
                    let (_, tk) = lrs_period_profile(f, p, k).unwrap();
                    let brute = lrs_period_bruteforce(&spec, p.pow(k), 1 << 24).unwrap();
                    assert_eq!(tk, BigUint::from(brute), "f={f} p={p} k={k}");
                }
            }
        }
    }

    #[test]
    fn monotone_tower() {
        let f = IntPoly::from_i64(&[1, -3, 1]);
        let mut prev = lrs_period_profile(&f, 11, 1).unwrap().1;
        for k in 2..=6u32 {
            let (_, tk) = lrs_period_profile(&f, 11, k).unwrap();
            assert!((&tk % &prev).is_zero());
            let ratio = &tk / &prev;
            assert!(ratio == BigUint::one() || ratio == BigUint::from(11u32));
            prev = tk;
        }
    }

    #[test]
    fn root_period_bridge() {
        // lcm of the lifted-root orders equals the sequence period
        let f = IntPoly::from_i64(&[1, -3, 1]);
        for k in 1..=3u32 {
            let mut lcm = BigUint::one();
            for root in [5u64, 9] {
                let b = hensel_lift(&f, 11, root, k).unwrap();
                let ord = mult_order(&b, 11, k).unwrap();
                lcm = lcm.lcm(&ord);
            }
            let (_, tk) = lrs_period_profile(&f, 11, k).unwrap();
            assert_eq!(lcm, tk, "k = {k}");
        }
    }
}
