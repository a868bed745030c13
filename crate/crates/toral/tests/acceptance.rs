//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`). Every
//! tolerance is pinned in code; the numeric targets were reproduced with the
//! brute-force oracles in this file before being frozen.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toral::equidist::{box_counts, cell_occupancy_check, density_bound_check, packing_bound_check};
use toral::error::Error;
use toral::lrs::{lrs_period_bruteforce, lrs_period_profile, RecurrenceSpec};
use toral::matrix::{companion, krylov, primary_decomposition, IntMatrix, Rat};
use toral::modular::{find_split_primes, hensel_lift, mult_order, roots_mod_p, vp};
use toral::orbit::{
    certify_distance_bound, construct_general, orbit_bruteforce, uniform_sequence, wedge_invariant,
    ConstructOptions,
};
use toral::poly::{factor_rational, IntPoly};

fn cat_map() -> IntMatrix {
    IntMatrix::from_i64(&[&[2, 1], &[1, 1]])
}

fn cat_poly() -> IntPoly {
    IntPoly::from_i64(&[1, -3, 1])
}

struct Criterion {
    name: &'static str,
    budget_secs: f64,
    start: Instant,
}

impl Criterion {
    fn begin(name: &'static str, budget_secs: f64) -> Criterion {
        Criterion {
            name,
            budget_secs,
            start: Instant::now(),
        }
    }

    fn pass(self) {
        let elapsed = self.start.elapsed().as_secs_f64();
        assert!(
            elapsed <= self.budget_secs,
            "{} exceeded its runtime budget: {elapsed:.1}s > {}s",
            self.name,
            self.budget_secs
        );
        println!("[acceptance] {}: PASS ({elapsed:.2}s)", self.name);
    }
}

#[test]
fn criterion_1_cat_map_flagship() {
    let c = Criterion::begin("criterion 1 (cat-map flagship, levels 1-4 at p=11)", 60.0);
    let opts = ConstructOptions {
        prime_override: Some(11),
        ..Default::default()
    };
    let seq = uniform_sequence(&cat_map(), 4, &opts).unwrap();

    let periods: Vec<BigUint> = seq
        .levels
        .iter()
        .map(|l| l.construction.frame_record.period.clone())
        .collect();
    assert_eq!(
        periods,
        vec![
            BigUint::from(5u32),
            BigUint::from(55u32),
            BigUint::from(605u32),
            BigUint::from(6655u32)
        ]
    );

    let level1 = &seq.levels[0].construction.frame_record;
    assert_eq!(
        level1.d_sq,
        Some(Rat::new(BigInt::from(5), BigInt::from(121)))
    );
    assert_eq!(
        level1.metric_exact(),
        Some(Rat::new(BigInt::from(25), BigInt::from(121)))
    );
    let m1 = level1.metric_float().unwrap();
    assert!((m1 - 25.0 / 121.0).abs() < 1e-12);
    assert!((m1 - 0.2066).abs() < 5e-4);

    // exact d at every level, empirical constant above 0.1, packing ≤ 4/π
    let packing_cap = 4.0 / std::f64::consts::PI + 1e-12;
    for l in &seq.levels {
        let frame = &l.construction.frame_record;
        assert!(frame.d_exact, "level {} d must be exact", l.level);
        let dnt = l.frame_metric.unwrap();
        assert!(dnt <= packing_cap, "level {}: d²T = {dnt} > 4/π", l.level);
    }
    let min_dnt = seq.min_frame_metric.unwrap();
    assert!(min_dnt > 0.1, "min d²T = {min_dnt} must exceed 0.1");
    c.pass();
}

#[test]
fn criterion_2_period_law_suite() {
    let c = Criterion::begin("criterion 2 (period law T_k = p^(k-t)·T_1)", 30.0);
    let fixtures = [
        IntPoly::from_i64(&[1, -3, 1]),
        IntPoly::from_i64(&[-1, -1, 1]),
        IntPoly::from_i64(&[-1, -1, 0, 1]),
        IntPoly::from_i64(&[-1, 0, -1, 1]),
        IntPoly::from_i64(&[-2, 1]),
        IntPoly::from_i64(&[-3, 1]),
    ];
    let primes = [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31];
    let mut cases = 0u32;
    for f in &fixtures {
        assert!(f.root_of_unity_factor().is_none());
        let spec = RecurrenceSpec::induced_by_poly(f).unwrap();
        for &p in &primes {
            if f.coeff(0).mod_floor(&BigInt::from(p)).is_zero() {
                continue;
            }
            for k in 1..=3u32 {
                let (_, tk) = lrs_period_profile(f, p, k).unwrap();
                let brute = lrs_period_bruteforce(&spec, p.pow(k), 1 << 27).unwrap();
                assert_eq!(tk, BigUint::from(brute), "f = {f}, p = {p}, k = {k}");
                cases += 1;
            }
        }
    }
    assert!(
        cases >= 150,
        "suite must cover the fixture grid ({cases} cases)"
    );

    // cat-map instance: (T₁, t) = (5, 1), T₂ = 55
    let (profile, _) = lrs_period_profile(&cat_poly(), 11, 1).unwrap();
    assert_eq!((profile.t1, profile.t), (5, 1));
    assert_eq!(
        lrs_period_profile(&cat_poly(), 11, 2).unwrap().1,
        BigUint::from(55u32)
    );
    assert_eq!(
        lrs_period_bruteforce(
            &RecurrenceSpec::induced_by_poly(&cat_poly()).unwrap(),
            121,
            1 << 20
        )
        .unwrap(),
        55
    );
    c.pass();
}

#[test]
fn criterion_3_lte_order_suite() {
    let c = Criterion::begin("criterion 3 (LTE and multiplicative orders)", 30.0);
    // closed-form orders against brute iteration, zero tolerance
    for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        for a in 2..p {
            for k in 1..=3u32 {
                let modulus = BigInt::from(p).pow(k);
                let ab = BigInt::from(a);
                let mut x = ab.mod_floor(&modulus);
                let mut brute = 1u64;
                while !x.is_one() {
                    x = (x * &ab).mod_floor(&modulus);
                    brute += 1;
                }
                assert_eq!(
                    mult_order(&ab, p, k).unwrap(),
                    BigUint::from(brute),
                    "a = {a}, p = {p}, k = {k}"
                );
            }
        }
    }

    // v_p(x^k - y^k) = v_p(x - y) + v_p(k) on 10³ random admissible triples
    let mut rng = ChaCha8Rng::seed_from_u64(0x7062);
    let primes = [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    let mut done = 0;
    while done < 1000 {
        let p = primes[rng.gen_range(0..primes.len())];
        let x = rng.gen_range(2i64..1000);
        if x % p as i64 == 0 {
            continue;
        }
        let y = x + p as i64 * rng.gen_range(1i64..50);
        if y % p as i64 == 0 {
            continue;
        }
        let k = rng.gen_range(1u32..=200);
        let (xb, yb) = (BigInt::from(x), BigInt::from(y));
        let lhs = vp(&(xb.pow(k) - yb.pow(k)), p).unwrap();
        let rhs = vp(&(&xb - &yb), p).unwrap() + vp(&BigInt::from(k), p).unwrap();
        assert_eq!(lhs, rhs, "x = {x}, y = {y}, p = {p}, k = {k}");
        done += 1;
    }
    c.pass();
}

#[test]
fn criterion_4_hensel_suite() {
    let c = Criterion::begin("criterion 4 (Hensel lifts at p=11, k ≤ 10)", 30.0);
    let f = cat_poly();
    for k in 1..=10u32 {
        let pk = BigInt::from(11).pow(k);
        let lifts: Vec<BigInt> = [5u64, 9]
            .iter()
            .map(|&r| hensel_lift(&f, 11, r, k).unwrap())
            .collect();
        for b in &lifts {
            assert!(f.eval_mod(b, &pk).is_zero(), "f(lift) ≢ 0 mod 11^{k}");
        }
        // distinct mod p
        let p = BigInt::from(11);
        assert_ne!(lifts[0].mod_floor(&p), lifts[1].mod_floor(&p));
        // tower consistency
        if k > 1 {
            let down = BigInt::from(11).pow(k - 1);
            for (b, &r) in lifts.iter().zip(&[5u64, 9]) {
                assert_eq!(
                    b.mod_floor(&down),
                    hensel_lift(&f, 11, r, k - 1).unwrap(),
                    "tower break at root {r}, k = {k}"
                );
            }
        }
    }
    // frozen spot value, reproduced by the direct oracle f(38) = 1331 = 11³
    assert_eq!(hensel_lift(&f, 11, 5, 2).unwrap(), BigInt::from(38));
    assert_eq!(f.eval(&BigInt::from(38)), BigInt::from(1331));
    c.pass();
}

#[test]
fn criterion_5_krylov_conjugation_suite() {
    let c = Criterion::begin("criterion 5 (Krylov invertibility and P·A = J·P)", 30.0);
    let fixtures = [
        cat_map(),
        IntMatrix::from_i64(&[&[0, 1], &[1, 1]]),
        companion(&IntPoly::from_i64(&[-1, -1, 0, 1])).unwrap(),
        companion(&IntPoly::from_i64(&[-1, -1, 0, 0, 1])).unwrap(),
        IntMatrix::from_i64(&[&[1, 1, 0, 0], &[0, 1, 1, 0], &[0, 0, 1, 1], &[1, 0, 0, 2]]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b72);
    for a in &fixtures {
        let f = a.char_poly();
        let factors = factor_rational(&f).unwrap();
        assert_eq!(factors.len(), 1);
        assert_eq!(factors[0].1, 1, "fixture char poly must be irreducible");
        let b = companion(&f).unwrap();
        for _ in 0..100 {
            let e: Vec<BigInt> = (0..a.dim())
                .map(|_| BigInt::from(rng.gen_range(-20i64..=20)))
                .collect();
            if e.iter().all(|x| x.is_zero()) {
                continue;
            }
            let p = krylov(&e, a).unwrap();
            assert!(!p.det().is_zero(), "Krylov matrix must be invertible");
            assert_eq!(p.mul(a), b.mul(&p), "conjugation P·A = B·P");
        }
    }

    // primary decomposition contracts on the reducible fixtures
    for a in [
        IntMatrix::from_i64(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 2]]),
        IntMatrix::from_i64(&[&[2, 1], &[0, 2]]),
    ] {
        let dec = primary_decomposition(&a).unwrap();
        assert_eq!(dec.p.mul(&a), dec.j.mul(&dec.p));
        assert!(!dec.p.det().is_zero());
        let mut prod = IntPoly::one();
        for blk in &dec.blocks {
            prod = prod.mul(&blk.d);
            assert_eq!(blk.matrix.char_poly(), blk.d);
            assert_eq!(blk.matrix.minimal_poly(), blk.d);
        }
        assert_eq!(prod, a.char_poly());
    }
    c.pass();
}

#[test]
fn criterion_6_wedge_certificate() {
    let c = Criterion::begin("criterion 6 (wedge divisibility certificates)", 30.0);
    let f = cat_poly();
    let b = companion(&f).unwrap();
    let opts = ConstructOptions {
        prime_override: Some(11),
        ..Default::default()
    };
    let cert = find_split_primes(&f, 1, 11, 1_000_000).unwrap().remove(0);
    for k in 1..=3u32 {
        let rec = toral::orbit::construct_irreducible(&f, &cert, k, &opts).unwrap();
        let t = rec.points.as_ref().unwrap().len();
        let pairs = (t * (t - 1) / 2).min(1000);
        let report = certify_distance_bound(&rec, &b, 11, k, pairs).unwrap();
        assert_eq!(report.pairs_checked, pairs);
        assert!(report.d_sq_ok);
    }
    // frozen level-1 pair value: a = centered((5,3) - (1,5)) = (4, -2), I(a) = -44
    let a = vec![BigInt::from(4), BigInt::from(-2)];
    assert_eq!(wedge_invariant(&a, &b), BigInt::from(-44));
    assert!((BigInt::from(-44) % BigInt::from(11)).is_zero());
    c.pass();
}

#[test]
fn criterion_7_equidistribution_trend() {
    let c = Criterion::begin("criterion 7 (equidistribution trend, 4×4 grid)", 60.0);
    let opts = ConstructOptions {
        prime_override: Some(11),
        ..Default::default()
    };
    let seq = uniform_sequence(&cat_map(), 4, &opts).unwrap();
    let mut devs = Vec::new();
    for l in &seq.levels {
        let frame = &l.construction.frame_record;
        let report = box_counts(frame, 4).unwrap();
        assert_eq!(
            BigUint::from(report.counts.iter().sum::<u64>()),
            frame.period,
            "counts must sum to T at level {}",
            l.level
        );
        assert!(cell_occupancy_check(frame).unwrap(), "level {}", l.level);
        assert!(packing_bound_check(frame).unwrap(), "level {}", l.level);
        assert!(density_bound_check(frame, 4).unwrap(), "level {}", l.level);
        devs.push(report.max_dev);
    }
    assert!(
        devs[3] < devs[0],
        "max_dev must improve from level 1 ({}) to level 4 ({})",
        devs[0],
        devs[3]
    );
    c.pass();
}

#[test]
fn criterion_8_general_reducible_case() {
    let c = Criterion::begin(
        "criterion 8 (general construction on reducible fixtures)",
        120.0,
    );
    let fixtures = [
        IntMatrix::from_i64(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 2]]),
        IntMatrix::from_i64(&[&[2, 1], &[0, 2]]),
    ];
    let opts = ConstructOptions {
        brute_verify: true,
        ..Default::default()
    };
    for a in &fixtures {
        let seq = uniform_sequence(a, 3, &opts).unwrap();
        let mut prev = BigUint::zero();
        let level1_dnt = seq.levels[0].frame_metric.unwrap();
        for l in &seq.levels {
            let frame = &l.construction.frame_record;
            assert!(frame.period > prev, "periods must strictly increase");
            prev = frame.period.clone();

            let dnt = l.frame_metric.unwrap();
            assert!(dnt > 0.0);
            assert!(
                dnt >= 0.5 * level1_dnt,
                "level {} d^nT = {dnt} below half the level-1 constant {level1_dnt}",
                l.level
            );
            assert!(cell_occupancy_check(frame).unwrap());
            assert!(packing_bound_check(frame).unwrap());
            assert!(density_bound_check(frame, 4).unwrap());
            let report = box_counts(frame, 4).unwrap();
            assert_eq!(
                BigUint::from(report.counts.iter().sum::<u64>()),
                frame.period
            );

            // brute-force period agreement wherever the denominator is small
            let den = frame.base.denom();
            assert!(
                den <= &BigInt::from(100_000),
                "fixture denominators stay small"
            );
            let (pre, brute) =
                orbit_bruteforce(&l.construction.frame_matrix, &frame.base, &opts).unwrap();
            assert_eq!(pre, 0);
            assert_eq!(brute.period, frame.period, "brute oracle disagrees");
            assert_eq!(brute.d_sq, frame.d_sq, "brute oracle gap disagrees");
        }
    }
    c.pass();
}

#[test]
fn criterion_9_negative_controls() {
    let c = Criterion::begin("criterion 9 (negative controls and error contracts)", 30.0);
    let opts = ConstructOptions::default();

    // non-ergodic rejection with unity-root witnesses
    match construct_general(&IntMatrix::from_i64(&[&[0, -1], &[1, 0]]), 1, &opts) {
        Err(Error::NonErgodic { reason }) => {
            assert!(reason.contains("4-th cyclotomic"), "reason: {reason}")
        }
        other => panic!("rotation must be rejected, got {other:?}"),
    }
    match uniform_sequence(&IntMatrix::identity(2), 2, &opts) {
        Err(Error::NonErgodic { reason }) => {
            assert!(reason.contains("1-th cyclotomic"), "reason: {reason}")
        }
        other => panic!("identity must be rejected, got {other:?}"),
    }

    // x⁴ + 1 splits mod every prime but is irreducible over ℚ
    let f = IntPoly::from_i64(&[1, 0, 0, 0, 1]);
    assert_eq!(factor_rational(&f).unwrap(), vec![(f.clone(), 1)]);

    // error contracts of the arithmetic layer
    assert!(matches!(
        vp(&BigInt::zero(), 7),
        Err(Error::ValuationOfZero)
    ));
    assert!(mult_order(&BigInt::from(22), 11, 1).is_err()); // a ≡ 0 mod p
    assert!(mult_order(&BigInt::one(), 11, 1).is_err()); // |a| = 1
    assert!(mult_order(&BigInt::from(5), 2, 1).is_err()); // p = 2 excluded
    assert!(roots_mod_p(&cat_poly(), 1 << 20).is_err()); // prime cap
    assert!(hensel_lift(&cat_poly(), 11, 4, 2).is_err()); // not a root
    assert!(matches!(
        hensel_lift(&IntPoly::from_i64(&[1, -2, 1]), 11, 1, 2),
        Err(Error::SingularDerivative { .. })
    )); // repeated root
    let spec = RecurrenceSpec::induced_by_poly(&IntPoly::from_i64(&[-6, 5, 1])).unwrap();
    assert!(matches!(
        lrs_period_bruteforce(&spec, 3, 100),
        Err(Error::NonCoprimeModulus { .. })
    ));
    c.pass();
}
