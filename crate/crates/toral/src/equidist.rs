//! Measure-level verification: box counts of empirical orbit measures
//! against Haar measure, the cell-occupancy invariant behind the minimum
//! gap, the sphere-packing upper bound, and the density bound
//! count/T ≤ C₁·d^{-n}·Leb(box)/T with C₁ = 4^n·n^{n/2}.
//!
//! Box membership is decided in exact integer arithmetic (compare u·g with
//! i·m), so reports are bit-reproducible; π and ω_n enter only float-side
//! report checks with a fixed 1e-12 slack.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::orbit::{orbit_bruteforce, ConstructOptions, OrbitRecord, TorusPoint};

/// Hard cap on the number of grid boxes in a report.
pub const GRID_CELL_CAP: u64 = 1 << 24;

/// Float slack for the ω_n-based packing check.
pub const PACKING_SLACK: f64 = 1e-12;

/// Per-box occupation counts of an orbit on a g×...×g grid.
#[derive(Clone, Debug)]
pub struct BoxMeasureReport {
    pub grid: u32,
    pub counts: Vec<u64>,
    pub period: u64,
    /// max over boxes of |count/T - g^{-n}|.
    pub max_dev: f64,
    pub level: Option<u32>,
}

/// Volume of the n-dimensional unit ball, π^{n/2}/Γ(n/2+1).
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut gamma = 1.0f64; // Γ(1) running value for even n, Γ(1/2)·... for odd
    let mut t = if n.is_multiple_of(2) {
        1.0
    } else {
        gamma = std::f64::consts::PI.sqrt();
        0.5
    };
    while t < n as f64 / 2.0 + 0.5 {
        gamma *= t;
        t += 1.0;
    }
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma
}

fn materialized_points(orbit: &OrbitRecord) -> Result<&[TorusPoint]> {
    orbit
        .points
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("orbit points are not materialized".into()))
}

fn box_index(point: &TorusPoint, g: u32) -> Vec<u64> {
    let m = point.denom();
    let gb = BigInt::from(g);
    point
        .coords()
        .iter()
        .map(|u| ((u * &gb).div_floor(m)).to_u64().unwrap())
        .collect()
}

/// Exact per-box counts of the orbit points over the half-open grid boxes
/// [i/g, (i+1)/g)^n.
pub fn box_counts(orbit: &OrbitRecord, g: u32) -> Result<BoxMeasureReport> {
    if g == 0 {
        return Err(Error::InvalidInput("grid side must be ≥ 1".into()));
    }
    let points = materialized_points(orbit)?;
    let n = orbit.dim();
    let total = (g as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= GRID_CELL_CAP);
    let Some(total) = total else {
        return Err(Error::InvalidInput(format!(
            "grid {g}^{n} exceeds the cell cap"
        )));
    };
    let mut counts = vec![0u64; total as usize];
    for p in points {
        let idx = box_index(p, g);
        let flat = idx.iter().fold(0u64, |acc, &i| acc * g as u64 + i);
        counts[flat as usize] += 1;
    }
    let t = points.len() as u64;
    debug_assert_eq!(counts.iter().sum::<u64>(), t);
    let haar = 1.0 / total as f64;
    let max_dev = counts
        .iter()
        .map(|&c| (c as f64 / t as f64 - haar).abs())
        .fold(0.0, f64::max);
    Ok(BoxMeasureReport {
        grid: g,
        counts,
        period: t,
        max_dev,
        level: orbit.level,
    })
}

/// Every axis-aligned cube with diameter < d(O) contains at most one orbit
/// point. Checked by bucketing at the coarsest grid whose cell diagonal is
/// exactly below d (integer comparison n·den < g²·num); a failure falsifies
/// the recorded d².
pub fn cell_occupancy_check(orbit: &OrbitRecord) -> Result<bool> {
    if orbit.period.is_one() {
        return Ok(true);
    }
    let points = materialized_points(orbit)?;
    let d_sq = orbit
        .d_sq
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("exact d² required".into()))?;
    let n = orbit.dim();
    // smallest g with (1/g)²·n < d², i.e. g² · num > n · den
    let target = BigInt::from(n as u64) * d_sq.denom();
    let mut g = (target.clone() / d_sq.numer()).sqrt();
    while &g * &g * d_sq.numer() <= target {
        g += 1;
    }
    let g64 = match g.to_u64() {
        Some(v) => v,
        None => return Err(Error::InvalidInput("grid too fine to index".into())),
    };
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    for p in points {
        let m = p.denom();
        let gb = BigInt::from(g64);
        let idx: Vec<u64> = p
            .coords()
            .iter()
            .map(|u| ((u * &gb).div_floor(m)).mod_floor(&gb).to_u64().unwrap())
            .collect();
        if seen.insert(idx, ()).is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sphere-packing bound: T·(d/2)^n·ω_n ≤ 1, with ω_n the unit-ball volume.
/// Evaluated in floating point with 1e-12 slack from the exact d².
pub fn packing_bound_check(orbit: &OrbitRecord) -> Result<bool> {
    if orbit.period <= num_bigint::BigUint::one() {
        return Err(Error::InvalidInput("packing bound needs T ≥ 2".into()));
    }
    let d_sq = orbit
        .d_sq_f64()
        .ok_or_else(|| Error::InvalidInput("exact d² required".into()))?;
    let n = orbit.dim();
    let t = orbit.period_f64();
    let lhs = t * (d_sq / 4.0).powf(n as f64 / 2.0) * unit_ball_volume(n);
    Ok(lhs <= 1.0 + PACKING_SLACK)
}

/// Density bound from the cell-counting argument: every grid box at side 1/g
/// holds at most C₁·d^{-n}·g^{-n} points, C₁ = 4^n·n^{n/2}. Checked exactly
/// in the squared form count²·g^{2n}·(d²)^n ≤ 16^n·n^n.
pub fn density_bound_check(orbit: &OrbitRecord, g: u32) -> Result<bool> {
    if orbit.period <= num_bigint::BigUint::one() {
        return Err(Error::InvalidInput("density bound needs T ≥ 2".into()));
    }
    let d_sq = orbit
        .d_sq
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("exact d² required".into()))?;
    let report = box_counts(orbit, g)?;
    let n = orbit.dim() as u32;
    let rhs = BigInt::from(16u64).pow(n) * BigInt::from(n as u64).pow(n) * d_sq.denom().pow(n);
    let g2n = BigInt::from(g as u64).pow(2 * n);
    for &count in &report.counts {
        let lhs = BigInt::from(count) * BigInt::from(count) * &g2n * d_sq.numer().pow(n);
        if lhs > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Max-deviation trend across a sequence of orbit records.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub grid: u32,
    pub rows: Vec<BoxMeasureReport>,
    /// Coarse trend assertion: deepest-level deviation below the first.
    pub improved: bool,
}

/// Tabulate box deviations per record and assert the weak trend
/// max_dev(last) < max_dev(first). The rate itself is reported, not
/// asserted.
pub fn convergence_report(records: &[OrbitRecord], g: u32) -> Result<ConvergenceReport> {
    if records.len() < 2 {
        return Err(Error::InvalidInput(
            "convergence report needs at least two records".into(),
        ));
    }
    let rows: Vec<BoxMeasureReport> = records
        .iter()
        .map(|r| box_counts(r, g))
        .collect::<Result<_>>()?;
    let improved = rows.last().unwrap().max_dev < rows[0].max_dev;
    Ok(ConvergenceReport {
        grid: g,
        rows,
        improved,
    })
}

/// One orbit of the demonstration scan for non-ergodic matrices.
#[derive(Clone, Debug)]
pub struct DemoOrbitRow {
    pub denominator: u64,
    pub period: u64,
    pub max_dev: f64,
}

/// Demonstration-only report for non-ergodic matrices: exhaust all rational
/// points with denominators up to the cap, collect the distinct cycles, and
/// tabulate their box deviations. No convergence assertion is made (and none
/// can hold).
pub fn nonergodic_demo(a: &IntMatrix, max_denominator: u64, g: u32) -> Result<Vec<DemoOrbitRow>> {
    let n = a.dim();
    let opts = ConstructOptions::default();
    let mut seen_bases: Vec<TorusPoint> = Vec::new();
    let mut rows = Vec::new();
    for den in 1..=max_denominator {
        let total = (den as u128).pow(n as u32);
        if total > 1 << 20 {
            break;
        }
        for code in 0..total {
            let mut c = code;
            let mut u = Vec::with_capacity(n);
            for _ in 0..n {
                u.push(BigInt::from((c % den as u128) as u64));
                c /= den as u128;
            }
            // primitive points only, so each torus point appears at exactly
            // one denominator of the scan
            let mut gcd = BigInt::from(den);
            for x in &u {
                gcd = gcd.gcd(x);
            }
            if !gcd.is_one() && den > 1 {
                continue;
            }
            let start = TorusPoint::new(u, BigInt::from(den))?;
            let (_, rec) = orbit_bruteforce(a, &start, &opts)?;
            if seen_bases
                .iter()
                .any(|b| rec.points.as_ref().unwrap().contains(b))
            {
                continue;
            }
            seen_bases.push(rec.base.clone());
            let report = box_counts(&rec, g)?;
            rows.push(DemoOrbitRow {
                denominator: den,
                period: report.period,
                max_dev: report.max_dev,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Rat;
    use crate::modular::find_split_primes;
    use crate::orbit::{construct_irreducible, Construction};
    use crate::poly::IntPoly;
    use num_bigint::BigUint;
    use num_traits::{One, Zero};

    fn level1_orbit() -> OrbitRecord {
        let f = IntPoly::from_i64(&[1, -3, 1]);
        let cert = find_split_primes(&f, 1, 3, 1000).unwrap().remove(0);
        construct_irreducible(&f, &cert, 1, &ConstructOptions::default()).unwrap()
    }

    fn fixed_point_record() -> OrbitRecord {
        let base = TorusPoint::new(vec![BigInt::zero(), BigInt::zero()], BigInt::one()).unwrap();
        OrbitRecord {
            base: base.clone(),
            period: BigUint::one(),
            points: Some(vec![base]),
            d_sq: None,
            d_exact: true,
            construction: Construction::Bruteforce,
            level: None,
            prime_data: vec![],
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn box_counts_trivial_grid() {
        let rec = level1_orbit();
        let report = box_counts(&rec, 1).unwrap();
        assert_eq!(report.counts, vec![5]);
        assert_eq!(report.max_dev, 0.0);
    }

    #[test]
    fn box_counts_fixed_point_in_corner() {
        let report = box_counts(&fixed_point_record(), 2).unwrap();
        assert_eq!(report.counts.iter().sum::<u64>(), 1);
        assert_eq!(report.counts[0], 1);
        assert!((report.max_dev - 0.75).abs() < 1e-12);
    }

    #[test]
    fn box_counts_conservation() {
        let rec = level1_orbit();
        for g in [1u32, 2, 3, 4, 7] {
            let report = box_counts(&rec, g).unwrap();
            assert_eq!(report.counts.iter().sum::<u64>(), 5, "g = {g}");
        }
    }

    #[test]
    fn cell_occupancy_holds_for_construction() {
        assert!(cell_occupancy_check(&level1_orbit()).unwrap());
        assert!(cell_occupancy_check(&fixed_point_record()).unwrap());
    }

    #[test]
    fn cell_occupancy_falsifies_corrupted_gap() {
        let mut rec = level1_orbit();
        // quadruple the claimed d² (doubling d): cells grow past true gaps
        rec.d_sq = rec.d_sq.map(|d| d * Rat::from_integer(BigInt::from(16)));
        assert!(!cell_occupancy_check(&rec).unwrap());
    }

    #[test]
    fn packing_bound_examples() {
        // 3-cycle of the doubling/cat orbit at denominator 2: 3π/16 ≤ 1
        let a = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        let start = TorusPoint::new(vec![BigInt::one(), BigInt::zero()], BigInt::from(2)).unwrap();
        let (_, rec) = orbit_bruteforce(&a, &start, &ConstructOptions::default()).unwrap();
        assert!(packing_bound_check(&rec).unwrap());
        assert!(packing_bound_check(&level1_orbit()).unwrap());

        let mut fake = level1_orbit();
        fake.d_sq = Some(Rat::new(BigInt::one(), BigInt::from(2)));
        assert!(!packing_bound_check(&fake).unwrap());
    }

    #[test]
    fn density_bound_examples() {
        let rec = level1_orbit();
        assert!(density_bound_check(&rec, 2).unwrap());
        assert!(density_bound_check(&rec, 4).unwrap());
        let mut fake = rec.clone();
        // an absurdly large claimed gap forces the bound below 1 point/box
        fake.d_sq = Some(Rat::new(BigInt::from(1000), BigInt::one()));
        assert!(!density_bound_check(&fake, 2).unwrap());
    }

    #[test]
    fn density_bound_on_exact_lattice() {
        // 25 points at spacing exactly d = 1/5: the tightest regular layout
        let mut points = Vec::new();
        for i in 0..5i64 {
            for j in 0..5i64 {
                points.push(
                    TorusPoint::new(vec![BigInt::from(i), BigInt::from(j)], BigInt::from(5))
                        .unwrap(),
                );
            }
        }
        let rec = OrbitRecord {
            base: points[0].clone(),
            period: BigUint::from(25u32),
            points: Some(points),
            d_sq: Some(Rat::new(BigInt::one(), BigInt::from(25))),
            d_exact: true,
            construction: Construction::Bruteforce,
            level: None,
            prime_data: vec![],
        };
        assert!(cell_occupancy_check(&rec).unwrap());
        for g in [1u32, 2, 5] {
            assert!(density_bound_check(&rec, g).unwrap(), "g = {g}");
        }
    }

    #[test]
    fn convergence_needs_two_records() {
        assert!(convergence_report(&[level1_orbit()], 4).is_err());
    }

    #[test]
    fn nonergodic_rotation_demo_stays_far_from_haar() {
        let rot = IntMatrix::from_i64(&[&[0, -1], &[1, 0]]);
        let rows = nonergodic_demo(&rot, 4, 4).unwrap();
        assert!(!rows.is_empty());
        // every orbit of the order-4 rotation has period dividing 4, so on
        // a 4×4 grid some box holds ≥ 1/4 of the mass: dev ≥ 1/4 - 1/16
        for row in &rows {
            assert!(4 % row.period == 0, "period {} must divide 4", row.period);
            assert!(
                row.max_dev >= 3.0 / 16.0 - 1e-12,
                "max_dev = {}",
                row.max_dev
            );
        }
    }
}
