//! Exact rational periodic-orbit machinery: eigenvector points modulo prime
//! powers, the irreducible / prime-power / general constructions, exact
//! periods and minimum gaps, conjugation pull-back, and the wedge-invariant
//! distance certificate.
//!
//! Every period and every squared distance in this module is an exact
//! integer or rational; floats appear only in report fields.

use std::collections::{BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::{
    companion, krylov, primary_decomposition, rat_invert, require_ergodic, IntMatrix, Rat,
};
use crate::modular::{hensel_lift, vp, OrderProfile, SplitPrimeCert, DEFAULT_SCAN_CAP};
use crate::poly::IntPoly;

/// Orbits longer than this are not materialized point by point.
pub const MATERIALIZE_CAP: u64 = 1_000_000;

/// All-pairs minimum-gap scan is used up to this many points; beyond it the
/// bucketed neighbor scan takes over.
pub const ALL_PAIRS_CAP: usize = 20_000;

/// A rational point of the n-torus: integer coordinates over a shared
/// denominator, canonical in [0, m).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    u: Vec<BigInt>,
    m: BigInt,
}

impl TorusPoint {
    pub fn new(u: Vec<BigInt>, m: BigInt) -> Result<TorusPoint> {
        if m.sign() != num_bigint::Sign::Plus {
            return Err(Error::InvalidInput("denominator must be positive".into()));
        }
        let u = u.into_iter().map(|x| x.mod_floor(&m)).collect();
        Ok(TorusPoint { u, m })
    }

    /// Build from rational coordinates, rescaling to the denominator lcm.
    pub fn from_rationals(coords: &[Rat]) -> Result<TorusPoint> {
        let mut m = BigInt::one();
        for c in coords {
            m = m.lcm(c.denom());
        }
        let u = coords
            .iter()
            .map(|c| (c.numer() * &m / c.denom()).mod_floor(&m))
            .collect();
        TorusPoint::new(u, m)
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.u
    }

    pub fn denom(&self) -> &BigInt {
        &self.m
    }

    /// Same point with denominator scaled to a multiple of the current one.
    pub fn rescale(&self, m: &BigInt) -> Result<TorusPoint> {
        let (q, r) = m.div_rem(&self.m);
        if !r.is_zero() || q.sign() != num_bigint::Sign::Plus {
            return Err(Error::InvalidInput(format!(
                "cannot rescale denominator {} to {m}",
                self.m
            )));
        }
        TorusPoint::new(self.u.iter().map(|x| x * &q).collect(), m.clone())
    }

    /// One step of the torus endomorphism: u ↦ A·u mod m.
    pub fn step(&self, a: &IntMatrix) -> TorusPoint {
        TorusPoint {
            u: a.mul_col_mod(&self.u, &self.m),
            m: self.m.clone(),
        }
    }
}

impl std::fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({})/{}",
            self.u
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", "),
            self.m
        )
    }
}

impl std::fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

/// Exact squared torus distance: Σ min(δ_i, m-δ_i)² / m² after rescaling to
/// a common denominator.
pub fn torus_dist_sq(x: &TorusPoint, y: &TorusPoint) -> Result<Rat> {
    let m = x.m.lcm(&y.m);
    let xs = x.rescale(&m)?;
    let ys = y.rescale(&m)?;
    let mut num = BigInt::zero();
    for (a, b) in xs.u.iter().zip(&ys.u) {
        let d = (a - b).mod_floor(&m);
        let w = (&m - &d).min(d);
        num += &w * &w;
    }
    Ok(Rat::new(num, &m * &m))
}

/// How an orbit record was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    Irreducible,
    PrimePower,
    General,
    Bruteforce,
    PulledBack,
}

impl Construction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Construction::Irreducible => "irreducible",
            Construction::PrimePower => "prime-power",
            Construction::General => "general",
            Construction::Bruteforce => "bruteforce",
            Construction::PulledBack => "pulled-back",
        }
    }
}

/// One split prime with its level and the lifted eigenvalue used.
#[derive(Clone, Debug)]
pub struct PrimeAssignment {
    pub p: u64,
    pub k: u32,
    pub root: BigInt,
}

/// Provenance of one block of a construction.
#[derive(Clone, Debug)]
pub struct BlockProvenance {
    pub poly: IntPoly,
    pub primes: Vec<PrimeAssignment>,
}

/// A certified periodic orbit with exact metric data.
#[derive(Clone, Debug)]
pub struct OrbitRecord {
    pub base: TorusPoint,
    pub period: BigUint,
    /// All orbit points (present iff the period is at most the cap).
    pub points: Option<Vec<TorusPoint>>,
    /// Exact squared minimum gap; `None` for fixed points or when the orbit
    /// was not materialized.
    pub d_sq: Option<Rat>,
    pub d_exact: bool,
    pub construction: Construction,
    pub level: Option<u32>,
    pub prime_data: Vec<BlockProvenance>,
}

impl OrbitRecord {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn period_f64(&self) -> f64 {
        self.period.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn d_sq_f64(&self) -> Option<f64> {
        self.d_sq.as_ref().map(rat_to_f64)
    }

    /// d(O)^n · T(O) as a float (n = torus dimension).
    pub fn metric_float(&self) -> Option<f64> {
        let d_sq = self.d_sq_f64()?;
        Some(d_sq.powf(self.dim() as f64 / 2.0) * self.period_f64())
    }

    /// d(O)^n · T(O) as an exact rational, available when n is even.
    pub fn metric_exact(&self) -> Option<Rat> {
        let d_sq = self.d_sq.clone()?;
        let n = self.dim();
        if !n.is_multiple_of(2) {
            return None;
        }
        let mut out = Rat::from_integer(BigInt::from(
            self.period.to_u64().expect("materialized period fits u64"),
        ));
        for _ in 0..n / 2 {
            out *= &d_sq;
        }
        Some(out)
    }

    /// Certify the period: A^T·base ≡ base and A^{T/q}·base ≢ base for every
    /// prime q | T.
    pub fn verify_period(&self, a: &IntMatrix) -> Result<()> {
        let m = self.base.denom();
        let t = &self.period;
        let back = a.pow_mod(t, m).mul_col_mod(self.base.coords(), m);
        if back != self.base.coords() {
            return Err(Error::ContractViolation(format!(
                "A^{t}·x ≢ x for claimed period"
            )));
        }
        for q in factor_distinct_primes(t)? {
            let e = t / BigUint::from(q);
            let part = a.pow_mod(&e, m).mul_col_mod(self.base.coords(), m);
            if part == self.base.coords() {
                return Err(Error::ContractViolation(format!(
                    "period not minimal: A^{e}·x ≡ x with {e} = T/{q}"
                )));
            }
        }
        Ok(())
    }
}

fn rat_to_f64(r: &Rat) -> f64 {
    // num/den may individually overflow f64 range; scale both down together
    let num = r.numer();
    let den = r.denom();
    let shift = (num.bits().max(den.bits()) as i64 - 500).max(0) as u64;
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Distinct prime factors of a period. Our periods only carry prime factors
/// below 2^20 (orders divide d·p^j with d | p-1), so trial division is
/// complete; anything else is reported, not silently misfactored.
fn factor_distinct_primes(t: &BigUint) -> Result<Vec<u64>> {
    let mut rest = t.clone();
    let mut out = Vec::new();
    let mut divide_out = |rest: &mut BigUint, p: u64| {
        let pb = BigUint::from(p);
        if (&*rest % &pb).is_zero() {
            out.push(p);
            while (&*rest % &pb).is_zero() {
                *rest /= &pb;
            }
        }
    };
    divide_out(&mut rest, 2);
    let mut p = 3u64;
    while BigUint::from(p) * BigUint::from(p) <= rest && p < (1 << 20) {
        divide_out(&mut rest, p);
        p += 2;
    }
    if rest > BigUint::one() {
        match rest.to_u64() {
            Some(r) if crate::modular::is_prime(r) => out.push(r),
            _ => {
                return Err(Error::ContractViolation(format!(
                    "period factor {rest} exceeds the factorization cap"
                )))
            }
        }
    }
    Ok(out)
}

/// Tunables shared by the orbit constructions.
#[derive(Clone, Debug)]
pub struct ConstructOptions {
    pub p_min: u64,
    /// Force this prime for the first slot of the first block.
    pub prime_override: Option<u64>,
    pub scan_cap: u64,
    pub materialize_cap: u64,
    /// Iteration cap for brute-force orbit detection; `None` means the state
    /// space bound m^n (saturating).
    pub iter_cap: Option<u64>,
    /// Re-derive analytic periods by brute iteration where feasible.
    pub brute_verify: bool,
    /// Worker threads for the all-pairs minimum-gap scan.
    pub jobs: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            p_min: 3,
            prime_override: None,
            scan_cap: DEFAULT_SCAN_CAP,
            materialize_cap: MATERIALIZE_CAP,
            iter_cap: None,
            brute_verify: false,
            jobs: 1,
        }
    }
}

// ---- minimum gap ----

/// Exact minimum squared torus distance over all distinct pairs.
pub fn min_gap(points: &[TorusPoint]) -> Result<Rat> {
    min_gap_opts(points, None, 1)
}

/// `hint_cells`, when given, seeds the bucket grid with the predicted gap;
/// correctness never depends on it. `jobs` parallelizes the all-pairs path.
pub fn min_gap_opts(points: &[TorusPoint], hint_cells: Option<u64>, jobs: usize) -> Result<Rat> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "min gap needs at least 2 points".into(),
        ));
    }
    let m = &points[0].m;
    if points.iter().any(|p| &p.m != m) {
        return Err(Error::InvalidInput(
            "points must share a common denominator".into(),
        ));
    }
    let m_sq = Rat::new(BigInt::one(), m * m);
    if let Some(m_u64) = m.to_u64() {
        let pts: Vec<Vec<u64>> = points
            .iter()
            .map(|p| p.u.iter().map(|x| x.to_u64().unwrap()).collect())
            .collect();
        let num = if pts.len() <= ALL_PAIRS_CAP {
            min_gap_all_pairs_u64(&pts, m_u64, jobs)
        } else {
            min_gap_bucketed_u64(&pts, m_u64, hint_cells)
        };
        return Ok(Rat::from_integer(BigInt::from(num)) * m_sq);
    }
    // huge denominators: exact BigInt all-pairs
    let mut best: Option<BigInt> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let mut num = BigInt::zero();
            for (a, b) in points[i].u.iter().zip(&points[j].u) {
                let d = (a - b).mod_floor(m);
                let w = (m - &d).min(d);
                num += &w * &w;
            }
            if best.as_ref().is_none_or(|b| &num < b) {
                best = Some(num);
            }
        }
    }
    Ok(Rat::from_integer(best.unwrap()) * m_sq)
}

fn pair_dist_sq_u64(a: &[u64], b: &[u64], m: u64) -> u128 {
    let mut acc = 0u128;
    for (&x, &y) in a.iter().zip(b) {
        let d = x.abs_diff(y);
        let w = d.min(m - d) as u128;
        acc += w * w;
    }
    acc
}

fn min_gap_all_pairs_u64(pts: &[Vec<u64>], m: u64, jobs: usize) -> u128 {
    let scan = |range: std::ops::Range<usize>| {
        let mut best = u128::MAX;
        for i in range {
            for j in i + 1..pts.len() {
                best = best.min(pair_dist_sq_u64(&pts[i], &pts[j], m));
            }
        }
        best
    };
    if jobs <= 1 || pts.len() < 512 {
        return scan(0..pts.len());
    }
    std::thread::scope(|s| {
        let chunk = pts.len().div_ceil(jobs);
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let range = (w * chunk).min(pts.len())..((w + 1) * chunk).min(pts.len());
                s.spawn(move || scan(range))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap())
            .min()
            .unwrap()
    })
}

/// Neighbor-cell scan on a g^n grid. Any pair not compared lives in cells at
/// cyclic index distance ≥ 2 somewhere, hence is farther apart than m/g; so
/// a candidate minimum ≤ (m/g)² is certified. Otherwise the grid coarsens
/// and the scan repeats (g = 1 degenerates to all-pairs).
fn min_gap_bucketed_u64(pts: &[Vec<u64>], m: u64, hint_cells: Option<u64>) -> u128 {
    let n = pts[0].len();
    let default_g = (pts.len() as f64).sqrt().ceil() as u64;
    let mut g = hint_cells.unwrap_or(default_g).clamp(1, m);
    loop {
        let mut cells: HashMap<Vec<u64>, Vec<u32>> = HashMap::new();
        for (i, p) in pts.iter().enumerate() {
            let key: Vec<u64> = p
                .iter()
                .map(|&u| ((u as u128 * g as u128) / m as u128) as u64)
                .collect();
            cells.entry(key).or_default().push(i as u32);
        }
        let mut best = u128::MAX;
        let offsets = neighbor_offsets(n);
        for (key, members) in &cells {
            for (ai, &a) in members.iter().enumerate() {
                for &b in &members[ai + 1..] {
                    best = best.min(pair_dist_sq_u64(&pts[a as usize], &pts[b as usize], m));
                }
            }
            for off in &offsets {
                let nk: Vec<u64> = key
                    .iter()
                    .zip(off)
                    .map(|(&c, &o)| (c as i64 + o).rem_euclid(g as i64) as u64)
                    .collect();
                if nk <= *key {
                    continue; // each unordered cell pair once
                }
                if let Some(others) = cells.get(&nk) {
                    for &a in members {
                        for &b in others {
                            best =
                                best.min(pair_dist_sq_u64(&pts[a as usize], &pts[b as usize], m));
                        }
                    }
                }
            }
        }
        let side = (m / g) as u128;
        if best <= side * side {
            return best;
        }
        if g == 1 {
            return best; // all pairs were compared
        }
        g = (g / 2).max(1);
    }
}

fn neighbor_offsets(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut off = Vec::with_capacity(n);
        for _ in 0..n {
            off.push((c % 3) as i64 - 1);
            c /= 3;
        }
        if off.iter().any(|&o| o != 0) {
            out.push(off);
        }
    }
    out
}

// ---- brute-force orbits ----

/// Iterate u ↦ A·u mod m until the trajectory re-enters itself; returns the
/// preperiod length and the certified cycle. Non-invertible endomorphisms
/// can have a genuine preperiod.
pub fn orbit_bruteforce(
    a: &IntMatrix,
    x: &TorusPoint,
    opts: &ConstructOptions,
) -> Result<(u64, OrbitRecord)> {
    let cap = opts.iter_cap.unwrap_or_else(|| {
        let mut cap = 1u64;
        for _ in 0..x.dim() {
            cap = cap.saturating_mul(x.m.to_u64().unwrap_or(u64::MAX));
        }
        cap.min(100_000_000)
    });
    let mut seen: HashMap<Vec<BigInt>, u64> = HashMap::new();
    let mut trail: Vec<TorusPoint> = Vec::new();
    let mut cur = x.clone();
    for step in 0..=cap {
        if let Some(&first) = seen.get(&cur.u) {
            let cycle: Vec<TorusPoint> = trail[first as usize..].to_vec();
            let period = step - first;
            let d_sq = if cycle.len() >= 2 {
                Some(min_gap_opts(&cycle, None, opts.jobs)?)
            } else {
                None
            };
            // d is exact either way; the point list is only kept at
            // reportable sizes
            let base = cycle[0].clone();
            let points = if period <= opts.materialize_cap {
                Some(cycle)
            } else {
                None
            };
            let record = OrbitRecord {
                base,
                period: BigUint::from(period),
                points,
                d_sq,
                d_exact: true,
                construction: Construction::Bruteforce,
                level: None,
                prime_data: vec![],
            };
            return Ok((first, record));
        }
        seen.insert(cur.u.clone(), step);
        trail.push(cur.clone());
        cur = cur.step(a);
    }
    Err(Error::IterationCap { cap })
}

// ---- eigen points and the irreducible construction ----

/// The eigenvector point w = (1, b, b², ..., b^{n-1})/p^k of the companion
/// matrix of f, where f(b) ≡ 0 mod p^k. Checks B·w ≡ b·w mod p^k.
pub fn eigen_point(f: &IntPoly, p: u64, k: u32, b: &BigInt) -> Result<TorusPoint> {
    let n = f.degree();
    let pk = BigInt::from(p).pow(k);
    if !f.eval_mod(b, &pk).is_zero() {
        return Err(Error::InvalidInput(format!(
            "{b} is not a root of f mod {p}^{k}"
        )));
    }
    let mut w = Vec::with_capacity(n);
    let mut cur = BigInt::one();
    for _ in 0..n {
        w.push(cur.clone());
        cur = (cur * b).mod_floor(&pk);
    }
    let point = TorusPoint::new(w, pk.clone())?;
    let bmat = companion(f)?;
    let bw = bmat.mul_col_mod(point.coords(), &pk);
    let scaled: Vec<BigInt> = point
        .coords()
        .iter()
        .map(|x| (x * b).mod_floor(&pk))
        .collect();
    if bw != scaled {
        return Err(Error::ContractViolation(format!(
            "eigen relation B·w ≡ {b}·w mod {p}^{k} failed (bad lift?)"
        )));
    }
    Ok(point)
}

/// Materialize `t` orbit points of `a` from `base` (caller guarantees the
/// period), asserting the orbit closes.
fn materialize_orbit(a: &IntMatrix, base: &TorusPoint, t: u64) -> Result<Vec<TorusPoint>> {
    let mut pts = Vec::with_capacity(t as usize);
    let mut cur = base.clone();
    for _ in 0..t {
        pts.push(cur.clone());
        cur = cur.step(a);
    }
    if &cur != base {
        return Err(Error::ContractViolation(
            "orbit did not close after the claimed period".into(),
        ));
    }
    Ok(pts)
}

/// Squared Frobenius-norm constant C₀² = (Π_{i=1}^{n-1} ‖B^i‖²)⁻¹ feeding
/// the analytic gap lower bound d(O)^n ≥ C₀·p^{-k}.
pub fn distance_constant_sq(b: &IntMatrix) -> Rat {
    let n = b.dim();
    let mut denom = BigInt::one();
    let mut pow = IntMatrix::identity(n);
    for _ in 1..n {
        pow = pow.mul(b);
        denom *= pow.frobenius_norm_sq();
    }
    Rat::new(BigInt::one(), denom)
}

/// Orbit of an eigenvector point of the companion matrix of f at level k.
/// Lifts every certified root, computes each candidate period as the
/// multiplicative order of the lifted root, and keeps the candidate
/// maximizing v_p(T) (ties broken by smallest root).
pub fn construct_irreducible(
    f: &IntPoly,
    cert: &SplitPrimeCert,
    k: u32,
    opts: &ConstructOptions,
) -> Result<OrbitRecord> {
    cert.verify(f)?;
    if let Some(m) = f.root_of_unity_factor() {
        return Err(Error::NonErgodic {
            reason: format!("f is divisible by the {m}-th cyclotomic polynomial"),
        });
    }
    let p = cert.p;
    let n = f.degree();
    let mut chosen: Option<(BigInt, BigUint, u32)> = None;
    for &root in &cert.roots {
        let b = hensel_lift(f, p, root, k)?;
        // b = 1 is an exact eigenvalue 1 mod p^k: the point is fixed
        let (ord, v) = if b.is_one() {
            (BigUint::one(), 0)
        } else {
            let ord = OrderProfile::compute(&b, p)?.order_mod_pk(k);
            let v = vp(&BigInt::from(ord.clone()), p)?;
            (ord, v)
        };
        let better = match &chosen {
            None => true,
            Some((bb, _, bv)) => v > *bv || (v == *bv && &b < bb),
        };
        if better {
            chosen = Some((b, ord, v));
        }
    }
    let (b, period, _) = chosen.expect("certificate has at least one root");
    let base = eigen_point(f, p, k, &b)?;
    let bmat = companion(f)?;

    let (points, d_sq, d_exact) = match period.to_u64() {
        Some(t) if t <= opts.materialize_cap => {
            let pts = materialize_orbit(&bmat, &base, t)?;
            let d = if t >= 2 {
                let hint = gap_hint_cells(&bmat, p, k, n);
                Some(min_gap_opts(&pts, hint, opts.jobs)?)
            } else {
                None
            };
            (Some(pts), d, true)
        }
        _ => (None, None, false),
    };

    let record = OrbitRecord {
        base,
        period,
        points,
        d_sq,
        d_exact,
        construction: Construction::Irreducible,
        level: Some(k),
        prime_data: vec![BlockProvenance {
            poly: f.clone(),
            primes: vec![PrimeAssignment { p, k, root: b }],
        }],
    };
    record.verify_period(&bmat)?;
    if opts.brute_verify {
        brute_verify_period(&bmat, &record, opts)?;
    }
    Ok(record)
}

/// Predicted cell count per axis from the analytic bound d² ≥ (C₀²p^{-2k})^{1/n}.
fn gap_hint_cells(b: &IntMatrix, p: u64, k: u32, n: usize) -> Option<u64> {
    let c0_sq = rat_to_f64(&distance_constant_sq(b));
    let d_sq = (c0_sq * (p as f64).powi(-2 * k as i32)).powf(1.0 / n as f64);
    if d_sq <= 0.0 {
        return None;
    }
    Some((1.0 / d_sq.sqrt()) as u64)
}

fn brute_verify_period(a: &IntMatrix, record: &OrbitRecord, opts: &ConstructOptions) -> Result<()> {
    if record.base.denom().to_u64().is_none_or(|m| m > 100_000) {
        return Ok(()); // denominator too large for the brute oracle
    }
    let (_, brute) = orbit_bruteforce(a, &record.base, opts)?;
    if brute.period != record.period {
        return Err(Error::ContractViolation(format!(
            "analytic period {} disagrees with brute-force period {}",
            record.period, brute.period
        )));
    }
    Ok(())
}

// ---- wedge certificate ----

/// I(w) = det(w, Bw, ..., B^{n-1}w), the Krylov volume of w under B.
pub fn wedge_invariant(w: &[BigInt], b: &IntMatrix) -> BigInt {
    let n = b.dim();
    assert_eq!(w.len(), n);
    let mut cols = Vec::with_capacity(n);
    let mut cur = w.to_vec();
    for _ in 0..n {
        cols.push(cur.clone());
        cur = b.mul_col(&cur);
    }
    // columns stacked as rows: determinant is transpose-invariant
    IntMatrix::from_rows(cols).det()
}

#[derive(Clone, Debug)]
pub struct DistanceCertificate {
    pub pairs_checked: usize,
    /// Analytic lower bound for d², as a float report value.
    pub d_sq_lower_bound: f64,
    pub d_sq_ok: bool,
}

/// Check the wedge-divisibility certificate on sampled point pairs of an
/// irreducible-construction orbit: the centered difference a of two orbit
/// points satisfies a ≠ 0, I(a) ≠ 0 and p^{k(n-1)} | I(a). Failure of any
/// assertion falsifies the construction and is a hard error.
pub fn certify_distance_bound(
    orbit: &OrbitRecord,
    b: &IntMatrix,
    p: u64,
    k: u32,
    sample_pairs: usize,
) -> Result<DistanceCertificate> {
    let points = orbit
        .points
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("certificate needs materialized points".into()))?;
    let n = b.dim();
    let pk = BigInt::from(p).pow(k);
    let modulus = BigInt::from(p).pow(k * (n as u32 - 1));
    let half = (&pk - 1) / 2;

    let mut checked = 0usize;
    'outer: for i in 0..points.len() {
        for j in i + 1..points.len() {
            if checked >= sample_pairs {
                break 'outer;
            }
            let a: Vec<BigInt> = points[i]
                .coords()
                .iter()
                .zip(points[j].coords())
                .map(|(x, y)| {
                    let r = (x - y).mod_floor(&pk);
                    if r > half {
                        r - &pk
                    } else {
                        r
                    }
                })
                .collect();
            if a.iter().all(|x| x.is_zero()) {
                return Err(Error::ContractViolation(format!(
                    "orbit points {i} and {j} coincide mod p^k"
                )));
            }
            let inv = wedge_invariant(&a, b);
            if inv.is_zero() {
                return Err(Error::ContractViolation(format!(
                    "I(a) = 0 for pair ({i}, {j})"
                )));
            }
            if !(&inv % &modulus).is_zero() {
                return Err(Error::ContractViolation(format!(
                    "p^(k(n-1)) = {modulus} does not divide I(a) = {inv} for pair ({i}, {j})"
                )));
            }
            checked += 1;
        }
    }

    let c0_sq = rat_to_f64(&distance_constant_sq(b));
    let bound = (c0_sq * (p as f64).powi(-2 * k as i32)).powf(1.0 / n as f64);
    let d_sq = orbit.d_sq_f64();
    let d_sq_ok = match d_sq {
        Some(d) => d >= bound * (1.0 - 1e-12),
        None => true,
    };
    if !d_sq_ok {
        return Err(Error::ContractViolation(format!(
            "exact d² = {:?} violates the analytic lower bound {bound}",
            d_sq
        )));
    }
    Ok(DistanceCertificate {
        pairs_checked: checked,
        d_sq_lower_bound: bound,
        d_sq_ok,
    })
}

// ---- prime-power and general constructions ----

/// Scan for `needed` split primes of g, skipping primes already assigned to
/// other blocks. `force_first` pins the first prime (validated as split).
fn assign_split_primes(
    g: &IntPoly,
    needed: usize,
    opts: &ConstructOptions,
    used: &mut BTreeSet<u64>,
    force_first: Option<u64>,
) -> Result<Vec<SplitPrimeCert>> {
    let mut out: Vec<SplitPrimeCert> = Vec::new();
    let mut cursor = opts.p_min.max(3);
    if let Some(p0) = force_first {
        let certs = crate::modular::find_split_primes(g, 1, p0, opts.scan_cap)?;
        if certs[0].p != p0 {
            return Err(Error::InvalidInput(format!(
                "{p0} is not a split prime for {g}"
            )));
        }
        if used.contains(&p0) {
            return Err(Error::InvalidInput(format!(
                "prime {p0} is already assigned to another block"
            )));
        }
        used.insert(p0);
        cursor = cursor.max(p0 + 2);
        out.push(certs.into_iter().next().unwrap());
    }
    while out.len() < needed {
        let cert = crate::modular::find_split_primes(g, 1, cursor, opts.scan_cap)?
            .into_iter()
            .next()
            .unwrap();
        cursor = cert.p + 2;
        if used.contains(&cert.p) {
            continue;
        }
        used.insert(cert.p);
        out.push(cert);
    }
    Ok(out)
}

/// Balanced exponents across the primes of one block: k₁ = k and k_{i+1} the
/// largest K with p_{i+1}^K ≤ p_i^{k_i} (integer comparison, exactly the
/// floor(k_i·ln p_i / ln p_{i+1}) rule).
fn balanced_exponents(primes_desc: &[u64], k: u32) -> Vec<u32> {
    let mut ks = vec![k];
    for i in 1..primes_desc.len() {
        let target = BigInt::from(primes_desc[i - 1]).pow(ks[i - 1]);
        let p = BigInt::from(primes_desc[i]);
        let mut kk = 1u32;
        while p.clone().pow(kk + 1) <= target {
            kk += 1;
        }
        ks.push(kk);
    }
    ks
}

/// Modulus ∏ p_i^{k_i} of one block at anchor level k.
fn block_modulus(primes_desc: &[u64], k: u32) -> BigInt {
    let ks = balanced_exponents(primes_desc, k);
    primes_desc
        .iter()
        .zip(&ks)
        .fold(BigInt::one(), |acc, (&p, &kk)| {
            acc * BigInt::from(p).pow(kk)
        })
}

/// The Jordan-like frame matrix for g^r: r companion blocks of g on the
/// diagonal, identity blocks on the superdiagonal.
fn prime_power_frame(g: &IntPoly, r: u32) -> Result<IntMatrix> {
    let d = companion(g)?;
    let m = g.degree();
    let n = m * r as usize;
    let mut b = IntMatrix::zero(n);
    for blk in 0..r as usize {
        for i in 0..m {
            for j in 0..m {
                *b.at_mut(blk * m + i, blk * m + j) = d.at(i, j).clone();
            }
            if blk + 1 < r as usize {
                *b.at_mut(blk * m + i, (blk + 1) * m + i) = BigInt::one();
            }
        }
    }
    Ok(b)
}

/// Per-block construction result: the orbit lives on the frame matrix, which
/// is companion(g) for r = 1 and the block-bidiagonal matrix otherwise.
struct BlockConstruction {
    record: OrbitRecord,
    frame: IntMatrix,
    provenance: BlockProvenance,
}

fn construct_block(
    g: &IntPoly,
    r: u32,
    k: u32,
    certs: &[SplitPrimeCert],
    opts: &ConstructOptions,
) -> Result<BlockConstruction> {
    assert_eq!(certs.len(), r as usize);
    if r == 1 {
        let record = construct_irreducible(g, &certs[0], k, opts)?;
        return Ok(BlockConstruction {
            provenance: record.prime_data[0].clone(),
            frame: companion(g)?,
            record,
        });
    }
    // descending primes anchor the exponent balancing at the largest prime
    let mut certs_desc: Vec<&SplitPrimeCert> = certs.iter().collect();
    certs_desc.sort_by_key(|c| std::cmp::Reverse(c.p));
    let primes_desc: Vec<u64> = certs_desc.iter().map(|c| c.p).collect();
    let ks = balanced_exponents(&primes_desc, k);

    let m = g.degree();
    let frame = prime_power_frame(g, r)?;
    let mut assignments = Vec::new();
    let mut block_points = Vec::new();
    for (cert, &kk) in certs_desc.iter().zip(&ks) {
        let sub = construct_irreducible(g, cert, kk, opts)?;
        assignments.push(PrimeAssignment {
            p: cert.p,
            k: kk,
            root: sub.prime_data[0].primes[0].root.clone(),
        });
        block_points.push(sub.base.clone());
    }
    // v = (w₁/p₁^{k₁}, ..., w_r/p_r^{k_r}) over the common denominator
    let modulus = block_points
        .iter()
        .fold(BigInt::one(), |acc, pt| acc * pt.denom());
    let mut coords = Vec::with_capacity(m * r as usize);
    for pt in &block_points {
        let scale = &modulus / pt.denom();
        coords.extend(pt.coords().iter().map(|u| u * &scale));
    }
    let base = TorusPoint::new(coords, modulus)?;

    let (preperiod, mut record) = orbit_bruteforce(&frame, &base, opts)?;
    if preperiod != 0 {
        return Err(Error::ContractViolation(
            "prime-power orbit must be purely periodic (frame is invertible mod the denominator)"
                .into(),
        ));
    }
    record.construction = Construction::PrimePower;
    record.level = Some(k);
    record.prime_data = vec![BlockProvenance {
        poly: g.pow(r),
        primes: assignments.clone(),
    }];
    record.verify_period(&frame)?;
    Ok(BlockConstruction {
        record,
        frame,
        provenance: BlockProvenance {
            poly: g.pow(r),
            primes: assignments,
        },
    })
}

/// Orbit construction for a prime-power characteristic polynomial d = g^r on
/// the block frame matrix (companion blocks + superdiagonal identities).
pub fn construct_prime_power(d: &IntPoly, k: u32, opts: &ConstructOptions) -> Result<OrbitRecord> {
    let factors = crate::poly::factor_rational(d)?;
    if factors.len() != 1 {
        return Err(Error::InvalidInput(
            "prime-power construction needs d = g^r with a single irreducible g".into(),
        ));
    }
    let (g, r) = factors.into_iter().next().unwrap();
    if g.root_of_unity_factor().is_some() {
        return Err(Error::NonErgodic {
            reason: "g has a root of unity among its roots".into(),
        });
    }
    let mut used = BTreeSet::new();
    let certs = assign_split_primes(&g, r as usize, opts, &mut used, opts.prime_override)?;
    Ok(construct_block(&g, r, k, &certs, opts)?.record)
}

/// Everything produced for one level of the general construction.
#[derive(Clone, Debug)]
pub struct GeneralConstruction {
    /// Orbit of the block frame matrix F (the construction frame).
    pub frame_record: OrbitRecord,
    /// Orbit of A, pulled back through the conjugation P·A = F·P.
    pub pulled_record: OrbitRecord,
    pub frame_matrix: IntMatrix,
    pub conjugator: IntMatrix,
    /// Period multiplier T(O_A)/T(O_F), in [1, |det P|].
    pub period_multiplier: BigUint,
}

/// Full pipeline for an arbitrary ergodic endomorphism: primary cyclic
/// decomposition, per-block split primes with pairwise disjoint prime sets,
/// modulus balancing across blocks, per-block eigen orbits, assembly on the
/// block frame, and pull-back to A.
pub fn construct_general(
    a: &IntMatrix,
    k: u32,
    opts: &ConstructOptions,
) -> Result<GeneralConstruction> {
    require_ergodic(a)?;
    let dec = primary_decomposition(a)?;

    // disjoint split primes across blocks, consumed smallest-first per block
    let mut used = BTreeSet::new();
    let mut block_certs = Vec::new();
    for (i, block) in dec.blocks.iter().enumerate() {
        let force = if i == 0 { opts.prime_override } else { None };
        let certs = assign_split_primes(&block.g, block.exponent as usize, opts, &mut used, force)?;
        block_certs.push(certs);
    }

    // anchor levels: block 1 at k, block i+1 balanced by
    // m^{(i+1)}_{k_{i+1}} ≤ (m^{(i)}_{k_i})^{r_{i+1}/r_i} ≤ m^{(i+1)}_{k_{i+1}+1}
    let mut anchors = vec![k];
    for i in 1..dec.blocks.len() {
        let r_prev = dec.blocks[i - 1].d.degree() as u32;
        let r_cur = dec.blocks[i].d.degree() as u32;
        let primes_prev: Vec<u64> = {
            let mut ps: Vec<u64> = block_certs[i - 1].iter().map(|c| c.p).collect();
            ps.sort_by(|a, b| b.cmp(a));
            ps
        };
        let primes_cur: Vec<u64> = {
            let mut ps: Vec<u64> = block_certs[i].iter().map(|c| c.p).collect();
            ps.sort_by(|a, b| b.cmp(a));
            ps
        };
        let target = block_modulus(&primes_prev, anchors[i - 1]).pow(r_cur);
        let mut kk = 1u32;
        while block_modulus(&primes_cur, kk + 1).pow(r_prev) <= target {
            kk += 1;
        }
        anchors.push(kk);
    }

    let mut constructions = Vec::new();
    for ((block, certs), &anchor) in dec.blocks.iter().zip(&block_certs).zip(&anchors) {
        constructions.push(construct_block(
            &block.g,
            block.exponent,
            anchor,
            certs,
            opts,
        )?);
    }

    // frame F = blockdiag(F_i) and the conjugator P with P·A = F·P
    let frame_matrix = IntMatrix::block_diag(
        &constructions
            .iter()
            .map(|c| c.frame.clone())
            .collect::<Vec<_>>(),
    );
    let mut per_block_conj = Vec::new();
    for (block, c) in dec.blocks.iter().zip(&constructions) {
        if block.exponent == 1 {
            per_block_conj.push(IntMatrix::identity(block.d.degree()));
        } else {
            per_block_conj.push(frame_conjugator(&c.frame, &block.matrix)?);
        }
    }
    let conjugator = IntMatrix::block_diag(&per_block_conj).mul(&dec.p);
    if conjugator.mul(a) != frame_matrix.mul(&conjugator) {
        return Err(Error::ContractViolation(
            "conjugation contract P·A = F·P failed".into(),
        ));
    }

    // assemble v on the common denominator of all blocks
    let modulus = constructions
        .iter()
        .fold(BigInt::one(), |acc, c| acc * c.record.base.denom());
    let mut coords = Vec::new();
    for c in &constructions {
        let scale = &modulus / c.record.base.denom();
        coords.extend(c.record.base.coords().iter().map(|u| u * &scale));
    }
    let base = TorusPoint::new(coords, modulus)?;
    let period = constructions
        .iter()
        .fold(BigUint::one(), |acc, c| acc.lcm(&c.record.period));

    let construction_tag = if constructions.len() == 1 {
        constructions[0].record.construction
    } else {
        Construction::General
    };
    let (points, d_sq, d_exact) = match period.to_u64() {
        Some(t) if t <= opts.materialize_cap => {
            let pts = materialize_orbit(&frame_matrix, &base, t)?;
            let d = if t >= 2 {
                Some(min_gap_opts(&pts, None, opts.jobs)?)
            } else {
                None
            };
            (Some(pts), d, true)
        }
        _ => (None, None, false),
    };
    let frame_record = OrbitRecord {
        base,
        period,
        points,
        d_sq,
        d_exact,
        construction: construction_tag,
        level: Some(k),
        prime_data: constructions.iter().map(|c| c.provenance.clone()).collect(),
    };
    frame_record.verify_period(&frame_matrix)?;
    if opts.brute_verify {
        brute_verify_period(&frame_matrix, &frame_record, opts)?;
    }

    let identity = IntMatrix::identity(a.dim());
    let pulled_record = if conjugator == identity {
        frame_record.clone()
    } else {
        pull_back_orbit(&conjugator, &frame_record, &frame_matrix, a, opts)?
    };
    let period_multiplier = &pulled_record.period / &frame_record.period;

    Ok(GeneralConstruction {
        frame_record,
        pulled_record,
        frame_matrix,
        conjugator,
        period_multiplier,
    })
}

/// Integer conjugator P with P·J = F·P, from the inverse of a full-rank
/// Krylov matrix of the frame: R·F = J·R holds for any row vector by
/// Cayley–Hamilton, and R is invertible once the row has a full annihilator.
fn frame_conjugator(frame: &IntMatrix, j_block: &IntMatrix) -> Result<IntMatrix> {
    let n = frame.dim();
    for alpha in generator_candidates(n) {
        let r = krylov(&alpha, frame)?;
        if r.det().is_zero() {
            continue;
        }
        debug_assert_eq!(r.mul(frame), j_block.mul(&r));
        let r_rat: Vec<Vec<Rat>> = r
            .rows()
            .map(|row| row.iter().map(|x| Rat::from_integer(x.clone())).collect())
            .collect();
        let inv = rat_invert(&r_rat).expect("nonzero determinant");
        let rows: Vec<Vec<BigInt>> = {
            // clear the whole matrix by one common scale to keep P integral
            let mut lcm = BigInt::one();
            for row in &inv {
                for x in row {
                    lcm = lcm.lcm(x.denom());
                }
            }
            inv.iter()
                .map(|row| row.iter().map(|x| x.numer() * &lcm / x.denom()).collect())
                .collect()
        };
        let mut p = IntMatrix::from_rows(rows);
        // remove the content for smaller entries
        let mut g = BigInt::zero();
        for r in p.rows() {
            for x in r {
                g = g.gcd(x);
            }
        }
        if !g.is_zero() && !g.is_one() {
            p = IntMatrix::from_rows(
                p.rows()
                    .map(|r| r.iter().map(|x| x / &g).collect())
                    .collect(),
            );
        }
        debug_assert_eq!(p.mul(j_block), frame.mul(&p));
        return Ok(p);
    }
    unreachable!("a full-annihilator row exists for the frame matrix");
}

fn generator_candidates(n: usize) -> impl Iterator<Item = Vec<BigInt>> {
    let basis = (0..n).map(move |i| {
        let mut v = vec![BigInt::zero(); n];
        v[i] = BigInt::one();
        v
    });
    let combos = (0..7u64.pow(n as u32)).filter_map(move |code| {
        let mut v = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            v.push(BigInt::from((c % 7) as i64 - 3));
            c /= 7;
        }
        if v.iter().all(|x| x.is_zero()) {
            None
        } else {
            Some(v)
        }
    });
    basis.chain(combos)
}

/// Pull an orbit of the frame J back to A through P (P·A = J·P, det P ≠ 0):
/// take the exact rational preimage of the base point and run the forward
/// orbit of A to its cycle. Contracts: the period multiplies by c ∈
/// [1, |det P|], and d(O')²·‖P‖² ≥ d(O_J)².
pub fn pull_back_orbit(
    p: &IntMatrix,
    orbit: &OrbitRecord,
    j: &IntMatrix,
    a: &IntMatrix,
    opts: &ConstructOptions,
) -> Result<OrbitRecord> {
    if p.mul(a) != j.mul(p) {
        return Err(Error::InvalidInput("P·A = J·P does not hold".into()));
    }
    let det = p.det();
    if det.is_zero() {
        return Err(Error::InvalidInput(
            "P must have nonzero determinant".into(),
        ));
    }
    let p_rat: Vec<Vec<Rat>> = p
        .rows()
        .map(|row| row.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    let p_inv = rat_invert(&p_rat).expect("nonzero determinant");
    let x: Vec<Rat> = orbit
        .base
        .coords()
        .iter()
        .map(|u| Rat::new(u.clone(), orbit.base.denom().clone()))
        .collect();
    let v: Vec<Rat> = (0..a.dim())
        .map(|i| p_inv[i].iter().zip(&x).map(|(c, xi)| c * xi).sum())
        .collect();
    let start = TorusPoint::from_rationals(&v)?;

    let (_, mut pulled) = orbit_bruteforce(a, &start, opts)?;
    pulled.construction = Construction::PulledBack;
    pulled.level = orbit.level;
    pulled.prime_data = orbit.prime_data.clone();

    // period contract: T(O') = c·T(O_J), 1 ≤ c ≤ |det P|
    let (c, rem) = pulled.period.div_rem(&orbit.period);
    if !rem.is_zero() || c.is_zero() || BigInt::from(c.clone()) > det.abs() {
        return Err(Error::ContractViolation(format!(
            "pulled-back period {} is not a multiple of {} within |det P| = {}",
            pulled.period,
            orbit.period,
            det.abs()
        )));
    }
    // distance contract: d(O')²·‖P‖²_F ≥ d(O_J)²
    if let (Some(d_new), Some(d_old)) = (&pulled.d_sq, &orbit.d_sq) {
        let norm_sq = Rat::from_integer(p.frobenius_norm_sq());
        if d_new * &norm_sq < *d_old {
            return Err(Error::ContractViolation(
                "pull-back contracted distances beyond ‖P‖".into(),
            ));
        }
    }
    Ok(pulled)
}

// ---- uniform sequences ----

/// One level of a verified uniform sequence.
#[derive(Clone, Debug)]
pub struct SequenceLevel {
    pub level: u32,
    pub construction: GeneralConstruction,
    /// Frame d^n·T; absent for fixed points or unmaterialized orbits.
    pub frame_metric: Option<f64>,
    pub pulled_metric: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct UniformSequence {
    pub levels: Vec<SequenceLevel>,
    /// Empirical constant: min over levels of the frame d^n·T.
    pub min_frame_metric: Option<f64>,
    pub min_pulled_metric: Option<f64>,
}

fn assert_packing(record: &OrbitRecord) -> Result<()> {
    if record.period <= BigUint::one() || record.d_sq.is_none() {
        return Ok(());
    }
    if !crate::equidist::packing_bound_check(record)? {
        return Err(Error::ContractViolation(
            "packing upper bound T·(d/2)^n·ω_n ≤ 1 failed".into(),
        ));
    }
    Ok(())
}

/// Construct levels 1..=K, asserting strictly increasing periods and the
/// packing upper bound at every level.
pub fn uniform_sequence(
    a: &IntMatrix,
    levels: u32,
    opts: &ConstructOptions,
) -> Result<UniformSequence> {
    require_ergodic(a)?;
    if levels == 0 {
        return Err(Error::InvalidInput("need at least one level".into()));
    }
    let mut out = Vec::new();
    let mut prev_frame: Option<BigUint> = None;
    let mut prev_pulled: Option<BigUint> = None;
    for k in 1..=levels {
        let gen = construct_general(a, k, opts)?;
        if let Some(prev) = &prev_frame {
            if &gen.frame_record.period <= prev {
                return Err(Error::ContractViolation(format!(
                    "frame period did not increase: {} after {prev}",
                    gen.frame_record.period
                )));
            }
        }
        if let Some(prev) = &prev_pulled {
            if &gen.pulled_record.period <= prev {
                return Err(Error::ContractViolation(format!(
                    "pulled-back period did not increase: {} after {prev}",
                    gen.pulled_record.period
                )));
            }
        }
        prev_frame = Some(gen.frame_record.period.clone());
        prev_pulled = Some(gen.pulled_record.period.clone());

        assert_packing(&gen.frame_record)?;
        assert_packing(&gen.pulled_record)?;

        let frame_metric = gen.frame_record.metric_float();
        let pulled_metric = gen.pulled_record.metric_float();
        out.push(SequenceLevel {
            level: k,
            construction: gen,
            frame_metric,
            pulled_metric,
        });
    }
    let fold_min = |vals: Vec<f64>| {
        if vals.is_empty() {
            None
        } else {
            Some(vals.into_iter().fold(f64::INFINITY, f64::min))
        }
    };
    let min_frame_metric = fold_min(out.iter().filter_map(|l| l.frame_metric).collect());
    let min_pulled_metric = fold_min(out.iter().filter_map(|l| l.pulled_metric).collect());
    Ok(UniformSequence {
        levels: out,
        min_frame_metric,
        min_pulled_metric,
    })
}
