//! Exact integer matrix layer: characteristic and minimal polynomials,
//! companion matrices, Krylov conjugators, the ergodicity test, and the
//! primary cyclic decomposition.
//!
//! Row-vector convention throughout the decomposition machinery: a module
//! element acts as `v ↦ v·A`, so a Krylov matrix stacks `e, eA, ..., eA^{n-1}`
//! and conjugation contracts read `P·A = J·P`. Torus dynamics elsewhere act
//! on column vectors.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::{bareiss_det, factor_rational, IntPoly};

pub type Rat = Ratio<BigInt>;

/// Dense square integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    e: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(n: usize, entries: Vec<BigInt>) -> Self {
        assert_eq!(entries.len(), n * n, "entry count must be n²");
        IntMatrix { n, e: entries }
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        IntMatrix {
            n,
            e: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        IntMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n);
        for i in 0..n {
            *m.at_mut(i, i) = BigInt::one();
        }
        m
    }

    pub fn zero(n: usize) -> Self {
        IntMatrix {
            n,
            e: vec![BigInt::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.e[i * self.n + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut BigInt {
        &mut self.e[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.e[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[BigInt]> {
        self.e.chunks(self.n)
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n);
        IntMatrix {
            n: self.n,
            e: self.e.iter().zip(&other.e).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n);
        IntMatrix {
            n: self.n,
            e: self.e.iter().zip(&other.e).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = IntMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let prod = a * other.at(k, j);
                    *out.at_mut(i, j) += prod;
                }
            }
        }
        out
    }

    pub fn mul_scalar(&self, s: &BigInt) -> IntMatrix {
        IntMatrix {
            n: self.n,
            e: self.e.iter().map(|a| a * s).collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> IntMatrix {
        let mut base = self.clone();
        let mut acc = IntMatrix::identity(self.n);
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

    /// Entrywise reduction into [0, m).
    pub fn reduce_mod(&self, m: &BigInt) -> IntMatrix {
        IntMatrix {
            n: self.n,
            e: self.e.iter().map(|x| x.mod_floor(m)).collect(),
        }
    }

    /// A^e with entries reduced mod m at every step, so exponents can be
    /// astronomically large without entry blowup.
    pub fn pow_mod(&self, e: &num_bigint::BigUint, m: &BigInt) -> IntMatrix {
        let mut acc = IntMatrix::identity(self.n).reduce_mod(m);
        let base = self.reduce_mod(m);
        for i in (0..e.bits()).rev() {
            acc = acc.mul(&acc).reduce_mod(m);
            if e.bit(i) {
                acc = acc.mul(&base).reduce_mod(m);
            }
        }
        acc
    }

    /// Column-vector action v ↦ A·v mod m.
    pub fn mul_col_mod(&self, v: &[BigInt], m: &BigInt) -> Vec<BigInt> {
        self.mul_col(v)
            .into_iter()
            .map(|x| x.mod_floor(m))
            .collect()
    }

    /// Column-vector action v ↦ A·v.
    pub fn mul_col(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * &v[j]).sum())
            .collect()
    }

    /// Row-vector action v ↦ v·A.
    pub fn mul_row(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|j| (0..self.n).map(|i| &v[i] * self.at(i, j)).sum())
            .collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                *out.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        out
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self.at(i, i).clone()).sum()
    }

    pub fn det(&self) -> BigInt {
        let rows: Vec<Vec<BigInt>> = self.rows().map(|r| r.to_vec()).collect();
        bareiss_det(rows)
    }

    /// Sum of squared entries — the exact square of the Frobenius norm.
    pub fn frobenius_norm_sq(&self) -> BigInt {
        self.e.iter().map(|a| a * a).sum()
    }

    /// Characteristic polynomial det(xI - A) by Faddeev–LeVerrier, exact over
    /// ℤ (every internal division is exact).
    pub fn char_poly(&self) -> IntPoly {
        let n = self.n;
        let mut m = self.clone();
        let mut bs = Vec::with_capacity(n); // b_1..b_n with f = x^n + Σ b_k x^{n-k}
        for k in 1..=n {
            let (b, rem) = (-m.trace()).div_rem(&BigInt::from(k as u64));
            debug_assert!(rem.is_zero());
            bs.push(b.clone());
            if k < n {
                let mut shifted = m;
                for i in 0..n {
                    *shifted.at_mut(i, i) += &b;
                }
                m = self.mul(&shifted);
            }
        }
        let mut coeffs = vec![BigInt::one()];
        for b in bs {
            coeffs.insert(0, b);
        }
        IntPoly::new(coeffs)
    }

    /// Least-degree monic annihilator over ℚ. For an integer matrix this is
    /// automatically an integer polynomial (it divides the monic
    /// characteristic polynomial).
    pub fn minimal_poly(&self) -> IntPoly {
        let n = self.n;
        let mut powers: Vec<Vec<Rat>> = vec![vectorize(&IntMatrix::identity(n))];
        let mut cur = IntMatrix::identity(n);
        for d in 1..=n {
            cur = cur.mul(self);
            let target = vectorize(&cur);
            if let Some(coeffs) = solve_combination(&powers, &target) {
                let mut poly = vec![BigInt::zero(); d + 1];
                poly[d] = BigInt::one();
                for (i, c) in coeffs.iter().enumerate() {
                    assert!(c.is_integer(), "minimal polynomial must be integral");
                    poly[i] = -c.to_integer();
                }
                return IntPoly::new(poly);
            }
            powers.push(target);
        }
        unreachable!("the characteristic polynomial annihilates A");
    }

    /// Evaluate an integer polynomial at this matrix (Horner).
    pub fn eval_poly(&self, f: &IntPoly) -> IntMatrix {
        let n = self.n;
        let mut acc = IntMatrix::zero(n);
        for c in f.coeffs().iter().rev() {
            acc = acc.mul(self);
            for i in 0..n {
                *acc.at_mut(i, i) += c;
            }
        }
        acc
    }

    /// Ergodicity of the induced torus endomorphism: nonzero determinant and
    /// no cyclotomic factor in the characteristic polynomial.
    pub fn ergodicity(&self) -> ErgodicityReport {
        let det = self.det();
        let unity_witness = self.char_poly().root_of_unity_factor();
        ErgodicityReport {
            ergodic: !det.is_zero() && unity_witness.is_none(),
            det,
            unity_witness,
        }
    }

    pub fn block_diag(blocks: &[IntMatrix]) -> IntMatrix {
        let n = blocks.iter().map(|b| b.n).sum();
        let mut out = IntMatrix::zero(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    *out.at_mut(off + i, off + j) = b.at(i, j).clone();
                }
            }
            off += b.n;
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ErgodicityReport {
    pub ergodic: bool,
    pub det: BigInt,
    pub unity_witness: Option<u32>,
}

impl ErgodicityReport {
    pub fn reason(&self) -> String {
        if self.det.is_zero() {
            "determinant is zero".into()
        } else if let Some(m) = self.unity_witness {
            format!("characteristic polynomial is divisible by the {m}-th cyclotomic polynomial")
        } else {
            "ergodic".into()
        }
    }
}

/// Require ergodicity, reporting the witness on failure.
pub fn require_ergodic(a: &IntMatrix) -> Result<()> {
    let rep = a.ergodicity();
    if rep.ergodic {
        Ok(())
    } else {
        Err(Error::NonErgodic {
            reason: rep.reason(),
        })
    }
}

/// Companion matrix of a monic polynomial: superdiagonal of ones, last row
/// the recurrence coefficients (c_0, ..., c_{n-1}).
pub fn companion(f: &IntPoly) -> Result<IntMatrix> {
    let c = f.recurrence_coeffs()?;
    let n = f.degree();
    if n == 0 {
        return Err(Error::InvalidInput("companion needs degree ≥ 1".into()));
    }
    let mut b = IntMatrix::zero(n);
    for i in 0..n - 1 {
        *b.at_mut(i, i + 1) = BigInt::one();
    }
    for (j, cj) in c.into_iter().enumerate() {
        *b.at_mut(n - 1, j) = cj;
    }
    Ok(b)
}

/// Krylov matrix with rows e, eA, ..., eA^{n-1}.
pub fn krylov(e: &[BigInt], a: &IntMatrix) -> Result<IntMatrix> {
    if e.iter().all(|x| x.is_zero()) {
        return Err(Error::InvalidInput("Krylov vector must be nonzero".into()));
    }
    let mut rows = Vec::with_capacity(a.dim());
    let mut cur = e.to_vec();
    for _ in 0..a.dim() {
        rows.push(cur.clone());
        cur = a.mul_row(&cur);
    }
    Ok(IntMatrix::from_rows(rows))
}

/// One cyclic block of a primary decomposition.
#[derive(Clone, Debug)]
pub struct DecompositionBlock {
    /// Companion matrix of `d`.
    pub matrix: IntMatrix,
    /// Annihilator of the generator: d = g^exponent.
    pub d: IntPoly,
    /// Irreducible base polynomial.
    pub g: IntPoly,
    pub exponent: u32,
    /// Integer row vector generating the cyclic subspace.
    pub generator: Vec<BigInt>,
}

/// Primary cyclic decomposition: P·A = J·P with J block-diagonal, each block
/// the companion matrix of a prime power d_i, and ∏ d_i the characteristic
/// polynomial.
#[derive(Clone, Debug)]
pub struct PrimaryDecomposition {
    pub p: IntMatrix,
    pub blocks: Vec<DecompositionBlock>,
    pub j: IntMatrix,
}

pub fn primary_decomposition(a: &IntMatrix) -> Result<PrimaryDecomposition> {
    let n = a.dim();
    let f = a.char_poly();
    let mut factors = factor_rational(&f)?;
    debug_assert!(factors.iter().all(|(g, _)| g.is_monic()));
    // large primary components first (dimension α·deg g); this block order
    // anchors the modulus balancing downstream
    factors.sort_by(|x, y| {
        let dim_x = x.0.degree() * x.1 as usize;
        let dim_y = y.0.degree() * y.1 as usize;
        (dim_y, x.0.coeffs()).cmp(&(dim_x, y.0.coeffs()))
    });

    let mut blocks = Vec::new();
    for (g, alpha) in &factors {
        let kernel_map = a.eval_poly(g).pow(*alpha as u64);
        let w_basis = left_nullspace(&kernel_map);
        assert_eq!(
            w_basis.len(),
            g.degree() * *alpha as usize,
            "primary component dimension"
        );
        // restrict the action to the component, in w_basis coordinates
        let act: Vec<Vec<Rat>> = w_basis
            .iter()
            .map(|w| {
                let wa = rat_row_mul(w, a);
                solve_combination(&w_basis, &wa).expect("component is A-invariant")
            })
            .collect();
        let gens = cyclic_decompose(&act, g, *alpha);
        for (coords, beta) in gens {
            let v_rat: Vec<Rat> = (0..n)
                .map(|j| coords.iter().zip(&w_basis).map(|(c, w)| c * &w[j]).sum())
                .collect();
            let generator = clear_row(&v_rat);
            let d = g.pow(beta);
            blocks.push(DecompositionBlock {
                matrix: companion(&d)?,
                d: d.clone(),
                g: g.clone(),
                exponent: beta,
                generator,
            });
        }
    }

    let mut p_rows = Vec::with_capacity(n);
    for b in &blocks {
        let mut cur = b.generator.clone();
        for _ in 0..b.d.degree() {
            p_rows.push(cur.clone());
            cur = a.mul_row(&cur);
        }
    }
    let p = IntMatrix::from_rows(p_rows);
    let j = IntMatrix::block_diag(&blocks.iter().map(|b| b.matrix.clone()).collect::<Vec<_>>());

    assert!(!p.det().is_zero(), "decomposition basis must be invertible");
    assert_eq!(p.mul(a), j.mul(&p), "conjugation contract P·A = J·P");
    let mut prod = IntPoly::one();
    for b in &blocks {
        prod = prod.mul(&b.d);
    }
    assert_eq!(prod, f, "block annihilators must multiply to the char poly");
    Ok(PrimaryDecomposition { p, blocks, j })
}

/// Cyclic decomposition of a g-primary module given by a rational action
/// matrix (row convention). Returns generators in action coordinates with
/// their annihilator exponents, largest first.
fn cyclic_decompose(act: &[Vec<Rat>], g: &IntPoly, alpha_cap: u32) -> Vec<(Vec<Rat>, u32)> {
    let m = act.len();
    if m == 0 {
        return vec![];
    }
    let g_of_m = rat_eval_poly(act, g);
    // module exponent: least β with g(M)^β = 0
    let mut gp = rat_identity(m);
    let mut beta_max = 0;
    for _ in 0..alpha_cap {
        gp = rat_mat_mul(&gp, &g_of_m);
        beta_max += 1;
        if rat_is_zero(&gp) {
            break;
        }
    }
    assert!(rat_is_zero(&gp), "g^alpha must annihilate the component");
    let probe = rat_mat_pow(&g_of_m, beta_max - 1);
    let v = candidate_vectors(m)
        .find(|v| !rat_row_is_zero(&rat_vec_mat(v, &probe)))
        .expect("a basis vector attains the module exponent");

    let r = g.degree();
    let s = beta_max as usize * r;
    let mut c_rows = Vec::with_capacity(s);
    let mut cur = v.clone();
    for _ in 0..s {
        c_rows.push(cur.clone());
        cur = rat_vec_mat(&cur, act);
    }
    if s == m {
        return vec![(v, beta_max)];
    }

    // extend to a basis with standard coordinate vectors
    let mut ext = c_rows.clone();
    let mut e_rows = Vec::new();
    let base_rank = rat_rank(&ext);
    debug_assert_eq!(base_rank, s);
    for i in 0..m {
        let mut e = vec![Rat::zero(); m];
        e[i] = Rat::one();
        ext.push(e.clone());
        if rat_rank(&ext) == ext.len() {
            e_rows.push(e);
        } else {
            ext.pop();
        }
    }
    assert_eq!(s + e_rows.len(), m);

    // quotient action on the E-coordinates
    let full: Vec<Vec<Rat>> = c_rows.iter().chain(&e_rows).cloned().collect();
    let q_act: Vec<Vec<Rat>> = e_rows
        .iter()
        .map(|e| {
            let em = rat_vec_mat(e, act);
            let coeffs = solve_combination(&full, &em).expect("full is a basis");
            coeffs[s..].to_vec()
        })
        .collect();

    let mut out = vec![(v.clone(), beta_max)];
    for (w_bar, c_exp) in cyclic_decompose(&q_act, g, beta_max) {
        // lift the quotient generator and correct it inside the cyclic part
        // so its annihilator stays g^c: if w·g(M)^c = v·u(M), then g^c | u
        // and w' = w - v·(u/g^c)(M) works
        let mut w: Vec<Rat> = vec![Rat::zero(); m];
        for (coef, e) in w_bar.iter().zip(&e_rows) {
            for (wi, ei) in w.iter_mut().zip(e) {
                *wi += coef * ei;
            }
        }
        let killer = rat_mat_pow(&g_of_m, c_exp);
        let z = rat_vec_mat(&w, &killer);
        let u = solve_combination(&c_rows, &z).expect("z lies in the cyclic subspace");
        let q = rat_poly_div_exact(&u, &g.pow(c_exp));
        for (j, qj) in q.iter().enumerate() {
            if qj.is_zero() {
                continue;
            }
            for (wi, cj) in w.iter_mut().zip(&c_rows[j]) {
                *wi -= qj * cj;
            }
        }
        debug_assert!(rat_row_is_zero(&rat_vec_mat(&w, &killer)));
        out.push((w, c_exp));
    }
    out
}

/// Deterministic generator candidates: standard basis vectors first, then
/// all small integer combinations with coefficients in [-3, 3].
fn candidate_vectors(m: usize) -> impl Iterator<Item = Vec<Rat>> {
    let basis = (0..m).map(move |i| {
        let mut v = vec![Rat::zero(); m];
        v[i] = Rat::one();
        v
    });
    let combos = (0..7u64.pow(m as u32)).filter_map(move |code| {
        let mut v = Vec::with_capacity(m);
        let mut c = code;
        for _ in 0..m {
            v.push(Rat::from_integer(BigInt::from((c % 7) as i64 - 3)));
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

// ---- rational linear algebra helpers ----

pub(crate) fn rat_from_int_row(v: &[BigInt]) -> Vec<Rat> {
    v.iter().map(|x| Rat::from_integer(x.clone())).collect()
}

fn vectorize(m: &IntMatrix) -> Vec<Rat> {
    m.e.iter().map(|x| Rat::from_integer(x.clone())).collect()
}

fn rat_identity(n: usize) -> Vec<Vec<Rat>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect()
}

fn rat_mat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = a.len();
    let cols = b[0].len();
    (0..n)
        .map(|i| {
            (0..cols)
                .map(|j| (0..b.len()).map(|k| &a[i][k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn rat_mat_pow(a: &[Vec<Rat>], e: u32) -> Vec<Vec<Rat>> {
    let mut acc = rat_identity(a.len());
    for _ in 0..e {
        acc = rat_mat_mul(&acc, a);
    }
    acc
}

fn rat_is_zero(a: &[Vec<Rat>]) -> bool {
    a.iter().all(|r| r.iter().all(|x| x.is_zero()))
}

fn rat_row_is_zero(r: &[Rat]) -> bool {
    r.iter().all(|x| x.is_zero())
}

fn rat_vec_mat(v: &[Rat], m: &[Vec<Rat>]) -> Vec<Rat> {
    let cols = m[0].len();
    (0..cols)
        .map(|j| v.iter().zip(m).map(|(vi, row)| vi * &row[j]).sum())
        .collect()
}

fn rat_row_mul(v: &[Rat], a: &IntMatrix) -> Vec<Rat> {
    let n = a.dim();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| &v[i] * &Rat::from_integer(a.at(i, j).clone()))
                .sum()
        })
        .collect()
}

/// Evaluate an integer polynomial at a rational matrix.
fn rat_eval_poly(m: &[Vec<Rat>], f: &IntPoly) -> Vec<Vec<Rat>> {
    let n = m.len();
    let mut acc = vec![vec![Rat::zero(); n]; n];
    for c in f.coeffs().iter().rev() {
        acc = rat_mat_mul(&acc, m);
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] += Rat::from_integer(c.clone());
        }
    }
    acc
}

/// Row-reduce in place; returns pivot column indices.
#[allow(clippy::needless_range_loop)] // two rows of `rows` are live at once
fn rat_rref(rows: &mut [Vec<Rat>]) -> Vec<usize> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        let lead = rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x /= lead.clone();
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let factor = rows[i][c].clone();
                for j in 0..cols {
                    let sub = &factor * &rows[r][j];
                    rows[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

pub(crate) fn rat_rank(rows: &[Vec<Rat>]) -> usize {
    let mut copy = rows.to_vec();
    rat_rref(&mut copy).len()
}

/// Coefficients c with Σ c_i·rows[i] = target, if target lies in the span.
pub(crate) fn solve_combination(rows: &[Vec<Rat>], target: &[Rat]) -> Option<Vec<Rat>> {
    let k = rows.len();
    if k == 0 {
        return if rat_row_is_zero(target) {
            Some(vec![])
        } else {
            None
        };
    }
    let dim = target.len();
    // equations indexed by coordinate, unknowns by row
    let mut aug: Vec<Vec<Rat>> = (0..dim)
        .map(|j| {
            let mut row: Vec<Rat> = rows.iter().map(|r| r[j].clone()).collect();
            row.push(target[j].clone());
            row
        })
        .collect();
    let pivots = rat_rref(&mut aug);
    if pivots.contains(&k) {
        return None; // inconsistent
    }
    let mut sol = vec![Rat::zero(); k];
    for (row, &pc) in aug.iter().zip(&pivots) {
        sol[pc] = row[k].clone();
    }
    Some(sol)
}

/// Basis of {x : M·x = 0} from the reduced row echelon form, one vector per
/// free column.
fn rat_nullspace(m: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let cols = m.first().map_or(0, |r| r.len());
    let mut rows = m.to_vec();
    let pivots = rat_rref(&mut rows);
    let mut out = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (row, &pc) in rows.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        out.push(v);
    }
    out
}

/// Basis of the left nullspace {v : v·M = 0} of an integer matrix.
pub(crate) fn left_nullspace(m: &IntMatrix) -> Vec<Vec<Rat>> {
    let t = m.transpose();
    let rows: Vec<Vec<Rat>> = t.rows().map(rat_from_int_row).collect();
    rat_nullspace(&rows)
}

/// Rational inverse; `None` if singular.
pub(crate) fn rat_invert(m: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut aug: Vec<Vec<Rat>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    let pivots = rat_rref(&mut aug);
    if pivots.len() != n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Scale a rational row to a primitive integer row with positive first
/// nonzero entry.
pub(crate) fn clear_row(v: &[Rat]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let mut ints: Vec<BigInt> = v.iter().map(|x| x.numer() * &lcm / x.denom()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if !g.is_zero() {
        if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
            if first.is_negative() {
                g = -g;
            }
        }
        for x in ints.iter_mut() {
            *x = &*x / &g;
        }
    }
    ints
}

/// Exact division of a rational-coefficient polynomial by a monic integer
/// polynomial.
fn rat_poly_div_exact(num: &[Rat], den: &IntPoly) -> Vec<Rat> {
    let mut rem: Vec<Rat> = num.to_vec();
    while rem.last().is_some_and(|x| x.is_zero()) {
        rem.pop();
    }
    let d = den.degree();
    if rem.is_empty() {
        return vec![];
    }
    assert!(den.is_monic());
    let mut q = vec![Rat::zero(); rem.len().saturating_sub(d)];
    while rem.len() > d {
        let lead = rem.last().unwrap().clone();
        let shift = rem.len() - 1 - d;
        q[shift] = lead.clone();
        for i in 0..=d {
            let sub = &lead * &Rat::from_integer(den.coeff(i));
            rem[shift + i] -= sub;
        }
        while rem.last().is_some_and(|x| x.is_zero()) {
            rem.pop();
        }
    }
    assert!(rem.is_empty(), "division must be exact");
    q
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for r in self.rows() {
            writeln!(
                f,
                "  [{}]",
                r.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntMatrix {
        IntMatrix::from_i64(&[&[2, 1], &[1, 1]])
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(cat().char_poly(), IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(
            IntMatrix::identity(2).char_poly(),
            IntPoly::from_i64(&[1, -2, 1])
        );
        assert_eq!(
            IntMatrix::from_i64(&[&[0, -1], &[1, 0]]).char_poly(),
            IntPoly::from_i64(&[1, 0, 1])
        );
    }

    #[test]
    fn cayley_hamilton() {
        for a in [
            cat(),
            IntMatrix::from_i64(&[&[0, -1], &[1, 0]]),
            IntMatrix::from_i64(&[&[2, 1, 0], &[1, 1, 5], &[-3, 0, 4]]),
            IntMatrix::from_i64(&[&[1, 2, 3, 4], &[0, 1, -1, 2], &[5, 0, 2, 1], &[3, 3, 3, 3]]),
        ] {
            let f = a.char_poly();
            let z = a.eval_poly(&f);
            assert_eq!(z, IntMatrix::zero(a.dim()));
        }
    }

    #[test]
    fn companion_examples() {
        assert_eq!(
            companion(&IntPoly::from_i64(&[1, -3, 1])).unwrap(),
            IntMatrix::from_i64(&[&[0, 1], &[-1, 3]])
        );
        assert_eq!(
            companion(&IntPoly::from_i64(&[-5, 1])).unwrap(),
            IntMatrix::from_i64(&[&[5]])
        );
        assert_eq!(
            companion(&IntPoly::from_i64(&[0, 0, 0, 1])).unwrap(),
            IntMatrix::from_i64(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]])
        );
        assert!(companion(&IntPoly::from_i64(&[1, 2])).is_err());
    }

    #[test]
    fn companion_char_poly_round_trip() {
        for f in [
            IntPoly::from_i64(&[1, -3, 1]),
            IntPoly::from_i64(&[-1, -1, 0, 1]),
            IntPoly::from_i64(&[4, -4, 1]),
        ] {
            assert_eq!(companion(&f).unwrap().char_poly(), f);
        }
    }

    #[test]
    fn krylov_examples() {
        let p = krylov(&[BigInt::from(1), BigInt::from(0)], &cat()).unwrap();
        assert_eq!(p, IntMatrix::from_i64(&[&[1, 0], &[2, 1]]));
        assert_eq!(
            krylov(&[BigInt::from(3)], &IntMatrix::from_i64(&[&[7]])).unwrap(),
            IntMatrix::from_i64(&[&[3]])
        );
        assert!(krylov(&[BigInt::zero(), BigInt::zero()], &cat()).is_err());
    }

    #[test]
    fn krylov_of_companion_basis_rows() {
        // e₁ reproduces the identity on any companion matrix; the last
        // basis vector picks up the coefficient row (here all zeros)
        let c3 = companion(&IntPoly::from_i64(&[0, 0, 0, 1])).unwrap();
        let e1: Vec<BigInt> = vec![BigInt::one(), BigInt::zero(), BigInt::zero()];
        assert_eq!(krylov(&e1, &c3).unwrap(), IntMatrix::identity(3));
        let e3: Vec<BigInt> = vec![BigInt::zero(), BigInt::zero(), BigInt::one()];
        assert_eq!(
            krylov(&e3, &c3).unwrap(),
            IntMatrix::from_i64(&[&[0, 0, 1], &[0, 0, 0], &[0, 0, 0]])
        );
    }

    #[test]
    fn krylov_conjugates_to_companion() {
        // P·A = B·P for any nonzero e when the char poly is irreducible
        let a = cat();
        let b = companion(&a.char_poly()).unwrap();
        for e in [[1i64, 0], [0, 1], [3, -2], [7, 5]] {
            let ev: Vec<BigInt> = e.iter().map(|&x| BigInt::from(x)).collect();
            let p = krylov(&ev, &a).unwrap();
            assert!(!p.det().is_zero());
            assert_eq!(p.mul(&a), b.mul(&p));
        }
    }

    #[test]
    fn minimal_poly_examples() {
        assert_eq!(cat().minimal_poly(), IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(
            IntMatrix::identity(2).minimal_poly(),
            IntPoly::from_i64(&[-1, 1])
        );
        assert_eq!(
            IntMatrix::from_i64(&[&[2, 0], &[0, 2]]).minimal_poly(),
            IntPoly::from_i64(&[-2, 1])
        );
    }

    #[test]
    fn minimal_poly_divides_char_poly_and_annihilates() {
        for a in [
            cat(),
            IntMatrix::from_i64(&[&[2, 1], &[0, 2]]),
            IntMatrix::from_i64(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 2]]),
        ] {
            let m = a.minimal_poly();
            assert!(a.char_poly().divisible_by(&m));
            assert_eq!(a.eval_poly(&m), IntMatrix::zero(a.dim()));
        }
    }

    #[test]
    fn ergodicity_examples() {
        assert!(cat().ergodicity().ergodic);
        let rot = IntMatrix::from_i64(&[&[0, -1], &[1, 0]]).ergodicity();
        assert!(!rot.ergodic);
        assert_eq!(rot.unity_witness, Some(4));
        let id = IntMatrix::identity(2).ergodicity();
        assert!(!id.ergodic);
        assert_eq!(id.unity_witness, Some(1));
        assert!(
            IntMatrix::from_i64(&[&[2, 0], &[0, 3]])
                .ergodicity()
                .ergodic
        );
    }

    #[test]
    fn unity_root_detector_matches_companion_power_oracle() {
        // f has a root of unity among its roots iff det(C^m - I) = 0 for
        // some m ≤ lcm{m : φ(m) ≤ n} = 12 (n ≤ 3), C the companion matrix
        let fixtures = [
            IntPoly::from_i64(&[1, -3, 1]),
            IntPoly::from_i64(&[1, 0, 1]),
            IntPoly::from_i64(&[-1, 1]),
            IntPoly::from_i64(&[2, -3, 1]),    // (x-1)(x-2): mixed
            IntPoly::from_i64(&[-1, 0, 0, 1]), // x³ - 1
            IntPoly::from_i64(&[-2, 0, 0, 1]), // x³ - 2
            IntPoly::from_i64(&[1, 1, 1]),     // Φ₃
            IntPoly::from_i64(&[-1, -1, 0, 1]),
        ];
        for f in fixtures {
            let c = companion(&f).unwrap();
            let n = c.dim();
            let oracle = (1..=12u64).any(|m| c.pow(m).sub(&IntMatrix::identity(n)).det().is_zero());
            assert_eq!(
                f.root_of_unity_factor().is_some(),
                oracle,
                "disagreement on f = {f}"
            );
        }
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(cat().frobenius_norm_sq(), BigInt::from(7));
        assert_eq!(IntMatrix::identity(4).frobenius_norm_sq(), BigInt::from(4));
        assert_eq!(IntMatrix::zero(3).frobenius_norm_sq(), BigInt::zero());
    }

    fn check_decomposition(a: &IntMatrix, expected_ds: &[IntPoly]) {
        let dec = primary_decomposition(a).unwrap();
        let got: Vec<IntPoly> = dec.blocks.iter().map(|b| b.d.clone()).collect();
        assert_eq!(got, expected_ds);
        assert_eq!(dec.p.mul(a), dec.j.mul(&dec.p));
        assert!(!dec.p.det().is_zero());
        for b in &dec.blocks {
            assert_eq!(b.matrix.char_poly(), b.d);
            assert_eq!(b.matrix.minimal_poly(), b.d);
        }
    }

    #[test]
    fn decomposition_irreducible_single_block() {
        check_decomposition(&cat(), &[IntPoly::from_i64(&[1, -3, 1])]);
    }

    #[test]
    fn decomposition_block_diagonal_input() {
        let a = IntMatrix::from_i64(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 2]]);
        check_decomposition(
            &a,
            &[IntPoly::from_i64(&[1, -3, 1]), IntPoly::from_i64(&[-2, 1])],
        );
    }

    #[test]
    fn decomposition_scalar_matrix_splits_into_lines() {
        check_decomposition(
            &IntMatrix::identity(2),
            &[IntPoly::from_i64(&[-1, 1]), IntPoly::from_i64(&[-1, 1])],
        );
    }

    #[test]
    fn decomposition_nontrivial_jordan_block() {
        check_decomposition(
            &IntMatrix::from_i64(&[&[2, 1], &[0, 2]]),
            &[IntPoly::from_i64(&[4, -4, 1])],
        );
    }

    #[test]
    fn decomposition_mixed_multiplicity() {
        // diag(2, 2) is semisimple: two blocks of x - 2
        check_decomposition(
            &IntMatrix::from_i64(&[&[2, 0], &[0, 2]]),
            &[IntPoly::from_i64(&[-2, 1]), IntPoly::from_i64(&[-2, 1])],
        );
        // 3x3 with a Jordan 2-block and a separate eigenvalue
        let a = IntMatrix::from_i64(&[&[2, 1, 0], &[0, 2, 0], &[0, 0, 3]]);
        check_decomposition(
            &a,
            &[IntPoly::from_i64(&[4, -4, 1]), IntPoly::from_i64(&[-3, 1])],
        );
    }
}
