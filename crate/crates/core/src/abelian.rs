//! Torsion-free rank of the abelianization via integer Smith normal form.
//!
//! Each rule `ℓ → r` is read as the relation `ℓ·r⁻¹`; its exponent sums over
//! one generator per inverse pair form a row of an integer matrix. The number
//! of zero diagonal entries of the Smith form (padded to the column count) is
//! the rank of the free abelian part of `G/[G,G]`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rewriting::RewritingSystem;
use crate::word::Letter;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("integer overflow during Smith normal form")]
pub struct ArithmeticOverflow;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentMatrix {
    /// One letter per inverse pair, in declaration order.
    pub generators: Vec<Letter>,
    /// One row per rule.
    pub rows: Vec<Vec<i64>>,
}

impl ExponentMatrix {
    pub fn cols(&self) -> usize {
        self.generators.len()
    }
}

/// `U·M·V = D` with `U`, `V` unimodular and `D` diagonal, non-negative, with
/// each nonzero entry dividing the next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    pub d: Vec<Vec<BigInt>>,
    pub u: Vec<Vec<BigInt>>,
    pub v: Vec<Vec<BigInt>>,
    pub diag: Vec<BigInt>,
}

impl SnfResult {
    /// Zero diagonal entries, padding the diagonal to `cols` entries.
    pub fn zero_count(&self, cols: usize) -> usize {
        cols - self.diag.iter().filter(|d| !d.is_zero()).count()
    }

    /// Whether this is a Smith form of `m`: `U·M·V = D`, `D` diagonal with
    /// non-negative entries each dividing the next, `det U` and `det V` = ±1.
    pub fn certifies(&self, m: &[Vec<i64>], cols: usize) -> bool {
        let m: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        let rows = m.len();
        if self.u.len() != rows || self.v.len() != cols || self.d.len() != rows {
            return false;
        }
        if mat_mul(&mat_mul(&self.u, &m), &self.v) != self.d {
            return false;
        }
        for (i, row) in self.d.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if (i != j && !x.is_zero()) || x.sign() == num_bigint::Sign::Minus {
                    return false;
                }
            }
        }
        let diag: Vec<&BigInt> = (0..rows.min(cols)).map(|i| &self.d[i][i]).collect();
        let divides = diag.windows(2).all(|w| if w[0].is_zero() { w[1].is_zero() } else { (w[1] % w[0]).is_zero() });
        divides && det(&self.u).abs().is_one() && det(&self.v).abs().is_one()
    }
}

fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let inner = b.len();
    let width = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| (0..width).map(|j| (0..inner).map(|k| &row[k] * &b[k][j]).sum()).collect())
        .collect()
}

// fraction-free (Bareiss) determinant
fn det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else { return BigInt::zero() };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

pub fn exponent_matrix(rs: &RewritingSystem) -> ExponentMatrix {
    let n = rs.alphabet_len();
    let mut generators = Vec::new();
    // (column, sign) for every letter
    let mut col: Vec<(usize, i64)> = vec![(0, 0); n];
    for x in rs.letters() {
        let inv = rs.inverse_letter(x);
        if x <= inv {
            col[x.index()] = (generators.len(), 1);
            generators.push(x);
        }
    }
    for x in rs.letters() {
        let inv = rs.inverse_letter(x);
        if x > inv {
            col[x.index()] = (col[inv.index()].0, -1);
        }
    }
    let rows = rs
        .rules()
        .iter()
        .map(|rule| {
            let mut row = vec![0i64; generators.len()];
            for x in rule.lhs.iter().chain(rs.formal_inverse(&rule.rhs).iter()) {
                let (c, s) = col[x.index()];
                row[c] += s;
            }
            row
        })
        .collect();
    ExponentMatrix { generators, rows }
}

/// Smith normal form of an `rows.len() × cols` matrix. Machine integers are
/// tried first and arbitrary precision is used if they overflow.
pub fn smith_normal_form(rows: &[Vec<i64>], cols: usize) -> SnfResult {
    match smith_normal_form_i64(rows, cols) {
        Ok(r) => r,
        Err(ArithmeticOverflow) => {
            log::debug!("Smith normal form overflowed i64; retrying with big integers");
            let m = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            let (d, u, v) = snf(m, rows.len(), cols).expect("big integers do not overflow");
            finish(d, u, v)
        }
    }
}

/// Like [`smith_normal_form`] but fails instead of widening.
pub fn smith_normal_form_i64(rows: &[Vec<i64>], cols: usize) -> Result<SnfResult, ArithmeticOverflow> {
    let (d, u, v) = snf(rows.to_vec(), rows.len(), cols)?;
    let widen = |m: Vec<Vec<i64>>| -> Vec<Vec<BigInt>> {
        m.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect()
    };
    Ok(finish(widen(d), widen(u), widen(v)))
}

pub fn torsion_free_rank(rs: &RewritingSystem) -> usize {
    let m = exponent_matrix(rs);
    let rank = smith_normal_form(&m.rows, m.cols()).zero_count(m.cols());
    assert!(rank <= rs.size_n(), "torsion-free rank {rank} exceeds n_T");
    rank
}

fn finish(d: Vec<Vec<BigInt>>, u: Vec<Vec<BigInt>>, v: Vec<Vec<BigInt>>) -> SnfResult {
    let k = d.len().min(d.first().map_or(0, |r| r.len()));
    let diag = (0..k).map(|i| d[i][i].clone()).collect();
    SnfResult { d, u, v, diag }
}

trait Scalar: Clone + Debug + PartialEq {
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn abs_lt(&self, other: &Self) -> bool;
    fn is_negative(&self) -> bool;
    fn neg(&self) -> Result<Self, ArithmeticOverflow>;
    /// `self - q·x`
    fn sub_mul(&self, q: &Self, x: &Self) -> Result<Self, ArithmeticOverflow>;
    /// Quotient rounded towards zero.
    fn quot(&self, d: &Self) -> Result<Self, ArithmeticOverflow>;
    fn divides(&self, x: &Self) -> bool;
}

impl Scalar for i64 {
    fn nil() -> Self {
        0
    }
    fn unit() -> Self {
        1
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn abs_lt(&self, other: &Self) -> bool {
        self.unsigned_abs() < other.unsigned_abs()
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn neg(&self) -> Result<Self, ArithmeticOverflow> {
        self.checked_neg().ok_or(ArithmeticOverflow)
    }
    fn sub_mul(&self, q: &Self, x: &Self) -> Result<Self, ArithmeticOverflow> {
        q.checked_mul(*x).and_then(|p| self.checked_sub(p)).ok_or(ArithmeticOverflow)
    }
    fn quot(&self, d: &Self) -> Result<Self, ArithmeticOverflow> {
        self.checked_div(*d).ok_or(ArithmeticOverflow)
    }
    fn divides(&self, x: &Self) -> bool {
        match x.checked_rem(*self) {
            Some(r) => r == 0,
            None => true, // i64::MIN % -1
        }
    }
}

impl Scalar for BigInt {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs_lt(&self, other: &Self) -> bool {
        self.abs() < other.abs()
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn neg(&self) -> Result<Self, ArithmeticOverflow> {
        Ok(-self)
    }
    fn sub_mul(&self, q: &Self, x: &Self) -> Result<Self, ArithmeticOverflow> {
        Ok(self - q * x)
    }
    fn quot(&self, d: &Self) -> Result<Self, ArithmeticOverflow> {
        Ok(self / d)
    }
    fn divides(&self, x: &Self) -> bool {
        Zero::is_zero(&x.mod_floor(self))
    }
}

type Mat<T> = Vec<Vec<T>>;

fn identity<T: Scalar>(n: usize) -> Mat<T> {
    (0..n).map(|i| (0..n).map(|j| if i == j { T::unit() } else { T::nil() }).collect()).collect()
}

fn swap_cols<T>(m: &mut Mat<T>, a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

/// row[dst] -= q·row[src]
fn row_op<T: Scalar>(m: &mut Mat<T>, dst: usize, src: usize, q: &T) -> Result<(), ArithmeticOverflow> {
    for j in 0..m[dst].len() {
        let s = m[src][j].clone();
        m[dst][j] = m[dst][j].sub_mul(q, &s)?;
    }
    Ok(())
}

/// col[dst] -= q·col[src]
fn col_op<T: Scalar>(m: &mut Mat<T>, dst: usize, src: usize, q: &T) -> Result<(), ArithmeticOverflow> {
    for row in m.iter_mut() {
        let s = row[src].clone();
        row[dst] = row[dst].sub_mul(q, &s)?;
    }
    Ok(())
}

fn snf<T: Scalar>(mut a: Mat<T>, r: usize, c: usize) -> Result<(Mat<T>, Mat<T>, Mat<T>), ArithmeticOverflow> {
    let mut u: Mat<T> = identity(r);
    let mut v: Mat<T> = identity(c);
    let minus_one = T::unit().neg()?;
    for t in 0..r.min(c) {
        // smallest nonzero entry of the remaining block becomes the pivot
        let mut best: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                if !a[i][j].is_nil() && best.is_none_or(|(bi, bj)| a[i][j].abs_lt(&a[bi][bj])) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        swap_cols(&mut a, t, pj);
        swap_cols(&mut v, t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..r {
                if !a[i][t].is_nil() {
                    let q = a[i][t].quot(&a[t][t])?;
                    row_op(&mut a, i, t, &q)?;
                    row_op(&mut u, i, t, &q)?;
                    clean &= a[i][t].is_nil();
                }
            }
            for j in t + 1..c {
                if !a[t][j].is_nil() {
                    let q = a[t][j].quot(&a[t][t])?;
                    col_op(&mut a, j, t, &q)?;
                    col_op(&mut v, j, t, &q)?;
                    clean &= a[t][j].is_nil();
                }
            }
            if !clean {
                // a remainder is smaller than the pivot; move it into place
                let mut m = (t, t);
                for i in t + 1..r {
                    if !a[i][t].is_nil() && a[i][t].abs_lt(&a[m.0][m.1]) {
                        m = (i, t);
                    }
                }
                for j in t + 1..c {
                    if !a[t][j].is_nil() && a[t][j].abs_lt(&a[m.0][m.1]) {
                        m = (t, j);
                    }
                }
                if m.0 != t {
                    a.swap(t, m.0);
                    u.swap(t, m.0);
                } else if m.1 != t {
                    swap_cols(&mut a, t, m.1);
                    swap_cols(&mut v, t, m.1);
                }
                continue;
            }
            // divisibility: fold an offending row into the pivot row
            let bad = (t + 1..r).find(|&i| (t + 1..c).any(|j| !a[t][t].divides(&a[i][j])));
            match bad {
                Some(i) => {
                    row_op(&mut a, t, i, &minus_one)?;
                    row_op(&mut u, t, i, &minus_one)?;
                }
                None => break,
            }
        }
        if a[t][t].is_negative() {
            for j in 0..c {
                a[t][j] = a[t][j].neg()?;
            }
            for j in 0..r {
                u[t][j] = u[t][j].neg()?;
            }
        }
    }
    Ok((a, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z: &str = "letters: a A\ninverse: a A\nrule: a A ->\nrule: A a ->\n";
    const Z2Z3: &str = "letters: t b B\ninverse: t t\ninverse: b B\n\
        rule: t t ->\nrule: b B ->\nrule: B b ->\nrule: b b -> B\nrule: B B -> b\n";
    const F2: &str = "letters: a A c C\ninverse: a A\ninverse: c C\n\
        rule: a A ->\nrule: A a ->\nrule: c C ->\nrule: C c ->\n";

    fn sys(text: &str) -> RewritingSystem {
        RewritingSystem::parse_validated(text).unwrap()
    }

    fn diag(rows: &[Vec<i64>], cols: usize) -> Vec<i64> {
        smith_normal_form(rows, cols).diag.iter().map(|d| i64::try_from(d).unwrap()).collect()
    }

    #[test]
    fn exponent_rows() {
        assert_eq!(exponent_matrix(&sys(Z)).rows, vec![vec![0], vec![0]]);
        let m = exponent_matrix(&sys(Z2Z3));
        assert_eq!(m.rows, vec![vec![2, 0], vec![0, 0], vec![0, 0], vec![0, 3], vec![0, -3]]);
        let f = exponent_matrix(&sys(F2));
        assert_eq!(f.cols(), 2);
        assert!(f.rows.iter().flatten().all(|&x| x == 0));
    }

    #[test]
    fn small_forms() {
        assert_eq!(diag(&[vec![2, 0], vec![0, 3]], 2), vec![1, 6]);
        assert_eq!(diag(&[vec![0], vec![0]], 1), vec![0]);
        assert_eq!(diag(&[vec![1]], 1), vec![1]);
        assert_eq!(diag(&[vec![-4, 6], vec![6, 9]], 2), vec![1, 72]);
        assert!(diag(&[], 3).is_empty());
    }

    #[test]
    fn ranks() {
        assert_eq!(torsion_free_rank(&sys(Z)), 1);
        assert_eq!(torsion_free_rank(&sys(Z2Z3)), 0);
        assert_eq!(torsion_free_rank(&sys(F2)), 2);
    }

    #[test]
    fn overflow_falls_back() {
        let big = i64::MAX / 2;
        let m = vec![vec![big, big - 1], vec![big - 1, -big]];
        let r = smith_normal_form(&m, 2);
        let mm: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        // U·M·V = D
        for i in 0..2 {
            for j in 0..2 {
                let mut s = BigInt::zero();
                for k in 0..2 {
                    for l in 0..2 {
                        s += &r.u[i][k] * &mm[k][l] * &r.v[l][j];
                    }
                }
                assert_eq!(s, r.d[i][j]);
            }
        }
        assert!(r.diag[0].is_one());
    }
}
