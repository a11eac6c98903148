//! Exact integer and rational matrices.
//!
//! Everything downstream (Gram matrices, isometries, dual bases, quotient
//! computations) is built on the two types here. Entries are arbitrary
//! precision; the normal forms never reduce modulo anything.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense matrix of arbitrary-precision integers, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

/// Dense matrix of arbitrary-precision rationals, always in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

/// Result of [`IntMatrix::snf`]: `d = u * m * v`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        IntMatrix { rows, cols, data }
    }

    pub fn from_i64(rows: usize, cols: usize, data: &[i64]) -> Self {
        Self::from_vec(rows, cols, data.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().cloned().map(Into::into));
        }
        IntMatrix { rows: r, cols: c, data }
    }

    /// Matrix whose columns are the given vectors, all of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for i in 0..rows {
                m.set(i, j, col[i].clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        IntMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, k: &BigInt) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn pow(&self, mut e: u64) -> IntMatrix {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
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

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| *self.get(i, j) == BigInt::from((i == j) as i32)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn trace(&self) -> BigInt {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i).clone()).sum()
    }

    /// Sub-block with the given row and column ranges.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> IntMatrix {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, i) in rows.clone().enumerate() {
            for (b, j) in cols.clone().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j).clone());
            }
        }
        out
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.data.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k * n + k].is_zero() {
                let Some(piv) = (k + 1..n).find(|&i| !a[i * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    a[i * n + j] = v / &prev;
                }
            }
            prev = a[k * n + k].clone();
        }
        sign * &a[n * n - 1]
    }

    /// Leading principal minors `D_1, …, D_n`.
    pub fn leading_minors(&self) -> Vec<BigInt> {
        (1..=self.rows).map(|k| self.submatrix(0..k, 0..k).det()).collect()
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] -= q * row[src]
    pub(crate) fn row_axpy(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let s = &self.data[src * self.cols + j] * q;
            self.data[dst * self.cols + j] -= s;
        }
    }

    /// col[dst] -= q * col[src]
    pub(crate) fn col_axpy(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let s = &self.data[i * self.cols + src] * q;
            self.data[i * self.cols + dst] -= s;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -&self.data[r * self.cols + j];
            self.data[r * self.cols + j] = v;
        }
    }

    /// Row Hermite normal form: returns `(h, u)` with `h = u * self`, `u`
    /// unimodular, `h` upper echelon with positive pivots and the entries
    /// above each pivot reduced into `[0, pivot)`. Zero rows sink to the
    /// bottom.
    pub fn hnf(&self) -> (IntMatrix, IntMatrix) {
        let mut h = self.clone();
        let mut u = IntMatrix::identity(self.rows);
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let mut have_pivot = false;
            loop {
                // minimal nonzero |entry| at or below row r
                let best = (r..self.rows)
                    .filter(|&i| !h.get(i, c).is_zero())
                    .min_by(|&a, &b| h.get(a, c).abs().cmp(&h.get(b, c).abs()).then(a.cmp(&b)));
                let Some(best) = best else { break };
                have_pivot = true;
                h.swap_rows(r, best);
                u.swap_rows(r, best);
                let mut clean = true;
                for i in r + 1..self.rows {
                    if h.get(i, c).is_zero() {
                        continue;
                    }
                    let q = h.get(i, c).div_floor(h.get(r, c));
                    h.row_axpy(i, r, &q);
                    u.row_axpy(i, r, &q);
                    if !h.get(i, c).is_zero() {
                        clean = false;
                    }
                }
                if clean {
                    break;
                }
            }
            if !have_pivot {
                continue;
            }
            if h.get(r, c).is_negative() {
                h.negate_row(r);
                u.negate_row(r);
            }
            for i in 0..r {
                let q = h.get(i, c).div_floor(h.get(r, c));
                h.row_axpy(i, r, &q);
                u.row_axpy(i, r, &q);
            }
            r += 1;
        }
        (h, u)
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        let (h, _) = self.hnf();
        (0..h.rows).filter(|&i| (0..h.cols).any(|j| !h.get(i, j).is_zero())).count()
    }

    /// Smith normal form `d = u * self * v` with `d_1 | d_2 | …`, all
    /// diagonal entries non-negative.
    pub fn snf(&self) -> Smith {
        let (nr, nc) = (self.rows, self.cols);
        let mut d = self.clone();
        let mut u = IntMatrix::identity(nr);
        let mut v = IntMatrix::identity(nc);
        let steps = nr.min(nc);
        for t in 0..steps {
            loop {
                let mut best: Option<(usize, usize)> = None;
                for i in t..nr {
                    for j in t..nc {
                        let e = d.get(i, j);
                        if e.is_zero() {
                            continue;
                        }
                        match best {
                            Some((bi, bj)) if d.get(bi, bj).abs() <= e.abs() => {}
                            _ => best = Some((i, j)),
                        }
                    }
                }
                let Some((bi, bj)) = best else {
                    return Self::finish_snf(d, u, v);
                };
                d.swap_rows(t, bi);
                u.swap_rows(t, bi);
                d.swap_cols(t, bj);
                v.swap_cols(t, bj);
                let mut clean = true;
                for i in t + 1..nr {
                    if d.get(i, t).is_zero() {
                        continue;
                    }
                    let q = d.get(i, t).div_floor(d.get(t, t));
                    d.row_axpy(i, t, &q);
                    u.row_axpy(i, t, &q);
                    if !d.get(i, t).is_zero() {
                        clean = false;
                    }
                }
                for j in t + 1..nc {
                    if d.get(t, j).is_zero() {
                        continue;
                    }
                    let q = d.get(t, j).div_floor(d.get(t, t));
                    d.col_axpy(j, t, &q);
                    v.col_axpy(j, t, &q);
                    if !d.get(t, j).is_zero() {
                        clean = false;
                    }
                }
                if !clean {
                    continue;
                }
                // divisibility of the remaining block by the pivot
                let piv = d.get(t, t).clone();
                let bad = (t + 1..nr).find(|&i| (t + 1..nc).any(|j| !(d.get(i, j) % &piv).is_zero()));
                match bad {
                    Some(i) => {
                        // row t += row i, then re-eliminate
                        let minus_one = -BigInt::one();
                        d.row_axpy(t, i, &minus_one);
                        u.row_axpy(t, i, &minus_one);
                    }
                    None => break,
                }
            }
            if d.get(t, t).is_negative() {
                d.negate_row(t);
                u.negate_row(t);
            }
        }
        Self::finish_snf(d, u, v)
    }

    fn finish_snf(mut d: IntMatrix, mut u: IntMatrix, v: IntMatrix) -> Smith {
        for t in 0..d.rows.min(d.cols) {
            if d.get(t, t).is_negative() {
                d.negate_row(t);
                u.negate_row(t);
            }
        }
        Smith { d, u, v }
    }

    /// Diagonal of the Smith form (length `min(rows, cols)`).
    pub fn elementary_divisors(&self) -> Vec<BigInt> {
        let s = self.snf();
        (0..self.rows.min(self.cols)).map(|i| s.d.get(i, i).clone()).collect()
    }

    /// Basis (as columns) of the integer kernel `{x ∈ Zⁿ : self·x = 0}`.
    /// The result is saturated in `Zⁿ`.
    pub fn kernel(&self) -> IntMatrix {
        // u · selfᵀ = h; rows of u facing zero rows of h span the left kernel of selfᵀ
        let (h, u) = self.transpose().hnf();
        let mut cols = Vec::new();
        for i in 0..h.rows {
            if (0..h.cols).all(|j| h.get(i, j).is_zero()) {
                cols.push(u.row(i));
            }
        }
        let mut k = IntMatrix::from_columns(self.cols, &cols);
        // canonical form: HNF of the basis rows
        if k.cols > 0 {
            let (hk, _) = k.transpose().hnf();
            k = hk.submatrix(0..cols.len(), 0..self.cols).transpose();
        }
        k
    }

    /// Exact inverse over the rationals.
    pub fn rat_inverse(&self) -> Result<RatMatrix> {
        RatMatrix::from_int(self).inverse()
    }

    /// Converts to machine integers when every entry fits.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.data.iter().map(ToPrimitive::to_i64).collect()
    }

    pub fn to_rat(&self) -> RatMatrix {
        RatMatrix::from_int(self)
    }

    pub fn max_abs(&self) -> BigInt {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_default()
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_string()).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        let parsed: std::result::Result<Vec<Vec<BigInt>>, _> = rows
            .iter()
            .map(|r| r.iter().map(|x| x.parse::<BigInt>()).collect())
            .collect();
        let parsed = parsed.map_err(D::Error::custom)?;
        let c = parsed.first().map_or(0, |r| r.len());
        if parsed.iter().any(|r| r.len() != c) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(IntMatrix::from_rows(&parsed))
    }
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigRational::one();
        }
        m
    }

    pub fn from_int(m: &IntMatrix) -> Self {
        RatMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|x| BigRational::from_integer(x.clone())).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_int(&self, other: &IntMatrix) -> RatMatrix {
        self.mul(&RatMatrix::from_int(other))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    /// Integer matrix if every entry is integral.
    pub fn to_int(&self) -> Option<IntMatrix> {
        if !self.is_integral() {
            return None;
        }
        Some(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.to_integer()).collect(),
        })
    }

    /// Least common multiple of all denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.data.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    /// Gauss–Jordan inverse.
    pub fn inverse(&self) -> Result<RatMatrix> {
        if self.rows != self.cols {
            return Err(Error::Singular);
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = RatMatrix::identity(n);
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !a.get(i, c).is_zero()) else {
                return Err(Error::Singular);
            };
            if p != c {
                for j in 0..n {
                    a.data.swap(c * n + j, p * n + j);
                    inv.data.swap(c * n + j, p * n + j);
                }
            }
            let piv = a.get(c, c).clone();
            for j in 0..n {
                let x = a.get(c, j) / &piv;
                a.set(c, j, x);
                let y = inv.get(c, j) / &piv;
                inv.set(c, j, y);
            }
            for i in 0..n {
                if i == c || a.get(i, c).is_zero() {
                    continue;
                }
                let f = a.get(i, c).clone();
                for j in 0..n {
                    let x = a.get(i, j) - &f * a.get(c, j);
                    a.set(i, j, x);
                    let y = inv.get(i, j) - &f * inv.get(c, j);
                    inv.set(i, j, y);
                }
            }
        }
        Ok(inv)
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl Serialize for RatMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = RatMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(D::Error::custom("ragged matrix rows"));
            }
            for (j, x) in row.iter().enumerate() {
                m.set(i, j, x.parse::<BigRational>().map_err(D::Error::custom)?);
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows)
    }

    fn is_hnf(h: &IntMatrix) -> bool {
        let mut last_pivot: Option<usize> = None;
        let mut seen_zero_row = false;
        for i in 0..h.rows() {
            let lead = (0..h.cols()).find(|&j| !h.get(i, j).is_zero());
            match lead {
                None => seen_zero_row = true,
                Some(c) => {
                    if seen_zero_row || last_pivot.is_some_and(|p| c <= p) || !h.get(i, c).is_positive() {
                        return false;
                    }
                    for k in 0..i {
                        let e = h.get(k, c);
                        if e.is_negative() || e >= h.get(i, c) {
                            return false;
                        }
                    }
                    last_pivot = Some(c);
                }
            }
        }
        true
    }

    #[test]
    fn hnf_examples() {
        let (h, u) = IntMatrix::identity(2).hnf();
        assert!(h.is_identity() && u.is_identity());

        let a2 = m(&[vec![2, 1], vec![1, 2]]);
        let (h, u) = a2.hnf();
        assert_eq!(h, m(&[vec![1, 2], vec![0, 3]]));
        assert_eq!(u.mul(&a2), h);
        assert_eq!(h.det(), BigInt::from(3));

        let z = IntMatrix::zeros(2, 2);
        let (h, u) = z.hnf();
        assert!(h.is_zero() && u.is_identity());
    }

    #[test]
    fn snf_examples() {
        let a2 = m(&[vec![2, 1], vec![1, 2]]);
        assert_eq!(a2.elementary_divisors(), vec![BigInt::from(1), BigInt::from(3)]);
        let d = m(&[vec![4, 0], vec![0, 6]]);
        assert_eq!(d.elementary_divisors(), vec![BigInt::from(2), BigInt::from(12)]);
        let uni = m(&[vec![2, 3], vec![1, 2]]);
        assert!(uni.snf().d.is_identity());
    }

    #[test]
    fn inverse_examples() {
        assert!(IntMatrix::identity(3).rat_inverse().unwrap().to_int().unwrap().is_identity());
        let inv = m(&[vec![2, 1], vec![1, 2]]).rat_inverse().unwrap();
        let three = BigRational::from_integer(3.into());
        let expect = [[2, -1], [-1, 2]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(*inv.get(i, j), BigRational::from_integer(expect[i][j].into()) / &three);
            }
        }
        assert!(matches!(m(&[vec![0, 1], vec![0, 0]]).rat_inverse(), Err(Error::Singular)));
    }

    #[test]
    fn kernel_is_saturated() {
        let a = m(&[vec![2, 4, 6]]);
        let k = a.kernel();
        assert_eq!(k.cols(), 2);
        assert!(a.mul(&k).is_zero());
        // saturated: elementary divisors of the basis are all 1
        assert!(k.elementary_divisors().iter().all(|d| d.is_one()));
    }

    #[test]
    fn json_uses_decimal_strings() {
        let big = m(&[vec![i64::MAX, 1]]).scale(&BigInt::from(1000));
        let s = serde_json::to_string(&big).unwrap();
        assert!(s.contains("9223372036854775807000"));
        let back: IntMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, big);
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = IntMatrix> {
        prop::collection::vec(-6i64..=6, n * n).prop_map(move |v| IntMatrix::from_i64(n, n, &v))
    }

    fn unimodular(n: usize) -> impl Strategy<Value = IntMatrix> {
        // product of elementary operations
        prop::collection::vec((0..n, 0..n, -3i64..=3), 0..12).prop_map(move |ops| {
            let mut u = IntMatrix::identity(n);
            for (i, j, k) in ops {
                if i != j {
                    u.row_axpy(i, j, &BigInt::from(k));
                }
            }
            u
        })
    }

    proptest! {
        #[test]
        fn snf_postconditions(a in small_matrix(3)) {
            let s = a.snf();
            prop_assert_eq!(s.u.mul(&a).mul(&s.v), s.d.clone());
            prop_assert!(s.u.det().abs().is_one());
            prop_assert!(s.v.det().abs().is_one());
            for i in 0..3 {
                for j in 0..3 {
                    if i != j { prop_assert!(s.d.get(i, j).is_zero()); }
                }
            }
            for i in 0..2 {
                let (x, y) = (s.d.get(i, i), s.d.get(i + 1, i + 1));
                if x.is_zero() { prop_assert!(y.is_zero()); } else { prop_assert!((y % x).is_zero()); }
            }
            prop_assert_eq!(s.d.det().abs(), a.det().abs());
        }

        #[test]
        fn hnf_postconditions(a in small_matrix(3)) {
            let (h, u) = a.hnf();
            prop_assert_eq!(u.mul(&a), h.clone());
            prop_assert!(u.det().abs().is_one());
            prop_assert!(is_hnf(&h));
            let (h2, _) = h.hnf();
            prop_assert_eq!(h2, h);
        }

        #[test]
        fn inverse_round_trip(u in unimodular(4)) {
            let inv = u.rat_inverse().unwrap();
            prop_assert!(inv.mul_int(&u).to_int().unwrap().is_identity());
        }
    }
}
