//! LLL reduction and exact short-vector enumeration.
//!
//! Enumeration is a fraction-free Fincke–Pohst: with leading principal
//! minors `D_k` and the Bareiss elimination table of the Gram matrix, every
//! partial norm is a ratio of integers whose denominator is a known minor, so
//! the search runs entirely in checked 128-bit integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmat::IntMatrix;
use crate::lattice::Lattice;

/// All nonzero vectors of norm at most `bound`, one of each pair `±v`.
///
/// The stored representative is the one whose first nonzero coordinate is
/// positive; the list is sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortVectorSet {
    pub bound: i64,
    pub vectors: Vec<Vec<i64>>,
    pub norms: Vec<i64>,
}

impl ShortVectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Smallest norm present, if any vector was found.
    pub fn min_norm(&self) -> Option<i64> {
        self.norms.iter().copied().min()
    }

    /// Number of representatives (pairs) of each norm, ascending.
    pub fn histogram(&self) -> Vec<(i64, usize)> {
        let mut h = std::collections::BTreeMap::new();
        for &n in &self.norms {
            *h.entry(n).or_insert(0usize) += 1;
        }
        h.into_iter().collect()
    }
}

/// Output of [`lll_gram`]: `gram = transformᵀ · input · transform`.
#[derive(Clone, Debug)]
pub struct LllResult {
    pub gram: IntMatrix,
    pub transform: IntMatrix,
}

fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    // nearest integer to a/b for b > 0, halves rounded up
    let num: BigInt = a * 2 + b;
    num.div_floor(&(b * 2))
}

/// Integral LLL (δ = 3/4) acting on a positive-definite Gram matrix.
pub fn lll_gram(input: &IntMatrix) -> Result<LllResult> {
    let n = input.rows();
    if !input.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let mut g = input.clone();
    let mut h = IntMatrix::identity(n);
    if n <= 1 {
        if n == 1 && !g.get(0, 0).is_positive() {
            return Err(Error::NotPositiveDefinite);
        }
        return Ok(LllResult { gram: g, transform: h });
    }
    // 1-indexed bookkeeping as in the textbook algorithm; d[0] = 1
    let mut d = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n + 1]; n + 1];
    d[0] = BigInt::one();
    d[1] = g.get(0, 0).clone();
    if !d[1].is_positive() {
        return Err(Error::NotPositiveDefinite);
    }
    let mut k = 2usize;
    let mut kmax = 1usize;

    let gs = |g: &IntMatrix, d: &mut Vec<BigInt>, lam: &mut Vec<Vec<BigInt>>, k: usize| -> Result<()> {
        for j in 1..=k {
            let mut u = g.get(k - 1, j - 1).clone();
            for i in 1..j {
                u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
            }
            if j < k {
                lam[k][j] = u;
            } else {
                if !u.is_positive() {
                    return Err(Error::NotPositiveDefinite);
                }
                d[k] = u;
            }
        }
        Ok(())
    };

    fn red(
        g: &mut IntMatrix,
        h: &mut IntMatrix,
        d: &[BigInt],
        lam: &mut [Vec<BigInt>],
        k: usize,
        l: usize,
    ) {
        let two_abs = lam[k][l].abs() * 2;
        if two_abs <= d[l] {
            return;
        }
        let q = round_div(&lam[k][l], &d[l]);
        // basis vector k -= q · basis vector l
        h.col_axpy(k - 1, l - 1, &q);
        g.col_axpy(k - 1, l - 1, &q);
        g.row_axpy(k - 1, l - 1, &q);
        lam[k][l] -= &q * &d[l];
        for i in 1..l {
            let t = &q * &lam[l][i];
            lam[k][i] -= t;
        }
    }

    while k <= n {
        if k > kmax {
            kmax = k;
            gs(&g, &mut d, &mut lam, k)?;
        }
        red(&mut g, &mut h, &d, &mut lam, k, k - 1);
        let lhs = &d[k] * &d[k - 2] * 4;
        let rhs = &d[k - 1] * &d[k - 1] * 3 - &lam[k][k - 1] * &lam[k][k - 1] * 4;
        if lhs < rhs {
            // swap k-1 and k
            h.swap_cols(k - 1, k - 2);
            g.swap_cols(k - 1, k - 2);
            g.swap_rows(k - 1, k - 2);
            for j in 1..k - 1 {
                let t = lam[k][j].clone();
                lam[k][j] = lam[k - 1][j].clone();
                lam[k - 1][j] = t;
            }
            let l = lam[k][k - 1].clone();
            let b = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
            for i in k + 1..=kmax {
                let t = lam[i][k].clone();
                lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
                lam[i][k - 1] = (&b * &t + &l * &lam[i][k]) / &d[k];
            }
            d[k - 1] = b;
            k = (k - 1).max(2);
        } else {
            for l in (1..k - 1).rev() {
                red(&mut g, &mut h, &d, &mut lam, k, l);
            }
            k += 1;
        }
    }
    Ok(LllResult { gram: g, transform: h })
}

/// LLL-reduces a lattice; returns the reduced lattice and the transform `T`
/// with `gram' = Tᵀ · gram · T`.
pub fn lll_reduce(l: &Lattice) -> Result<(Lattice, IntMatrix)> {
    let r = lll_gram(l.gram())?;
    Ok((Lattice::new(r.gram)?, r.transform))
}

/// Precomputed fraction-free Cholesky data of a Gram matrix.
struct Tableau {
    n: usize,
    /// leading minors D_0 = 1, …, D_n
    d: Vec<i128>,
    /// a[c][j] for j > c: row c of the Bareiss table after c steps
    a: Vec<Vec<i128>>,
}

fn to_i128(x: &BigInt) -> Result<i128> {
    x.to_i128().ok_or(Error::Overflow("enumeration tableau"))
}

impl Tableau {
    fn new(g: &IntMatrix) -> Result<Self> {
        let n = g.rows();
        let mut m: Vec<Vec<BigInt>> = (0..n).map(|i| g.row(i)).collect();
        let mut prev = BigInt::one();
        let mut d = vec![1i128];
        let mut a = vec![vec![0i128; n]; n];
        for c in 0..n {
            let piv = m[c][c].clone();
            if !piv.is_positive() {
                return Err(Error::NotPositiveDefinite);
            }
            d.push(to_i128(&piv)?);
            for j in c + 1..n {
                a[c][j] = to_i128(&m[c][j])?;
            }
            for i in c + 1..n {
                for j in c + 1..n {
                    let v = &piv * &m[i][j] - &m[i][c] * &m[c][j];
                    m[i][j] = v / &prev;
                }
            }
            prev = piv;
        }
        Ok(Tableau { n, d, a })
    }
}

fn isqrt(x: i128) -> i128 {
    debug_assert!(x >= 0);
    num_integer::Roots::sqrt(&x)
}

const OVF: Error = Error::Overflow("short-vector enumeration");

fn ck(x: Option<i128>) -> Result<i128> {
    x.ok_or(OVF)
}

/// Admissible range of coordinate `c` given the tail numerator.
fn coord_range(t: &Tableau, c: usize, x: &[i64], tail: i128, bound: i128) -> Result<Option<(i128, i128, i128)>> {
    let mut b: i128 = 0;
    for j in c + 1..t.n {
        if x[j] != 0 {
            b = ck(b.checked_add(ck(t.a[c][j].checked_mul(x[j] as i128))?))?;
        }
    }
    let dc = t.d[c];
    let dn = t.d[c + 1];
    let slack = ck(ck(dn.checked_mul(bound))?.checked_sub(tail))?;
    if slack < 0 {
        return Ok(None);
    }
    let r = ck(dc.checked_mul(slack))?;
    let s = isqrt(r);
    let lo = Integer::div_ceil(&(-b - s), &dn);
    let hi = Integer::div_floor(&(-b + s), &dn);
    if lo > hi {
        return Ok(None);
    }
    Ok(Some((lo, hi, b)))
}

fn next_tail(t: &Tableau, c: usize, tail: i128, xc: i128, b: i128) -> Result<i128> {
    let lin = ck(ck(t.d[c + 1].checked_mul(xc))?.checked_add(b))?;
    let sq = ck(lin.checked_mul(lin))?;
    let num = ck(ck(t.d[c].checked_mul(tail))?.checked_add(sq))?;
    debug_assert_eq!(num % t.d[c + 1], 0);
    Ok(num / t.d[c + 1])
}

/// Depth-first search below coordinate `c` (coordinates > c already set).
fn dfs(
    t: &Tableau,
    c: usize,
    x: &mut Vec<i64>,
    tail: i128,
    all_zero: bool,
    bound: i128,
    out: &mut Vec<(Vec<i64>, i64)>,
) -> Result<()> {
    let Some((mut lo, hi, b)) = coord_range(t, c, x, tail, bound)? else {
        return Ok(());
    };
    if all_zero {
        // keep one of ±v: the last nonzero coordinate is positive
        lo = lo.max(if c == 0 { 1 } else { 0 });
    }
    for xc in lo..=hi {
        x[c] = i64::try_from(xc).map_err(|_| OVF)?;
        let nt = next_tail(t, c, tail, xc, b)?;
        if c == 0 {
            out.push((x.clone(), i64::try_from(nt).map_err(|_| OVF)?));
        } else {
            dfs(t, c - 1, x, nt, all_zero && xc == 0, bound, out)?;
        }
    }
    x[c] = 0;
    Ok(())
}

/// Raw enumeration in the coordinates of `g` (no reduction), one of each
/// `±v`, unsorted.
fn enumerate_raw(g: &IntMatrix, bound: i64) -> Result<Vec<(Vec<i64>, i64)>> {
    let n = g.rows();
    if n == 0 || bound < 1 {
        return Ok(Vec::new());
    }
    let t = Tableau::new(g)?;
    let top = n - 1;
    let x0 = vec![0i64; n];
    let bound = bound as i128;
    let Some((lo, hi, _)) = coord_range(&t, top, &x0, 0, bound)? else {
        return Ok(Vec::new());
    };
    let lo = lo.max(0);
    let chunks: Vec<Result<Vec<(Vec<i64>, i64)>>> = (lo..=hi)
        .into_par_iter()
        .map(|xt| {
            let mut out = Vec::new();
            let mut x = x0.clone();
            x[top] = i64::try_from(xt).map_err(|_| OVF)?;
            let nt = next_tail(&t, top, 0, xt, 0)?;
            if top == 0 {
                if xt != 0 {
                    out.push((x.clone(), i64::try_from(nt).map_err(|_| OVF)?));
                }
            } else {
                dfs(&t, top - 1, &mut x, nt, xt == 0, bound, &mut out)?;
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

fn canonical_sign(v: &mut [i64]) {
    if let Some(f) = v.iter().find(|&&x| x != 0) {
        if *f < 0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Enumerates short vectors of the form given by `g` (coordinates in the
/// basis of `g`), reducing internally.
pub fn enumerate_gram(g: &IntMatrix, bound: i64) -> Result<ShortVectorSet> {
    let r = lll_gram(g)?;
    let tr = r.transform.to_i64().ok_or(Error::Overflow("LLL transform"))?;
    let n = g.rows();
    let raw = enumerate_raw(&r.gram, bound)?;
    let mut pairs: Vec<(Vec<i64>, i64)> = raw
        .into_par_iter()
        .map(|(y, norm)| {
            let mut v = vec![0i64; n];
            for i in 0..n {
                let mut s: i128 = 0;
                for j in 0..n {
                    s += tr[i * n + j] as i128 * y[j] as i128;
                }
                v[i] = i64::try_from(s).map_err(|_| OVF)?;
            }
            canonical_sign(&mut v);
            Ok((v, norm))
        })
        .collect::<Result<_>>()?;
    pairs.par_sort_unstable();
    let (vectors, norms) = pairs.into_iter().unzip();
    Ok(ShortVectorSet { bound, vectors, norms })
}

/// All nonzero vectors of `l` with norm at most `bound`, up to sign.
pub fn enumerate_short(l: &Lattice, bound: i64) -> Result<ShortVectorSet> {
    enumerate_gram(l.gram(), bound)
}

/// Minimum norm of the lattice.
pub fn min_norm(l: &Lattice) -> Result<i64> {
    let r = lll_gram(l.gram())?;
    let mut bound = (0..r.gram.rows())
        .map(|i| r.gram.get(i, i).to_i64().unwrap_or(i64::MAX))
        .min()
        .unwrap_or(0);
    if bound == 0 {
        return Ok(0);
    }
    // the shortest reduced basis vector is an upper bound for the minimum
    let raw = enumerate_raw(&r.gram, bound)?;
    bound = raw.iter().map(|(_, n)| *n).min().unwrap_or(bound);
    Ok(bound)
}

/// Norm of `v` under `g`, exact.
pub fn norm_of(g: &IntMatrix, v: &[i64]) -> BigInt {
    let n = g.rows();
    let mut s = BigInt::zero();
    for i in 0..n {
        if v[i] == 0 {
            continue;
        }
        for j in 0..n {
            if v[j] != 0 {
                s += g.get(i, j) * BigInt::from(v[i]) * BigInt::from(v[j]);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(rows: &[Vec<i64>]) -> Lattice {
        Lattice::new(IntMatrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn a2_roots() {
        let a2 = lat(&[vec![2, 1], vec![1, 2]]);
        let s = enumerate_short(&a2, 2).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.norms.iter().all(|&n| n == 2));
        let (red, t) = lll_reduce(&a2).unwrap();
        assert_eq!(red.gram().get(0, 0), &BigInt::from(2));
        assert_eq!(t.det().abs(), BigInt::one());
    }

    #[test]
    fn lll_unimodular_example() {
        let g = IntMatrix::from_rows(&[vec![5, 13], vec![13, 34]]);
        let r = lll_gram(&g).unwrap();
        assert!(r.gram.is_identity());
        assert_eq!(r.transform.transpose().mul(&g).mul(&r.transform), r.gram);
    }

    #[test]
    fn one_dimensional() {
        let s = enumerate_gram(&IntMatrix::from_rows(&[vec![2]]), 8).unwrap();
        assert_eq!(s.vectors, vec![vec![1], vec![2]]);
        assert_eq!(s.norms, vec![2, 8]);
    }
}
