//! Positive-definite integral lattices, discriminant forms and the
//! sublattices attached to an isometry.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmat::{IntMatrix, RatMatrix};
use crate::fqspace::{FpMatrix, FpQuadraticSpace};
use crate::shortvec;

/// Integral positive-definite lattice given by its Gram matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    gram: IntMatrix,
    even: bool,
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    rank: usize,
    gram: IntMatrix,
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeJson { rank: self.rank(), gram: self.gram.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = LatticeJson::deserialize(d)?;
        if j.gram.rows() != j.rank {
            return Err(serde::de::Error::custom("rank does not match Gram size"));
        }
        Lattice::new(j.gram).map_err(serde::de::Error::custom)
    }
}

impl Lattice {
    /// Validates symmetry and positive definiteness (all leading minors > 0).
    pub fn new(gram: IntMatrix) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::Dimension("Gram matrix must be square".into()));
        }
        if !gram.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        if gram.leading_minors().iter().any(|d| !d.is_positive()) {
            return Err(Error::NotPositiveDefinite);
        }
        let even = (0..gram.rows()).all(|i| gram.get(i, i).is_even());
        Ok(Lattice { gram, even })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(IntMatrix::from_rows(rows))
    }

    pub fn gram(&self) -> &IntMatrix {
        &self.gram
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn det(&self) -> BigInt {
        self.gram.det()
    }

    pub fn require_even(&self) -> Result<()> {
        if self.even {
            Ok(())
        } else {
            Err(Error::NotEven)
        }
    }

    /// `(x|y)` for rational coordinate vectors.
    pub fn inner_rat(&self, x: &[BigRational], y: &[BigRational]) -> BigRational {
        let n = self.rank();
        let mut s = BigRational::zero();
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            let mut t = BigRational::zero();
            for j in 0..n {
                if !y[j].is_zero() {
                    t += BigRational::from_integer(self.gram.get(i, j).clone()) * &y[j];
                }
            }
            s += &x[i] * t;
        }
        s
    }

    /// Tests whether `m` is an isometry (`mᵀ G m = G`).
    pub fn is_isometry(&self, m: &IntMatrix) -> bool {
        m.rows() == self.rank() && m.cols() == self.rank() && m.transpose().mul(&self.gram).mul(m) == self.gram
    }

    /// Sublattice whose basis is given by the columns of `basis`.
    pub fn sublattice(&self, basis: &IntMatrix) -> Result<Lattice> {
        Lattice::new(basis.transpose().mul(&self.gram).mul(basis))
    }
}

/// Integer matrix acting on lattice coordinates and preserving the form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Isometry {
    pub matrix: IntMatrix,
}

impl Isometry {
    pub fn new(l: &Lattice, matrix: IntMatrix) -> Result<Self> {
        if !l.is_isometry(&matrix) {
            return Err(Error::NotIsometry);
        }
        Ok(Isometry { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Isometry { matrix: IntMatrix::identity(n) }
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { matrix: self.matrix.mul(&other.matrix) }
    }

    pub fn pow(&self, e: u64) -> Isometry {
        Isometry { matrix: self.matrix.pow(e) }
    }

    /// Multiplicative order, up to `limit`.
    pub fn order(&self, limit: u64) -> Option<u64> {
        let mut m = self.matrix.clone();
        for k in 1..=limit {
            if m.is_identity() {
                return Some(k);
            }
            m = m.mul(&self.matrix);
        }
        None
    }
}

/// Element of `Q/Z` stored as a reduced fraction in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QZValue {
    pub numerator: i64,
    pub denominator: i64,
}

impl QZValue {
    pub fn zero() -> Self {
        QZValue { numerator: 0, denominator: 1 }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        let den = r.denom().clone();
        let num = r.numer().mod_floor(&den);
        let g = num.gcd(&den);
        let (num, den) = if num.is_zero() { (BigInt::zero(), BigInt::one()) } else { (num / &g, den / g) };
        QZValue {
            numerator: num.to_i64().expect("QZ numerator fits"),
            denominator: den.to_i64().expect("QZ denominator fits"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(self.numerator.into(), self.denominator.into())
    }
}

impl std::fmt::Display for QZValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl Serialize for QZValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The discriminant group `L*/L` with its quadratic form.
///
/// Elements are coordinate vectors `(c_1, …, c_k)` with `0 ≤ c_i < d_i`
/// relative to the generators.
#[derive(Clone, Debug)]
pub struct DiscriminantGroup {
    gram: IntMatrix,
    /// nontrivial elementary divisors `d_1 | … | d_k`
    pub orders: Vec<BigInt>,
    /// coset representatives in rational lattice coordinates
    pub generators: Vec<Vec<BigRational>>,
    /// rows of the Smith transform `U` giving coordinates from dual coordinates
    coord_rows: IntMatrix,
    /// `(x_i | x_j) mod Z`
    pub bilinear: Vec<Vec<QZValue>>,
    /// `q_L(x_i)`
    pub gen_q: Vec<QZValue>,
}

#[derive(Serialize)]
struct QvalEntry {
    elt: Vec<String>,
    q: QZValue,
}

#[derive(Serialize)]
struct DiscJson {
    orders: Vec<String>,
    qvals: Vec<QvalEntry>,
}

/// Largest group for which all elements are listed in JSON output.
pub const QVALS_LISTING_LIMIT: u64 = 1 << 16;

impl Serialize for DiscriminantGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let qvals = if self.order() <= BigInt::from(QVALS_LISTING_LIMIT) {
            self.elements()
                .into_iter()
                .map(|e| QvalEntry { q: self.q(&e), elt: e.iter().map(|x| x.to_string()).collect() })
                .collect()
        } else {
            Vec::new()
        };
        DiscJson { orders: self.orders.iter().map(|x| x.to_string()).collect(), qvals }.serialize(s)
    }
}

fn frac_reduce(v: &[BigRational]) -> Vec<BigRational> {
    v.iter().map(|x| x - BigRational::from_integer(x.floor().to_integer())).collect()
}

/// Builds `D(L)`; the lattice must be even for `q_L` to be defined.
pub fn discriminant_group(l: &Lattice) -> Result<DiscriminantGroup> {
    l.require_even()?;
    let n = l.rank();
    let g = l.gram();
    let smith = g.snf();
    let ginv = g.rat_inverse()?;
    let uinv = smith.u.rat_inverse()?;
    let mut orders = Vec::new();
    let mut generators = Vec::new();
    let mut rows = Vec::new();
    for i in 0..n {
        let d = smith.d.get(i, i).clone();
        if d.is_one() {
            continue;
        }
        // y = U⁻¹ e_i in dual coordinates, x = G⁻¹ y
        let y = uinv.col(i);
        let x: Vec<BigRational> = (0..n)
            .map(|r| (0..n).map(|c| ginv.get(r, c) * &y[c]).sum())
            .collect();
        generators.push(frac_reduce(&x));
        orders.push(d);
        rows.push(smith.u.row(i));
    }
    let coord_rows = IntMatrix::from_rows(&rows);
    let k = orders.len();
    let mut bilinear = vec![vec![QZValue::zero(); k]; k];
    let mut gen_q = Vec::with_capacity(k);
    for i in 0..k {
        for j in 0..k {
            bilinear[i][j] = QZValue::from_rational(&l.inner_rat(&generators[i], &generators[j]));
        }
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        gen_q.push(QZValue::from_rational(&(l.inner_rat(&generators[i], &generators[i]) * half)));
    }
    let coord_rows = if k == 0 { IntMatrix::zeros(0, n) } else { coord_rows };
    let dg = DiscriminantGroup { gram: g.clone(), orders, generators, coord_rows, bilinear, gen_q };
    debug_assert_eq!(dg.order(), l.det());
    Ok(dg)
}

impl DiscriminantGroup {
    pub fn order(&self) -> BigInt {
        self.orders.iter().product()
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    /// `Some(p)` when the group is an elementary abelian `p`-group.
    pub fn elementary_prime(&self) -> Option<u64> {
        let first = self.orders.first()?.to_u64()?;
        if self.orders.iter().all(|d| d.to_u64() == Some(first)) && is_prime(first) {
            Some(first)
        } else {
            None
        }
    }

    /// Element coordinates of a vector of `L*` given in rational lattice
    /// coordinates. Errors when the vector is not in `L*`.
    pub fn coordinates(&self, x: &[BigRational]) -> Result<Vec<BigInt>> {
        let n = self.gram.rows();
        let mut y = Vec::with_capacity(n);
        for r in 0..n {
            let s: BigRational =
                (0..n).map(|c| BigRational::from_integer(self.gram.get(r, c).clone()) * &x[c]).sum();
            if !s.is_integer() {
                return Err(Error::Verification("vector not in the dual lattice".into()));
            }
            y.push(s.to_integer());
        }
        Ok(self.dual_coordinates(&y))
    }

    /// Element coordinates from dual coordinates `y = G x`.
    pub fn dual_coordinates(&self, y: &[BigInt]) -> Vec<BigInt> {
        let c = self.coord_rows.mul_vec(y);
        c.iter().zip(&self.orders).map(|(a, d)| a.mod_floor(d)).collect()
    }

    /// Representative in rational lattice coordinates.
    pub fn representative(&self, elt: &[BigInt]) -> Vec<BigRational> {
        let n = self.gram.rows();
        let mut x = vec![BigRational::zero(); n];
        for (c, gen) in elt.iter().zip(&self.generators) {
            if c.is_zero() {
                continue;
            }
            for i in 0..n {
                x[i] += BigRational::from_integer(c.clone()) * &gen[i];
            }
        }
        frac_reduce(&x)
    }

    /// `q_L` of an element.
    pub fn q(&self, elt: &[BigInt]) -> QZValue {
        let mut s = BigRational::zero();
        for i in 0..elt.len() {
            if elt[i].is_zero() {
                continue;
            }
            let ci = BigRational::from_integer(elt[i].clone());
            s += &ci * &ci * self.gen_q[i].to_rational();
            for j in i + 1..elt.len() {
                if !elt[j].is_zero() {
                    s += &ci * BigRational::from_integer(elt[j].clone()) * self.bilinear[i][j].to_rational();
                }
            }
        }
        QZValue::from_rational(&s)
    }

    /// `q_L` recomputed directly from a representative.
    pub fn q_of_vector(&self, x: &[BigRational]) -> QZValue {
        let n = self.gram.rows();
        let mut s = BigRational::zero();
        for i in 0..n {
            for j in 0..n {
                s += BigRational::from_integer(self.gram.get(i, j).clone()) * &x[i] * &x[j];
            }
        }
        QZValue::from_rational(&(s / BigRational::from_integer(2.into())))
    }

    /// All elements in lexicographic coordinate order.
    pub fn elements(&self) -> Vec<Vec<BigInt>> {
        let mut out = vec![Vec::new()];
        for d in &self.orders {
            let d = d.to_u64().expect("discriminant element listing needs small orders");
            let mut next = Vec::with_capacity(out.len() * d as usize);
            for e in &out {
                for c in 0..d {
                    let mut e2 = e.clone();
                    e2.push(BigInt::from(c));
                    next.push(e2);
                }
            }
            out = next;
        }
        out
    }

    /// `(D(L), p·q_L)` as a quadratic space over `F_p` (bilinear Gram
    /// `p·(x_i|x_j) mod p`).
    pub fn fp_space(&self) -> Result<FpQuadraticSpace> {
        let p = self
            .elementary_prime()
            .ok_or_else(|| Error::Unsupported("discriminant group is not elementary abelian".into()))?;
        let k = self.rank();
        let mut m = FpMatrix::zeros(p, k, k);
        for i in 0..k {
            for j in 0..k {
                let b = self.bilinear[i][j];
                // b = a / p with a integral
                let a = b.numerator * (p as i64) / b.denominator;
                m.set(i, j, a.rem_euclid(p as i64) as u64);
            }
        }
        FpQuadraticSpace::new(m)
    }

    /// Minimal-norm representative of each element, found by enumerating
    /// short vectors of the dual lattice with growing bounds. Returns
    /// `None` when more than `max_vectors` vectors would be needed.
    pub fn minimal_representatives(&self, max_vectors: usize) -> Result<Option<Vec<(Vec<BigInt>, Vec<BigRational>, BigRational)>>> {
        let total = self.order().to_usize().ok_or(Error::Overflow("discriminant order"))?;
        let n = self.gram.rows();
        let e = self.orders.last().cloned().unwrap_or_else(BigInt::one);
        let ginv = self.gram.rat_inverse()?;
        let scaled = ginv
            .mul(&RatMatrix::from_int(&IntMatrix::identity(n).scale(&e)))
            .to_int()
            .ok_or_else(|| Error::Verification("exponent does not clear the dual Gram".into()))?;
        let mut bound = 2i64;
        loop {
            let sv = shortvec::enumerate_gram(&scaled, bound)?;
            if 2 * sv.len() > max_vectors {
                return Ok(None);
            }
            let mut best: std::collections::BTreeMap<Vec<BigInt>, (i64, Vec<i64>)> = Default::default();
            best.insert(vec![BigInt::zero(); self.rank()], (0, vec![0; n]));
            for (v, &norm) in sv.vectors.iter().zip(&sv.norms) {
                for s in [1i64, -1] {
                    let y: Vec<i64> = v.iter().map(|a| a * s).collect();
                    let yb: Vec<BigInt> = y.iter().map(|&a| BigInt::from(a)).collect();
                    let c = self.dual_coordinates(&yb);
                    let entry = best.entry(c).or_insert((norm, y.clone()));
                    if (norm, &y) < (entry.0, &entry.1) {
                        *entry = (norm, y);
                    }
                }
            }
            if best.len() == total {
                let mut out = Vec::with_capacity(total);
                for (c, (norm, y)) in best {
                    let x: Vec<BigRational> = (0..n)
                        .map(|r| (0..n).map(|k| ginv.get(r, k) * BigInt::from(y[k])).sum())
                        .collect();
                    out.push((c, x, BigRational::new(BigInt::from(norm), e.clone())));
                }
                return Ok(Some(out));
            }
            bound *= 2;
        }
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Boolean predicates of a lattice relative to a prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Predicates {
    pub even: bool,
    pub rootless: bool,
    pub p_elementary: bool,
}

/// `p·L* ⊂ L` iff `p·G⁻¹` is integral.
pub fn is_p_elementary(l: &Lattice, p: u64) -> Result<bool> {
    let ginv = l.gram().rat_inverse()?;
    let pb = BigInt::from(p);
    Ok((0..l.rank()).all(|i| (0..l.rank()).all(|j| (ginv.get(i, j) * &pb).is_integer())))
}

pub fn lattice_predicates(l: &Lattice, p: u64) -> Result<Predicates> {
    let rootless = shortvec::enumerate_short(l, 2)?.is_empty();
    Ok(Predicates { even: l.is_even(), rootless, p_elementary: is_p_elementary(l, p)? })
}

/// A sublattice together with its basis (columns, in parent coordinates).
#[derive(Clone, Debug)]
pub struct SubLattice {
    pub basis: IntMatrix,
    pub lattice: Option<Lattice>,
}

impl SubLattice {
    pub fn rank(&self) -> usize {
        self.basis.cols()
    }
}

/// Fixed sublattice `L^g`, coinvariant sublattice `L_g`, and the matrix of
/// `g` restricted to `L_g` in the basis of `L_g`.
#[derive(Clone, Debug)]
pub struct FixedCoinvariant {
    pub fixed: SubLattice,
    pub coinvariant: SubLattice,
    pub g_on_coinvariant: IntMatrix,
}

/// Solves `m · B = B · X` for `X` when the column span of `B` is
/// `m`-stable.
pub fn restrict(l: &Lattice, m: &IntMatrix, basis: &IntMatrix) -> Result<IntMatrix> {
    let g = l.gram();
    let bt_g = basis.transpose().mul(g);
    let gram_b = bt_g.mul(basis);
    let x = gram_b.rat_inverse()?.mul_int(&bt_g.mul(m).mul(basis));
    let x = x
        .to_int()
        .ok_or_else(|| Error::Verification("restricted matrix is not integral".into()))?;
    if m.mul(basis) != basis.mul(&x) {
        return Err(Error::Verification("sublattice is not stable".into()));
    }
    Ok(x)
}

pub fn fixed_and_coinvariant(l: &Lattice, g: &IntMatrix) -> Result<FixedCoinvariant> {
    if !l.is_isometry(g) {
        return Err(Error::NotIsometry);
    }
    let n = l.rank();
    let fixed_basis = g.sub(&IntMatrix::identity(n)).kernel();
    let coinv_basis = if fixed_basis.cols() == 0 {
        IntMatrix::identity(n)
    } else {
        fixed_basis.transpose().mul(l.gram()).kernel()
    };
    let sub = |b: &IntMatrix| -> Result<SubLattice> {
        let lattice = if b.cols() == 0 { None } else { Some(l.sublattice(b)?) };
        Ok(SubLattice { basis: b.clone(), lattice })
    };
    let g_on_coinvariant = if coinv_basis.cols() == 0 {
        IntMatrix::zeros(0, 0)
    } else {
        restrict(l, g, &coinv_basis)?
    };
    Ok(FixedCoinvariant { fixed: sub(&fixed_basis)?, coinvariant: sub(&coinv_basis)?, g_on_coinvariant })
}

/// Invariants of `L/S` where the columns of `gens` generate `S ⊆ L`.
/// Returns the nontrivial elementary divisors.
pub fn quotient_invariants(l: &Lattice, gens: &IntMatrix) -> Result<Vec<BigInt>> {
    if gens.rows() != l.rank() {
        return Err(Error::Dimension("generator rows must equal lattice rank".into()));
    }
    let divs = gens.elementary_divisors();
    if divs.len() < l.rank() || divs.iter().any(Zero::is_zero) {
        return Err(Error::Unsupported("sublattice has infinite index".into()));
    }
    Ok(divs.into_iter().filter(|d| !d.is_one()).collect())
}

/// Generators of `(1−g)L*`, or the standing-assumption error when they do
/// not lie in `L`.
pub fn one_minus_g_dual(l: &Lattice, g: &IntMatrix) -> Result<IntMatrix> {
    let n = l.rank();
    let omg = IntMatrix::identity(n).sub(g);
    omg.to_rat()
        .mul(&l.gram().rat_inverse()?)
        .to_int()
        .ok_or(Error::DualNotContained)
}

/// Invariants of `L/(1−g)L`.
pub fn quotient_one_minus_g(l: &Lattice, g: &IntMatrix) -> Result<Vec<BigInt>> {
    quotient_invariants(l, &IntMatrix::identity(l.rank()).sub(g))
}

/// Invariants of `L/(1−g)L*`.
pub fn quotient_one_minus_g_dual(l: &Lattice, g: &IntMatrix) -> Result<Vec<BigInt>> {
    quotient_invariants(l, &one_minus_g_dual(l, g)?)
}

/// Induced action of an isometry on `D(L)`: column `j` holds the
/// coordinates of `h·x_j`. Asserts that `q_L` is preserved.
pub fn discriminant_action(l: &Lattice, h: &IntMatrix, dg: &DiscriminantGroup) -> Result<IntMatrix> {
    if !l.is_isometry(h) {
        return Err(Error::NotIsometry);
    }
    let hr = h.to_rat();
    let k = dg.rank();
    let mut cols = Vec::with_capacity(k);
    for gen in &dg.generators {
        let n = gen.len();
        let img: Vec<BigRational> = (0..n).map(|i| (0..n).map(|j| hr.get(i, j) * &gen[j]).sum()).collect();
        let c = dg.coordinates(&img)?;
        if dg.q(&c) != dg.q_of_vector(gen) {
            return Err(Error::Verification("discriminant form not preserved".into()));
        }
        cols.push(c);
    }
    Ok(IntMatrix::from_columns(k, &cols))
}

/// Discriminant action reduced to an `F_p` matrix (p-elementary case).
pub fn discriminant_action_fp(l: &Lattice, h: &IntMatrix, dg: &DiscriminantGroup) -> Result<FpMatrix> {
    let p = dg
        .elementary_prime()
        .ok_or_else(|| Error::Unsupported("discriminant group is not elementary abelian".into()))?;
    let a = discriminant_action(l, h, dg)?;
    let k = dg.rank();
    let mut m = FpMatrix::zeros(p, k, k);
    for i in 0..k {
        for j in 0..k {
            m.set(i, j, a.get(i, j).mod_floor(&BigInt::from(p)).to_u64().unwrap());
        }
    }
    Ok(m)
}
