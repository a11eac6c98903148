//! Isometry groups of lattices carrying extra bilinear forms.
//!
//! The search follows Plesken–Souvignier: fix short independent vectors
//! `b_1, …, b_n`, and backtrack over images `x_i` drawn from the short
//! vectors, requiring `F(x_i, x_j) = F(b_i, b_j)` for every form `F` of
//! the family. Candidate lists of all deeper levels are filtered after
//! each choice, so a level
//! with no candidates prunes the branch at once. Orbits of the frame
//! vectors under the point stabilizers give the order as a product.

pub mod perm;

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmat::{IntMatrix, RatMatrix};
use crate::fqspace::FpGroup;
use crate::lattice::{discriminant_action_fp, DiscriminantGroup, Lattice};
use crate::shortvec::{enumerate_gram, lll_gram};

use perm::{Factored, GroupInvariants, Perm, StabChain};

/// Bilinear forms on a common `Z`-module; the first one is a positive
/// definite Gram matrix. Forms need not be symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormFamily {
    forms: Vec<IntMatrix>,
}

impl FormFamily {
    pub fn new(forms: Vec<IntMatrix>) -> Result<Self> {
        let first = forms.first().ok_or_else(|| Error::Dimension("empty form family".into()))?;
        Lattice::new(first.clone())?;
        let n = first.rows();
        if forms.iter().any(|f| f.rows() != n || f.cols() != n) {
            return Err(Error::Dimension("forms of different sizes".into()));
        }
        Ok(FormFamily { forms })
    }

    pub fn lattice(l: &Lattice) -> Self {
        FormFamily { forms: vec![l.gram().clone()] }
    }

    /// `{G·g^k : 0 ≤ k < |g|}`; its automorphisms are the isometries
    /// commuting with `g`.
    pub fn powers(l: &Lattice, g: &IntMatrix) -> Result<Self> {
        if !l.is_isometry(g) {
            return Err(Error::NotIsometry);
        }
        let m = g_order(g)?;
        let mut forms = vec![l.gram().clone()];
        let mut gk = IntMatrix::identity(l.rank());
        for _ in 1..m {
            gk = gk.mul(g);
            forms.push(l.gram().mul(&gk));
        }
        Ok(FormFamily { forms })
    }

    pub fn forms(&self) -> &[IntMatrix] {
        &self.forms
    }

    pub fn rank(&self) -> usize {
        self.forms[0].rows()
    }

    /// `hᵀ F h = F` for every form.
    pub fn preserved_by(&self, h: &IntMatrix) -> bool {
        let ht = h.transpose();
        self.forms.iter().all(|f| &ht.mul(f).mul(h) == f)
    }
}

fn g_order(g: &IntMatrix) -> Result<u64> {
    let mut m = g.clone();
    for k in 1..=1000u64 {
        if m.is_identity() {
            return Ok(k);
        }
        m = m.mul(g);
    }
    Err(Error::Unsupported("isometry of order above 1000".into()))
}

/// Short vectors (both signs) in the LLL coordinates of a search, plus a
/// frame of linearly independent domain vectors used as the base.
#[derive(Debug)]
pub struct Domain {
    n: usize,
    /// LLL basis vectors as columns, in the caller's coordinates
    basis: IntMatrix,
    basis_inv: IntMatrix,
    bound: i64,
    vectors: Vec<i64>,
    norms: Vec<i64>,
    index: HashMap<Vec<i64>, u32>,
    frame: Vec<u32>,
    /// `den · F⁻¹` for the frame matrix `F`, row-major, when it fits in i64
    frame_adj: Option<Vec<i64>>,
    frame_den: i64,
    frame_inv: RatMatrix,
}

impl Domain {
    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    /// Index of the frame sublattice in the lattice.
    pub fn frame_index(&self) -> BigInt {
        let f = self.frame_matrix();
        f.det().abs()
    }

    fn frame_matrix(&self) -> IntMatrix {
        let n = self.n;
        let mut m = IntMatrix::zeros(n, n);
        for (c, &v) in self.frame.iter().enumerate() {
            for (r, &x) in self.vec(v).iter().enumerate() {
                m.set(r, c, BigInt::from(x));
            }
        }
        m
    }

    fn vec(&self, i: u32) -> &[i64] {
        let i = i as usize;
        &self.vectors[i * self.n..(i + 1) * self.n]
    }

    fn apply(&self, x: &[i64], v: u32) -> Option<u32> {
        let n = self.n;
        let src = self.vec(v);
        let img: Vec<i64> = (0..n).map(|r| (0..n).map(|c| x[r * n + c] * src[c]).sum()).collect();
        self.index.get(&img).copied()
    }

    /// Matrix in working coordinates, flattened row-major.
    fn to_working(&self, h: &IntMatrix) -> Result<Vec<i64>> {
        self.basis_inv.mul(h).mul(&self.basis).to_i64().ok_or(Error::Overflow("isometry entries"))
    }

    fn from_working(&self, x: &[i64]) -> IntMatrix {
        self.basis.mul(&IntMatrix::from_i64(self.n, self.n, x)).mul(&self.basis_inv)
    }

    /// Working matrix sending the frame to the points `images`, if integral.
    fn solve_frame(&self, images: &[u32]) -> Result<Option<Vec<i64>>> {
        let n = self.n;
        if let Some(adj) = &self.frame_adj {
            let den = i128::from(self.frame_den);
            let mut x = vec![0i64; n * n];
            for r in 0..n {
                for c in 0..n {
                    let mut s = 0i128;
                    for (k, &v) in images.iter().enumerate() {
                        s += i128::from(self.vec(v)[r]) * i128::from(adj[k * n + c]);
                    }
                    if s % den != 0 {
                        return Ok(None);
                    }
                    x[r * n + c] = i64::try_from(s / den).map_err(|_| Error::Overflow("isometry entries"))?;
                }
            }
            return Ok(Some(x));
        }
        let mut y = IntMatrix::zeros(n, n);
        for (c, &v) in images.iter().enumerate() {
            for (r, &val) in self.vec(v).iter().enumerate() {
                y.set(r, c, BigInt::from(val));
            }
        }
        match RatMatrix::from_int(&y).mul(&self.frame_inv).to_int() {
            Some(m) => Ok(Some(m.to_i64().ok_or(Error::Overflow("isometry entries"))?)),
            None => Ok(None),
        }
    }

    /// Permutation of the domain induced by an isometry (caller's coordinates).
    pub fn perm_of(&self, h: &IntMatrix) -> Result<Perm> {
        let x = self.to_working(h)?;
        (0..self.len() as u32)
            .map(|v| self.apply(&x, v).ok_or_else(|| Error::Verification("domain not invariant".into())))
            .collect()
    }

    /// Domain points of the smallest norm.
    pub fn minimal_points(&self) -> Vec<u32> {
        let m = self.norms.iter().copied().min().unwrap_or(0);
        (0..self.len() as u32).filter(|&i| self.norms[i as usize] == m).collect()
    }
}

const RANK_PRIME: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(RANK_PRIME)) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

/// Incremental row echelon form over `F_q`, `q = 2^61 − 1`. Rank there is
/// a lower bound for the rational rank.
struct Echelon {
    rows: Vec<(usize, Vec<u64>)>,
}

impl Echelon {
    fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    fn reduce(&self, v: &[i64]) -> Vec<u64> {
        let q = RANK_PRIME as i128;
        let mut w: Vec<u64> = v.iter().map(|&x| (i128::from(x).rem_euclid(q)) as u64).collect();
        for (p, row) in &self.rows {
            let c = w[*p];
            if c != 0 {
                for (a, &b) in w.iter_mut().zip(row) {
                    *a = (*a + RANK_PRIME - mulmod(c, b)) % RANK_PRIME;
                }
            }
        }
        w
    }

    fn independent(&self, v: &[i64]) -> bool {
        self.reduce(v).iter().any(|&x| x != 0)
    }

    fn insert(&mut self, v: &[i64]) -> bool {
        let mut w = self.reduce(v);
        let Some(p) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = powmod(w[p], RANK_PRIME - 2);
        for a in w.iter_mut() {
            *a = mulmod(*a, inv);
        }
        self.rows.push((p, w));
        true
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Builds the search domain for a family whose first form is positive
/// definite. The domain is the set of vectors of norm at most `bound`;
/// by default the least bound at which these vectors span `Q^n`. The
/// working coordinates are those of an LLL basis.
///
/// The frame is chosen greedily: each new frame vector minimizes the
/// number of domain vectors sharing its norm and its form values against
/// the previous frame vectors (the backtracking fingerprint). A frame
/// need not be a `Z`-basis; integrality is checked on complete images.
pub fn build_domain(family: &FormFamily, bound: Option<i64>) -> Result<Arc<Domain>> {
    let g = &family.forms[0];
    let n = g.rows();
    let r = lll_gram(g)?;
    let t = &r.transform;
    let tt = t.transpose();
    let mut forms: Vec<Vec<i64>> = Vec::new();
    for f in &family.forms {
        let w = tt.mul(f).mul(t).to_i64().ok_or(Error::Overflow("form entries"))?;
        if !forms.contains(&w) {
            forms.push(w);
        }
    }
    let mindiag = (0..n).map(|i| r.gram.get(i, i).to_i64().unwrap_or(i64::MAX)).min().unwrap_or(0);
    let spans = |sv: &crate::shortvec::ShortVectorSet| {
        let mut e = Echelon::new();
        for v in &sv.vectors {
            e.insert(v);
            if e.rank() == n {
                break;
            }
        }
        e.rank() == n
    };
    let (bound, sv) = match bound {
        Some(b) => {
            let sv = enumerate_gram(&r.gram, b)?;
            if !spans(&sv) {
                return Err(Error::Unsupported(format!("vectors of norm at most {b} do not span")));
            }
            (b, sv)
        }
        None => {
            let mut b = mindiag;
            loop {
                let sv = enumerate_gram(&r.gram, b)?;
                if spans(&sv) {
                    break (b, sv);
                }
                // terminates once the LLL basis lies inside
                b += 1;
            }
        }
    };
    let mut vectors = Vec::with_capacity(2 * sv.len() * n);
    let mut norms = Vec::with_capacity(2 * sv.len());
    for (v, &nm) in sv.vectors.iter().zip(&sv.norms) {
        vectors.extend_from_slice(v);
        norms.push(nm);
        vectors.extend(v.iter().map(|x| -x));
        norms.push(nm);
    }
    let count = norms.len();
    let vec_at = |i: usize| &vectors[i * n..(i + 1) * n];
    let symmetric: Vec<bool> = forms.iter().map(|f| *f == transpose_flat(f, n)).collect();
    // signature classes: initially norm and the diagonal form values
    let mut class: Vec<u32> = {
        let mut ids: HashMap<Vec<i64>, u32> = HashMap::new();
        (0..count)
            .map(|i| {
                let x = vec_at(i);
                let key: Vec<i64> = forms.iter().map(|f| dot(x, &matvec(f, x, n))).collect();
                let next = ids.len() as u32;
                *ids.entry(key).or_insert(next)
            })
            .collect()
    };
    let mut frame: Vec<u32> = Vec::with_capacity(n);
    let mut ech = Echelon::new();
    while frame.len() < n {
        let mut sizes: HashMap<u32, usize> = HashMap::new();
        for &c in &class {
            *sizes.entry(c).or_insert(0) += 1;
        }
        let mut order: Vec<u32> = (0..count as u32).collect();
        order.sort_by_key(|&i| (sizes[&class[i as usize]], norms[i as usize], i));
        let pick = order
            .into_iter()
            .find(|&i| ech.independent(vec_at(i as usize)))
            .ok_or_else(|| Error::Verification("domain does not span".into()))?;
        ech.insert(vec_at(pick as usize));
        frame.push(pick);
        if frame.len() == n {
            break;
        }
        let f = vec_at(pick as usize);
        let us: Vec<Vec<i64>> = forms.iter().map(|m| matvec(m, f, n)).collect();
        let uts: Vec<Option<Vec<i64>>> = forms
            .iter()
            .zip(&symmetric)
            .map(|(m, &s)| if s { None } else { Some(matvec(&transpose_flat(m, n), f, n)) })
            .collect();
        let mut ids: HashMap<(u32, Vec<i64>), u32> = HashMap::new();
        for (i, c) in class.iter_mut().enumerate() {
            let x = vec_at(i);
            let mut key = Vec::with_capacity(2 * forms.len());
            for (u, ut) in us.iter().zip(&uts) {
                key.push(dot(x, u));
                if let Some(ut) = ut {
                    key.push(dot(x, ut));
                }
            }
            let next = ids.len() as u32;
            *c = *ids.entry((*c, key)).or_insert(next);
        }
    }
    let basis = t.clone();
    let basis_inv = basis.rat_inverse()?.to_int().ok_or(Error::Verification("LLL transform not unimodular".into()))?;
    let index: HashMap<Vec<i64>, u32> = (0..count).map(|i| (vec_at(i).to_vec(), i as u32)).collect();
    let mut dom = Domain {
        n,
        basis,
        basis_inv,
        bound,
        vectors,
        norms,
        index,
        frame,
        frame_adj: None,
        frame_den: 1,
        frame_inv: RatMatrix::identity(n),
    };
    let finv = dom.frame_matrix().rat_inverse()?;
    let den = finv.denominator_lcm();
    let adj = finv.mul_int(&IntMatrix::identity(n).scale(&den)).to_int().expect("cleared denominators");
    if let (Some(d), Some(a)) = (den.to_i64(), adj.to_i64()) {
        let amax = a.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        // products of a domain coordinate and an entry, summed n times, stay in i128
        if amax < (1 << 62) {
            dom.frame_den = d;
            dom.frame_adj = Some(a);
        }
    }
    dom.frame_inv = finv;
    Ok(Arc::new(dom))
}

/// One backtracking problem: find images `y_a` of the frame vectors `f_a`
/// with `T_j(y_a, y_b) = S_j(f_a, f_b)` spanning an integral matrix.
struct Problem<'a> {
    dom: &'a Domain,
    n: usize,
    /// `S_j(f_a, f_b)` as `src[j][a·n + b]`
    src: Vec<Vec<i64>>,
    tgt: Vec<Vec<i64>>,
    tgt_t: Vec<Vec<i64>>,
    symmetric: Vec<bool>,
    cand0: Vec<Vec<u32>>,
    nodes: u64,
    node_budget: u64,
    solution: Option<Vec<i64>>,
}

#[inline]
fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matvec(f: &[i64], v: &[i64], n: usize) -> Vec<i64> {
    (0..n).map(|r| dot(&f[r * n..(r + 1) * n], v)).collect()
}

fn transpose_flat(f: &[i64], n: usize) -> Vec<i64> {
    let mut t = vec![0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = f[i * n + j];
        }
    }
    t
}

impl<'a> Problem<'a> {
    fn new(dom: &'a Domain, src: &FormFamily, tgt: &FormFamily, node_budget: u64) -> Result<Self> {
        let n = dom.n;
        if src.forms.len() != tgt.forms.len() || src.forms[0] != tgt.forms[0] {
            return Err(Error::Dimension("families must share the Gram form and length".into()));
        }
        let work = |f: &IntMatrix| -> Result<Vec<i64>> {
            dom.basis.transpose().mul(f).mul(&dom.basis).to_i64().ok_or(Error::Overflow("form entries"))
        };
        // drop repeated forms (e.g. the powers of g up to symmetry)
        let mut s_forms: Vec<Vec<i64>> = Vec::new();
        let mut t_forms: Vec<Vec<i64>> = Vec::new();
        for (a, b) in src.forms.iter().zip(&tgt.forms) {
            let (a, b) = (work(a)?, work(b)?);
            if !s_forms.iter().zip(&t_forms).any(|(x, y)| *x == a && *y == b) {
                s_forms.push(a);
                t_forms.push(b);
            }
        }
        let frame: Vec<&[i64]> = dom.frame.iter().map(|&v| dom.vec(v)).collect();
        let vals: Vec<Vec<i64>> = s_forms
            .iter()
            .map(|s| {
                let mut m = vec![0i64; n * n];
                for (a, fa) in frame.iter().enumerate() {
                    let sfb: Vec<Vec<i64>> = frame.iter().map(|fb| matvec(s, fb, n)).collect();
                    for (b, u) in sfb.iter().enumerate() {
                        m[a * n + b] = dot(fa, u);
                    }
                }
                m
            })
            .collect();
        let tgt_t: Vec<Vec<i64>> = t_forms.iter().map(|f| transpose_flat(f, n)).collect();
        let symmetric: Vec<bool> = vals
            .iter()
            .zip(&t_forms)
            .zip(&tgt_t)
            .map(|((s, t), tt)| *t == *tt && *s == transpose_flat(s, n))
            .collect();
        let mut pb = Problem {
            dom,
            n,
            src: vals,
            tgt: t_forms,
            tgt_t,
            symmetric,
            cand0: Vec::new(),
            nodes: 0,
            node_budget,
            solution: None,
        };
        pb.cand0 = (0..n)
            .map(|e| {
                (0..dom.len() as u32)
                    .filter(|&v| {
                        let x = dom.vec(v);
                        dom.norms[v as usize] == pb.src[0][e * n + e]
                            && (1..pb.src.len()).all(|j| dot(x, &matvec(&pb.tgt[j], x, n)) == pb.src[j][e * n + e])
                    })
                    .collect()
            })
            .collect();
        Ok(pb)
    }

    /// Filters the candidate lists of levels `d+1..n` (given as
    /// `lists[1..]`) against `y_d = v`. `None` if some level empties.
    fn filter(&self, d: usize, v: u32, lists: &[Vec<u32>]) -> Option<Vec<Vec<u32>>> {
        let n = self.n;
        let x = self.dom.vec(v);
        let a: Vec<Vec<i64>> = self.tgt.iter().map(|f| matvec(f, x, n)).collect();
        let b: Vec<Option<Vec<i64>>> =
            self.tgt_t.iter().zip(&self.symmetric).map(|(f, &s)| if s { None } else { Some(matvec(f, x, n)) }).collect();
        let mut out = Vec::with_capacity(lists.len().saturating_sub(1));
        for (off, list) in lists.iter().enumerate().skip(1) {
            let e = d + off;
            let kept: Vec<u32> = list
                .iter()
                .copied()
                .filter(|&w| {
                    if w == v {
                        return false;
                    }
                    let y = self.dom.vec(w);
                    (0..self.src.len()).all(|j| {
                        dot(y, &a[j]) == self.src[j][e * n + d]
                            && b[j].as_ref().is_none_or(|bj| dot(y, bj) == self.src[j][d * n + e])
                    })
                })
                .collect();
            if kept.is_empty() {
                return None;
            }
            out.push(kept);
        }
        Some(out)
    }

    /// Depth-first search completing `chosen`; `lists[0]` holds the
    /// candidates of level `chosen.len()`. On success the working matrix
    /// is left in `self.solution`.
    fn dfs(&mut self, chosen: &mut Vec<u32>, lists: &[Vec<u32>]) -> Result<bool> {
        let d = chosen.len();
        if d == self.n {
            self.solution = self.dom.solve_frame(chosen)?;
            return Ok(self.solution.is_some());
        }
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return Err(Error::BudgetExhausted(format!("backtrack exceeded {} nodes", self.node_budget)));
        }
        for &v in &lists[0] {
            if let Some(next) = self.filter(d, v, lists) {
                chosen.push(v);
                if self.dfs(chosen, &next)? {
                    return Ok(true);
                }
                chosen.pop();
            }
        }
        Ok(false)
    }
}
/// Default cap on backtracking nodes per search.
pub const DEFAULT_NODE_BUDGET: u64 = 2_000_000_000;

/// Finitely generated isometry group with exact order, acting on a short
/// vector domain.
#[derive(Clone, Debug)]
pub struct GroupHandle {
    rank: usize,
    generators: Vec<IntMatrix>,
    order: BigInt,
    base_orbits: Vec<usize>,
    domain: Arc<Domain>,
}

#[derive(Serialize)]
struct GroupHandleJson<'a> {
    rank: usize,
    order: Factored,
    base_orbits: &'a [usize],
    domain_size: usize,
    generators: &'a [IntMatrix],
}

impl GroupHandle {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> &BigInt {
        &self.order
    }

    pub fn generators(&self) -> &[IntMatrix] {
        &self.generators
    }

    /// Orbit lengths of the frame vectors under the successive
    /// point stabilizers (empty for groups assembled from cosets).
    pub fn base_orbits(&self) -> &[usize] {
        &self.base_orbits
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn perm_rep(&self) -> Result<Vec<Perm>> {
        self.generators.iter().map(|h| self.domain.perm_of(h)).collect()
    }

    /// Invariants of the whole group (element enumeration up to `limit`).
    pub fn invariants(&self, limit: usize) -> Result<GroupInvariants> {
        if self.order > BigInt::from(limit) {
            return Err(Error::Unsupported(format!("group order {} above invariant limit {limit}", self.order)));
        }
        perm::group_invariants(self.domain.len(), &self.perm_rep()?, limit)
    }

    /// Permutation action of `H/⟨g⟩` on the `⟨g⟩`-orbits of the
    /// minimal vectors (all domain vectors if that is not faithful).
    /// Requires `g` central; the image order is checked against `|H|/|g|`.
    pub fn quotient_by(&self, g: &IntMatrix) -> Result<(usize, Vec<Perm>, StabChain)> {
        let m = g_order(g)?;
        let expect = &self.order / BigInt::from(m);
        if !(&self.order % BigInt::from(m)).is_zero() {
            return Err(Error::Verification("|g| does not divide |H|".into()));
        }
        for h in &self.generators {
            if h.mul(g) != g.mul(h) {
                return Err(Error::Verification("g is not central".into()));
            }
        }
        let gx = self.domain.to_working(g)?;
        let all: Vec<u32> = (0..self.domain.len() as u32).collect();
        for pts in [self.domain.minimal_points(), all] {
            let mut block: HashMap<u32, u32> = HashMap::new();
            let mut nblocks = 0u32;
            for &v in &pts {
                if block.contains_key(&v) {
                    continue;
                }
                let mut w = v;
                loop {
                    block.insert(w, nblocks);
                    w = self.domain.apply(&gx, w).ok_or_else(|| Error::Verification("domain not invariant".into()))?;
                    if w == v {
                        break;
                    }
                }
                nblocks += 1;
            }
            let reps: Vec<u32> = {
                let mut r = vec![u32::MAX; nblocks as usize];
                for &v in &pts {
                    let b = block[&v] as usize;
                    if r[b] == u32::MAX {
                        r[b] = v;
                    }
                }
                r
            };
            let mut perms = Vec::new();
            for h in &self.generators {
                let x = self.domain.to_working(h)?;
                let p: Perm = reps
                    .iter()
                    .map(|&v| {
                        let w = self.domain.apply(&x, v).ok_or_else(|| Error::Verification("domain not invariant".into()))?;
                        block.get(&w).copied().ok_or_else(|| Error::Verification("point set not invariant".into()))
                    })
                    .collect::<Result<_>>()?;
                perms.push(p);
            }
            let chain = StabChain::new(nblocks as usize, &perms, &[]);
            if chain.order() == expect {
                return Ok((nblocks as usize, perms, chain));
            }
        }
        Err(Error::Verification("no faithful action of H/<g> found".into()))
    }

    /// Invariants of `H/⟨g⟩`.
    pub fn quotient_invariants(&self, g: &IntMatrix, limit: usize) -> Result<GroupInvariants> {
        let (deg, perms, _) = self.quotient_by(g)?;
        perm::group_invariants(deg, &perms, limit)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(GroupHandleJson {
            rank: self.rank,
            order: Factored::new(&self.order),
            base_orbits: &self.base_orbits,
            domain_size: self.domain.len(),
            generators: &self.generators,
        })
        .expect("serializable")
    }

    /// Deterministic random product of generators and their inverses.
    pub fn random_word(&self, seed: u64, length: usize) -> Result<IntMatrix> {
        WordSampler::new(&self.generators)?.word(seed, length)
    }
}

/// Automorphism group of a form family.
pub fn automorphism_group(family: &FormFamily, vector_bound: Option<i64>) -> Result<GroupHandle> {
    automorphism_group_with(family, vector_bound, DEFAULT_NODE_BUDGET)
}

pub fn automorphism_group_with(family: &FormFamily, vector_bound: Option<i64>, node_budget: u64) -> Result<GroupHandle> {
    let dom = build_domain(family, vector_bound)?;
    automorphisms_on(&dom, family, node_budget)
}

fn automorphisms_on(dom: &Arc<Domain>, family: &FormFamily, node_budget: u64) -> Result<GroupHandle> {
    let n = dom.n;
    let mut pb = Problem::new(dom, family, family, node_budget)?;
    let base = dom.frame.clone();
    // candidate lists with the identity prefix f_0..f_{i-1}
    let mut prefix_lists: Vec<Vec<Vec<u32>>> = vec![pb.cand0.clone()];
    for i in 0..n.saturating_sub(1) {
        let next = pb
            .filter(i, base[i], &prefix_lists[i])
            .ok_or_else(|| Error::Verification("identity is not a solution".into()))?;
        prefix_lists.push(next);
    }
    let mut gens_w: Vec<Vec<i64>> = Vec::new();
    let mut orbits = vec![0usize; n];
    for i in (0..n).rev() {
        let lists = &prefix_lists[i];
        let mut orbit = orbit_of(dom, &gens_w, base[i])?;
        let mut excluded: HashSet<u32> = HashSet::new();
        for &v in &lists[0] {
            if orbit.contains_key(&v) || excluded.contains(&v) {
                continue;
            }
            let mut found = false;
            if let Some(next) = pb.filter(i, v, lists) {
                let mut chosen: Vec<u32> = base[..i].to_vec();
                chosen.push(v);
                found = pb.dfs(&mut chosen, &next)?;
            }
            if found {
                gens_w.push(pb.solution.take().expect("solution recorded"));
                orbit = orbit_of(dom, &gens_w, base[i])?;
            } else {
                excluded.extend(orbit_of(dom, &gens_w, v)?.into_keys());
            }
        }
        orbits[i] = orbit.len();
    }
    let generators: Vec<IntMatrix> = gens_w.iter().map(|x| dom.from_working(x)).collect();
    for h in &generators {
        if !family.preserved_by(h) {
            return Err(Error::Verification("generator does not preserve the family".into()));
        }
    }
    let order = orbits.iter().map(|&o| BigInt::from(o)).product();
    Ok(GroupHandle { rank: n, generators, order, base_orbits: orbits, domain: dom.clone() })
}

fn orbit_of(dom: &Domain, gens: &[Vec<i64>], start: u32) -> Result<HashMap<u32, ()>> {
    let mut seen: HashMap<u32, ()> = HashMap::from([(start, ())]);
    let mut q = VecDeque::from([start]);
    while let Some(v) = q.pop_front() {
        for g in gens {
            let w = dom.apply(g, v).ok_or_else(|| Error::Verification("domain not invariant".into()))?;
            if seen.insert(w, ()).is_none() {
                q.push_back(w);
            }
        }
    }
    Ok(seen)
}

/// Some `h` with `hᵀ T_j h = S_j` for all `j`, where `S`, `T` share the
/// Gram form; `None` if no such isometry exists.
pub fn find_isometry(dom: &Domain, source: &FormFamily, target: &FormFamily, node_budget: u64) -> Result<Option<IntMatrix>> {
    let mut pb = Problem::new(dom, source, target, node_budget)?;
    let mut chosen = Vec::new();
    let lists = pb.cand0.clone();
    if lists.iter().any(|l| l.is_empty()) {
        return Ok(None);
    }
    if pb.dfs(&mut chosen, &lists)? {
        let h = dom.from_working(&pb.solution.take().expect("solution recorded"));
        let ht = h.transpose();
        if source.forms.iter().zip(&target.forms).any(|(s, t)| &ht.mul(t).mul(&h) != s) {
            return Err(Error::Verification("isometry search returned a non-solution".into()));
        }
        Ok(Some(h))
    } else {
        Ok(None)
    }
}

/// Full isometry group `O(L)`.
pub fn isometry_group(l: &Lattice) -> Result<GroupHandle> {
    automorphism_group(&FormFamily::lattice(l), None)
}

/// `C_{O(L)}(g)` as the automorphism group of `{G·g^k}`.
pub fn centralizer(l: &Lattice, g: &IntMatrix) -> Result<GroupHandle> {
    let fam = FormFamily::powers(l, g)?;
    let c = automorphism_group(&fam, None)?;
    for h in &c.generators {
        if h.mul(g) != g.mul(h) {
            return Err(Error::Verification("centralizer generator does not commute".into()));
        }
    }
    if !fam.preserved_by(g) {
        return Err(Error::Verification("g not in its centralizer".into()));
    }
    Ok(c)
}

/// Result of [`normalizer`]: the group plus the exponents `k` for which
/// `g` is conjugate to `g^k`.
#[derive(Clone, Debug)]
pub struct Normalizer {
    pub group: GroupHandle,
    pub centralizer: GroupHandle,
    pub exponents: Vec<u64>,
}

/// `N_{O(L)}(⟨g⟩)`: the centralizer extended by one isometry `h_k` with
/// `h_k⁻¹ g h_k = g^k` for each unit `k` mod `|g|` where one exists.
pub fn normalizer(l: &Lattice, g: &IntMatrix) -> Result<Normalizer> {
    let m = g_order(g)?;
    let fam = FormFamily::powers(l, g)?;
    let c = centralizer(l, g)?;
    let dom = c.domain.clone();
    let mut gens = c.generators.clone();
    let mut exponents = vec![1u64];
    let powers: Vec<IntMatrix> = {
        let mut v = vec![IntMatrix::identity(l.rank())];
        for k in 1..m as usize {
            let next = v[k - 1].mul(g);
            v.push(next);
        }
        v
    };
    for k in 2..m {
        if k.gcd(&m) != 1 {
            continue;
        }
        let src = FormFamily {
            forms: (0..m as usize).map(|i| l.gram().mul(&powers[(i * k as usize) % m as usize])).collect(),
        };
        if let Some(h) = find_isometry(&dom, &src, &fam, DEFAULT_NODE_BUDGET)? {
            if g.mul(&h) != h.mul(&powers[k as usize]) || !l.is_isometry(&h) {
                return Err(Error::Verification("normalizer element check failed".into()));
            }
            gens.push(h);
            exponents.push(k);
        }
    }
    let order = c.order() * BigInt::from(exponents.len());
    Ok(Normalizer {
        group: GroupHandle { rank: l.rank(), generators: gens, order, base_orbits: Vec::new(), domain: dom },
        centralizer: c,
        exponents,
    })
}

/// Image of a group on a `p`-elementary discriminant group.
#[derive(Clone, Debug)]
pub struct DiscriminantImage {
    pub kernel_order: BigInt,
    pub image: FpGroup,
}

/// Induced action on `D(L)`; the kernel order is `|H| / |image|`.
pub fn kernel_on_discriminant(l: &Lattice, h: &GroupHandle, dg: &DiscriminantGroup) -> Result<DiscriminantImage> {
    let space = dg.fp_space()?;
    let mats = h.generators.iter().map(|x| discriminant_action_fp(l, x, dg)).collect::<Result<Vec<_>>>()?;
    let mats: Vec<_> = mats.into_iter().filter(|m| !m.is_identity()).collect();
    let image = FpGroup::from_generators(&space, mats)?;
    let (q, r) = h.order().div_rem(&image.order());
    if !r.is_zero() {
        return Err(Error::Verification("image order does not divide |H|".into()));
    }
    Ok(DiscriminantImage { kernel_order: q, image })
}

/// Seeded random products of generators and their inverses.
pub struct WordSampler {
    gens: Vec<IntMatrix>,
    invs: Vec<IntMatrix>,
}

impl WordSampler {
    pub fn new(gens: &[IntMatrix]) -> Result<Self> {
        let invs = gens
            .iter()
            .map(|g| g.rat_inverse()?.to_int().ok_or_else(|| Error::Verification("generator not unimodular".into())))
            .collect::<Result<_>>()?;
        Ok(WordSampler { gens: gens.to_vec(), invs })
    }

    pub fn word(&self, seed: u64, length: usize) -> Result<IntMatrix> {
        let n = self.gens.first().map_or(0, |g| g.rows());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.word_rng(&mut rng, length, n)
    }

    pub fn word_rng<R: Rng>(&self, rng: &mut R, length: usize, n: usize) -> Result<IntMatrix> {
        let mut m = IntMatrix::identity(n);
        if self.gens.is_empty() {
            return Ok(m);
        }
        for _ in 0..length {
            let k = rng.gen_range(0..2 * self.gens.len());
            let g = if k < self.gens.len() { &self.gens[k] } else { &self.invs[k - self.gens.len()] };
            m = m.mul(g);
        }
        Ok(m)
    }
}

/// `|H| / |g|` after checking `g ∈ H` via the family (valid for full
/// automorphism groups of a family).
pub fn quotient_order(h: &GroupHandle, family: &FormFamily, g: &IntMatrix) -> Result<BigInt> {
    if !family.preserved_by(g) {
        return Err(Error::Verification("g is not in the group".into()));
    }
    let m = BigInt::from(g_order(g)?);
    let (q, r) = h.order().div_rem(&m);
    if !r.is_zero() {
        return Err(Error::Verification("|g| does not divide |H|".into()));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a2() -> Lattice {
        Lattice::from_rows(&[vec![2, 1], vec![1, 2]]).unwrap()
    }

    fn rot() -> IntMatrix {
        IntMatrix::from_rows(&[vec![-1, -1], vec![1, 0]])
    }

    #[test]
    fn a2_isometry_group() {
        let g = isometry_group(&a2()).unwrap();
        assert_eq!(g.order(), &BigInt::from(12));
        for h in g.generators() {
            assert!(a2().is_isometry(h));
        }
    }

    #[test]
    fn a2_centralizer_and_normalizer() {
        let c = centralizer(&a2(), &rot()).unwrap();
        assert_eq!(c.order(), &BigInt::from(6));
        let n = normalizer(&a2(), &rot()).unwrap();
        assert_eq!(n.group.order(), &BigInt::from(12));
        assert_eq!(n.exponents, vec![1, 2]);
        let c_minus = centralizer(&a2(), &IntMatrix::identity(2).neg()).unwrap();
        assert_eq!(c_minus.order(), &BigInt::from(12));
    }

    #[test]
    fn z4_and_d4_orders() {
        let z4 = Lattice::new(IntMatrix::identity(4)).unwrap();
        // hyperoctahedral group 2^4·4!
        assert_eq!(isometry_group(&z4).unwrap().order(), &BigInt::from(384));
        let d4 = Lattice::from_rows(&[vec![2, -1, 0, 0], vec![-1, 2, -1, -1], vec![0, -1, 2, 0], vec![0, -1, 0, 2]]).unwrap();
        // W(F4) has order 1152
        assert_eq!(isometry_group(&d4).unwrap().order(), &BigInt::from(1152));
    }

    #[test]
    fn quotient_by_center() {
        let c = centralizer(&a2(), &rot()).unwrap();
        let inv = c.quotient_invariants(&rot(), 100).unwrap();
        assert_eq!(inv.order.value, "2");
    }

    #[test]
    fn words_are_deterministic() {
        let g = isometry_group(&a2()).unwrap();
        assert_eq!(g.random_word(5, 0).unwrap(), IntMatrix::identity(2));
        assert_eq!(g.random_word(7, 20).unwrap(), g.random_word(7, 20).unwrap());
    }
}
