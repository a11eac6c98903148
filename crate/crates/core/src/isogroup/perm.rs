//! Permutation groups: Schreier–Sims stabilizer chains with Schreier
//! vectors, orbits, element enumeration and small-group invariants.
//!
//! Points act on the right: `x^(ab) = (x^a)^b`, so `mul(a, b)[x] = b[a[x]]`.

use std::collections::{BTreeMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Perm = Vec<u32>;

pub fn identity(n: usize) -> Perm {
    (0..n as u32).collect()
}

pub fn mul(a: &[u32], b: &[u32]) -> Perm {
    a.iter().map(|&x| b[x as usize]).collect()
}

pub fn inv(a: &[u32]) -> Perm {
    let mut r = vec![0u32; a.len()];
    for (i, &x) in a.iter().enumerate() {
        r[x as usize] = i as u32;
    }
    r
}

pub fn is_identity(a: &[u32]) -> bool {
    a.iter().enumerate().all(|(i, &x)| i as u32 == x)
}

/// Order of a permutation (lcm of cycle lengths).
pub fn order(a: &[u32]) -> BigInt {
    let mut seen = vec![false; a.len()];
    let mut acc = BigInt::one();
    for s in 0..a.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0u64;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = a[x] as usize;
            len += 1;
        }
        acc = acc.lcm(&BigInt::from(len));
    }
    acc
}

pub fn pow(a: &[u32], mut e: u64) -> Perm {
    let mut base = a.to_vec();
    let mut acc = identity(a.len());
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mul(&base, &base);
        }
    }
    acc
}

const NOT_IN_ORBIT: i32 = -2;
const ROOT: i32 = -1;

#[derive(Clone, Debug)]
struct Level {
    point: u32,
    gens: Vec<Perm>,
    gens_inv: Vec<Perm>,
    orbit: Vec<u32>,
    /// generator index that reached each point, ROOT or NOT_IN_ORBIT
    sv: Vec<i32>,
}

impl Level {
    fn new(point: u32, degree: usize) -> Self {
        let mut l = Level { point, gens: Vec::new(), gens_inv: Vec::new(), orbit: Vec::new(), sv: Vec::new() };
        l.rebuild(degree);
        l
    }

    fn rebuild(&mut self, degree: usize) {
        self.sv = vec![NOT_IN_ORBIT; degree];
        self.sv[self.point as usize] = ROOT;
        self.orbit = vec![self.point];
        let mut i = 0;
        while i < self.orbit.len() {
            let x = self.orbit[i] as usize;
            for (k, g) in self.gens.iter().enumerate() {
                let y = g[x] as usize;
                if self.sv[y] == NOT_IN_ORBIT {
                    self.sv[y] = k as i32;
                    self.orbit.push(y as u32);
                }
            }
            i += 1;
        }
    }

    fn add_gen(&mut self, g: Perm, degree: usize) {
        self.gens_inv.push(inv(&g));
        self.gens.push(g);
        self.rebuild(degree);
    }

    /// Transversal element `u` with `point^u = x`.
    fn transversal(&self, x: u32) -> Perm {
        let mut word = Vec::new();
        let mut y = x as usize;
        while self.sv[y] != ROOT {
            let k = self.sv[y] as usize;
            word.push(k);
            y = self.gens_inv[k][y] as usize;
        }
        let mut u = identity(self.sv.len());
        for &k in word.iter().rev() {
            u = mul(&u, &self.gens[k]);
        }
        u
    }

    /// Replaces `g` by `g · u_x⁻¹` where `x = point^g`, so `g` fixes `point`.
    fn strip(&self, g: &mut Perm) -> bool {
        let mut x = g[self.point as usize] as usize;
        if self.sv[x] == NOT_IN_ORBIT {
            return false;
        }
        while self.sv[x] != ROOT {
            let k = self.sv[x] as usize;
            *g = mul(g, &self.gens_inv[k]);
            x = self.gens_inv[k][x] as usize;
        }
        true
    }
}

/// Base and strong generating set of a permutation group.
#[derive(Clone, Debug)]
pub struct StabChain {
    degree: usize,
    levels: Vec<Level>,
    generators: Vec<Perm>,
}

impl StabChain {
    /// Complete (deterministic) Schreier–Sims. `base_prefix` points come
    /// first in the base, in order.
    pub fn new(degree: usize, gens: &[Perm], base_prefix: &[u32]) -> Self {
        let gens: Vec<Perm> = gens.iter().filter(|g| !is_identity(g)).cloned().collect();
        let mut chain = StabChain { degree, levels: Vec::new(), generators: gens.clone() };
        for &b in base_prefix {
            chain.levels.push(Level::new(b, degree));
        }
        for g in &gens {
            chain.insert_strong(g.clone(), 0);
        }
        chain.complete();
        chain
    }

    /// Randomized Schreier–Sims that stops once the chain reaches a known
    /// order. The result is a complete chain iff its order equals `target`.
    pub fn with_known_order<R: Rng>(
        degree: usize,
        gens: &[Perm],
        base_prefix: &[u32],
        target: &BigInt,
        rng: &mut R,
        max_rounds: usize,
    ) -> Result<Self> {
        let gens: Vec<Perm> = gens.iter().filter(|g| !is_identity(g)).cloned().collect();
        let mut chain = StabChain { degree, levels: Vec::new(), generators: gens.clone() };
        for &b in base_prefix {
            chain.levels.push(Level::new(b, degree));
        }
        for g in &gens {
            chain.insert_strong(g.clone(), 0);
        }
        let mut pr = ProductReplacement::new(degree, &gens, rng);
        let mut rounds = 0;
        while chain.order() < *target {
            if rounds >= max_rounds {
                return Err(Error::BudgetExhausted(format!(
                    "random Schreier–Sims reached {} of {}",
                    chain.order(),
                    target
                )));
            }
            rounds += 1;
            let r = pr.next(rng);
            let (res, lvl) = chain.sift(r, 0);
            if !is_identity(&res) {
                chain.add_at(res, 0, lvl);
            }
        }
        if chain.order() != *target {
            return Err(Error::Verification(format!("group order {} exceeds {}", chain.order(), target)));
        }
        Ok(chain)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn base(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.point).collect()
    }

    pub fn orbit_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    pub fn order(&self) -> BigInt {
        self.levels.iter().map(|l| BigInt::from(l.orbit.len())).product()
    }

    /// Strong generators fixing the first `k` base points.
    pub fn stabilizer_gens(&self, k: usize) -> Vec<Perm> {
        if k < self.levels.len() {
            self.levels[k].gens.clone()
        } else {
            Vec::new()
        }
    }

    /// Sifts `g` starting at level `start`; returns the residue and the
    /// level where sifting stopped (`levels.len()` when it went through).
    fn sift(&self, mut g: Perm, start: usize) -> (Perm, usize) {
        for i in start..self.levels.len() {
            if !self.levels[i].strip(&mut g) {
                return (g, i);
            }
        }
        (g, self.levels.len())
    }

    pub fn contains(&self, g: &[u32]) -> bool {
        let (res, lvl) = self.sift(g.to_vec(), 0);
        lvl == self.levels.len() && is_identity(&res)
    }

    fn insert_strong(&mut self, g: Perm, _level: usize) {
        if self.levels.iter().all(|l| g[l.point as usize] == l.point) {
            let Some(m) = g.iter().enumerate().find(|(i, &x)| *i as u32 != x).map(|(i, _)| i as u32) else {
                return;
            };
            self.levels.push(Level::new(m, self.degree));
        }
        let mut k = 0;
        while g[self.levels[k].point as usize] == self.levels[k].point {
            k += 1;
        }
        self.add_at(g, 0, k);
    }

    fn complete(&mut self) {
        if self.levels.is_empty() {
            return;
        }
        let mut i = self.levels.len() as isize - 1;
        while i >= 0 {
            let lvl = i as usize;
            let mut restart: Option<usize> = None;
            'outer: for oi in 0..self.levels[lvl].orbit.len() {
                let x = self.levels[lvl].orbit[oi];
                let ux = self.levels[lvl].transversal(x);
                for si in 0..self.levels[lvl].gens.len() {
                    let s = &self.levels[lvl].gens[si];
                    let y = s[x as usize];
                    // Schreier generator u_x s u_y⁻¹
                    let mut h = mul(&ux, s);
                    self.levels[lvl].strip_to(&mut h, y);
                    if is_identity(&h) {
                        continue;
                    }
                    let (res, stop) = self.sift(h, lvl + 1);
                    if !is_identity(&res) {
                        self.add_at(res, lvl + 1, stop);
                        restart = Some(stop.min(self.levels.len() - 1));
                        break 'outer;
                    }
                }
            }
            match restart {
                Some(j) => i = j as isize,
                None => i -= 1,
            }
        }
    }

    /// Adds `res` (fixing base points `< from`) as strong generator at
    /// levels `from ..= to`, extending the base if needed.
    fn add_at(&mut self, res: Perm, from: usize, to: usize) {
        if to == self.levels.len() {
            let moved = res.iter().enumerate().find(|(i, &x)| *i as u32 != x).map(|(i, _)| i as u32).unwrap();
            self.levels.push(Level::new(moved, self.degree));
        }
        for l in from..=to {
            self.levels[l].add_gen(res.clone(), self.degree);
        }
    }

    /// All group elements (only for small groups).
    pub fn elements(&self, limit: usize) -> Result<Vec<Perm>> {
        let ord = self.order().to_usize().filter(|&o| o <= limit);
        let Some(ord) = ord else {
            return Err(Error::Unsupported(format!("group of order {} too large to enumerate", self.order())));
        };
        let mut out = vec![identity(self.degree)];
        for lvl in self.levels.iter().rev() {
            let reps: Vec<Perm> = lvl.orbit.iter().map(|&x| lvl.transversal(x)).collect();
            let mut next = Vec::with_capacity(out.len() * reps.len());
            for e in &out {
                for u in &reps {
                    next.push(mul(e, u));
                }
            }
            out = next;
        }
        debug_assert_eq!(out.len(), ord);
        Ok(out)
    }
}

impl Level {
    /// `g := g · u_y⁻¹`
    fn strip_to(&self, g: &mut Perm, y: u32) {
        let mut x = y as usize;
        debug_assert!(self.sv[x] != NOT_IN_ORBIT);
        while self.sv[x] != ROOT {
            let k = self.sv[x] as usize;
            *g = mul(g, &self.gens_inv[k]);
            x = self.gens_inv[k][x] as usize;
        }
    }
}

/// Product-replacement random element generator.
pub struct ProductReplacement {
    state: Vec<Perm>,
    acc: Perm,
}

impl ProductReplacement {
    pub fn new<R: Rng>(degree: usize, gens: &[Perm], rng: &mut R) -> Self {
        let mut state: Vec<Perm> = gens.to_vec();
        if state.is_empty() {
            state.push(identity(degree));
        }
        while state.len() < 10 {
            let k = state.len() % gens.len().max(1);
            state.push(state[k].clone());
        }
        let mut pr = ProductReplacement { state, acc: identity(degree) };
        for _ in 0..50 {
            pr.next(rng);
        }
        pr
    }

    pub fn next<R: Rng>(&mut self, rng: &mut R) -> Perm {
        let n = self.state.len();
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        self.state[i] = if rng.gen_bool(0.5) {
            mul(&self.state[i], &self.state[j])
        } else {
            mul(&self.state[i], &inv(&self.state[j]))
        };
        self.acc = mul(&self.acc, &self.state[i]);
        self.acc.clone()
    }
}

/// Orbits of the group generated by `gens` on `0..degree`, each sorted,
/// listed by smallest point.
pub fn orbits(degree: usize, gens: &[Perm]) -> Vec<Vec<u32>> {
    let mut seen = vec![false; degree];
    let mut out = Vec::new();
    for s in 0..degree {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut orb = vec![s as u32];
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for g in gens {
                let y = g[x] as usize;
                if !seen[y] {
                    seen[y] = true;
                    orb.push(y as u32);
                    q.push_back(y);
                }
            }
        }
        orb.sort_unstable();
        out.push(orb);
    }
    out
}

/// Factorization of a positive integer by trial division (orders here are
/// smooth).
pub fn factor(n: &BigInt) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    let mut n = n.clone();
    if n <= BigInt::one() {
        return out;
    }
    let mut p = 2u64;
    while BigInt::from(p) * BigInt::from(p) <= n {
        let bp = BigInt::from(p);
        while (&n % &bp) == BigInt::from(0) {
            *out.entry(p).or_insert(0) += 1;
            n /= &bp;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > BigInt::one() {
        *out.entry(n.to_u64().expect("large prime factor")).or_insert(0) += 1;
    }
    out
}

/// Prime factorization rendered as `{"2": e2, "3": e3, …}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Factored {
    pub value: String,
    pub factors: BTreeMap<String, u32>,
}

impl Factored {
    pub fn new(n: &BigInt) -> Self {
        Factored {
            value: n.to_string(),
            factors: factor(n).into_iter().map(|(p, e)| (p.to_string(), e)).collect(),
        }
    }
}

/// Structural invariants of a small permutation group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupInvariants {
    pub order: Factored,
    pub exponent: String,
    pub center_order: String,
    pub derived_order: String,
    pub abelianization: Vec<String>,
    pub abelian: bool,
}

/// Normal closure of `seeds` in the group generated by `gens`.
pub fn normal_closure(degree: usize, gens: &[Perm], seeds: &[Perm]) -> StabChain {
    let mut ngens: Vec<Perm> = seeds.iter().filter(|s| !is_identity(s)).cloned().collect();
    let mut chain = StabChain::new(degree, &ngens, &[]);
    loop {
        let mut added = false;
        let current = ngens.clone();
        for x in &current {
            for g in gens {
                let c = mul(&mul(&inv(g), x), g);
                if !chain.contains(&c) {
                    ngens.push(c);
                    chain = StabChain::new(degree, &ngens, &[]);
                    added = true;
                }
            }
        }
        if !added {
            return chain;
        }
    }
}

fn commutator(a: &[u32], b: &[u32]) -> Perm {
    mul(&mul(&inv(a), &inv(b)), &mul(a, b))
}

/// Invariants of a group given by generators; enumerates elements, so the
/// order must not exceed `limit`.
pub fn group_invariants(degree: usize, gens: &[Perm], limit: usize) -> Result<GroupInvariants> {
    let chain = StabChain::new(degree, gens, &[]);
    let elems = chain.elements(limit)?;
    let mut exponent = BigInt::one();
    let mut center = 0usize;
    for e in &elems {
        exponent = exponent.lcm(&order(e));
        if gens.iter().all(|g| mul(e, g) == mul(g, e)) {
            center += 1;
        }
    }
    let seeds: Vec<Perm> = gens
        .iter()
        .enumerate()
        .flat_map(|(i, a)| gens[i + 1..].iter().map(move |b| commutator(a, b)))
        .collect();
    let derived = normal_closure(degree, gens, &seeds);
    let ab = abelian_invariants_of_quotient(&chain, gens, &derived)?;
    let n = chain.order();
    Ok(GroupInvariants {
        order: Factored::new(&n),
        exponent: exponent.to_string(),
        center_order: center.to_string(),
        derived_order: derived.order().to_string(),
        abelian: derived.order().is_one(),
        abelianization: ab.iter().map(|x| x.to_string()).collect(),
    })
}

/// Invariant factors of `G/N` for `N = derived` (which must be normal with
/// abelian quotient).
fn abelian_invariants_of_quotient(g: &StabChain, gens: &[Perm], n: &StabChain) -> Result<Vec<u64>> {
    let index = (g.order() / n.order()).to_usize().ok_or(Error::Overflow("abelianization"))?;
    if index > 1 << 16 {
        return Err(Error::Unsupported("abelianization too large".into()));
    }
    let degree = g.degree();
    // coset enumeration by BFS: reps r with r_i r_j⁻¹ ∉ N
    let mut reps: Vec<Perm> = vec![identity(degree)];
    let mut q = VecDeque::from([0usize]);
    while let Some(i) = q.pop_front() {
        for s in gens {
            let c = mul(&reps[i], s);
            if !reps.iter().any(|r| n.contains(&mul(&c, &inv(r)))) {
                reps.push(c);
                q.push_back(reps.len() - 1);
            }
        }
    }
    if reps.len() != index {
        return Err(Error::Verification("coset count mismatch in abelianization".into()));
    }
    let orders: Vec<u64> = reps
        .iter()
        .map(|r| {
            let mut k = 1u64;
            let mut x = r.clone();
            while !n.contains(&x) {
                x = mul(&x, r);
                k += 1;
            }
            k
        })
        .collect();
    Ok(abelian_invariants_from_orders(&orders))
}

/// Invariant factors of a finite abelian group from the multiset of its
/// element orders.
pub fn abelian_invariants_from_orders(orders: &[u64]) -> Vec<u64> {
    let total = orders.len() as u64;
    let primes: Vec<u64> = factor(&BigInt::from(total)).keys().copied().collect();
    // per prime: exponents a_1 ≥ a_2 ≥ … of the cyclic factors
    let mut per_prime: Vec<(u64, Vec<u32>)> = Vec::new();
    for &p in &primes {
        let mut cnt = Vec::new(); // log_p #{x : x^{p^e} = 1}
        let mut e = 0u32;
        loop {
            let pe = p.pow(e);
            let c = orders.iter().filter(|&&o| {
                let pp = p_part(o, p);
                pe % pp == 0
            }).count() as u64;
            let lg = log_p(c, p);
            cnt.push(lg);
            if e > 0 && cnt[e as usize] == cnt[e as usize - 1] {
                break;
            }
            e += 1;
        }
        // number of cyclic factors with exponent ≥ e is cnt[e] - cnt[e-1]
        let mut exps = Vec::new();
        for e in 1..cnt.len() {
            let ge = cnt[e] - cnt[e - 1];
            let ge_next = if e + 1 < cnt.len() { cnt[e + 1] - cnt[e] } else { 0 };
            for _ in 0..(ge - ge_next) {
                exps.push(e as u32);
            }
        }
        exps.sort_unstable_by(|a, b| b.cmp(a));
        per_prime.push((p, exps));
    }
    let k = per_prime.iter().map(|(_, e)| e.len()).max().unwrap_or(0);
    let mut inv = vec![1u64; k];
    for (p, exps) in &per_prime {
        for (i, &e) in exps.iter().enumerate() {
            inv[i] *= p.pow(e);
        }
    }
    inv.sort_unstable();
    inv
}

fn p_part(mut o: u64, p: u64) -> u64 {
    let mut r = 1;
    while o % p == 0 {
        o /= p;
        r *= p;
    }
    r
}

fn log_p(mut c: u64, p: u64) -> u32 {
    let mut e = 0;
    while c > 1 {
        c /= p;
        e += 1;
    }
    e
}

/// Set of points hashed for quick closure tests.
pub fn point_set(points: &[u32]) -> HashSet<u32> {
    points.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cyc(n: usize) -> Perm {
        (0..n as u32).map(|i| (i + 1) % n as u32).collect()
    }

    fn transposition(n: usize, a: u32, b: u32) -> Perm {
        let mut p = identity(n);
        p.swap(a as usize, b as usize);
        p
    }

    #[test]
    fn symmetric_group_orders() {
        for n in 2..7usize {
            let c = StabChain::new(n, &[cyc(n), transposition(n, 0, 1)], &[]);
            let fact: u64 = (1..=n as u64).product();
            assert_eq!(c.order(), BigInt::from(fact));
        }
    }

    #[test]
    fn dihedral_invariants() {
        // D_12 acting on a hexagon
        let r = cyc(6);
        let s: Perm = (0..6u32).map(|i| (6 - i) % 6).collect();
        let inv = group_invariants(6, &[r, s], 1000).unwrap();
        assert_eq!(inv.order.value, "12");
        assert_eq!(inv.exponent, "6");
        assert_eq!(inv.center_order, "2");
        assert_eq!(inv.derived_order, "3");
        assert_eq!(inv.abelianization, vec!["2", "2"]);
    }

    #[test]
    fn trivial_invariants() {
        let inv = group_invariants(3, &[], 10).unwrap();
        assert_eq!(inv.order.value, "1");
        assert_eq!(inv.exponent, "1");
        assert!(inv.abelian);
        assert!(inv.abelianization.is_empty());
    }

    #[test]
    fn abelian_from_orders() {
        // Z2 x Z4
        let orders = [1, 2, 2, 2, 4, 4, 4, 4];
        assert_eq!(abelian_invariants_from_orders(&orders), vec![2, 4]);
        assert_eq!(abelian_invariants_from_orders(&[1, 3, 3]), vec![3]);
    }

    #[test]
    fn factorization() {
        let f = factor(&BigInt::from(2u64 * 2 * 3 * 23));
        assert_eq!(f, BTreeMap::from([(2, 2), (3, 1), (23, 1)]));
    }

    fn random_perm(n: usize, seed: u64) -> Perm {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = identity(n);
        p.shuffle(&mut rng);
        p
    }

    proptest! {
        #[test]
        fn order_matches_enumeration(s1 in 0u64..1000, s2 in 0u64..1000) {
            let n = 6;
            let gens = vec![random_perm(n, s1), random_perm(n, s2)];
            let chain = StabChain::new(n, &gens, &[]);
            // brute-force closure
            let mut seen: HashSet<Perm> = HashSet::from([identity(n)]);
            let mut q = VecDeque::from([identity(n)]);
            while let Some(x) = q.pop_front() {
                for g in &gens {
                    let y = mul(&x, g);
                    if seen.insert(y.clone()) { q.push_back(y); }
                }
            }
            prop_assert_eq!(chain.order(), BigInt::from(seen.len()));
            let elems = chain.elements(1000).unwrap();
            let set: HashSet<Perm> = elems.into_iter().collect();
            prop_assert_eq!(set, seen);
        }
    }
}
