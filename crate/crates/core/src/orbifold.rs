//! Irreducible modules of the orbifold `V_L^ĝ` as a finite quadratic space,
//! and the order pipeline for its automorphism group.
//!
//! Modules are only ever handled through their labels `(λ, i, j)` with
//! `λ ∈ D(L)` and `i` the twist index. Vectors of the `F_p`-space use the
//! layout `[λ_0, …, λ_{r−1}, i, j]` with quadratic form `p·q`, so that
//! `p·q(λ, i, j) = ij + p·q_L(λ)`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmat::IntMatrix;
use crate::fqspace::{
    build_group, go_order, identify_index2, inv_mod, labels_of, name_from_labels, omega_order, singular_count, FpGroup,
    FpMatrix, FpQuadraticSpace, GroupName, Identification, StabInfo,
};
use crate::isogroup::perm::Factored;
use crate::isogroup::{centralizer, kernel_on_discriminant, normalizer, GroupHandle, Normalizer};
use crate::lattice::{
    discriminant_action_fp, discriminant_group, fixed_and_coinvariant, is_p_elementary, one_minus_g_dual,
    quotient_one_minus_g, quotient_one_minus_g_dual, DiscriminantGroup, Lattice, QZValue,
};
use crate::leech::{find_class_rep, Leech};
use crate::shortvec::enumerate_short;

/// Element limit for brute-force work on an [`IrrSpace`].
pub const IRR_BRUTE_FORCE_LIMIT: u64 = 1_000_000;
/// Largest group whose invariants are computed by element enumeration.
pub const INVARIANTS_LIMIT: usize = 200_000;

/// One named hypothesis or consistency check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), pass, detail: detail.into() }
    }

    fn eq<T: PartialEq + std::fmt::Display>(name: &str, computed: T, expected: T) -> Self {
        let pass = computed == expected;
        Check::new(name, pass, format!("computed {computed}, expected {expected}"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Checklist {
    pub checks: Vec<Check>,
}

impl Checklist {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Errors with the names of all failed checks.
    pub fn require(&self) -> Result<()> {
        let failed: Vec<&str> = self.failures().iter().map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(failed.join(", ")))
        }
    }
}

/// `m(p+1)/(24p)`, the conformal weight of the irreducible `ĝ`-twisted
/// module of a rank `m` lattice VOA.
pub fn twisted_conformal_weight(rank: usize, p: u64) -> BigRational {
    BigRational::new(BigInt::from(rank as u64 * (p + 1)), BigInt::from(24 * p))
}

fn in_one_over_p(x: &BigRational, p: u64) -> bool {
    (x * BigRational::from_integer(BigInt::from(p))).is_integer()
}

/// Order of `g` if it is at most `limit`.
fn matrix_order(g: &IntMatrix, limit: u64) -> Option<u64> {
    let mut m = g.clone();
    for k in 1..=limit {
        if m.is_identity() {
            return Some(k);
        }
        m = m.mul(g);
    }
    None
}

/// Hypotheses of the kernel theorem for `(L, g)`, each checked by name.
pub fn validate_inputs(l: &Lattice, g: &IntMatrix) -> Result<Checklist> {
    let n = l.rank();
    let mut out = Checklist::default();
    // construction of `Lattice` already rejects indefinite forms
    let minors_ok = l.gram().leading_minors().iter().all(|m| m > &BigInt::zero());
    out.checks.push(Check::new("positive definite", minors_ok, "leading principal minors"));
    out.checks.push(Check::new("even", l.is_even(), "diagonal of the Gram matrix"));
    let roots = enumerate_short(l, 2)?.len();
    out.checks.push(Check::new("rootless", roots == 0, format!("{roots} root pairs")));
    let iso = g.rows() == n && g.cols() == n && l.is_isometry(g);
    out.checks.push(Check::new("isometry", iso, "gᵀ G g = G"));
    if !iso {
        return Ok(out);
    }
    let ord = matrix_order(g, 1000);
    let p = ord.unwrap_or(0);
    let prime = p > 2 && crate::lattice::is_prime(p);
    out.checks.push(Check::new(
        "odd prime order",
        prime,
        ord.map_or("order above 1000".into(), |o| format!("order {o}")),
    ));
    let fixed = g.sub(&IntMatrix::identity(n)).kernel().cols();
    out.checks.push(Check::new("fixed-point free", fixed == 0, format!("fixed rank {fixed}")));
    let dual = one_minus_g_dual(l, g);
    out.checks.push(Check::new("(1-g)L* in L", dual.is_ok(), "(1−g)G⁻¹ integral"));
    if prime {
        let w = twisted_conformal_weight(n, p);
        out.checks.push(Check::new("conformal weight in (1/p)Z", in_one_over_p(&w, p), format!("weight {w}")));
        out.checks.push(Check::new("p-elementary", is_p_elementary(l, p)?, format!("p = {p}")));
    }
    Ok(out)
}

/// `(Irr(V_L^ĝ), q) ≅ D(L) × Z_p²` with `q(λ, i, j) = ij/p + q_L(λ)`.
#[derive(Clone, Debug)]
pub struct IrrSpace {
    p: u64,
    disc: DiscriminantGroup,
    disc_space: Option<FpQuadraticSpace>,
    space: FpQuadraticSpace,
}

impl IrrSpace {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn disc(&self) -> &DiscriminantGroup {
        &self.disc
    }

    /// `(D(L), p·q_L)`; `None` when `D(L)` is trivial.
    pub fn disc_space(&self) -> Option<&FpQuadraticSpace> {
        self.disc_space.as_ref()
    }

    /// The space over `F_p` with form `p·q`.
    pub fn fp_space(&self) -> &FpQuadraticSpace {
        &self.space
    }

    pub fn disc_rank(&self) -> usize {
        self.space.dim() - 2
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn order(&self) -> BigInt {
        BigInt::from(self.p).pow(self.dim() as u32)
    }

    pub fn element(&self, lambda: &[u64], i: u64, j: u64) -> Vec<u64> {
        let mut v: Vec<u64> = lambda.iter().map(|x| x % self.p).collect();
        v.push(i % self.p);
        v.push(j % self.p);
        v
    }

    /// `V_L(1)`, i.e. `(0, 0, 1)`.
    pub fn vl1(&self) -> Vec<u64> {
        self.element(&vec![0; self.disc_rank()], 0, 1)
    }

    pub fn twist(&self, x: &[u64]) -> u64 {
        x[self.disc_rank()]
    }

    /// Exact `q` in `Q/Z`.
    pub fn q(&self, x: &[u64]) -> QZValue {
        let r = self.disc_rank();
        let lam: Vec<BigInt> = x[..r].iter().map(|&c| BigInt::from(c)).collect();
        let ql = if r == 0 { BigRational::zero() } else { self.disc.q(&lam).to_rational() };
        let ij = BigRational::new(BigInt::from(x[r] * x[r + 1]), BigInt::from(self.p));
        QZValue::from_rational(&(ql + ij))
    }

    pub fn add(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        x.iter().zip(y).map(|(a, b)| (a + b) % self.p).collect()
    }

    pub fn scale(&self, k: u64, x: &[u64]) -> Vec<u64> {
        x.iter().map(|a| a * (k % self.p) % self.p).collect()
    }

    /// `⟨x|y⟩ = q(x + y) − q(x) − q(y)`.
    pub fn polar(&self, x: &[u64], y: &[u64]) -> QZValue {
        let s = self.q(&self.add(x, y)).to_rational() - self.q(x).to_rational() - self.q(y).to_rational();
        QZValue::from_rational(&s)
    }

    /// All elements, in the encoding order of the `F_p`-space.
    pub fn elements(&self) -> Result<Vec<Vec<u64>>> {
        let total = self.order().to_u64().filter(|&t| t <= IRR_BRUTE_FORCE_LIMIT).ok_or_else(|| {
            Error::Unsupported(format!("Irr has {} elements, above the brute-force limit", self.order()))
        })?;
        Ok((0..total).map(|e| self.space.decode(e)).collect())
    }
}

/// Builds `Irr(V_L^ĝ)` after checking the hypotheses of [`validate_inputs`].
pub fn build_irr(l: &Lattice, g: &IntMatrix) -> Result<IrrSpace> {
    validate_inputs(l, g)?.require()?;
    let p = matrix_order(g, 1000).expect("validated order");
    let disc = discriminant_group(l)?;
    let r = disc.rank();
    let disc_space = if r == 0 {
        None
    } else {
        if disc.elementary_prime() != Some(p) {
            return Err(Error::Verification("D(L) is not elementary of exponent p".into()));
        }
        Some(disc.fp_space()?)
    };
    let mut gram = FpMatrix::zeros(p, r + 2, r + 2);
    if let Some(ds) = &disc_space {
        for a in 0..r {
            for b in 0..r {
                gram.set(a, b, ds.gram().get(a, b));
            }
        }
    }
    gram.set(r, r + 1, 1);
    gram.set(r + 1, r, 1);
    if gram.det() == 0 {
        return Err(Error::Degenerate);
    }
    let space = FpQuadraticSpace::new(gram)?;
    let irr = IrrSpace { p, disc, disc_space, space };
    // the F_p form agrees with p·q on basis vectors and their sums
    for a in 0..r + 2 {
        for b in a..r + 2 {
            let mut x = vec![0u64; r + 2];
            x[a] += 1;
            x[b] += 1;
            let exact = irr.q(&x).to_rational() * BigRational::from_integer(BigInt::from(p));
            let fp = BigRational::from_integer(BigInt::from(irr.space.q(&x)));
            if !(exact - fp).to_integer().is_multiple_of(&BigInt::from(p)) {
                return Err(Error::Verification("F_p form disagrees with q".into()));
            }
        }
    }
    Ok(irr)
}

/// Brute-force counts of singular elements by twist index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XCounts {
    /// `#X_k`, `0 ≤ k < p`, including the zero element in `X_0`
    pub x: Vec<u64>,
    /// nonzero singular elements, `Σ #X_k − 1`
    pub s: u64,
}

pub fn x_counts(irr: &IrrSpace) -> Result<XCounts> {
    let p = irr.p;
    let mut x = vec![0u64; p as usize];
    for v in irr.elements()? {
        if irr.q(&v).is_zero() {
            x[irr.twist(&v) as usize] += 1;
        }
    }
    let s = x.iter().sum::<u64>() - 1;
    Ok(XCounts { x, s })
}

/// Orders entering `Ker μ`.
#[derive(Clone, Debug)]
pub struct KernelMu {
    /// `|L/(1−g)L*|`
    pub hom_dual: BigInt,
    /// `|{h ∈ C : h = 1 on D(L)}|`
    pub disc_kernel: BigInt,
    /// image of `C` on `D(L)`, `None` when `D(L)` is trivial
    pub disc_image: Option<FpGroup>,
    pub disc_image_order: BigInt,
    pub order: BigInt,
}

fn product(v: &[BigInt]) -> BigInt {
    v.iter().product()
}

/// `|Ker μ| = |L/(1−g)L*| · |{h ∈ C : h = 1 on D(L)}| / p`.
pub fn kernel_mu_order(l: &Lattice, g: &IntMatrix, c: &GroupHandle) -> Result<KernelMu> {
    let p = matrix_order(g, 1000).ok_or_else(|| Error::Unsupported("order of g".into()))?;
    let dg = discriminant_group(l)?;
    let hom_dual = product(&quotient_one_minus_g_dual(l, g)?);
    let (disc_kernel, disc_image) = if dg.is_trivial() {
        (c.order().clone(), None)
    } else {
        if !discriminant_action_fp(l, g, &dg)?.is_identity() {
            return Err(Error::Verification("g acts nontrivially on D(L)".into()));
        }
        let im = kernel_on_discriminant(l, c, &dg)?;
        (im.kernel_order, Some(im.image))
    };
    let disc_image_order = disc_image.as_ref().map_or_else(BigInt::one, |g| g.order());
    let (order, rem) = (&hom_dual * &disc_kernel).div_rem(&BigInt::from(p));
    if !rem.is_zero() {
        return Err(Error::Verification("p does not divide the kernel order".into()));
    }
    Ok(KernelMu { hom_dual, disc_kernel, disc_image, disc_image_order, order })
}

/// Stabilizer orders from the centralizer and normalizer sequences.
#[derive(Clone, Debug, Serialize)]
pub struct StabOrders {
    pub stab_vl1: BigInt,
    pub stab_family: Option<BigInt>,
    pub stab_im_mu: BigInt,
}

pub fn stab_orders(l: &Lattice, g: &IntMatrix, c: &GroupHandle, n: Option<&Normalizer>, km: &KernelMu) -> Result<StabOrders> {
    let p = BigInt::from(matrix_order(g, 1000).ok_or_else(|| Error::Unsupported("order of g".into()))?);
    let h1 = product(&quotient_one_minus_g(l, g)?);
    let h2 = product(&quotient_one_minus_g_dual(l, g)?);
    let stab_vl1 = &h1 * c.order() / &p;
    let stab_family = n.map(|n| &h1 * n.group.order() / &p);
    let (h12, r) = h1.div_rem(&h2);
    if !r.is_zero() {
        return Err(Error::Verification("Hom orders do not divide".into()));
    }
    // K1/K2 = C/⟨g⟩ modulo the discriminant kernel = the image on D(L)
    let stab_im_mu = h12 * &km.disc_image_order;
    Ok(StabOrders { stab_vl1, stab_family, stab_im_mu })
}

/// `k` with `g·h = h·g^k`.
fn conjugation_exponent(g: &IntMatrix, h: &IntMatrix, p: u64) -> Result<u64> {
    let hg = h.mul(g);
    let gh = g.mul(h);
    let mut hgk = h.clone();
    for k in 1..p {
        hgk = hgk.mul(g);
        if gh == hgk {
            return Ok(k);
        }
    }
    let _ = hg;
    Err(Error::Verification("isometry does not normalize <g>".into()))
}

/// Generator matrices on `Irr` induced by lattice isometries normalizing
/// `⟨g⟩` and by the shifts `σ_α`, `α` running over the generators of
/// `D(L)`. An isometry `h` with `g h = h g^k` acts as `D(h)` on `λ`, by
/// `k⁻¹` on `i` and by `k` on `j`; `σ_α` sends
/// `(λ, i, j) ↦ (λ + iα, i, j − p(α|λ) − i·p·q_L(α))`.
pub fn lattice_side_generators(irr: &IrrSpace, l: &Lattice, g: &IntMatrix, isometries: &[IntMatrix]) -> Result<Vec<FpMatrix>> {
    let p = irr.p;
    let r = irr.disc_rank();
    let d = r + 2;
    let mut out = Vec::new();
    for h in isometries {
        let k = conjugation_exponent(g, h, p)?;
        let mut m = FpMatrix::zeros(p, d, d);
        if r > 0 {
            let a = discriminant_action_fp(l, h, &irr.disc)?;
            for x in 0..r {
                for y in 0..r {
                    m.set(x, y, a.get(x, y));
                }
            }
        }
        m.set(r, r, inv_mod(k, p));
        m.set(r + 1, r + 1, k);
        if !irr.space.is_isometry(&m) {
            return Err(Error::Verification("lattice isometry does not preserve q on Irr".into()));
        }
        if !m.is_identity() {
            out.push(m);
        }
    }
    if let Some(ds) = &irr.disc_space {
        for a in 0..r {
            let mut alpha = vec![0u64; r];
            alpha[a] = 1;
            let mut m = FpMatrix::identity(p, d);
            for c in 0..r {
                let mut e = vec![0u64; r];
                e[c] = 1;
                m.set(r + 1, c, (p - ds.b(&alpha, &e)) % p);
            }
            for (x, &v) in alpha.iter().enumerate() {
                m.set(x, r, v);
            }
            m.set(r + 1, r, (p - ds.q(&alpha)) % p);
            if !irr.space.is_isometry(&m) {
                return Err(Error::Verification("σ_α does not preserve q on Irr".into()));
            }
            out.push(m);
        }
    }
    Ok(out)
}

/// Subgroup of `O(Irr)` generated by [`lattice_side_generators`].
pub fn lattice_side_image(irr: &IrrSpace, l: &Lattice, g: &IntMatrix, isometries: &[IntMatrix]) -> Result<FpGroup> {
    let gens = lattice_side_generators(irr, l, g, isometries)?;
    FpGroup::from_generators(&irr.space, gens)
}

/// Orbit sizes of a group on the nonzero singular vectors of `D(L)`.
fn singular_orbits(img: &FpGroup, space: &FpQuadraticSpace) -> Result<Vec<usize>> {
    let sing = space.singular_vectors()?;
    Ok(img.orbits_on(&sing).iter().map(|o| o.len()).collect())
}

/// Options of [`run_case`].
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub assume_transitivity: bool,
    pub seed: u64,
    pub cache: Option<PathBuf>,
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { assume_transitivity: true, seed: 0, cache: None, progress: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeInfo {
    pub rank: usize,
    pub det: String,
    pub disc_orders: Vec<String>,
    /// `±1` for an even-dimensional `D(L)`
    pub disc_type: Option<i8>,
    pub conformal_weight: String,
    pub hom_l_mod_1mg: Factored,
    pub hom_l_mod_1mg_dual: Factored,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupSummary {
    pub order: Factored,
    pub name: Option<String>,
    pub invariants: Option<crate::isogroup::perm::GroupInvariants>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularCounts {
    #[serde(rename = "S")]
    pub s: u64,
    #[serde(rename = "X")]
    pub x: Vec<u64>,
    pub closed_form_s: String,
}

/// Per-class result of the pipeline.
#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub label: String,
    pub p: u64,
    pub class_rep: String,
    pub hypotheses: Checklist,
    pub lattice: LatticeInfo,
    pub centralizer_order: Factored,
    pub centralizer_mod_g: Factored,
    pub centralizer_mod_g_invariants: Option<crate::isogroup::perm::GroupInvariants>,
    pub normalizer_order: Option<Factored>,
    pub normalizer_mod_g: Option<Factored>,
    pub normalizer_exponents: Option<Vec<u64>>,
    pub disc_kernel_order: Factored,
    pub disc_kernel_mod_g: Factored,
    pub centralizer_on_disc: Option<GroupSummary>,
    pub normalizer_on_disc: Option<GroupSummary>,
    pub singular_coset_orbits_centralizer: Option<Vec<usize>>,
    pub singular_coset_orbits_normalizer: Option<Vec<usize>>,
    pub ker_mu_order: Factored,
    pub stab_vl1_order: Factored,
    pub stab_family_order: Option<Factored>,
    pub stab_family_orbit: Option<String>,
    pub stab_im_mu_order: Factored,
    pub lattice_side_image_order: Factored,
    pub irr_dim: usize,
    pub irr_type: Option<i8>,
    pub singular_counts: SingularCounts,
    pub go_order: Factored,
    pub orbit_lower_bound: Option<u64>,
    pub index_bounds: Option<(String, String)>,
    pub im_mu_candidates: Vec<String>,
    pub im_mu_order: Option<Factored>,
    pub im_mu_index: Option<String>,
    pub im_mu_identification: String,
    pub identified_orbits: Option<Vec<usize>>,
    pub aut_order: Option<Factored>,
    pub assumptions: Vec<String>,
    pub checks: Vec<Check>,
    /// comparisons with [`reference_values`]
    pub regressions: Vec<Check>,
    pub notes: Vec<String>,
    pub status: String,
    pub first_failure: Option<String>,
    pub timings: BTreeMap<String, f64>,
}

pub const ASSUME_TRANSITIVE_S: &str =
    "transitivity: Aut(V_L^g) acts transitively on the nonzero singular vectors of Irr (VOA-theoretic input)";
pub const ASSUME_EXTRA: &str =
    "extra automorphism: some automorphism maps V_L(1) to a module of twisted type (VOA-theoretic input)";
pub const BOUND_11A: &str =
    "maximal subgroups: every subgroup of GO^-_4(11) not containing Omega^-_4(11) has index >= 122 (published tables)";
pub const BOUND_23A: &str =
    "maximal subgroups: every subgroup of GO_3(23) not containing Omega_3(23) has index >= 24 (published tables)";

fn fact(n: &BigInt) -> Factored {
    Factored::new(n)
}

fn summary(img: &FpGroup, space: &FpQuadraticSpace) -> Result<GroupSummary> {
    let order = img.order();
    let ts = space.normalize()?.type_sign;
    let name = if space.dim() >= 2 {
        let labels = img.label_set()?;
        name_from_labels(space, &labels)?
            .filter(|nm| {
                labels_of(space, *nm).map(|l| omega_order(space.dim(), space.p(), ts) * BigInt::from(l.len()) == order).unwrap_or(false)
            })
            .map(|nm| nm.render(space.dim(), space.p(), ts))
    } else if order == go_order(1, space.p(), None) {
        Some(GroupName::GO.render(1, space.p(), None))
    } else {
        None
    };
    let invariants = if order <= BigInt::from(INVARIANTS_LIMIT) { Some(img.invariants(INVARIANTS_LIMIT)?) } else { None };
    Ok(GroupSummary { order: fact(&order), name, invariants })
}

struct Timer {
    times: BTreeMap<String, f64>,
    progress: bool,
    label: String,
}

impl Timer {
    fn run<T>(&mut self, step: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        if self.progress {
            eprintln!("[{}] {step} ...", self.label);
        }
        let t = Instant::now();
        let out = f()?;
        self.times.insert(step.to_string(), t.elapsed().as_secs_f64());
        Ok(out)
    }
}

/// Runs the whole pipeline for one of `3C`, `5C`, `11A`, `23A`.
pub fn run_case(leech: &Leech, label: &str, opts: &RunOptions) -> Result<CaseReport> {
    let mut tm = Timer { times: BTreeMap::new(), progress: opts.progress, label: label.to_string() };
    let rep = tm.run("class representative", || find_class_rep(leech, label, opts.seed, opts.cache.as_deref()))?;
    let fc = fixed_and_coinvariant(&leech.lattice, &rep.matrix)?;
    let l = fc.coinvariant.lattice.clone().ok_or_else(|| Error::Verification("empty coinvariant lattice".into()))?;
    let g = fc.g_on_coinvariant.clone();
    let hypotheses = validate_inputs(&l, &g)?;
    hypotheses.require()?;
    let p = matrix_order(&g, 1000).expect("validated");
    let pb = BigInt::from(p);
    let irr = build_irr(&l, &g)?;

    let want_normalizer = matches!(label, "5C" | "23A");
    let (c, xc) = tm.run("centralizer and singular counts", || {
        let (c, xc) = rayon::join(|| centralizer(&l, &g), || x_counts(&irr));
        Ok((c?, xc?))
    })?;
    let nz = if want_normalizer { Some(tm.run("normalizer", || normalizer(&l, &g))?) } else { None };
    let km = tm.run("kernel on D(L)", || kernel_mu_order(&l, &g, &c))?;
    let st = stab_orders(&l, &g, &c, nz.as_ref(), &km)?;

    let dg = irr.disc();
    let disc_type = irr.disc_space().and_then(|s| s.normalize().ok()).and_then(|n| n.type_sign);
    let h1 = product(&quotient_one_minus_g(&l, &g)?);
    let h2 = product(&quotient_one_minus_g_dual(&l, &g)?);
    let lattice = LatticeInfo {
        rank: l.rank(),
        det: l.det().to_string(),
        disc_orders: dg.orders.iter().map(|x| x.to_string()).collect(),
        disc_type,
        conformal_weight: twisted_conformal_weight(l.rank(), p).to_string(),
        hom_l_mod_1mg: fact(&h1),
        hom_l_mod_1mg_dual: fact(&h2),
    };
    let c_mod_g = c.order() / &pb;
    let c_mod_g_inv = if c_mod_g <= BigInt::from(INVARIANTS_LIMIT) { Some(c.quotient_invariants(&g, INVARIANTS_LIMIT)?) } else { None };

    let (centralizer_on_disc, orbits_c) = match (&km.disc_image, irr.disc_space()) {
        (Some(img), Some(ds)) => (Some(summary(img, ds)?), Some(singular_orbits(img, ds)?)),
        _ => (None, None),
    };
    let (normalizer_on_disc, orbits_n) = match (&nz, irr.disc_space()) {
        (Some(n), Some(ds)) => {
            let mats: Vec<FpMatrix> = n
                .group
                .generators()
                .iter()
                .map(|h| discriminant_action_fp(&l, h, dg))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|m| !m.is_identity())
                .collect();
            let img = FpGroup::from_generators(ds, mats)?;
            (Some(summary(&img, ds)?), Some(singular_orbits(&img, ds)?))
        }
        _ => (None, None),
    };

    let side = tm.run("lattice-side image", || lattice_side_image(&irr, &l, &g, c.generators()))?;
    let irr_type = irr.fp_space().normalize()?.type_sign;
    let n = irr.dim();
    let go = go_order(n, p, irr_type);

    let mut checks = Vec::new();
    checks.push(Check::eq("|Irr| = |D(L)|·p^2", irr.order(), dg.order() * &pb * &pb));
    checks.push(Check::eq("S = sum X_k - 1 matches closed form", BigInt::from(xc.s), singular_count(n, p, irr_type)));
    checks.push(Check::eq("lattice-side image order = stab_im_mu", side.order(), st.stab_im_mu.clone()));
    checks.push(Check::new(
        "lattice-side image fixes V_L(1)",
        side.gens.iter().all(|m| m.mul_vec(&irr.vl1()) == irr.vl1()),
        "generators applied to (0,0,1)",
    ));
    checks.push(Check::eq("stab_vl1 / ker_mu = stab_im_mu", &st.stab_vl1 / &km.order, st.stab_im_mu.clone()));
    let mut notes = Vec::new();
    let mut assumptions = Vec::new();
    let mut candidates: Vec<String> = Vec::new();
    let mut orbit_lower_bound = None;
    let mut index_bounds = None;
    let mut identified_orbits = None;
    let mut stab_family_orbit = None;
    let render = |nm: GroupName| nm.render(n, p, irr_type);

    let kernel_size = BigInt::from(p).pow(irr.disc_rank() as u32);
    let disc_image_info = || -> Result<StabInfo> {
        let (center, abelian, qname) = match (&km.disc_image, irr.disc_space()) {
            (Some(img), Some(ds)) => {
                let inv = if img.order() <= BigInt::from(INVARIANTS_LIMIT) { Some(img.invariants(INVARIANTS_LIMIT)?) } else { None };
                let ts = ds.normalize()?.type_sign;
                let nm = if ds.dim() >= 2 {
                    name_from_labels(ds, &img.label_set()?)?.filter(|nm| {
                        labels_of(ds, *nm).map(|l| omega_order(ds.dim(), p, ts) * BigInt::from(l.len()) == img.order()).unwrap_or(false)
                    })
                } else {
                    None
                };
                (inv.as_ref().and_then(|i| i.center_order.parse().ok()), inv.map(|i| i.abelian), nm)
            }
            _ => (None, None, None),
        };
        Ok(StabInfo {
            order: st.stab_im_mu.clone(),
            kernel_order: Some(kernel_size.clone()),
            quotient_order: Some(km.disc_image_order.clone()),
            quotient_center_order: center,
            quotient_abelian: abelian,
            quotient_name: qname,
        })
    };

    let (im_mu, identification): (Option<BigInt>, String) = match label {
        "3C" | "5C" => {
            if let (Some(ds), Some(img)) = (irr.disc_space(), &km.disc_image) {
                let sing = singular_count(ds.dim(), p, None).to_usize().unwrap_or(0);
                let orbits = if label == "3C" { orbits_c.clone() } else { orbits_n.clone() };
                let transitive = orbits.as_ref().is_some_and(|o| o.len() == 1 && o[0] == sing);
                let by = if label == "3C" { "C/<g>" } else { "N/<g>" };
                checks.push(Check::new(
                    &format!("{by} transitive on nonzero singular cosets of D(L)"),
                    transitive,
                    format!("orbit sizes {orbits:?}"),
                ));
                let _ = img;
            }
            if opts.assume_transitivity {
                assumptions.push(ASSUME_TRANSITIVE_S.to_string());
                let aut = BigInt::from(xc.s) * &st.stab_vl1;
                let im = &aut / &km.order;
                checks.push(Check::eq("|Aut| divisible by |Ker mu|", (&aut % &km.order).is_zero(), true));
                checks.push(Check::eq("S·stab_im_mu = |Im mu|", BigInt::from(xc.s) * &st.stab_im_mu, im.clone()));
                let (idx, r) = go.div_rem(&im);
                checks.push(Check::eq("|Im mu| divides |GO|", r.is_zero(), true));
                checks.push(Check::eq("index of Im mu in GO", idx.clone(), BigInt::from(2)));
                candidates = [GroupName::SO, GroupName::P, GroupName::Q].iter().map(|&x| render(x)).collect();
                let info = disc_image_info()?;
                let id = identify_index2(n, p, irr_type, &info);
                let text = match &id {
                    Identification::Named(nm) => {
                        let labels: BTreeSet<_> = labels_of(irr.fp_space(), *nm)?.into_iter().collect();
                        let side_labels = side.label_set()?;
                        checks.push(Check::new(
                            "lattice-side image lies in the identified group",
                            side_labels.is_subset(&labels),
                            format!("labels {side_labels:?}"),
                        ));
                        render(*nm)
                    }
                    other => format!("{other:?}"),
                };
                checks.push(Check::new("index-2 identification determined", matches!(id, Identification::Named(_)), text.clone()));
                (Some(im), text)
            } else {
                (None, "undetermined without the transitivity assumption".to_string())
            }
        }
        "11A" | "23A" => {
            let s_min = xc.x[1..].iter().copied().min().unwrap_or(0);
            let lb = 1 + s_min;
            orbit_lower_bound = Some(lb);
            if opts.assume_transitivity {
                assumptions.push(ASSUME_EXTRA.to_string());
                let hi = &go / (BigInt::from(lb) * &st.stab_im_mu);
                let lo_den = BigInt::from(xc.s) * &st.stab_im_mu;
                let lo = go.div_ceil(&lo_den);
                index_bounds = Some((lo.to_string(), hi.to_string()));
                let bound = if label == "11A" { 122u64 } else { 24 };
                assumptions.push((if label == "11A" { BOUND_11A } else { BOUND_23A }).to_string());
                checks.push(Check::new(
                    "index bound excludes subgroups not containing Omega",
                    hi < BigInt::from(bound),
                    format!("index <= {hi} < {bound}"),
                ));
                // named subgroups containing Ω with index in [lo, hi]
                let names: Vec<GroupName> = if n % 2 == 0 {
                    vec![GroupName::Omega, GroupName::SO, GroupName::OmegaSigma2, GroupName::OmegaSigma1Sigma2, GroupName::GO]
                } else {
                    vec![GroupName::Omega, GroupName::SO, GroupName::P, GroupName::Q, GroupName::GO]
                };
                let mut cands = Vec::new();
                for nm in names {
                    let order = omega_order(n, p, irr_type) * BigInt::from(labels_of(irr.fp_space(), nm)?.len());
                    let idx = &go / &order;
                    if idx >= lo && idx <= hi {
                        cands.push((nm, order));
                    }
                }
                candidates = cands.iter().map(|(nm, _)| render(*nm)).collect();
                if label == "11A" {
                    // Ω and its overgroups are transitive on singular vectors, so
                    // the stabilizer of V_L(1) has order |H|/S
                    let s_all = singular_count(n, p, irr_type);
                    let mut kept = Vec::new();
                    for (nm, order) in &cands {
                        let stab = order / &s_all;
                        if stab == st.stab_im_mu {
                            kept.push((*nm, order.clone()));
                        } else {
                            notes.push(format!("{} excluded: singular-vector stabilizer order {stab}", render(*nm)));
                        }
                    }
                    let info = disc_image_info()?;
                    let id = identify_index2(n, p, irr_type, &info);
                    match id {
                        Identification::Named(nm) if kept.iter().any(|(k, _)| *k == nm) => {
                            let order = kept.iter().find(|(k, _)| *k == nm).unwrap().1.clone();
                            notes.push(format!(
                                "{} is isomorphic to {}",
                                render(GroupName::OmegaSigma2),
                                render(GroupName::OmegaSigma1Sigma2)
                            ));
                            checks.push(Check::new("index-2 identification determined", true, render(nm)));
                            (Some(order), render(nm))
                        }
                        other => {
                            checks.push(Check::new("index-2 identification determined", false, format!("{other:?}")));
                            (None, format!("{other:?}"))
                        }
                    }
                } else {
                    let info = disc_image_info()?;
                    let id = identify_index2(n, p, irr_type, &info);
                    let pair = match &id {
                        Identification::OneOf(v) => v.clone(),
                        _ => Vec::new(),
                    };
                    checks.push(Check::new("dimension-3 criterion leaves {Q, GO}", pair == vec![GroupName::Q, GroupName::GO], format!("{id:?}")));
                    // parity: -1 ∈ GO is central and fixed-point free, so it would
                    // make every orbit on {V_L(i)} \ {V_L(0)} even
                    let fam = st.stab_family.clone().unwrap_or_else(BigInt::zero);
                    let (orbit, r) = fam.div_rem(&st.stab_vl1);
                    stab_family_orbit = Some(orbit.to_string());
                    let exps = nz.as_ref().map(|n| n.exponents.len()).unwrap_or(0);
                    checks.push(Check::eq("orbit of V_L(1) under stab_family = exponent subgroup size", orbit.clone(), BigInt::from(exps)));
                    let odd = r.is_zero() && orbit.is_odd();
                    checks.push(Check::new("orbit of V_L(1) on {V_L(i)} is odd", odd, format!("orbit {orbit}")));
                    if odd && pair.contains(&GroupName::Q) {
                        notes.push(format!("{} excluded: contains -1 but the orbit of V_L(1) is odd", render(GroupName::GO)));
                        let q = build_group(irr.fp_space(), GroupName::Q, opts.seed)?;
                        let sing = irr.fp_space().singular_vectors()?;
                        let orbs: Vec<usize> = q.orbits_on(&sing).iter().map(|o| o.len()).collect();
                        identified_orbits = Some(orbs);
                        let order: BigInt = &go / 2u32;
                        checks.push(Check::eq("built Q group order", q.order(), order.clone()));
                        (Some(order), render(GroupName::Q))
                    } else {
                        (None, format!("{id:?}"))
                    }
                }
            } else {
                (None, "undetermined without the extra-automorphism assumption".to_string())
            }
        }
        _ => return Err(Error::Unsupported(format!("unknown class {label}"))),
    };
    if label == "5C" {
        if let Some(ns) = &normalizer_on_disc {
            notes.push(format!(
                "image of N/<g> on D(L): {} of order {}",
                ns.name.clone().unwrap_or_else(|| "unnamed".into()),
                ns.order.value
            ));
        }
    }
    let aut = im_mu.as_ref().map(|i| i * &km.order);
    if let (Some(a), Some(i)) = (&aut, &im_mu) {
        checks.push(Check::eq("aut = ker_mu · im_mu", a.clone(), &km.order * i));
        if label != "3C" && label != "5C" {
            checks.push(Check::new(
                "|Im mu| within the orbit bounds",
                i >= &(BigInt::from(orbit_lower_bound.unwrap_or(0)) * &st.stab_im_mu) && i <= &(BigInt::from(xc.s) * &st.stab_im_mu),
                "lower: orbit bound · stabilizer, upper: S · stabilizer",
            ));
        }
    }
    if label == "23A" || label == "5C" {
        stab_family_orbit = stab_family_orbit.or_else(|| st.stab_family.as_ref().map(|f| (f / &st.stab_vl1).to_string()));
    }
    let mut report = CaseReport {
        label: label.to_string(),
        p,
        class_rep: rep.provenance.clone(),
        hypotheses,
        lattice,
        centralizer_order: fact(c.order()),
        centralizer_mod_g: fact(&c_mod_g),
        centralizer_mod_g_invariants: c_mod_g_inv,
        normalizer_order: nz.as_ref().map(|n| fact(n.group.order())),
        normalizer_mod_g: nz.as_ref().map(|n| fact(&(n.group.order() / &pb))),
        normalizer_exponents: nz.as_ref().map(|n| n.exponents.clone()),
        disc_kernel_order: fact(&km.disc_kernel),
        disc_kernel_mod_g: fact(&(&km.disc_kernel / &pb)),
        centralizer_on_disc,
        normalizer_on_disc,
        singular_coset_orbits_centralizer: orbits_c,
        singular_coset_orbits_normalizer: orbits_n,
        ker_mu_order: fact(&km.order),
        stab_vl1_order: fact(&st.stab_vl1),
        stab_family_order: st.stab_family.as_ref().map(fact),
        stab_family_orbit,
        stab_im_mu_order: fact(&st.stab_im_mu),
        lattice_side_image_order: fact(&side.order()),
        irr_dim: n,
        irr_type,
        singular_counts: SingularCounts { s: xc.s, x: xc.x.clone(), closed_form_s: singular_count(n, p, irr_type).to_string() },
        go_order: fact(&go),
        orbit_lower_bound,
        index_bounds,
        im_mu_candidates: candidates,
        im_mu_order: im_mu.as_ref().map(fact),
        im_mu_index: im_mu.as_ref().map(|i| (&go / i).to_string()),
        im_mu_identification: identification,
        identified_orbits,
        aut_order: aut.as_ref().map(fact),
        assumptions,
        checks,
        regressions: Vec::new(),
        notes,
        status: String::new(),
        first_failure: None,
        timings: tm.times,
    };
    report.regressions = regressions(&report);
    report.first_failure = report.checks.iter().chain(&report.regressions).find(|c| !c.pass).map(|c| c.name.clone());
    report.status = if report.first_failure.is_some() { "FAILED" } else { "OK" }.to_string();
    Ok(report)
}

/// Expected values per class, keyed by report field. Orders are decimal.
pub fn reference_values(label: &str) -> Result<BTreeMap<&'static str, &'static str>> {
    let v: &[(&str, &str)] = match label {
        "3C" => &[
            ("rank", "18"),
            ("disc_orders", "3,3,3,3,3"),
            ("conformal_weight", "1"),
            ("hom_l_mod_1mg", "19683"),
            ("hom_l_mod_1mg_dual", "81"),
            ("centralizer_mod_g", "8398080"),
            ("disc_kernel_order", "486"),
            ("ker_mu_order", "13122"),
            ("stab_vl1_order", "165299408640"),
            ("stab_im_mu_order", "12597120"),
            ("S", "728"),
            ("aut_order", "120337969489920"),
            ("im_mu_identification", "Q_7(3)"),
        ],
        "5C" => &[
            ("rank", "20"),
            ("disc_orders", "5,5,5"),
            ("conformal_weight", "1"),
            ("hom_l_mod_1mg", "3125"),
            ("hom_l_mod_1mg_dual", "25"),
            ("centralizer_mod_g", "6000"),
            ("disc_kernel_order", "250"),
            ("ker_mu_order", "1250"),
            ("stab_vl1_order", "18750000"),
            ("stab_im_mu_order", "15000"),
            ("S", "624"),
            ("aut_order", "11700000000"),
            ("im_mu_identification", "P_5(5)"),
        ],
        "11A" => &[
            ("rank", "20"),
            ("disc_orders", "11,11"),
            ("disc_type", "-1"),
            ("conformal_weight", "10/11"),
            ("hom_l_mod_1mg", "121"),
            ("hom_l_mod_1mg_dual", "1"),
            ("centralizer_mod_g", "12"),
            ("disc_kernel_order", "11"),
            ("ker_mu_order", "1"),
            ("stab_vl1_order", "1452"),
            ("stab_im_mu_order", "1452"),
            ("S", "1220"),
            ("aut_order", "1771440"),
            ("im_mu_identification", "Omega^-_4(11) u sigma2 Omega^-_4(11)"),
        ],
        "23A" => &[
            ("rank", "22"),
            ("disc_orders", "23"),
            ("conformal_weight", "22/23"),
            ("hom_l_mod_1mg", "23"),
            ("hom_l_mod_1mg_dual", "1"),
            ("centralizer_mod_g", "2"),
            ("normalizer_mod_g", "22"),
            ("disc_kernel_order", "23"),
            ("ker_mu_order", "1"),
            ("stab_vl1_order", "46"),
            ("stab_family_order", "506"),
            ("stab_family_orbit", "11"),
            ("stab_im_mu_order", "46"),
            ("S", "528"),
            ("aut_order", "12144"),
            ("im_mu_identification", "Q_3(23)"),
        ],
        _ => return Err(Error::Unsupported(format!("unknown class {label}"))),
    };
    Ok(v.iter().copied().collect())
}

/// The report value compared against [`reference_values`] under `key`.
pub fn report_value(r: &CaseReport, key: &str) -> Option<String> {
    let f = |x: &Factored| x.value.to_string();
    Some(match key {
        "rank" => r.lattice.rank.to_string(),
        "disc_orders" => r.lattice.disc_orders.join(","),
        "disc_type" => r.lattice.disc_type?.to_string(),
        "conformal_weight" => r.lattice.conformal_weight.clone(),
        "hom_l_mod_1mg" => f(&r.lattice.hom_l_mod_1mg),
        "hom_l_mod_1mg_dual" => f(&r.lattice.hom_l_mod_1mg_dual),
        "centralizer_mod_g" => f(&r.centralizer_mod_g),
        "normalizer_mod_g" => f(r.normalizer_mod_g.as_ref()?),
        "disc_kernel_order" => f(&r.disc_kernel_order),
        "ker_mu_order" => f(&r.ker_mu_order),
        "stab_vl1_order" => f(&r.stab_vl1_order),
        "stab_family_order" => f(r.stab_family_order.as_ref()?),
        "stab_family_orbit" => r.stab_family_orbit.clone()?,
        "stab_im_mu_order" => f(&r.stab_im_mu_order),
        "S" => r.singular_counts.s.to_string(),
        "aut_order" => f(r.aut_order.as_ref()?),
        "im_mu_identification" => r.im_mu_identification.clone(),
        _ => return None,
    })
}

/// Reference comparisons; values that need an assumption the run did not
/// make are skipped.
pub fn regressions(r: &CaseReport) -> Vec<Check> {
    let Ok(refs) = reference_values(&r.label) else { return Vec::new() };
    let assumed = !r.assumptions.is_empty();
    refs.iter()
        .filter(|(k, _)| assumed || !matches!(**k, "aut_order" | "im_mu_identification"))
        .map(|(k, v)| {
            let got = report_value(r, k);
            Check::new(k, got.as_deref() == Some(*v), format!("computed {}, expected {v}", got.unwrap_or_else(|| "none".into())))
        })
        .collect()
}

/// JSON of a report without the timing field.
pub fn report_json(r: &CaseReport, with_timings: bool) -> serde_json::Value {
    let mut v = serde_json::to_value(r).expect("serializable");
    if !with_timings {
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(rank: usize, p: u64) -> String {
        twisted_conformal_weight(rank, p).to_string()
    }

    #[test]
    fn conformal_weights() {
        assert_eq!(w(18, 3), "1");
        assert_eq!(w(20, 5), "1");
        assert_eq!(w(20, 11), "10/11");
        assert_eq!(w(22, 23), "22/23");
        assert_eq!(w(18, 5), "9/10");
        assert!(!in_one_over_p(&twisted_conformal_weight(18, 5), 5));
    }

    #[test]
    fn a2_rotation_is_rejected() {
        let l = Lattice::from_rows(&[vec![2, -1], vec![-1, 2]]).unwrap();
        let g = IntMatrix::from_i64(2, 2, &[0, -1, 1, -1]);
        let c = validate_inputs(&l, &g).unwrap();
        assert!(!c.get("rootless").unwrap().pass);
        assert!(c.get("isometry").unwrap().pass);
        assert!(c.get("odd prime order").unwrap().pass);
        assert!(c.get("fixed-point free").unwrap().pass);
        assert!(c.get("(1-g)L* in L").unwrap().pass);
        assert!(matches!(c.require(), Err(Error::Hypothesis(_))));
        assert!(build_irr(&l, &g).is_err());
    }

    #[test]
    fn non_isometry_stops_early() {
        let l = Lattice::from_rows(&[vec![4, 0], vec![0, 4]]).unwrap();
        let g = IntMatrix::from_i64(2, 2, &[1, 1, 0, 1]);
        let c = validate_inputs(&l, &g).unwrap();
        assert!(!c.get("isometry").unwrap().pass);
        assert!(c.get("odd prime order").is_none());
    }

    #[test]
    fn matrix_orders() {
        let g = IntMatrix::from_i64(2, 2, &[0, -1, 1, -1]);
        assert_eq!(matrix_order(&g, 10), Some(3));
        assert_eq!(matrix_order(&IntMatrix::from_i64(2, 2, &[1, 1, 0, 1]), 50), None);
    }
}
