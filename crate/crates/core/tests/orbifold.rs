use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use orbaut::isogroup::centralizer;
use orbaut::lattice::{fixed_and_coinvariant, Lattice, QZValue};
use orbaut::leech::{build_leech, find_class_rep, Leech};
use orbaut::orbifold::{
    build_irr, lattice_side_generators, regressions, report_json, run_case, validate_inputs, x_counts, IrrSpace, RunOptions,
};
use orbaut::IntMatrix;

struct Case {
    l: Lattice,
    g: IntMatrix,
    irr: IrrSpace,
}

fn leech() -> &'static Leech {
    static L: OnceLock<Leech> = OnceLock::new();
    L.get_or_init(|| build_leech().unwrap())
}

fn case(label: &str) -> Case {
    let rep = find_class_rep(leech(), label, 0, None).unwrap();
    let fc = fixed_and_coinvariant(&leech().lattice, &rep.matrix).unwrap();
    let l = fc.coinvariant.lattice.unwrap();
    let g = fc.g_on_coinvariant;
    let irr = build_irr(&l, &g).unwrap();
    Case { l, g, irr }
}

fn cases() -> &'static [Case] {
    static C: OnceLock<Vec<Case>> = OnceLock::new();
    C.get_or_init(|| ["3C", "5C", "11A", "23A"].iter().map(|l| case(l)).collect())
}

fn sample(irr: &IrrSpace, seed: &[u64]) -> Vec<u64> {
    (0..irr.dim()).map(|i| seed[i % seed.len()].wrapping_mul(i as u64 + 7) % irr.p()).collect()
}

fn add(a: QZValue, b: QZValue) -> QZValue {
    QZValue::from_rational(&(a.to_rational() + b.to_rational()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_is_a_quadratic_form(which in 0usize..4, s1 in prop::collection::vec(0u64..1000, 4), s2 in prop::collection::vec(0u64..1000, 4), s3 in prop::collection::vec(0u64..1000, 4), k in 0u64..50) {
        let irr = &cases()[which].irr;
        let (x, y, z) = (sample(irr, &s1), sample(irr, &s2), sample(irr, &s3));
        let k2 = BigRational::from_integer(BigInt::from(k * k));
        prop_assert_eq!(irr.q(&irr.scale(k, &x)), QZValue::from_rational(&(irr.q(&x).to_rational() * k2)));
        prop_assert_eq!(irr.polar(&x, &y), irr.polar(&y, &x));
        prop_assert_eq!(irr.polar(&irr.add(&x, &y), &z), add(irr.polar(&x, &z), irr.polar(&y, &z)));
        prop_assert_eq!(irr.polar(&x, &x), add(irr.q(&x), irr.q(&x)));
        // the F_p form is p·q
        let p = irr.p();
        let fp = QZValue::from_rational(&BigRational::new(BigInt::from(irr.fp_space().q(&x)), BigInt::from(p)));
        prop_assert_eq!(irr.q(&x), fp);
    }

    #[test]
    fn lattice_side_generators_preserve_q(which in 2usize..4, s in prop::collection::vec(0u64..1000, 5)) {
        let c = &cases()[which];
        let cz = centralizer(&c.l, &c.g).unwrap();
        let gens = lattice_side_generators(&c.irr, &c.l, &c.g, cz.generators()).unwrap();
        let x = sample(&c.irr, &s);
        for m in &gens {
            prop_assert_eq!(c.irr.q(&m.mul_vec(&x)), c.irr.q(&x));
        }
    }
}

#[test]
fn twisted_modules_have_weight_ij_over_p() {
    for c in cases() {
        let irr = &c.irr;
        let zero = vec![0u64; irr.disc_rank()];
        assert!(irr.q(&irr.vl1()).is_zero());
        for i in 0..irr.p() {
            for j in 0..irr.p() {
                let want = QZValue::from_rational(&BigRational::new(BigInt::from(i * j), BigInt::from(irr.p())));
                assert_eq!(irr.q(&irr.element(&zero, i, j)), want);
            }
        }
    }
}

#[test]
fn sigma_shift_generators_fix_vl1() {
    for c in cases() {
        let gens = lattice_side_generators(&c.irr, &c.l, &c.g, &[]).unwrap();
        assert_eq!(gens.len(), c.irr.disc_rank());
        for m in &gens {
            assert_eq!(m.mul_vec(&c.irr.vl1()), c.irr.vl1());
        }
    }
}

#[test]
fn singular_profiles() {
    // X_0 = p·#{λ : q_L(λ) = 0}; for k ≠ 0 each λ has exactly one j
    let want: [(&str, u64, Vec<u64>); 4] = [
        ("3C", 728, vec![243; 3]),
        ("5C", 624, vec![125; 5]),
        ("11A", 1220, std::iter::once(11).chain(std::iter::repeat(121).take(10)).collect()),
        ("23A", 528, vec![23; 23]),
    ];
    for (c, (label, s, x)) in cases().iter().zip(want) {
        let xc = x_counts(&c.irr).unwrap();
        assert_eq!(xc.s, s, "{label}");
        assert_eq!(xc.x, x, "{label}");
    }
}

#[test]
fn coinvariant_inputs_pass_all_hypotheses() {
    for c in cases() {
        let checks = validate_inputs(&c.l, &c.g).unwrap();
        assert!(checks.all_pass(), "{:?}", checks.failures());
        assert_eq!(checks.checks.len(), 9);
    }
}

#[test]
fn g_squared_is_also_admissible() {
    let c = &cases()[3];
    let g2 = c.g.mul(&c.g);
    assert!(validate_inputs(&c.l, &g2).unwrap().all_pass());
}

fn run(label: &str, assume: bool) -> orbaut::orbifold::CaseReport {
    let opts = RunOptions { assume_transitivity: assume, ..Default::default() };
    run_case(leech(), label, &opts).unwrap()
}

fn assert_ok(r: &orbaut::orbifold::CaseReport) {
    let bad: Vec<_> = r.checks.iter().chain(&r.regressions).filter(|c| !c.pass).collect();
    assert!(bad.is_empty(), "{}: {bad:?}", r.label);
    assert_eq!(r.status, "OK");
}

#[test]
fn case_23a() {
    let r = run("23A", true);
    assert_ok(&r);
    assert_eq!(r.aut_order.as_ref().unwrap().value, "12144");
    assert_eq!(r.identified_orbits, Some(vec![264, 264]));
    assert_eq!(r.normalizer_exponents.as_ref().unwrap().len(), 11);
    assert_eq!(r.assumptions.len(), 2);
}

#[test]
fn case_11a() {
    let r = run("11A", true);
    assert_ok(&r);
    assert_eq!(r.aut_order.as_ref().unwrap().value, "1771440");
    assert_eq!(r.go_order.value, "3542880");
    assert_eq!(r.index_bounds, Some(("2".to_string(), "20".to_string())));
    assert_eq!(r.orbit_lower_bound, Some(122));
    assert_eq!(r.im_mu_index.as_deref(), Some("2"));
    let inv = r.centralizer_mod_g_invariants.as_ref().unwrap();
    assert!(!inv.abelian);
    assert_eq!(inv.center_order, "2");
}

#[test]
fn case_5c() {
    let r = run("5C", true);
    assert_ok(&r);
    assert_eq!(r.aut_order.as_ref().unwrap().factors.get("5"), Some(&8));
    assert_eq!(r.singular_coset_orbits_centralizer, Some(vec![12, 12]));
    assert_eq!(r.singular_coset_orbits_normalizer, Some(vec![24]));
    assert_eq!(r.centralizer_on_disc.as_ref().unwrap().order.value, "120");
    assert_eq!(r.normalizer_on_disc.as_ref().unwrap().name.as_deref(), Some("GO_3(5)"));
}

#[test]
fn case_3c() {
    let r = run("3C", true);
    assert_ok(&r);
    assert_eq!(r.singular_coset_orbits_centralizer, Some(vec![80]));
    assert_eq!(r.centralizer_on_disc.as_ref().unwrap().order.value, "51840");
    assert_eq!(r.lattice_side_image_order.value, r.stab_im_mu_order.value);
}

#[test]
fn without_assumptions_nothing_is_identified() {
    for label in ["23A", "5C"] {
        let r = run(label, false);
        assert!(r.aut_order.is_none());
        assert!(r.im_mu_order.is_none());
        assert!(r.assumptions.is_empty());
        assert!(r.im_mu_identification.starts_with("undetermined"));
        // everything that does not rest on an assumption still matches
        assert_eq!(r.status, "OK", "{:?}", regressions(&r));
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let json = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let r = pool.install(|| run("11A", true));
        serde_json::to_string(&report_json(&r, false)).unwrap()
    };
    let one = json(1);
    assert_eq!(one, json(3));
    assert!(!one.contains("timings"));
}
