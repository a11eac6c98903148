use orbaut::fqspace::{appendix_suite, build_group, FpQuadraticSpace, GroupName};
use num_bigint::BigInt;

fn run(n: usize, p: u64, minus: bool) {
    let t = std::time::Instant::now();
    let items = appendix_suite(n, p, minus, 0).unwrap();
    for it in &items {
        eprintln!("{} [{}] expected={} computed={} pass={:?}", it.prop_id, it.parameters, it.expected, it.computed, it.pass);
    }
    eprintln!("({n},{p},{minus}) took {:?}", t.elapsed());
    assert!(items.iter().all(|i| i.pass != Some(false)));
}

#[test]
fn suite_3_3() { run(3, 3, false); }
#[test]
fn suite_3_5() { run(3, 5, false); }
#[test]
fn suite_3_7() { run(3, 7, false); }
#[test]
fn suite_3_11() { run(3, 11, false); }
#[test]
fn suite_3_23() { run(3, 23, false); }
#[test]
fn suite_5_3() { run(5, 3, false); }
#[test]
fn suite_4_5_minus() { run(4, 5, true); }
#[test]
fn suite_4_11_minus() { run(4, 11, true); }

#[test]
fn go3_23_order() {
    let sp = FpQuadraticSpace::standard_odd(3, 23).unwrap();
    assert_eq!(build_group(&sp, GroupName::GO, 0).unwrap().order(), BigInt::from(24288));
}

mod spinor {
    use std::sync::OnceLock;

    use orbaut::fqspace::{build_group, legendre, random_word, FpGroup, FpQuadraticSpace, GroupName};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PARAMS: [(usize, u64, bool); 5] = [(3, 5, false), (3, 7, false), (5, 3, false), (4, 5, true), (4, 3, true)];

    fn groups() -> &'static Vec<(FpQuadraticSpace, FpGroup)> {
        static G: OnceLock<Vec<(FpQuadraticSpace, FpGroup)>> = OnceLock::new();
        G.get_or_init(|| {
            PARAMS
                .iter()
                .map(|&(n, p, minus)| {
                    let sp = if minus { FpQuadraticSpace::standard_minus(n, p) } else { FpQuadraticSpace::standard_odd(n, p) }.unwrap();
                    let g = build_group(&sp, GroupName::GO, 0).unwrap();
                    (sp, g)
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn label_is_a_homomorphism(which in 0usize..PARAMS.len(), seed in any::<u64>(), s1 in any::<u64>(), s2 in any::<u64>()) {
            let (sp, g) = &groups()[which];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_word(g, &mut rng, 10);
            let b = random_word(g, &mut rng, 10);
            let la = sp.coset_label_seeded(&a, s1).unwrap();
            prop_assert_eq!(la, sp.coset_label_seeded(&a, s2).unwrap());
            let lb = sp.coset_label_seeded(&b, s2).unwrap();
            prop_assert_eq!(la.mul(lb), sp.coset_label_seeded(&a.mul(&b), s1).unwrap());
        }

        #[test]
        fn factorizations_multiply_back(which in 0usize..PARAMS.len(), seed in any::<u64>(), s in any::<u64>()) {
            let (sp, g) = &groups()[which];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_word(g, &mut rng, 10);
            let vs = sp.factor_reflections(&a, s).unwrap();
            let mut prod = orbaut::fqspace::FpMatrix::identity(sp.p(), sp.dim());
            for v in &vs {
                prod = prod.mul(&sp.reflection(v).unwrap());
            }
            prop_assert_eq!(prod, a);
        }

        #[test]
        fn reflections_have_reflection_labels(which in 0usize..PARAMS.len(), v in prop::collection::vec(0u64..100, 5)) {
            let (sp, _) = &groups()[which];
            let v: Vec<u64> = v[..sp.dim()].iter().map(|x| x % sp.p()).collect();
            prop_assume!(sp.q(&v) != 0);
            let l = sp.coset_label(&sp.reflection(&v).unwrap()).unwrap();
            prop_assert_eq!((l.det, l.spinor), (-1, legendre(sp.q(&v), sp.p())));
        }
    }
}
