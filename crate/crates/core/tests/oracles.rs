//! Brute-force oracles for short vectors and isometry groups of small
//! lattices.

mod common;

use num_bigint::BigInt;
use proptest::prelude::*;

use common::{box_search, brute_isometries, gram_i64, norm};
use orbaut::isogroup::{centralizer, isometry_group};
use orbaut::lattice::Lattice;
use orbaut::shortvec::enumerate_short;
use orbaut::IntMatrix;

fn gram_from_basis(b: &[i64], n: usize) -> Option<Lattice> {
    let m = IntMatrix::from_i64(n, n, b);
    if m.det() == BigInt::from(0) {
        return None;
    }
    Lattice::new(m.transpose().mul(&m)).ok()
}

fn basis_strategy() -> impl Strategy<Value = (usize, Vec<i64>)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(-2i64..=2, n * n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn short_vectors_match_box_search((n, b) in basis_strategy(), bound in 1i64..=12) {
        let Some(l) = gram_from_basis(&b, n) else { return Ok(()) };
        let set = enumerate_short(&l, bound).unwrap();
        let mut got: Vec<Vec<i64>> = set.vectors.clone();
        got.extend(set.vectors.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<_>>()));
        got.sort();
        let mut want = box_search(&l, bound);
        want.sort();
        prop_assert_eq!(got, want);
        let g = gram_i64(&l);
        for (v, &nm) in set.vectors.iter().zip(&set.norms) {
            prop_assert_eq!(norm(&g, v), nm);
        }
    }

    #[test]
    fn isometry_group_matches_brute_force((n, b) in (1usize..=3).prop_flat_map(|n| (Just(n), prop::collection::vec(-2i64..=2, n * n)))) {
        let Some(l) = gram_from_basis(&b, n) else { return Ok(()) };
        let all = brute_isometries(&l);
        let h = isometry_group(&l).unwrap();
        prop_assert_eq!(h.order().clone(), BigInt::from(all.len()));
    }
}

fn centralizer_cases(l: &Lattice, picks: usize) {
    let all = brute_isometries(l);
    let h = isometry_group(l).unwrap();
    assert_eq!(h.order(), &BigInt::from(all.len()));
    let step = (all.len() / picks).max(1);
    for g in all.iter().step_by(step) {
        let want = all.iter().filter(|h| h.mul(g) == g.mul(h)).count();
        let c = centralizer(l, g).unwrap();
        assert_eq!(c.order(), &BigInt::from(want), "g = {g:?}");
        for x in c.generators() {
            assert!(l.is_isometry(x));
            assert_eq!(x.mul(g), g.mul(x));
        }
    }
}

#[test]
fn centralizers_a2() {
    centralizer_cases(&Lattice::from_rows(&[vec![2, -1], vec![-1, 2]]).unwrap(), 12);
}

#[test]
fn centralizers_a2_a2() {
    let l = Lattice::from_rows(&[vec![2, -1, 0, 0], vec![-1, 2, 0, 0], vec![0, 0, 2, -1], vec![0, 0, -1, 2]]).unwrap();
    centralizer_cases(&l, 16);
}

#[test]
fn centralizers_d4() {
    let l = Lattice::from_rows(&[vec![2, -1, 0, 0], vec![-1, 2, -1, -1], vec![0, -1, 2, 0], vec![0, -1, 0, 2]]).unwrap();
    centralizer_cases(&l, 12);
}

#[test]
fn centralizers_z3() {
    centralizer_cases(&Lattice::from_rows(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap(), 16);
}

#[test]
fn centralizers_skewed_rank3() {
    let l = Lattice::from_rows(&[vec![4, 1, 2], vec![1, 4, 1], vec![2, 1, 6]]).unwrap();
    centralizer_cases(&l, 8);
}
