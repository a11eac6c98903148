//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use orbaut::lattice::Lattice;
use orbaut::IntMatrix;

pub fn gram_i64(l: &Lattice) -> Vec<Vec<i64>> {
    let n = l.rank();
    (0..n).map(|i| (0..n).map(|j| l.gram().get(i, j).to_i64().unwrap()).collect()).collect()
}

pub fn norm(g: &[Vec<i64>], x: &[i64]) -> i64 {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| x[i] * g[i][j] * x[j]).sum::<i64>()).sum()
}

pub fn inner(g: &[Vec<i64>], x: &[i64], y: &[i64]) -> i64 {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| x[i] * g[i][j] * y[j]).sum::<i64>()).sum()
}

/// Every vector of norm at most `bound`, both signs, by scanning a box
/// `|x_i| ≤ √(bound · (G⁻¹)_ii)`.
pub fn box_search(l: &Lattice, bound: i64) -> Vec<Vec<i64>> {
    let n = l.rank();
    let g = gram_i64(l);
    let inv = l.gram().rat_inverse().unwrap();
    let radius: Vec<i64> = (0..n)
        .map(|i| {
            let r = inv.get(i, i) * BigInt::from(bound);
            let f = r.to_f64().unwrap();
            f.sqrt().floor() as i64 + 1
        })
        .collect();
    let mut out = Vec::new();
    let mut x: Vec<i64> = radius.iter().map(|r| -r).collect();
    loop {
        let nm = norm(&g, &x);
        if nm > 0 && nm <= bound {
            out.push(x.clone());
        }
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            if x[k] < radius[k] {
                x[k] += 1;
                break;
            }
            x[k] = -radius[k];
            k += 1;
        }
    }
}

/// All isometries as column lists, found by matching basis images against
/// vectors of the right norm and checking inner products.
pub fn brute_isometries(l: &Lattice) -> Vec<IntMatrix> {
    let n = l.rank();
    let g = gram_i64(l);
    let maxd = (0..n).map(|i| g[i][i]).max().unwrap();
    let pool = box_search(l, maxd);
    let cands: Vec<Vec<&Vec<i64>>> = (0..n).map(|i| pool.iter().filter(|v| norm(&g, v) == g[i][i]).collect()).collect();
    let mut out = Vec::new();
    let mut chosen: Vec<&Vec<i64>> = Vec::new();
    fn rec<'a>(
        i: usize,
        g: &[Vec<i64>],
        cands: &[Vec<&'a Vec<i64>>],
        chosen: &mut Vec<&'a Vec<i64>>,
        out: &mut Vec<IntMatrix>,
    ) {
        let n = g.len();
        if i == n {
            let cols: Vec<Vec<BigInt>> = chosen.iter().map(|c| c.iter().map(|&x| BigInt::from(x)).collect()).collect();
            let m = IntMatrix::from_columns(n, &cols);
            if m.det().abs() == BigInt::from(1) {
                out.push(m);
            }
            return;
        }
        for &v in &cands[i] {
            if (0..i).all(|j| inner(g, chosen[j], v) == g[j][i]) {
                chosen.push(v);
                rec(i + 1, g, cands, chosen, out);
                chosen.pop();
            }
        }
    }
    rec(0, &g, &cands, &mut chosen, &mut out);
    out
}
