use std::collections::BTreeSet;

use prism_core::gf2::{lexmin_coset, parity_check, solve, BitMatrix, BitVector};
use prism_core::Error;
use proptest::prelude::*;

fn vec_of(bits: u32, d: usize) -> BitVector {
    BitVector::from_bools(&(0..d).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
}

fn all_vectors(d: usize) -> Vec<BitVector> {
    (0..1u32 << d).map(|b| vec_of(b, d)).collect()
}

/// Every XOR combination of the rows.
fn span(rows: &[BitVector], d: usize) -> BTreeSet<Vec<bool>> {
    let mut out = BTreeSet::new();
    for mask in 0..1u32 << rows.len() {
        let mut acc = BitVector::zeros(d);
        for (i, r) in rows.iter().enumerate() {
            if mask >> i & 1 == 1 {
                acc.xor_assign(r);
            }
        }
        out.insert(acc.to_bools());
    }
    out
}

fn times(rows: &[BitVector], x: &BitVector) -> Vec<bool> {
    rows.iter().map(|r| r.dot(x)).collect()
}

/// Bases of all subspaces of GF(2)^d, one reduced echelon basis each.
fn all_subspaces(d: usize) -> Vec<Vec<BitVector>> {
    let mut out = Vec::new();
    for pivots in 0..1u32 << d {
        let piv: Vec<usize> = (0..d).filter(|&c| pivots >> c & 1 == 1).collect();
        let free: Vec<(usize, usize)> = piv
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| ((p + 1)..d).filter(|c| pivots >> c & 1 == 0).map(move |c| (i, c)))
            .collect();
        for fill in 0..1u32 << free.len() {
            let mut rows: Vec<BitVector> = piv.iter().map(|&p| BitVector::unit(d, p)).collect();
            for (j, &(i, c)) in free.iter().enumerate() {
                if fill >> j & 1 == 1 {
                    rows[i].set(c, true);
                }
            }
            out.push(rows);
        }
    }
    out
}

fn check_parity(rows: &[BitVector], d: usize) {
    let t = parity_check(&BitMatrix::from_rows(d, rows.to_vec()).unwrap());
    let space = span(rows, d);
    for x in all_vectors(d) {
        let in_kernel = t.mul_vec(&x).unwrap().is_zero();
        assert_eq!(in_kernel, space.contains(&x.to_bools()), "x = {x}");
    }
}

fn check_solve(rows: &[BitVector], d: usize) {
    let e = BitMatrix::from_rows(d, rows.to_vec()).unwrap();
    for f in all_vectors(rows.len()) {
        let expected: BTreeSet<Vec<bool>> =
            all_vectors(d).into_iter().filter(|x| times(rows, x) == f.to_bools()).map(|x| x.to_bools()).collect();
        match solve(&e, &f) {
            Ok(sol) => {
                let kernel = sol.kernel.rows().to_vec();
                let got: BTreeSet<Vec<bool>> = span(&kernel, d)
                    .into_iter()
                    .map(|k| sol.particular.xor(&BitVector::from_bools(&k)).to_bools())
                    .collect();
                assert_eq!(got, expected, "f = {f}");
                assert_eq!(1usize << kernel.len(), expected.len(), "kernel rows must be independent");
            }
            Err(Error::Internal(_)) => assert!(expected.is_empty(), "f = {f} is solvable"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

fn check_lexmin(kernel: &[BitVector], d: usize, s0: &BitVector) {
    let got = lexmin_coset(s0, &BitMatrix::from_rows(d, kernel.to_vec()).unwrap()).unwrap();
    let best = span(kernel, d).into_iter().map(|k| s0.xor(&BitVector::from_bools(&k)).to_bools()).min().unwrap();
    assert_eq!(got.to_bools(), best);
}

#[test]
fn parity_check_on_every_subspace() {
    for d in 1..=6 {
        let subspaces = all_subspaces(d);
        for rows in &subspaces {
            check_parity(rows, d);
        }
    }
    assert_eq!(all_subspaces(6).len(), 2825);
}

#[test]
fn lexmin_on_every_subspace() {
    for d in 1..=6 {
        for rows in all_subspaces(d) {
            for s0 in all_vectors(d) {
                check_lexmin(&rows, d, &s0);
            }
        }
    }
}

#[test]
fn solve_on_every_subspace() {
    for d in 1..=5 {
        for mut rows in all_subspaces(d) {
            // A dependent row makes some right-hand sides inconsistent.
            let extra = rows.iter().fold(BitVector::zeros(d), |acc, r| acc.xor(r));
            rows.push(extra);
            check_solve(&rows, d);
        }
    }
}

fn rows_strategy(max_d: usize, max_rows: usize) -> impl Strategy<Value = (usize, Vec<BitVector>)> {
    (1..=max_d).prop_flat_map(move |d| {
        (Just(d), prop::collection::vec(0u32..1 << d, 0..=max_rows))
            .prop_map(|(d, raw)| (d, raw.into_iter().map(|b| vec_of(b, d)).collect()))
    })
}

proptest! {
    #[test]
    fn parity_check_from_any_spanning_set((d, rows) in rows_strategy(6, 8)) {
        check_parity(&rows, d);
    }

    #[test]
    fn parity_check_is_basis_independent((d, rows) in rows_strategy(6, 6), shuffle in any::<u64>()) {
        let mut other = rows.clone();
        if other.len() > 1 {
            let i = (shuffle % other.len() as u64) as usize;
            let j = (i + 1) % other.len();
            let r = other[j].clone();
            other[i].xor_assign(&r);
            other.swap(0, i);
        }
        let a = parity_check(&BitMatrix::from_rows(d, rows).unwrap());
        let b = parity_check(&BitMatrix::from_rows(d, other).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn solve_any_system((d, rows) in rows_strategy(6, 7)) {
        check_solve(&rows, d);
    }

    #[test]
    fn lexmin_up_to_ten_generators((d, kernel) in rows_strategy(12, 10), s in any::<u32>()) {
        check_lexmin(&kernel, d, &vec_of(s, d));
    }
}
