use nalgebra::DMatrix;
use prism_core::graph::{make_random, MatrixView, RandomModel};
use prism_core::prism::{
    canonicalize, canonicalize_detailed, canonicalize_hybrid, certificates_equal, fast_sign, partition, refine,
    solve_signs,
};
use prism_core::spectral::{eigendecompose, slice_k, EigDecomp, KSlice};
use prism_core::Error;
use proptest::prelude::*;

/// All permutations of `0..n` (Heap's algorithm).
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn eq1() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &[1., 1., 2., 1., -1., 0., -1., -2., -1., -1., -2., -1., -1., 0., 1., 2.])
}

fn flip(u: &DMatrix<f64>, signs: &[bool]) -> DMatrix<f64> {
    DMatrix::from_fn(u.nrows(), u.ncols(), |r, c| if signs[c] { -u[(r, c)] } else { u[(r, c)] })
}

/// Row `perm[v]` of the result is row `v` of `u`.
fn permute(u: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    let mut out = u.clone();
    for (v, &pv) in perm.iter().enumerate() {
        out.set_row(pv, &u.row(v));
    }
    out
}

fn sorted_rows(u: &DMatrix<f64>) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i64>> =
        (0..u.nrows()).map(|r| u.row(r).iter().map(|x| (x * 1e6).round() as i64).collect()).collect();
    rows.sort();
    rows
}

#[test]
fn eq1_brute_force_then_fixture() {
    let u = eq1();
    let classes = [vec![0usize, 2], vec![1, 3]];
    let admissible: Vec<u32> = (0..16u32)
        .filter(|mask| {
            let s = flip(&u, &(0..4).map(|j| mask >> j & 1 == 1).collect::<Vec<_>>());
            classes.iter().all(|c| c.iter().any(|&v| s.row(v).iter().all(|&x| x >= 0.0)))
        })
        .collect();
    assert_eq!(admissible, vec![0b1111]);

    let uk = KSlice::from_raw(u).unwrap();
    let run = canonicalize_detailed(&uk, 8).unwrap();
    assert_eq!(run.refined.classes(), &classes);
    assert_eq!(run.solution.sign.to_string(), "1111");
    let one = 100_000_000;
    let expected: Vec<Vec<i64>> = [[1, 1, 2, 1], [1, 0, 1, 2], [1, 0, -1, -2], [-1, -1, -2, -1]]
        .iter()
        .map(|r| r.iter().map(|&x| x * one).collect())
        .collect();
    assert_eq!(run.certificate.rows, expected);
}

#[test]
fn staged_api_matches_pipeline() {
    let uk = KSlice::from_raw(eq1()).unwrap();
    let part = partition(&uk, 8).unwrap();
    let refined = refine(&part, &uk, 8).unwrap();
    let sol = solve_signs(&refined, &uk, 8).unwrap();
    assert_eq!(sol.sign, canonicalize(&uk, 8).unwrap().sign);
    assert!(sol.relation_rows <= 4 - refined.len());
}

/// Laplacian eigendecomposition of a random graph with simple spectrum.
fn er_decomp(n: usize, p: f64, mut seed: u64) -> EigDecomp {
    loop {
        let g = make_random(RandomModel::ErdosRenyi { n, p, seed }).unwrap().to_weighted();
        let d = eigendecompose(&g.matrix_view(MatrixView::Laplacian).unwrap(), 1e-8).unwrap();
        if d.is_simple_spectrum() {
            return d;
        }
        seed = seed.wrapping_add(1_000_003);
    }
}

fn er_slice(n: usize, p: f64, seed: u64) -> KSlice {
    er_decomp(n, p, seed).full_slice()
}

fn small_int_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(n, k)| {
        prop::collection::vec(-2i32..=2, n * k).prop_map(move |v| {
            DMatrix::from_row_iterator(n, k, v.into_iter().map(f64::from))
        })
    })
}

fn orbit_equivalent(u: &DMatrix<f64>, v: &DMatrix<f64>) -> bool {
    if u.shape() != v.shape() {
        return false;
    }
    let target = sorted_rows(v);
    let k = u.ncols();
    (0..1u32 << k).any(|mask| sorted_rows(&flip(u, &(0..k).map(|j| mask >> j & 1 == 1).collect::<Vec<_>>())) == target)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariant_under_relabel_and_flip(
        (n, seed) in (6usize..=14, any::<u64>()),
        shuffle in any::<u64>(),
        flips in any::<u64>(),
    ) {
        let uk = er_slice(n, 0.4, seed);
        let mut rng_perm: Vec<usize> = (0..n).collect();
        let mut s = shuffle;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            rng_perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let signs: Vec<bool> = (0..n).map(|j| flips >> (j % 64) & 1 == 1).collect();
        let moved = uk.with_vectors(permute(&flip(uk.vectors(), &signs), &rng_perm)).unwrap();
        let a = canonicalize(&uk, 8).unwrap();
        let b = canonicalize(&moved, 8).unwrap();
        prop_assert!(certificates_equal(&a, &b).unwrap());
    }

    #[test]
    fn invariant_on_tied_integer_matrices(u in small_int_matrix(), perm_seed in any::<usize>(), flips in any::<u8>()) {
        let perms = permutations(u.nrows());
        let perm = &perms[perm_seed % perms.len()];
        let signs: Vec<bool> = (0..u.ncols()).map(|j| flips >> j & 1 == 1).collect();
        let a = canonicalize(&KSlice::from_raw(u.clone()).unwrap(), 4).unwrap();
        let b = canonicalize(&KSlice::from_raw(permute(&flip(&u, &signs), perm)).unwrap(), 4).unwrap();
        prop_assert!(certificates_equal(&a, &b).unwrap());
    }

    /// Certificate equality coincides with the brute-force orbit relation.
    #[test]
    fn complete_on_small_integer_matrices(u in small_int_matrix(), v in small_int_matrix()) {
        prop_assume!(u.shape() == v.shape());
        let a = canonicalize(&KSlice::from_raw(u.clone()).unwrap(), 4).unwrap();
        let b = canonicalize(&KSlice::from_raw(v.clone()).unwrap(), 4).unwrap();
        prop_assert_eq!(certificates_equal(&a, &b).unwrap(), orbit_equivalent(&u, &v));
    }

    #[test]
    fn sign_kernel_preserves_rows(u in small_int_matrix()) {
        let uk = KSlice::from_raw(u.clone()).unwrap();
        let cert = canonicalize(&uk, 4).unwrap();
        for a in cert.automorphism_kernel.rows() {
            let flipped = flip(&u, &a.to_bools());
            prop_assert_eq!(sorted_rows(&flipped), sorted_rows(&u));
            let again = canonicalize(&KSlice::from_raw(flipped).unwrap(), 4).unwrap();
            prop_assert!(certificates_equal(&again, &cert).unwrap());
        }
    }

    #[test]
    fn truncated_slices_are_invariant((n, seed) in (6usize..=12, any::<u64>()), k in 1usize..=6, flips in any::<u64>()) {
        let uk = slice_k(&er_decomp(n, 0.4, seed), k.min(n)).unwrap();
        let signs: Vec<bool> = (0..uk.k()).map(|j| flips >> j & 1 == 1).collect();
        let rev: Vec<usize> = (0..n).rev().collect();
        let moved = uk.with_vectors(permute(&flip(uk.vectors(), &signs), &rev)).unwrap();
        prop_assert!(certificates_equal(&canonicalize(&uk, 8).unwrap(), &canonicalize(&moved, 8).unwrap()).unwrap());
    }
}

#[test]
fn orbit_oracle_on_a_tiny_case() {
    // Flipping both columns maps {(1, 0), (0, 1)} onto {(0, -1), (-1, 0)}; nothing reaches {(1, 1), (0, 0)}.
    let u = DMatrix::from_row_slice(2, 2, &[1., 0., 0., 1.]);
    let v = DMatrix::from_row_slice(2, 2, &[0., -1., -1., 0.]);
    let w = DMatrix::from_row_slice(2, 2, &[1., 1., 0., 0.]);
    assert!(orbit_equivalent(&u, &v));
    assert!(!orbit_equivalent(&u, &w));
    assert_eq!(permutations(4).len(), 24);
}

#[test]
fn fast_sign_agrees_on_injective_inputs() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 100 {
        let uk = er_slice(8 + (seed % 10) as usize, 0.35, seed);
        seed += 1;
        match fast_sign(&uk, 8) {
            Ok(fast) => {
                assert_eq!(fast, canonicalize(&uk, 8).unwrap(), "seed {seed}");
                checked += 1;
            }
            Err(Error::NotApplicable(_)) => {
                assert!(!canonicalize_detailed(&uk, 8).unwrap().initial.is_discrete());
            }
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn fast_sign_declines_tied_signatures() {
    let tied = [
        eq1(),
        DMatrix::from_row_slice(2, 1, &[1., -1.]),
        DMatrix::from_row_slice(3, 2, &[1., 2., 1., -2., 0., 3.]),
    ];
    for u in tied {
        assert!(matches!(fast_sign(&KSlice::from_raw(u).unwrap(), 8), Err(Error::NotApplicable(_))));
    }
}

#[test]
fn path_reflections_are_sign_automorphisms() {
    for n in 3..=9 {
        let edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let g = prism_core::graph::WeightedGraph::from_edges(n, &edges, &[]).unwrap();
        let d = eigendecompose(&g.matrix_view(MatrixView::Laplacian).unwrap(), 1e-8).unwrap();
        assert!(d.is_simple_spectrum());
        let uk = d.full_slice();
        let cert = canonicalize(&uk, 8).unwrap();
        assert!(cert.automorphism_kernel.nrows() >= 1, "P{n} has a reflection");
        for a in cert.automorphism_kernel.rows() {
            let flipped = flip(uk.vectors(), &a.to_bools());
            let again = canonicalize(&uk.with_vectors(flipped).unwrap(), 8).unwrap();
            assert!(certificates_equal(&again, &cert).unwrap());
        }
    }
}

#[test]
fn hybrid_equals_base_on_simple_spectra() {
    for seed in 0..40 {
        let uk = er_slice(10 + (seed % 12) as usize, 0.3, seed);
        assert_eq!(canonicalize_hybrid(&uk, 8).unwrap(), canonicalize(&uk, 8).unwrap());
    }
}
