use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::quant::quantize;
use super::{
    expanded_eigenvalues, partition_by, quantize_rows, refine_quantized, solve_quantized, sorted_certificate,
    CanonCertificate,
};
use crate::error::{Error, Result};
use crate::gf2::{self, BitMatrix, BitVector};
use crate::spectral::KSlice;

const PIVOT_RESIDUAL: f64 = 1e-6;

/// Canonical form for slices with repeated eigenvalues.
///
/// Simple columns go through the exact pipeline; each higher-dimensional
/// eigenspace, smallest first, is rotated so that its pivot rows become lower
/// triangular with a positive diagonal. Pivots are taken in the canonical
/// vertex order built so far. When that order has ties the pick falls back to
/// vertex index and the certificate is marked heuristic. On a simple slice
/// the result equals [`super::canonicalize`].
pub fn canonicalize_hybrid(uk: &KSlice, p: u32) -> Result<CanonCertificate> {
    let n = uk.n();
    let k = uk.k();
    let blocks = uk.blocks();
    let q = quantize_rows(uk.vectors(), p)?;

    // Norm-value signature; a 1-dimensional block contributes |x| itself.
    let mut sigma = vec![Vec::with_capacity(blocks.len()); n];
    for (v, sig) in sigma.iter_mut().enumerate() {
        for b in &blocks {
            if b.len() == 1 {
                sig.push(q[v][b.start].abs());
            } else {
                let norm = uk.vectors().view((v, b.start), (1, b.len())).norm();
                sig.push(quantize(norm, p)?);
            }
        }
    }
    let initial = partition_by(&sigma);

    let simple_cols: Vec<usize> = blocks.iter().filter(|b| b.len() == 1).map(|b| b.start).collect();
    let q1: Vec<Vec<i64>> = q.iter().map(|r| simple_cols.iter().map(|&j| r[j]).collect()).collect();
    let refined = refine_quantized(&initial, &q1);
    let solution = solve_quantized(&refined, &q1, simple_cols.len())?;

    let mut sign = BitVector::zeros(k);
    let mut work = uk.vectors().clone();
    for (i, &j) in simple_cols.iter().enumerate() {
        if solution.sign.get(i) {
            sign.set(j, true);
            work.column_mut(j).neg_mut();
        }
    }
    let kernel_rows = solution.kernel.rows().iter().map(|r| r.embed(&simple_cols, k)).collect();
    let kernel = gf2::row_reduce(&BitMatrix::from_rows(k, kernel_rows)?).matrix;

    // Ascending order key: refined class, then the signed simple rows, then
    // each resolved eigenspace, all negated so larger values come first.
    let class_of = refined.class_of();
    let mut keys: Vec<Vec<i64>> = (0..n)
        .map(|v| {
            let mut key = vec![class_of[v] as i64];
            key.extend(simple_cols.iter().map(|&j| if sign.get(j) { q[v][j] } else { -q[v][j] }));
            key
        })
        .collect();

    let mut multi: Vec<_> = blocks.iter().filter(|b| b.len() > 1).cloned().collect();
    multi.sort_by_key(|b| (b.len(), b.start));
    let mut heuristic = false;
    for block in multi {
        let m = block.len();
        let b = work.columns(block.start, m).into_owned();
        let (pivots, tied) = pick_pivots(&b, &keys, p)?;
        heuristic |= tied;
        let rotated = align(&b, &pivots)?;
        work.columns_mut(block.start, m).copy_from(&rotated);
        for (v, key) in keys.iter_mut().enumerate() {
            for c in 0..m {
                key.push(-quantize(rotated[(v, c)], p)?);
            }
        }
    }

    let rows = quantize_rows(&work, p)?;
    Ok(sorted_certificate(rows, expanded_eigenvalues(uk, p)?, p, sign, kernel, heuristic))
}

/// Chooses `m` pivot rows of `b` by Gram-Schmidt over the canonical order,
/// vertices with a unique key first. Returns whether any pick was tied.
fn pick_pivots(b: &DMatrix<f64>, keys: &[Vec<i64>], p: u32) -> Result<(Vec<usize>, bool)> {
    let (n, m) = b.shape();
    let mut counts: HashMap<&[i64], usize> = HashMap::new();
    for key in keys {
        *counts.entry(key.as_slice()).or_default() += 1;
    }
    let unique: Vec<bool> = keys.iter().map(|k| counts[k.as_slice()] == 1).collect();

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut pivots = Vec::with_capacity(m);
    let mut tied = false;
    while pivots.len() < m {
        // Coordinates along the directions fixed so far are canonical given the pivots.
        let mut ranked: Vec<(bool, Vec<i64>, usize)> = Vec::with_capacity(n);
        for v in (0..n).filter(|v| !pivots.contains(v)) {
            let row = b.row(v).transpose();
            let mut key = keys[v].clone();
            for q in &basis {
                key.push(-quantize(row.dot(q), p)?);
            }
            ranked.push((!unique[v], key, v));
        }
        ranked.sort();

        let mut chosen = None;
        for (i, (dup, key, v)) in ranked.iter().enumerate() {
            let row = b.row(*v).transpose();
            let mut residual = row.clone();
            for q in &basis {
                residual -= q * row.dot(q);
            }
            let norm = residual.norm();
            if norm > PIVOT_RESIDUAL {
                tied |= ranked[..i].iter().chain(&ranked[i + 1..]).any(|(d, k, _)| d == dup && k == key);
                chosen = Some((*v, residual / norm));
                break;
            }
        }
        let (v, direction) =
            chosen.ok_or_else(|| Error::Internal("eigenspace block has rank below its multiplicity".into()))?;
        pivots.push(v);
        basis.push(direction);
    }
    Ok((pivots, tied))
}

/// `b Q` with `Q` orthogonal such that the pivot rows of `b Q` are lower
/// triangular with a positive diagonal. Independent of the basis of `b`.
fn align(b: &DMatrix<f64>, pivots: &[usize]) -> Result<DMatrix<f64>> {
    let m = b.ncols();
    let pt = DMatrix::from_fn(m, m, |r, c| b[(pivots[c], r)]);
    let qr = pt.qr();
    let mut q = qr.q();
    let r = qr.r();
    for i in 0..m {
        match r[(i, i)].partial_cmp(&0.0) {
            Some(Ordering::Less) => q.column_mut(i).neg_mut(),
            Some(_) => {}
            None => return Err(Error::NumericFailure("non-finite pivot block".into())),
        }
    }
    Ok(b * q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_cycle, MatrixView};
    use crate::prism::canonicalize;
    use crate::spectral::eigendecompose;

    fn nlap_slice(n: usize) -> KSlice {
        let g = make_cycle(n).unwrap().to_weighted();
        eigendecompose(&g.matrix_view(MatrixView::NormalizedLaplacian).unwrap(), 1e-8)
            .unwrap()
            .full_slice()
    }

    #[test]
    fn simple_input_matches_base() {
        let u = crate::prism::tests::eq1();
        assert_eq!(canonicalize_hybrid(&u, 0).unwrap(), canonicalize(&u, 0).unwrap());
    }

    #[test]
    fn identity_is_idempotent() {
        let u = KSlice::from_parts(DMatrix::identity(4, 4), vec![1.0], vec![4]).unwrap();
        let first = canonicalize_hybrid(&u, 8).unwrap();
        assert!(first.heuristic);
        let again = canonicalize_hybrid(&u.with_vectors(first.matrix()).unwrap(), 8).unwrap();
        assert_eq!(again.rows, first.rows);
    }

    #[test]
    fn pivot_rows_become_lower_triangular() {
        let u = nlap_slice(3);
        let cert = canonicalize_hybrid(&u, 8).unwrap();
        // Rows: (c, x, y) with the first pivot on the positive x-axis.
        let top = &cert.rows[0];
        assert!(top[1] > 0 && top[2] == 0, "{top:?}");
    }

    #[test]
    fn cycles_are_deterministic() {
        for n in [3, 4, 6] {
            let u = nlap_slice(n);
            assert_eq!(canonicalize_hybrid(&u, 8).unwrap(), canonicalize_hybrid(&u, 8).unwrap());
        }
    }
}
