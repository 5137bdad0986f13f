//! Canonical forms of eigenvector matrices.
//!
//! [`canonicalize`] runs the four stages on a simple-spectrum slice:
//! [`partition`] by absolute-value signature, [`refine`] to a stable
//! partition, [`solve_signs`] over GF(2), and [`match_rows`] by sorting.
//! [`fast_sign`] is the shortcut for injective signatures and
//! [`canonicalize_hybrid`] the heuristic extension to repeated eigenvalues.
//!
//! Every decision is taken on the integer matrix `round(U * 10^p)`.

mod hybrid;
mod partition;
mod quant;
mod solve;

use std::cmp::Reverse;

use serde_json::json;

pub use hybrid::canonicalize_hybrid;
pub use partition::{partition, refine, Partition};
pub use quant::{dequantize, quantize, DEFAULT_PRECISION, MAX_PRECISION};
pub use solve::{solve_signs, AffineSignClass, SignSolution, SolveStats};

pub(crate) use partition::{partition_by, partition_quantized, refine_quantized};
pub(crate) use quant::quantize_rows;
pub(crate) use solve::solve_quantized;

use crate::error::{invalid, Error, Result};
use crate::gf2::{BitMatrix, BitVector};
use crate::spectral::KSlice;

/// The comparable output of a canonicalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonCertificate {
    pub n: usize,
    pub k: usize,
    pub precision: u32,
    /// Quantized eigenvalue of every column; empty for raw matrices.
    pub eigenvalues: Vec<i64>,
    /// Quantized canonical rows, non-increasing lexicographically.
    pub rows: Vec<Vec<i64>>,
    /// Original vertex of each canonical row.
    pub order: Vec<usize>,
    pub sign: BitVector,
    /// Reduced echelon basis of the sign automorphisms.
    pub automorphism_kernel: BitMatrix,
    /// Set when an unresolved tie was broken by vertex index.
    pub heuristic: bool,
}

impl CanonCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        let p = self.precision;
        json!({
            "n": self.n,
            "k": self.k,
            "precision": p,
            "eigenvalues": self.eigenvalues.iter().map(|&x| dequantize(x, p)).collect::<Vec<_>>(),
            "rows": self.rows.iter()
                .map(|r| r.iter().map(|&x| dequantize(x, p)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "order": self.order,
            "sign": self.sign.to_u8s(),
            "automorphism_kernel": self.automorphism_kernel.rows().iter().map(|r| r.to_u8s()).collect::<Vec<_>>(),
            "heuristic": self.heuristic,
        })
    }

    /// Rows as floating-point values.
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.k, |r, c| dequantize(self.rows[r][c], self.precision))
    }

    /// Undoes the sort and the sign flips, giving back the quantized input rows.
    pub fn original_rows(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new(); self.n];
        for (row, &v) in self.rows.iter().zip(&self.order) {
            out[v] = row
                .iter()
                .enumerate()
                .map(|(j, &x)| if self.sign.get(j) { -x } else { x })
                .collect();
        }
        out
    }
}

/// Bit-equality of rows, eigenvalues and automorphism kernels.
pub fn certificates_equal(a: &CanonCertificate, b: &CanonCertificate) -> Result<bool> {
    if (a.n, a.k, a.precision) != (b.n, b.k, b.precision) {
        return Err(invalid(format!(
            "cannot compare a {}x{} certificate at precision {} with a {}x{} one at precision {}",
            a.n, a.k, a.precision, b.n, b.k, b.precision
        )));
    }
    Ok(a.rows == b.rows && a.eigenvalues == b.eigenvalues && a.automorphism_kernel == b.automorphism_kernel)
}

pub(crate) fn expanded_eigenvalues(uk: &KSlice, p: u32) -> Result<Vec<i64>> {
    let mut out = Vec::with_capacity(uk.k());
    for (&l, &m) in uk.lambdas().iter().zip(uk.mults()) {
        let q = quantize(l, p)?;
        out.extend(std::iter::repeat_n(q, m));
    }
    Ok(out)
}

/// Sorts the sign-corrected rows in non-increasing order; ties by vertex index.
pub(crate) fn sorted_certificate(
    rows: Vec<Vec<i64>>,
    eigenvalues: Vec<i64>,
    precision: u32,
    sign: BitVector,
    automorphism_kernel: BitMatrix,
    heuristic: bool,
) -> CanonCertificate {
    let n = rows.len();
    let k = sign.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| Reverse(&rows[a]).cmp(&Reverse(&rows[b])).then(a.cmp(&b)));
    let mut rows = rows.into_iter().map(Some).collect::<Vec<_>>();
    let rows = order.iter().map(|&v| rows[v].take().unwrap()).collect();
    CanonCertificate { n, k, precision, eigenvalues, rows, order, sign, automorphism_kernel, heuristic }
}

pub(crate) fn apply_signs(q: &[Vec<i64>], sign: &BitVector) -> Vec<Vec<i64>> {
    q.iter()
        .map(|r| r.iter().enumerate().map(|(j, &x)| if sign.get(j) { -x } else { x }).collect())
        .collect()
}

/// Stage 4: applies `sign` and sorts rows. `kernel` is recorded as given.
pub fn match_rows(uk: &KSlice, sign: &BitVector, kernel: &BitMatrix, p: u32) -> Result<CanonCertificate> {
    if sign.len() != uk.k() || kernel.ncols() != uk.k() {
        return Err(invalid("sign vector or kernel does not match the slice width"));
    }
    let q = quantize_rows(uk.vectors(), p)?;
    Ok(sorted_certificate(
        apply_signs(&q, sign),
        expanded_eigenvalues(uk, p)?,
        p,
        sign.clone(),
        kernel.clone(),
        false,
    ))
}

/// Everything the pipeline computed on the way to the certificate.
#[derive(Debug, Clone)]
pub struct Canonicalization {
    pub certificate: CanonCertificate,
    pub initial: Partition,
    pub refined: Partition,
    pub solution: SignSolution,
}

pub fn canonicalize_detailed(uk: &KSlice, p: u32) -> Result<Canonicalization> {
    if !uk.is_simple() {
        return Err(invalid(
            "slice has a repeated eigenvalue; use the hybrid canonicalization for this input",
        ));
    }
    let q = quantize_rows(uk.vectors(), p)?;
    let initial = partition_quantized(&q);
    let refined = refine_quantized(&initial, &q);
    let solution = solve_quantized(&refined, &q, uk.k())?;
    let certificate = sorted_certificate(
        apply_signs(&q, &solution.sign),
        expanded_eigenvalues(uk, p)?,
        p,
        solution.sign.clone(),
        solution.kernel.clone(),
        false,
    );
    Ok(Canonicalization { certificate, initial, refined, solution })
}

/// The canonical form of a simple-spectrum slice.
pub fn canonicalize(uk: &KSlice, p: u32) -> Result<CanonCertificate> {
    Ok(canonicalize_detailed(uk, p)?.certificate)
}

/// Shortcut for injective signatures: sort by signature and make the first
/// nonzero entry of every column positive.
pub fn fast_sign(uk: &KSlice, p: u32) -> Result<CanonCertificate> {
    let q = quantize_rows(uk.vectors(), p)?;
    let part = partition_quantized(&q);
    if !part.is_discrete() {
        return Err(Error::NotApplicable(format!(
            "absolute-value signature is not injective ({} classes for {} vertices)",
            part.len(),
            q.len()
        )));
    }
    let k = uk.k();
    let mut sign = BitVector::zeros(k);
    let mut kernel = BitMatrix::new(k);
    for j in 0..k {
        match part.classes().iter().map(|c| q[c[0]][j]).find(|&x| x != 0) {
            Some(x) => sign.set(j, x < 0),
            None => kernel.push_row(BitVector::unit(k, j))?,
        }
    }
    Ok(sorted_certificate(apply_signs(&q, &sign), expanded_eigenvalues(uk, p)?, p, sign, kernel, false))
}
