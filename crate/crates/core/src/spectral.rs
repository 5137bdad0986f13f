//! Symmetric eigendecomposition with tolerance-based eigenvalue grouping.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Default absolute tolerance below which two eigenvalues are merged.
pub const DEFAULT_TOL: f64 = 1e-8;

/// An eigendecomposition `(U, lambdas, mults)`.
///
/// Columns of `vectors` are eigenvectors in ascending eigenvalue order, rows
/// are indexed by vertices. `lambdas` holds the distinct eigenvalues (the mean
/// of each chained class) and `mults` their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
    lambdas: Vec<f64>,
    mults: Vec<usize>,
    tol: f64,
}

impl EigDecomp {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Raw eigenvalue of every column, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn is_simple_spectrum(&self) -> bool {
        is_simple_spectrum(self)
    }

    /// `U diag(lambda) U^T`, with each column carrying its class eigenvalue.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let expanded = expand(&self.lambdas, &self.mults);
        let mut scaled = self.vectors.clone();
        for (j, &l) in expanded.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * self.vectors.transpose()
    }

    /// Largest entry of `|U^T U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.vectors)
    }

    pub fn full_slice(&self) -> KSlice {
        KSlice {
            vectors: self.vectors.clone(),
            lambdas: self.lambdas.clone(),
            mults: self.mults.clone(),
        }
    }

    /// JSON dump with `U` row-major, every number rounded to `digits` decimals.
    pub fn to_json(&self, digits: u32) -> serde_json::Value {
        let round = |x: f64| {
            let scale = 10f64.powi(digits as i32);
            let r = (x * scale).round() / scale;
            if r == 0.0 {
                0.0
            } else {
                r
            }
        };
        let rows: Vec<Vec<f64>> = self
            .vectors
            .row_iter()
            .map(|r| r.iter().map(|&x| round(x)).collect())
            .collect();
        serde_json::json!({
            "n": self.n(),
            "tol": self.tol,
            "eigenvalues": self.lambdas.iter().map(|&l| round(l)).collect::<Vec<_>>(),
            "multiplicities": self.mults,
            "u": rows,
        })
    }
}

fn expand(lambdas: &[f64], mults: &[usize]) -> Vec<f64> {
    lambdas
        .iter()
        .zip(mults)
        .flat_map(|(&l, &m)| std::iter::repeat_n(l, m))
        .collect()
}

pub(crate) fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let gram = u.transpose() * u;
    let k = gram.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Decomposes a symmetric matrix and groups eigenvalues by gap chaining: a new
/// class starts whenever the gap to the previous (sorted) eigenvalue exceeds `tol`.
pub fn eigendecompose(m: &DMatrix<f64>, tol: f64) -> Result<EigDecomp> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(invalid(format!("expected a nonempty square matrix, got {}x{}", n, m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    for u in 0..n {
        for v in (u + 1)..n {
            if (m[(u, v)] - m[(v, u)]).abs() > 1e-12 * scale {
                return Err(invalid(format!("matrix is not symmetric at ({u}, {v})")));
            }
        }
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 100_000 * n.max(1))
        .ok_or_else(|| Error::NumericFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let mut lambdas = Vec::new();
    let mut mults = Vec::new();
    let mut start = 0;
    for j in 1..=n {
        if j == n || values[j] - values[j - 1] > tol {
            let class = &values[start..j];
            lambdas.push(class.iter().sum::<f64>() / class.len() as f64);
            mults.push(j - start);
            start = j;
        }
    }
    Ok(EigDecomp { vectors, values, lambdas, mults, tol })
}

pub fn is_simple_spectrum(d: &EigDecomp) -> bool {
    d.mults.iter().all(|&m| m == 1)
}

/// The first `k` columns of an eigendecomposition, or a raw column matrix.
///
/// `lambdas` is empty for raw matrices that do not come from a decomposition;
/// such slices are treated as simple (every column its own class).
#[derive(Debug, Clone, PartialEq)]
pub struct KSlice {
    vectors: DMatrix<f64>,
    lambdas: Vec<f64>,
    mults: Vec<usize>,
}

impl KSlice {
    /// Wraps an arbitrary `n x k` matrix as a simple slice with no eigenvalues.
    pub fn from_raw(vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() == 0 || vectors.ncols() == 0 {
            return Err(invalid("raw matrix must be nonempty"));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(invalid("raw matrix has non-finite entries"));
        }
        let k = vectors.ncols();
        Ok(Self { vectors, lambdas: Vec::new(), mults: vec![1; k] })
    }

    /// Builds a slice from explicit eigenvalue classes. Columns must be grouped
    /// consistently with `mults`.
    pub fn from_parts(vectors: DMatrix<f64>, lambdas: Vec<f64>, mults: Vec<usize>) -> Result<Self> {
        if lambdas.len() != mults.len() || mults.iter().sum::<usize>() != vectors.ncols() {
            return Err(invalid("eigenvalue classes do not match the column count"));
        }
        if mults.contains(&0) {
            return Err(invalid("multiplicities must be positive"));
        }
        Ok(Self { vectors, lambdas, mults })
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn k(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    pub fn is_simple(&self) -> bool {
        self.mults.iter().all(|&m| m == 1)
    }

    /// Column ranges of each eigenvalue class.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.mults
            .iter()
            .map(|&m| {
                let r = start..start + m;
                start += m;
                r
            })
            .collect()
    }

    /// Same eigen-structure, new vectors.
    pub fn with_vectors(&self, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.shape() != self.vectors.shape() {
            return Err(invalid("replacement vectors have the wrong shape"));
        }
        Ok(Self { vectors, lambdas: self.lambdas.clone(), mults: self.mults.clone() })
    }

    /// Relabels rows: old vertex `v` becomes row `perm[v]`.
    pub fn permuted_rows(&self, perm: &[usize]) -> Result<Self> {
        crate::graph::check_permutation(perm, self.n())?;
        let mut out = self.vectors.clone();
        for (v, &p) in perm.iter().enumerate() {
            out.set_row(p, &self.vectors.row(v));
        }
        self.with_vectors(out)
    }

    /// Negates every column `j` with `flips[j]`.
    pub fn flipped(&self, flips: &[bool]) -> Result<Self> {
        if flips.len() != self.k() {
            return Err(invalid("flip vector length differs from k"));
        }
        let mut out = self.vectors.clone();
        for (j, &f) in flips.iter().enumerate() {
            if f {
                out.column_mut(j).neg_mut();
            }
        }
        self.with_vectors(out)
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.vectors)
    }
}

/// The k-eigendecomposition. `k` must fall on a class boundary; a `k` that
/// splits an eigenspace has no well-defined ambiguity group.
pub fn slice_k(d: &EigDecomp, k: usize) -> Result<KSlice> {
    if k == 0 || k > d.n() {
        return Err(invalid(format!("k = {k} outside 1..={}", d.n())));
    }
    let mut taken = 0;
    let mut classes = 0;
    while taken < k {
        taken += d.mults[classes];
        classes += 1;
    }
    if taken != k {
        return Err(invalid(format!(
            "k = {k} splits the eigenspace of lambda = {} (multiplicity {})",
            d.lambdas[classes - 1],
            d.mults[classes - 1]
        )));
    }
    Ok(KSlice {
        vectors: d.vectors.columns(0, k).into_owned(),
        lambdas: d.lambdas[..classes].to_vec(),
        mults: d.mults[..classes].to_vec(),
    })
}

/// Checks that the numeric eigenvalues round to exactly the given integer
/// multiset.
pub fn check_integer_spectrum(d: &EigDecomp, exact: &[i128]) -> Result<()> {
    if exact.len() != d.n() {
        return Err(invalid(format!("expected {} exact eigenvalues, got {}", d.n(), exact.len())));
    }
    let mut want = exact.to_vec();
    want.sort_unstable();
    for (j, (&got, &w)) in d.values.iter().zip(&want).enumerate() {
        let rounded = got.round();
        if rounded != w as f64 || (got - rounded).abs() > 1e-6 * got.abs().max(1.0) {
            return Err(Error::PropertyViolation(format!(
                "eigenvalue #{j}: numeric {got} does not match exact {w}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub simple: bool,
}

impl From<&EigDecomp> for SpectrumSummary {
    fn from(d: &EigDecomp) -> Self {
        Self {
            eigenvalues: d.lambdas.clone(),
            multiplicities: d.mults.clone(),
            simple: d.is_simple_spectrum(),
        }
    }
}
