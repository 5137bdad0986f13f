//! Cai-Fürer-Immerman graphs, their orthogonal integral encoding and the
//! simple-spectrum multigraph pairs built from it.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::{BaseGraph, Multigraph, WeightedGraph};
use crate::spectral::{eigendecompose, KSlice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Twist {
    /// `U` empty.
    Even,
    /// `U = {0}`.
    Odd,
}

impl Twist {
    fn parity(self, v: usize) -> usize {
        match self {
            Twist::Odd if v == 0 => 1,
            _ => 0,
        }
    }
}

impl FromStr for Twist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" | "0" => Ok(Twist::Even),
            "odd" | "1" => Ok(Twist::Odd),
            other => Err(invalid(format!("unknown twist {other:?} (expected even or odd)"))),
        }
    }
}

impl fmt::Display for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Twist::Even => "even",
            Twist::Odd => "odd",
        })
    }
}

/// A fiber vertex `(v, S)`; `subset` holds indices into the base edge list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiberVertex {
    pub base: usize,
    pub subset: Vec<usize>,
}

impl FiberVertex {
    pub fn contains(&self, edge: usize) -> bool {
        self.subset.binary_search(&edge).is_ok()
    }

    pub fn label(&self, base: &BaseGraph) -> String {
        let edges: Vec<String> = self
            .subset
            .iter()
            .map(|&e| {
                let (a, b) = base.edges()[e];
                format!("{a}-{b}")
            })
            .collect();
        format!("({};{{{}}})", self.base, edges.join(";"))
    }
}

#[derive(Debug, Clone)]
pub struct CfiGraph {
    base: BaseGraph,
    twist: Twist,
    vertices: Vec<FiberVertex>,
    adjacency: Vec<Vec<bool>>,
}

impl CfiGraph {
    pub fn base(&self) -> &BaseGraph {
        &self.base
    }

    pub fn twist(&self) -> Twist {
        self.twist
    }

    pub fn vertices(&self) -> &[FiberVertex] {
        &self.vertices
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a][b]
    }

    /// Base vertex of every fiber vertex.
    pub fn fiber_colors(&self) -> Vec<usize> {
        self.vertices.iter().map(|v| v.base).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|&&b| b).count() / 2
    }

    pub fn to_weighted(&self) -> WeightedGraph {
        let n = self.n();
        let m = DMatrix::from_fn(n, n, |r, c| if self.adjacency[r][c] { 1.0 } else { 0.0 });
        WeightedGraph::new(m).expect("adjacency is symmetric by construction")
    }

    /// Number of connected components of the fiber graph.
    pub fn components(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for w in 0..n {
                    if self.adjacency[v][w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }
}

/// `G_U` with `U` empty (even) or `{0}` (odd). Fibers are base-vertex-major,
/// subsets in ascending bitmask order over the sorted incident edges.
pub fn build_cfi(base: &BaseGraph, twist: Twist) -> Result<CfiGraph> {
    if !base.is_connected() {
        return Err(invalid("CFI base graph must be connected"));
    }
    let mut vertices = Vec::new();
    for v in 0..base.n() {
        let incident = base.incident_edges(v);
        if incident.len() >= 32 {
            return Err(invalid(format!("vertex {v} has degree {} (too large)", incident.len())));
        }
        for mask in 0u32..(1 << incident.len()) {
            if mask.count_ones() as usize % 2 == twist.parity(v) {
                let subset = incident.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
                vertices.push(FiberVertex { base: v, subset });
            }
        }
    }
    let n = vertices.len();
    let mut adjacency = vec![vec![false; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let (x, y) = (&vertices[a], &vertices[b]);
            if x.base == y.base {
                continue;
            }
            let (lo, hi) = (x.base.min(y.base), x.base.max(y.base));
            if let Ok(e) = base.edges().binary_search(&(lo, hi)) {
                if x.contains(e) == y.contains(e) {
                    adjacency[a][b] = true;
                    adjacency[b][a] = true;
                }
            }
        }
    }
    Ok(CfiGraph { base: base.clone(), twist, vertices, adjacency })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "block", content = "index", rename_all = "lowercase")]
pub enum EncodingColumn {
    /// Edge column of `X`.
    X(usize),
    /// Edge column of `X'`.
    XPrime(usize),
    /// Base-vertex column of `I`.
    I(usize),
}

/// The integer matrix `[X | X' | I]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfiEncoding {
    rows: Vec<Vec<i64>>,
    row_labels: Vec<String>,
    columns: Vec<EncodingColumn>,
    base: BaseGraph,
}

/// Entry `W(v, u)` of the vertex basis: all-ones first column, then column
/// `u` has `1` above the diagonal, `-u` on it and `0` below.
pub fn vertex_basis_entry(v: usize, u: usize) -> i64 {
    if u == 0 || v < u {
        1
    } else if v == u {
        -(u as i64)
    } else {
        0
    }
}

pub fn integral_encoding(cfi: &CfiGraph) -> CfiEncoding {
    let base = cfi.base();
    let m = base.edges().len();
    let nb = base.n();
    let mut columns: Vec<EncodingColumn> = (0..m).map(EncodingColumn::X).collect();
    columns.extend((0..m).map(EncodingColumn::XPrime));
    columns.extend((0..nb).map(EncodingColumn::I));

    let rows = cfi
        .vertices()
        .iter()
        .map(|fv| {
            let incident = base.incident_edges(fv.base);
            let x: Vec<i64> = (0..m)
                .map(|e| match (incident.contains(&e), fv.contains(e)) {
                    (false, _) => 0,
                    (true, true) => 1,
                    (true, false) => -1,
                })
                .collect();
            let xp = x.iter().enumerate().map(|(e, &val)| if base.edges()[e].1 == fv.base { -val } else { val });
            let i = (0..nb).map(|u| vertex_basis_entry(fv.base, u));
            x.iter().copied().chain(xp).chain(i).collect()
        })
        .collect();
    CfiEncoding {
        rows,
        row_labels: cfi.vertices().iter().map(|v| v.label(base)).collect(),
        columns,
        base: base.clone(),
    }
}

impl CfiEncoding {
    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn columns(&self) -> &[EncodingColumn] {
        &self.columns
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> i64 {
        self.rows[r][c]
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        self.rows.iter().map(|r| r[c]).collect()
    }

    /// Index of the all-ones column (`I` block, base vertex 0).
    pub fn ones_column(&self) -> usize {
        2 * self.base.edges().len()
    }

    /// Exact `X^T X`.
    pub fn gram(&self) -> Vec<Vec<i128>> {
        let c = self.ncols();
        let mut g = vec![vec![0i128; c]; c];
        for row in &self.rows {
            for a in 0..c {
                if row[a] == 0 {
                    continue;
                }
                for b in 0..c {
                    g[a][b] += row[a] as i128 * row[b] as i128;
                }
            }
        }
        g
    }

    /// Squared column norms.
    pub fn norms(&self) -> Vec<i128> {
        (0..self.ncols()).map(|c| self.rows.iter().map(|r| (r[c] as i128).pow(2)).sum()).collect()
    }

    /// Whether every pair of distinct columns has zero inner product, exactly.
    pub fn is_orthogonal(&self) -> bool {
        let g = self.gram();
        (0..g.len()).all(|a| (0..g.len()).all(|b| a == b || g[a][b] == 0))
    }

    pub fn column_name(&self, c: usize) -> String {
        let edge = |e: usize| {
            let (a, b) = self.base.edges()[e];
            format!("{a}-{b}")
        };
        match self.columns[c] {
            EncodingColumn::X(e) => format!("X[{}]", edge(e)),
            EncodingColumn::XPrime(e) => format!("Xp[{}]", edge(e)),
            EncodingColumn::I(v) => format!("I[{v}]"),
        }
    }

    /// Header `vertex,<column names>` then one labelled row per fiber vertex.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex");
        for c in 0..self.ncols() {
            out.push(',');
            out.push_str(&self.column_name(c));
        }
        out.push('\n');
        for (label, row) in self.row_labels.iter().zip(&self.rows) {
            out.push_str(label);
            for x in row {
                out.push(',');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// `A0 = X0 D X0^T` and `A1 = X1 D X1^T` for one shared diagonal `D`.
#[derive(Debug, Clone)]
pub struct CfiMultigraphPair {
    pub base: BaseGraph,
    pub encodings: [CfiEncoding; 2],
    pub graphs: [Multigraph; 2],
    /// Diagonal of `D`, one entry per encoding column.
    pub d: Vec<u64>,
    /// Squared column norms (identical on both sides).
    pub norms: Vec<u64>,
    /// Exact eigenvalue `D_i * N_i` of column `i`.
    pub eigenvalues: Vec<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSidecar {
    pub base_n: usize,
    pub base_edges: Vec<(usize, usize)>,
    pub columns: Vec<String>,
    pub d: Vec<u64>,
    pub norms: Vec<u64>,
    pub eigenvalues: Vec<u128>,
}

fn exact_product(enc: &CfiEncoding, d: &[u64]) -> Result<Multigraph> {
    let n = enc.nrows();
    let dd: Vec<BigInt> = d.iter().map(|&x| BigInt::from(x)).collect();
    let mut entries = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = BigInt::zero();
            for (c, di) in dd.iter().enumerate() {
                let (x, y) = (enc.entry(a, c), enc.entry(b, c));
                if x != 0 && y != 0 {
                    acc += di * BigInt::from(x * y);
                }
            }
            let value = acc.to_u64().ok_or_else(|| {
                Error::Internal(format!("multigraph entry ({a}, {b}) = {acc} is negative or exceeds 64 bits"))
            })?;
            entries.push(value);
        }
    }
    Multigraph::new(n, entries)
}

/// Picks `D`: other columns take increasing integers whose eigenvalue products
/// stay distinct; the all-ones column gets a weight large enough to make every
/// entry positive.
fn choose_d(enc: &CfiEncoding) -> Result<Vec<u64>> {
    let norms = enc.norms();
    let ones = enc.ones_column();
    let c = enc.ncols();
    let mut d = vec![0u64; c];
    let mut used: Vec<u128> = Vec::with_capacity(c);
    let mut next = 1u64;
    for i in (0..c).filter(|&i| i != ones) {
        loop {
            let ev = next as u128 * norms[i] as u128;
            if !used.contains(&ev) {
                used.push(ev);
                d[i] = next;
                next += 1;
                break;
            }
            next += 1;
        }
    }
    let mut d1: u128 = 1;
    for i in (0..c).filter(|&i| i != ones) {
        let max = enc.rows().iter().map(|r| r[i].unsigned_abs() as u128).max().unwrap_or(0);
        d1 += d[i] as u128 * max * max;
    }
    while used.contains(&(d1 * norms[ones] as u128)) {
        d1 += 1;
    }
    d[ones] = u64::try_from(d1).map_err(|_| Error::Internal("all-ones weight exceeds 64 bits".into()))?;
    Ok(d)
}

/// The non-isomorphic, simple-spectrum pair `A_{G,0}`, `A_{G,1}`.
pub fn build_multigraph_pair(base: &BaseGraph) -> Result<CfiMultigraphPair> {
    if base.regular_degree() != Some(3) {
        return Err(invalid("multigraph pairs need a 3-regular base graph"));
    }
    if base.n() < 4 {
        return Err(invalid("multigraph pairs need at least 4 base vertices"));
    }
    let enc0 = integral_encoding(&build_cfi(base, Twist::Even)?);
    let enc1 = integral_encoding(&build_cfi(base, Twist::Odd)?);
    if !enc0.is_orthogonal() || !enc1.is_orthogonal() {
        return Err(Error::Internal("integral encoding columns are not orthogonal".into()));
    }
    let norms = enc0.norms();
    if norms != enc1.norms() {
        return Err(Error::Internal("the two encodings have different column norms".into()));
    }
    let d = choose_d(&enc0)?;
    let eigenvalues: Vec<u128> = d.iter().zip(&norms).map(|(&di, &ni)| di as u128 * ni as u128).collect();
    let mut sorted = eigenvalues.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Internal("eigenvalue products collide".into()));
    }
    let graphs = [exact_product(&enc0, &d)?, exact_product(&enc1, &d)?];
    Ok(CfiMultigraphPair {
        base: base.clone(),
        encodings: [enc0, enc1],
        graphs,
        d,
        norms: norms.iter().map(|&x| x as u64).collect(),
        eigenvalues,
    })
}

impl CfiMultigraphPair {
    pub fn side(&self, twist: Twist) -> usize {
        match twist {
            Twist::Even => 0,
            Twist::Odd => 1,
        }
    }

    pub fn weighted(&self, side: usize) -> Result<WeightedGraph> {
        self.graphs[side].to_weighted()
    }

    /// Checks `A x_i = (D_i N_i) x_i` for every column, in exact arithmetic.
    pub fn verify_exact(&self, side: usize) -> Result<()> {
        let enc = &self.encodings[side];
        let a = &self.graphs[side];
        let n = enc.nrows();
        for (c, ev) in self.eigenvalues.iter().enumerate() {
            let x = enc.column(c);
            for r in 0..n {
                let lhs: BigInt = (0..n).map(|j| BigInt::from(a.entry(r, j)) * BigInt::from(x[j])).sum();
                let rhs = BigInt::from(*ev) * BigInt::from(x[r]);
                if lhs != rhs {
                    return Err(Error::PropertyViolation(format!(
                        "column {c} is not an exact eigenvector at row {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The exact eigenbasis, normalized, in ascending eigenvalue order.
    pub fn exact_slice(&self, side: usize) -> Result<KSlice> {
        let enc = &self.encodings[side];
        let mut cols: Vec<usize> = (0..enc.ncols()).collect();
        cols.sort_by_key(|&c| self.eigenvalues[c]);
        let n = enc.nrows();
        let u = DMatrix::from_fn(n, cols.len(), |r, j| {
            let c = cols[j];
            enc.entry(r, c) as f64 / (self.norms[c] as f64).sqrt()
        });
        let lambdas = cols.iter().map(|&c| self.eigenvalues[c] as f64).collect();
        KSlice::from_parts(u, lambdas, vec![1; cols.len()])
    }

    pub fn sidecar(&self) -> PairSidecar {
        PairSidecar {
            base_n: self.base.n(),
            base_edges: self.base.edges().to_vec(),
            columns: (0..self.encodings[0].ncols()).map(|c| self.encodings[0].column_name(c)).collect(),
            d: self.d.clone(),
            norms: self.norms.clone(),
            eigenvalues: self.eigenvalues.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CfiSpectrumReport {
    pub base_n: usize,
    pub cfi_n: usize,
    pub base_spectrum: Vec<f64>,
    pub expected: Vec<f64>,
    pub observed: Vec<f64>,
    pub max_deviation: f64,
    pub matches: bool,
    pub simple_spectrum: bool,
}

/// Compares the even CFI adjacency spectrum with `{2 lambda_i} + {+2}^(3n) + {-2}^(3n)`.
pub fn verify_cfi_spectrum(base: &BaseGraph) -> Result<CfiSpectrumReport> {
    const TOL: f64 = 1e-6;
    if base.regular_degree() != Some(3) {
        return Err(invalid("the CFI spectrum identity needs a 3-regular base graph"));
    }
    let half = base.n() / 2;
    let base_spec = eigendecompose(&base.to_weighted().weights().clone(), TOL)?;
    let cfi = build_cfi(base, Twist::Even)?;
    let spec = eigendecompose(cfi.to_weighted().weights(), TOL)?;

    let mut expected: Vec<f64> = base_spec.values().iter().map(|l| 2.0 * l).collect();
    expected.extend(std::iter::repeat_n(2.0, 3 * half));
    expected.extend(std::iter::repeat_n(-2.0, 3 * half));
    expected.sort_by(f64::total_cmp);
    let observed = spec.values().to_vec();
    let max_deviation = if expected.len() == observed.len() {
        expected.iter().zip(&observed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let report = CfiSpectrumReport {
        base_n: base.n(),
        cfi_n: cfi.n(),
        base_spectrum: base_spec.values().to_vec(),
        expected,
        observed,
        max_deviation,
        matches: max_deviation <= TOL,
        simple_spectrum: spec.is_simple_spectrum(),
    };
    if !report.matches {
        return Err(Error::PropertyViolation(format!(
            "CFI spectrum deviates from the closed form by {max_deviation}"
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_cycle, make_named, NamedGraph};

    #[test]
    fn c3_lifts() {
        let c3 = make_cycle(3).unwrap();
        let even = build_cfi(&c3, Twist::Even).unwrap();
        assert_eq!((even.n(), even.edge_count(), even.components()), (6, 6, 2));
        let odd = build_cfi(&c3, Twist::Odd).unwrap();
        assert_eq!((odd.n(), odd.edge_count(), odd.components()), (6, 6, 1));
        assert_eq!(odd.vertices()[0].subset, vec![0]);
        assert_eq!(odd.vertices()[1].subset, vec![1]);
    }

    #[test]
    fn k4_fibers() {
        let k4 = make_named(NamedGraph::K4);
        for twist in [Twist::Even, Twist::Odd] {
            let cfi = build_cfi(&k4, twist).unwrap();
            assert_eq!(cfi.n(), 16);
            for v in 0..4 {
                assert_eq!(cfi.fiber_colors().iter().filter(|&&c| c == v).count(), 4);
            }
        }
    }

    #[test]
    fn disconnected_base_is_rejected() {
        let g = BaseGraph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(build_cfi(&g, Twist::Even).is_err());
    }

    #[test]
    fn vertex_basis_columns_are_orthogonal() {
        for n in 1..8 {
            for a in 0..n {
                for b in 0..a {
                    let dot: i64 = (0..n).map(|v| vertex_basis_entry(v, a) * vertex_basis_entry(v, b)).sum();
                    assert_eq!(dot, 0);
                }
            }
        }
    }

    #[test]
    fn cube_norms() {
        let enc = integral_encoding(&build_cfi(&make_named(NamedGraph::Cube), Twist::Even).unwrap());
        assert_eq!((enc.nrows(), enc.ncols()), (32, 32));
        let norms = enc.norms();
        assert!(norms[..24].iter().all(|&x| x == 8));
        assert_eq!(norms[24], 32);
        for u in 1..8 {
            assert_eq!(norms[24 + u], 4 * (u + u * u) as i128);
        }
        assert!(enc.is_orthogonal());
    }

    #[test]
    fn k4_pair_is_exact_and_positive() {
        let pair = build_multigraph_pair(&make_named(NamedGraph::K4)).unwrap();
        for side in 0..2 {
            pair.verify_exact(side).unwrap();
            assert!(pair.graphs[side].entries().iter().all(|&x| x > 0));
        }
        assert!(build_multigraph_pair(&make_cycle(4).unwrap()).is_err());
    }
}
