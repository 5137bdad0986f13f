//! Weighted graphs, multigraphs, base graphs and their deterministic generators.
//!
//! Storage is dense throughout. Every graph handled here has at most a few
//! hundred vertices.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Largest integer that survives a round trip through `f64` unchanged.
pub const MAX_EXACT_F64_INT: u64 = 1 << 53;

/// A weighted graph `(V, E, A)`: `A` is symmetric, off-diagonal entries are
/// edge weights (zero for non-edges) and diagonal entries are node features.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
}

impl WeightedGraph {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 {
            return Err(invalid("a graph needs at least one vertex"));
        }
        if weights.ncols() != n {
            return Err(invalid(format!(
                "weight matrix must be square, got {}x{}",
                n,
                weights.ncols()
            )));
        }
        for u in 0..n {
            for v in (u + 1)..n {
                let (a, b) = (weights[(u, v)], weights[(v, u)]);
                if a.to_bits() != b.to_bits() {
                    return Err(invalid(format!(
                        "weight matrix is not symmetric at ({u}, {v}): {a} vs {b}"
                    )));
                }
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        Ok(Self { weights })
    }

    /// Builds a graph from an undirected edge list. Repeated edges accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], node_weights: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(invalid("a graph needs at least one vertex"));
        }
        if !node_weights.is_empty() && node_weights.len() != n {
            return Err(invalid(format!(
                "expected {n} node weights, got {}",
                node_weights.len()
            )));
        }
        let mut weights = DMatrix::zeros(n, n);
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(invalid(format!(
                    "self loop at {u}; use node_weights for diagonal features"
                )));
            }
            weights[(u, v)] += w;
            weights[(v, u)] = weights[(u, v)];
        }
        for (v, &w) in node_weights.iter().enumerate() {
            weights[(v, v)] = w;
        }
        Self::new(weights)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[(u, v)]
    }

    /// Nonzero off-diagonal entries as `(u, v, w)` with `u < v`, row-major.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let w = self.weights[(u, v)];
                if w != 0.0 {
                    out.push((u, v, w));
                }
            }
        }
        out
    }

    pub fn node_weights(&self) -> Vec<f64> {
        (0..self.n()).map(|v| self.weights[(v, v)]).collect()
    }

    /// True when every weight is a non-negative integer.
    pub fn is_multigraph(&self) -> bool {
        self.weights
            .iter()
            .all(|&w| w >= 0.0 && w.fract() == 0.0 && w <= MAX_EXACT_F64_INT as f64)
    }

    /// Relabels vertices: old vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n())?;
        let n = self.n();
        let mut w = DMatrix::zeros(n, n);
        for u in 0..n {
            for v in 0..n {
                w[(perm[u], perm[v])] = self.weights[(u, v)];
            }
        }
        Ok(Self { weights: w })
    }

    pub fn matrix_view(&self, which: MatrixView) -> Result<DMatrix<f64>> {
        let n = self.n();
        let a = &self.weights;
        let degree: Vec<f64> = (0..n)
            .map(|u| (0..n).filter(|&v| v != u).map(|v| a[(u, v)]).sum())
            .collect();
        match which {
            MatrixView::Adjacency => Ok(a.clone()),
            MatrixView::Laplacian => Ok(DMatrix::from_fn(n, n, |u, v| {
                if u == v {
                    degree[u] - a[(u, v)]
                } else {
                    -a[(u, v)]
                }
            })),
            MatrixView::NormalizedLaplacian => {
                if let Some(v) = degree.iter().position(|&d| d <= 0.0) {
                    return Err(Error::DegenerateInput(format!(
                        "vertex {v} is isolated; the normalized Laplacian is undefined"
                    )));
                }
                let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
                Ok(DMatrix::from_fn(n, n, |u, v| {
                    let scaled = a[(u, v)] * inv_sqrt[u] * inv_sqrt[v];
                    if u == v {
                        1.0 - scaled
                    } else {
                        -scaled
                    }
                }))
            }
        }
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n(),
            edges: self
                .edges()
                .into_iter()
                .map(|(u, v, w)| (u, v, JsonWeight(w)))
                .collect(),
            node_weights: self.node_weights().into_iter().map(JsonWeight).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let edges: Vec<_> = json.edges.iter().map(|&(u, v, w)| (u, v, w.0)).collect();
        let nodes: Vec<f64> = json.node_weights.iter().map(|w| w.0).collect();
        for &(u, v, _) in &edges {
            if u >= v {
                return Err(Error::Parse(format!("edge [{u}, {v}] must satisfy u < v")));
            }
        }
        Self::from_edges(json.n, &edges, &nodes)
    }

    /// Parses either the JSON graph format or a whitespace edge list
    /// (`u v w` per line, `#` comments allowed).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let json: GraphJson =
                serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            return Self::from_json(&json);
        }
        let mut edges = Vec::new();
        let mut n = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 && fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected `u v [w]`, got {line:?}",
                    lineno + 1
                )));
            }
            let parse_vertex = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let u = parse_vertex(fields[0])?;
            let v = parse_vertex(fields[1])?;
            let w = match fields.get(2) {
                Some(s) => s
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
                None => 1.0,
            };
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v, w));
        }
        if n == 0 {
            return Err(Error::Parse("edge list is empty".into()));
        }
        Self::from_edges(n, &edges, &[])
    }
}

/// Which symmetric matrix of a graph to decompose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixView {
    Adjacency,
    Laplacian,
    NormalizedLaplacian,
}

impl FromStr for MatrixView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adj" | "adjacency" => Ok(Self::Adjacency),
            "lap" | "laplacian" => Ok(Self::Laplacian),
            "nlap" | "normalized_laplacian" => Ok(Self::NormalizedLaplacian),
            other => Err(invalid(format!("unknown matrix view {other:?}"))),
        }
    }
}

/// A real number that serializes as a JSON integer when it is one.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct JsonWeight(pub f64);

impl Serialize for JsonWeight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let w = self.0;
        if w.fract() == 0.0 && w.abs() <= MAX_EXACT_F64_INT as f64 {
            s.serialize_i64(w as i64)
        } else {
            s.serialize_f64(w)
        }
    }
}

/// On-disk graph format: `{"n": .., "edges": [[u, v, w], ..], "node_weights": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, JsonWeight)>,
    #[serde(default)]
    pub node_weights: Vec<JsonWeight>,
}

/// A weighted graph whose entries are all non-negative integers, stored exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    n: usize,
    entries: Vec<u64>,
}

impl Multigraph {
    /// Row-major `n * n` entries; must be symmetric.
    pub fn new(n: usize, entries: Vec<u64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(invalid(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        for u in 0..n {
            for v in (u + 1)..n {
                if entries[u * n + v] != entries[v * n + u] {
                    return Err(invalid(format!("multigraph not symmetric at ({u}, {v})")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, u: usize, v: usize) -> u64 {
        self.entries[u * self.n + v]
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    /// The same graph as a [`WeightedGraph`]. Fails if an entry is too large
    /// to be represented exactly in `f64`.
    pub fn to_weighted(&self) -> Result<WeightedGraph> {
        if let Some(&big) = self.entries.iter().find(|&&e| e > MAX_EXACT_F64_INT) {
            return Err(Error::NumericFailure(format!(
                "multigraph entry {big} exceeds the exact f64 range"
            )));
        }
        WeightedGraph::new(DMatrix::from_fn(self.n, self.n, |u, v| self.entry(u, v) as f64))
    }

    pub fn from_weighted(g: &WeightedGraph) -> Result<Self> {
        if !g.is_multigraph() {
            return Err(invalid("graph has negative or non-integer weights"));
        }
        let n = g.n();
        let entries = (0..n * n).map(|i| g.weight(i / n, i % n) as u64).collect();
        Self::new(n, entries)
    }
}

/// A simple undirected graph with a frozen vertex order. Edges are stored once
/// as `(u, v)` with `u < v`, sorted lexicographically; that order fixes edge
/// orientation and column order of the CFI encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

impl BaseGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("a base graph needs at least one vertex"));
        }
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(invalid(format!("self loop at {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate edge {:?}", w[0])));
        }
        let mut degrees = vec![0; n];
        for &(u, v) in &norm {
            degrees[u] += 1;
            degrees[v] += 1;
        }
        Ok(Self { n, edges: norm, degrees })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Indices into [`Self::edges`] of the edges incident to `v`, ascending.
    pub fn incident_edges(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == v || b == v)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// `Some(d)` if every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degrees[0];
        self.degrees.iter().all(|&x| x == d).then_some(d)
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Shortest cycle length, `None` for forests.
    pub fn girth(&self) -> Option<usize> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut best: Option<usize> = None;
        for root in 0..self.n {
            let mut dist = vec![usize::MAX; self.n];
            let mut parent = vec![usize::MAX; self.n];
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        let len = dist[u] + dist[w] + 1;
                        best = Some(best.map_or(len, |b| b.min(len)));
                    }
                }
            }
        }
        best
    }

    pub fn is_bipartite(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut side = vec![u8::MAX; self.n];
        for start in 0..self.n {
            if side[start] != u8::MAX {
                continue;
            }
            side[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if side[w] == u8::MAX {
                        side[w] = 1 - side[u];
                        queue.push_back(w);
                    } else if side[w] == side[u] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Unit-weight adjacency as a weighted graph.
    pub fn to_weighted(&self) -> WeightedGraph {
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        WeightedGraph::from_edges(self.n, &edges, &[]).expect("base graph edges are valid")
    }

    pub fn from_weighted(g: &WeightedGraph) -> Result<Self> {
        let mut edges = Vec::new();
        for (u, v, w) in g.edges() {
            if w != 1.0 {
                return Err(invalid(format!(
                    "base graphs are simple; edge ({u}, {v}) has weight {w}"
                )));
            }
            edges.push((u, v));
        }
        if g.node_weights().iter().any(|&w| w != 0.0) {
            return Err(invalid("base graphs carry no node features"));
        }
        Self::new(g.n(), edges)
    }
}

/// Cycle `C_n` on `0..n` with edges `(i, i + 1)` and `(0, n - 1)`.
pub fn make_cycle(n: usize) -> Result<BaseGraph> {
    if n < 3 {
        return Err(invalid(format!("a cycle needs at least 3 vertices, got {n}")));
    }
    BaseGraph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Fixed 3-regular base graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGraph {
    K4,
    Petersen,
    Cube,
}

impl FromStr for NamedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k4" => Ok(Self::K4),
            "petersen" => Ok(Self::Petersen),
            "cube" | "q3" => Ok(Self::Cube),
            other => Err(invalid(format!("unknown named graph {other:?}"))),
        }
    }
}

impl fmt::Display for NamedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::K4 => "k4",
            Self::Petersen => "petersen",
            Self::Cube => "cube",
        })
    }
}

pub fn make_named(name: NamedGraph) -> BaseGraph {
    let edges: Vec<(usize, usize)> = match name {
        NamedGraph::K4 => vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        NamedGraph::Petersen => (0..5)
            .flat_map(|i| [(i, (i + 1) % 5), (i, i + 5), (5 + i, 5 + (i + 2) % 5)])
            .collect(),
        NamedGraph::Cube => (0..8usize)
            .flat_map(|u| (0..3).map(move |b| (u, u ^ (1 << b))))
            .filter(|&(u, v)| u < v)
            .collect(),
    };
    let n = match name {
        NamedGraph::K4 => 4,
        NamedGraph::Petersen => 10,
        NamedGraph::Cube => 8,
    };
    BaseGraph::new(n, edges).expect("named graphs are well formed")
}

/// Random base graph models. Outputs are pure functions of the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomModel {
    /// `G(n, p)`; each pair `u < v` in lexicographic order is an edge with probability `p`.
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    /// Connected simple 3-regular graph from the pairing model with rejection.
    RandomCubic { n: usize, seed: u64 },
}

const CUBIC_ATTEMPTS: usize = 100_000;

pub fn make_random(model: RandomModel) -> Result<BaseGraph> {
    match model {
        RandomModel::ErdosRenyi { n, p, seed } => {
            if n == 0 || !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("infeasible G(n, p) parameters n = {n}, p = {p}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            BaseGraph::new(n, edges)
        }
        RandomModel::RandomCubic { n, seed } => {
            if n < 4 || n % 2 == 1 {
                return Err(invalid(format!(
                    "a cubic graph needs an even vertex count >= 4, got {n}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
            'attempt: for _ in 0..CUBIC_ATTEMPTS {
                points.shuffle(&mut rng);
                let mut edges = Vec::with_capacity(3 * n / 2);
                for pair in points.chunks(2) {
                    let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                    if u == v || edges.contains(&(u, v)) {
                        continue 'attempt;
                    }
                    edges.push((u, v));
                }
                let g = BaseGraph::new(n, edges)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            Err(Error::Internal(format!(
                "no simple connected cubic graph after {CUBIC_ATTEMPTS} pairings"
            )))
        }
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(invalid(format!("permutation has length {}, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(invalid("not a permutation"));
        }
    }
    Ok(())
}

/// Uniform random permutation of `0..n` from a seeded generator.
pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}
