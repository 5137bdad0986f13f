//! Isomorphism decisions from certificates, and the harnesses that measure
//! canonicalization on random graph corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::{make_random, random_permutation, MatrixView, RandomModel, WeightedGraph};
use crate::prism::{self, canonicalize_hybrid, certificates_equal, CanonCertificate};
use crate::spectral::{eigendecompose, EigDecomp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsoVerdict {
    Isomorphic,
    NonIsomorphic,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoReport {
    pub verdict: IsoVerdict,
    pub reason: String,
    /// Whether the sorted spectra agree within tolerance (`None` when sizes differ).
    pub spectra_equal: Option<bool>,
    /// For non-simple spectra: whether the heuristic certificates agree. Never a verdict.
    pub hybrid_hint: Option<bool>,
    pub automorphism_kernel_dim: Option<usize>,
}

fn spectra_close(a: &EigDecomp, b: &EigDecomp, tol: f64) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= tol)
}

/// Decides isomorphism of two simple-spectrum graphs.
pub fn iso_test(g1: &WeightedGraph, g2: &WeightedGraph, view: MatrixView, tol: f64, p: u32) -> Result<IsoReport> {
    if g1.n() != g2.n() {
        return Ok(IsoReport {
            verdict: IsoVerdict::NonIsomorphic,
            reason: format!("vertex counts differ ({} vs {})", g1.n(), g2.n()),
            spectra_equal: None,
            hybrid_hint: None,
            automorphism_kernel_dim: None,
        });
    }
    let d1 = eigendecompose(&g1.matrix_view(view)?, tol)?;
    let d2 = eigendecompose(&g2.matrix_view(view)?, tol)?;
    let spectra_equal = spectra_close(&d1, &d2, tol);
    if !d1.is_simple_spectrum() || !d2.is_simple_spectrum() {
        let hint = if spectra_equal && d1.mults() == d2.mults() {
            let c1 = canonicalize_hybrid(&d1.full_slice(), p)?;
            let c2 = canonicalize_hybrid(&d2.full_slice(), p)?;
            Some(certificates_equal(&c1, &c2)?)
        } else {
            None
        };
        return Ok(IsoReport {
            verdict: IsoVerdict::Inconclusive,
            reason: "spectrum is not simple".into(),
            spectra_equal: Some(spectra_equal),
            hybrid_hint: hint,
            automorphism_kernel_dim: None,
        });
    }
    if !spectra_equal {
        return Ok(IsoReport {
            verdict: IsoVerdict::NonIsomorphic,
            reason: "spectra differ".into(),
            spectra_equal: Some(false),
            hybrid_hint: None,
            automorphism_kernel_dim: None,
        });
    }
    let c1 = prism::canonicalize(&d1.full_slice(), p)?;
    let c2 = prism::canonicalize(&d2.full_slice(), p)?;
    let equal = certificates_equal(&c1, &c2)?;
    Ok(IsoReport {
        verdict: if equal { IsoVerdict::Isomorphic } else { IsoVerdict::NonIsomorphic },
        reason: if equal { "certificates are equal".into() } else { "certificates differ".into() },
        spectra_equal: Some(true),
        hybrid_hint: None,
        automorphism_kernel_dim: Some(c1.automorphism_kernel.nrows()),
    })
}

/// Largest entrywise deviation of the best row matching between two
/// canonical matrices, matched greedily in order.
pub fn row_multiset_deviation(a: &CanonCertificate, b: &CanonCertificate) -> f64 {
    if a.rows.len() != b.rows.len() || a.k != b.k {
        return f64::INFINITY;
    }
    let ma = a.matrix();
    let mb = b.matrix();
    let dist = |i: usize, j: usize| (ma.row(i) - mb.row(j)).abs().max();
    let mut used = vec![false; b.rows.len()];
    let mut worst: f64 = 0.0;
    for i in 0..a.rows.len() {
        let best = (0..b.rows.len())
            .filter(|&j| !used[j])
            .map(|j| (dist(i, j), j))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        match best {
            Some((d, j)) => {
                used[j] = true;
                worst = worst.max(d);
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivarianceConfig {
    pub graphs: usize,
    pub trials: usize,
    pub atol: f64,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub edge_probability: f64,
    pub tol: f64,
    pub precision: u32,
    pub view: MatrixView,
    /// Accept repeated eigenvalues and use the hybrid canonicalization.
    pub hybrid: bool,
}

impl EquivarianceConfig {
    pub fn new(graphs: usize, trials: usize, atol: f64, seed: u64) -> Self {
        Self {
            graphs,
            trials,
            atol,
            seed,
            n_min: 16,
            n_max: 32,
            edge_probability: 0.3,
            tol: crate::spectral::DEFAULT_TOL,
            precision: prism::DEFAULT_PRECISION,
            view: MatrixView::Laplacian,
            hybrid: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivarianceFailure {
    pub graph_seed: u64,
    pub permutation_seed: u64,
    pub n: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivarianceReport {
    pub graphs: usize,
    pub trials_per_graph: usize,
    pub trials: usize,
    pub failures: usize,
    pub resampled: usize,
    pub heuristic_graphs: usize,
    pub max_deviation: f64,
    pub details: Vec<EquivarianceFailure>,
}

struct GraphOutcome {
    resampled: usize,
    heuristic: bool,
    max_deviation: f64,
    failures: Vec<EquivarianceFailure>,
}

fn canonical(g: &WeightedGraph, cfg: &EquivarianceConfig) -> Result<(EigDecomp, CanonCertificate)> {
    let d = eigendecompose(&g.matrix_view(cfg.view)?, cfg.tol)?;
    let slice = d.full_slice();
    let cert = if cfg.hybrid { canonicalize_hybrid(&slice, cfg.precision)? } else { prism::canonicalize(&slice, cfg.precision)? };
    Ok((d, cert))
}

fn one_graph(cfg: &EquivarianceConfig, graph_seed: u64) -> Result<GraphOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(graph_seed);
    let mut resampled = 0;
    let (g, reference, graph_sub_seed) = loop {
        let n = rng.random_range(cfg.n_min..=cfg.n_max);
        let sub_seed: u64 = rng.random();
        let g = make_random(RandomModel::ErdosRenyi { n, p: cfg.edge_probability, seed: sub_seed })?.to_weighted();
        let d = eigendecompose(&g.matrix_view(cfg.view)?, cfg.tol)?;
        if cfg.hybrid || d.is_simple_spectrum() {
            let (_, cert) = canonical(&g, cfg)?;
            break (g, cert, sub_seed);
        }
        resampled += 1;
        if resampled > 10_000 {
            return Err(Error::DegenerateInput("could not sample a simple-spectrum graph".into()));
        }
    };
    let mut failures = Vec::new();
    let mut max_deviation: f64 = 0.0;
    let mut heuristic = reference.heuristic;
    for _ in 0..cfg.trials {
        let permutation_seed: u64 = rng.random();
        let perm = random_permutation(g.n(), &mut ChaCha8Rng::seed_from_u64(permutation_seed));
        let (_, cert) = canonical(&g.permuted(&perm)?, cfg)?;
        heuristic |= cert.heuristic;
        let dev = row_multiset_deviation(&reference, &cert);
        max_deviation = max_deviation.max(dev);
        if dev > cfg.atol {
            failures.push(EquivarianceFailure {
                graph_seed: graph_sub_seed,
                permutation_seed,
                n: g.n(),
                max_deviation: dev,
            });
        }
    }
    Ok(GraphOutcome { resampled, heuristic, max_deviation, failures })
}

/// Relabels, re-decomposes and re-canonicalizes random graphs, counting
/// trials whose canonical rows move by more than `atol`.
pub fn run_equivariance(cfg: &EquivarianceConfig) -> Result<EquivarianceReport> {
    if cfg.n_min == 0 || cfg.n_min > cfg.n_max || !(cfg.atol > 0.0) {
        return Err(invalid("equivariance corpus parameters are inconsistent"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.graphs).map(|_| rng.random()).collect();
    let outcomes: Vec<GraphOutcome> = seeds.par_iter().map(|&s| one_graph(cfg, s)).collect::<Result<_>>()?;
    let mut report = EquivarianceReport {
        graphs: cfg.graphs,
        trials_per_graph: cfg.trials,
        trials: cfg.graphs * cfg.trials,
        failures: 0,
        resampled: 0,
        heuristic_graphs: 0,
        max_deviation: 0.0,
        details: Vec::new(),
    };
    for o in outcomes {
        report.resampled += o.resampled;
        report.heuristic_graphs += o.heuristic as usize;
        report.max_deviation = report.max_deviation.max(o.max_deviation);
        report.failures += o.failures.len();
        report.details.extend(o.failures);
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct RBoundConfig {
    pub count: usize,
    pub n: usize,
    pub edge_probability: f64,
    pub seed: u64,
    pub tol: f64,
    pub precision: u32,
    pub view: MatrixView,
}

impl RBoundConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            n: 24,
            edge_probability: 0.3,
            seed,
            tol: crate::spectral::DEFAULT_TOL,
            precision: prism::DEFAULT_PRECISION,
            view: MatrixView::Laplacian,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RBoundEntry {
    pub graph_seed: u64,
    pub n: usize,
    pub classes_partition: usize,
    pub classes_refined: usize,
    /// `n - L` for the signature partition.
    pub r: usize,
    pub relation_rows: usize,
    pub appended_rows: usize,
    pub fast_sign: bool,
    pub one_block: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RBoundStats {
    pub graphs: usize,
    pub skipped_non_simple: usize,
    pub median_r: f64,
    pub fraction_r_zero: f64,
    pub fraction_r_at_most_4: f64,
    pub fraction_one_block: f64,
    pub max_relation_rows: usize,
    pub bound_violations: usize,
    pub entries: Vec<RBoundEntry>,
}

fn median(values: &mut [usize]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable();
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m] as f64
    } else {
        (values[m - 1] + values[m]) as f64 / 2.0
    }
}

fn rbound_entry(cfg: &RBoundConfig, graph_seed: u64) -> Result<Option<RBoundEntry>> {
    let g = make_random(RandomModel::ErdosRenyi { n: cfg.n, p: cfg.edge_probability, seed: graph_seed })?.to_weighted();
    let d = eigendecompose(&g.matrix_view(cfg.view)?, cfg.tol)?;
    if !d.is_simple_spectrum() {
        return Ok(None);
    }
    let run = prism::canonicalize_detailed(&d.full_slice(), cfg.precision)?;
    let n = g.n();
    let entry = RBoundEntry {
        graph_seed,
        n,
        classes_partition: run.initial.len(),
        classes_refined: run.refined.len(),
        r: n - run.initial.len(),
        relation_rows: run.solution.relation_rows,
        appended_rows: run.solution.appended_rows,
        fast_sign: run.initial.is_discrete(),
        one_block: run.refined.classes().iter().filter(|c| c.len() > 1).count() == 1,
    };
    if entry.relation_rows > n - entry.classes_refined {
        return Err(Error::Internal(format!("row bound violated on graph seed {graph_seed}")));
    }
    Ok(Some(entry))
}

/// Partition and refine statistics over an Erdős-Rényi corpus with seeds
/// `seed, seed + 1, ...`; graphs with repeated eigenvalues are skipped.
pub fn collect_rbound(cfg: &RBoundConfig) -> Result<RBoundStats> {
    let seeds: Vec<u64> = (0..cfg.count as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let results: Vec<Option<RBoundEntry>> = seeds.par_iter().map(|&s| rbound_entry(cfg, s)).collect::<Result<_>>()?;
    let skipped = results.iter().filter(|e| e.is_none()).count();
    let entries: Vec<RBoundEntry> = results.into_iter().flatten().collect();
    let total = entries.len().max(1) as f64;
    let mut rs: Vec<usize> = entries.iter().map(|e| e.r).collect();
    Ok(RBoundStats {
        graphs: entries.len(),
        skipped_non_simple: skipped,
        median_r: median(&mut rs),
        fraction_r_zero: entries.iter().filter(|e| e.r == 0).count() as f64 / total,
        fraction_r_at_most_4: entries.iter().filter(|e| e.r <= 4).count() as f64 / total,
        fraction_one_block: entries.iter().filter(|e| e.one_block).count() as f64 / total,
        max_relation_rows: entries.iter().map(|e| e.relation_rows).max().unwrap_or(0),
        bound_violations: entries.iter().filter(|e| e.relation_rows > e.n - e.classes_refined).count(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_cycle;

    fn er(n: usize, seed: u64) -> WeightedGraph {
        make_random(RandomModel::ErdosRenyi { n, p: 0.4, seed }).unwrap().to_weighted()
    }

    #[test]
    fn relabelled_copy_is_isomorphic() {
        let g = er(16, 3);
        let perm = random_permutation(16, &mut ChaCha8Rng::seed_from_u64(9));
        let h = g.permuted(&perm).unwrap();
        let r = iso_test(&g, &h, MatrixView::NormalizedLaplacian, 1e-8, 8).unwrap();
        assert_eq!(r.verdict, IsoVerdict::Isomorphic);
        let back = iso_test(&h, &g, MatrixView::NormalizedLaplacian, 1e-8, 8).unwrap();
        assert_eq!(back.verdict, IsoVerdict::Isomorphic);
    }

    #[test]
    fn triangle_is_inconclusive() {
        let c3 = make_cycle(3).unwrap().to_weighted();
        let r = iso_test(&c3, &c3, MatrixView::NormalizedLaplacian, 1e-8, 8).unwrap();
        assert_eq!(r.verdict, IsoVerdict::Inconclusive);
        assert_eq!(r.hybrid_hint, Some(true));
    }

    #[test]
    fn identity_relabel_is_exact() {
        let g = er(20, 5);
        let cfg = EquivarianceConfig::new(1, 1, 1e-6, 0);
        let (_, a) = canonical(&g, &cfg).unwrap();
        let (_, b) = canonical(&g.permuted(&(0..20).collect::<Vec<_>>()).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(row_multiset_deviation(&a, &b), 0.0);
    }

    #[test]
    fn small_equivariance_run() {
        let r = run_equivariance(&EquivarianceConfig::new(4, 3, 1e-6, 11)).unwrap();
        assert_eq!(r.trials, 12);
        assert_eq!(r.failures, 0, "{r:?}");
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(median(&mut [4, 1, 3, 2]), 2.5);
        assert_eq!(median(&mut []), 0.0);
    }
}
