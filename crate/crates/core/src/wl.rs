//! Weisfeiler-Leman color refinement on weighted graphs.
//!
//! Colors are canonical: every round sorts the distinct signatures of all
//! graphs in the run and numbers them by rank. Two graphs refined in one joint
//! run therefore share a color dictionary, and a graph refined on its own gets
//! the same colors whatever its vertex labelling.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graph::WeightedGraph;
use crate::prism::quantize;

pub const DEFAULT_BUDGET: usize = 1 << 26;
const WEIGHT_PRECISION: u32 = 8;

/// A stable coloring of `k`-tuples, indexed `sum_i v_i n^(k-1-i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coloring {
    pub k: usize,
    pub n: usize,
    pub colors: Vec<u32>,
    /// Refinement rounds computed, including the one that confirmed stability.
    pub rounds: usize,
    pub stable: bool,
}

impl Coloring {
    pub fn color_count(&self) -> usize {
        let mut c = self.colors.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    /// Sorted `(color, count)` pairs: the multiset hashed into the global label.
    pub fn global_label(&self) -> Vec<(u32, usize)> {
        histogram(&self.colors)
    }

    /// Tuples grouped by color, groups ordered by color.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (t, &c) in self.colors.iter().enumerate() {
            map.entry(c).or_default().push(t);
        }
        map.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WlVerdict {
    pub k: usize,
    pub distinguishable: bool,
    pub rounds: [usize; 2],
    pub global_labels: [Vec<(u32, usize)>; 2],
}

fn histogram(colors: &[u32]) -> Vec<(u32, usize)> {
    let mut map: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in colors {
        *map.entry(c).or_default() += 1;
    }
    map.into_iter().collect()
}

/// Exact for integral weights, quantized otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum WeightKey {
    Integer(i64),
    Real(i64),
    /// Too large to quantize; compared bit for bit.
    Raw(u64),
}

fn weight_key(w: f64) -> WeightKey {
    if w.fract() == 0.0 && w.abs() < 9.0e15 {
        WeightKey::Integer(w as i64)
    } else {
        quantize(w, WEIGHT_PRECISION).map_or(WeightKey::Raw(w.to_bits()), WeightKey::Real)
    }
}

fn weight_keys(g: &WeightedGraph) -> Vec<WeightKey> {
    g.weights().transpose().iter().map(|&w| weight_key(w)).collect()
}

/// Numbers the distinct signatures of all graphs by sorted rank.
fn rank<T: Ord>(sigs: &[Vec<T>]) -> Vec<Vec<u32>> {
    let mut all: Vec<&T> = sigs.iter().flatten().collect();
    all.sort_unstable();
    all.dedup();
    sigs.iter()
        .map(|s| s.iter().map(|x| all.binary_search(&x).expect("present") as u32).collect())
        .collect()
}

fn distinct(colors: &[Vec<u32>]) -> usize {
    let mut all: Vec<u32> = colors.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

fn per_graph_distinct(colors: &[u32]) -> usize {
    histogram(colors).len()
}

struct JointRun {
    colors: Vec<Vec<u32>>,
    rounds: Vec<usize>,
}

/// Refines until the joint partition stops changing. `step` maps the current
/// colors to the next round's signatures, already ranked.
fn run_joint(init: Vec<Vec<u32>>, mut step: impl FnMut(&[Vec<u32>]) -> Vec<Vec<u32>>) -> JointRun {
    let mut colors = init;
    let mut count = distinct(&colors);
    let mut counts: Vec<usize> = colors.iter().map(|c| per_graph_distinct(c)).collect();
    let mut rounds: Vec<Option<usize>> = vec![None; colors.len()];
    let mut round = 0;
    loop {
        round += 1;
        let next = step(&colors);
        let next_count = distinct(&next);
        for (g, c) in next.iter().enumerate() {
            let cnt = per_graph_distinct(c);
            if rounds[g].is_none() && cnt == counts[g] {
                rounds[g] = Some(round);
            }
            counts[g] = cnt;
        }
        if next_count == count {
            return JointRun { colors, rounds: rounds.into_iter().map(|r| r.unwrap_or(round)).collect() };
        }
        colors = next;
        count = next_count;
    }
}

fn run_wl1(graphs: &[&WeightedGraph]) -> JointRun {
    let keys: Vec<Vec<WeightKey>> = graphs.iter().map(|g| weight_keys(g)).collect();
    let init_sigs: Vec<Vec<WeightKey>> =
        graphs.iter().zip(&keys).map(|(g, k)| (0..g.n()).map(|v| k[v * g.n() + v]).collect()).collect();
    let init = rank(&init_sigs);
    run_joint(init, |colors| {
        let sigs: Vec<Vec<(u32, Vec<(u32, WeightKey)>)>> = graphs
            .iter()
            .zip(&keys)
            .zip(colors)
            .map(|((g, key), c)| {
                let n = g.n();
                (0..n)
                    .map(|v| {
                        let mut ms: Vec<(u32, WeightKey)> = (0..n).map(|w| (c[w], key[v * n + w])).collect();
                        ms.sort_unstable();
                        (c[v], ms)
                    })
                    .collect()
            })
            .collect();
        rank(&sigs)
    })
}

fn tuple_count(n: usize, k: usize, budget: usize) -> Result<usize> {
    let mut total = 1usize;
    for _ in 0..k {
        total = total.checked_mul(n).filter(|&t| t <= budget).ok_or_else(|| {
            Error::ResourceLimit(format!("{n}^{k} tuples exceed the budget of {budget}"))
        })?;
    }
    Ok(total)
}

fn run_wlk(graphs: &[&WeightedGraph], k: usize, budget: usize) -> Result<JointRun> {
    let mut sizes = Vec::new();
    for g in graphs {
        sizes.push(tuple_count(g.n(), k, budget)?);
    }
    let keys: Vec<Vec<WeightKey>> = graphs.iter().map(|g| weight_keys(g)).collect();
    let decode = |t: usize, n: usize| -> Vec<usize> {
        let mut out = vec![0; k];
        let mut rest = t;
        for i in (0..k).rev() {
            out[i] = rest % n;
            rest /= n;
        }
        out
    };
    let init_sigs: Vec<Vec<Vec<WeightKey>>> = graphs
        .iter()
        .zip(&keys)
        .zip(&sizes)
        .map(|((g, key), &size)| {
            let n = g.n();
            (0..size)
                .map(|t| {
                    let v = decode(t, n);
                    let mut block = Vec::with_capacity(k * k);
                    for &a in &v {
                        for &b in &v {
                            block.push(key[a * n + b]);
                        }
                    }
                    block
                })
                .collect()
        })
        .collect();
    let init = rank(&init_sigs);
    Ok(run_joint(init, |colors| {
        // Neighbourhood multisets, one per (tuple, position), numbered jointly.
        let multisets: Vec<Vec<Vec<u32>>> = graphs
            .iter()
            .zip(colors)
            .map(|(g, c)| {
                let n = g.n();
                let mut out = Vec::with_capacity(c.len() * k);
                for t in 0..c.len() {
                    let v = decode(t, n);
                    for (j, &vj) in v.iter().enumerate() {
                        let stride = n.pow((k - 1 - j) as u32);
                        let base = t - vj * stride;
                        let mut ms: Vec<u32> = (0..n).map(|w| c[base + w * stride]).collect();
                        ms.sort_unstable();
                        out.push(ms);
                    }
                }
                out
            })
            .collect();
        let ids = rank(&multisets);
        let sigs: Vec<Vec<(u32, &[u32])>> = colors
            .iter()
            .zip(&ids)
            .map(|(c, id)| (0..c.len()).map(|t| (c[t], &id[t * k..(t + 1) * k])).collect())
            .collect();
        rank(&sigs)
    }))
}

fn run(graphs: &[&WeightedGraph], k: usize, budget: usize) -> Result<JointRun> {
    match k {
        0 => Err(invalid("k must be at least 1")),
        1 => Ok(run_wl1(graphs)),
        _ => run_wlk(graphs, k, budget),
    }
}

/// Color refinement with node-feature initialization.
pub fn wl1(g: &WeightedGraph) -> Coloring {
    let run = run_wl1(&[g]);
    Coloring { k: 1, n: g.n(), colors: run.colors[0].clone(), rounds: run.rounds[0], stable: true }
}

/// k-WL on `n^k` tuples with per-position neighbourhoods; `k = 1` is [`wl1`].
pub fn wlk(g: &WeightedGraph, k: usize, budget: usize) -> Result<Coloring> {
    let run = run(&[g], k, budget)?;
    Ok(Coloring { k, n: g.n(), colors: run.colors[0].clone(), rounds: run.rounds[0], stable: true })
}

/// Joint refinement of both graphs with one shared color dictionary.
pub fn compare(g1: &WeightedGraph, g2: &WeightedGraph, k: usize, budget: usize) -> Result<WlVerdict> {
    if g1.n() != g2.n() {
        return Ok(WlVerdict {
            k,
            distinguishable: true,
            rounds: [0, 0],
            global_labels: [Vec::new(), Vec::new()],
        });
    }
    let run = run(&[g1, g2], k, budget)?;
    let labels = [histogram(&run.colors[0]), histogram(&run.colors[1])];
    Ok(WlVerdict {
        k,
        distinguishable: labels[0] != labels[1],
        rounds: [run.rounds[0], run.rounds[1]],
        global_labels: labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_cycle;

    fn two_triangles() -> WeightedGraph {
        WeightedGraph::from_edges(6, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)], &[])
            .unwrap()
    }

    #[test]
    fn c6_has_one_color() {
        let c = wl1(&make_cycle(6).unwrap().to_weighted());
        assert_eq!(c.color_count(), 1);
        assert_eq!(c.rounds, 1);
    }

    #[test]
    fn p3_has_two_colors() {
        let p3 = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)], &[]).unwrap();
        let c = wl1(&p3);
        assert_eq!(c.color_count(), 2);
        assert_eq!(c.colors[0], c.colors[2]);
    }

    #[test]
    fn node_features_seed_colors() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 1.0)], &[0.0, 0.5]).unwrap();
        assert_eq!(wl1(&g).color_count(), 2);
    }

    #[test]
    fn two_triangles_vs_hexagon() {
        let c6 = make_cycle(6).unwrap().to_weighted();
        let t = two_triangles();
        assert!(!compare(&t, &c6, 1, DEFAULT_BUDGET).unwrap().distinguishable);
        assert!(compare(&t, &c6, 3, DEFAULT_BUDGET).unwrap().distinguishable);
    }

    #[test]
    fn wlk_one_matches_wl1() {
        let t = two_triangles();
        assert_eq!(wlk(&t, 1, DEFAULT_BUDGET).unwrap(), wl1(&t));
    }

    #[test]
    fn budget_is_enforced() {
        let c6 = make_cycle(6).unwrap().to_weighted();
        assert!(matches!(wlk(&c6, 3, 100), Err(Error::ResourceLimit(_))));
        assert!(wlk(&c6, 0, 100).is_err());
    }

    #[test]
    fn different_sizes_are_distinguishable() {
        let a = make_cycle(5).unwrap().to_weighted();
        let b = make_cycle(6).unwrap().to_weighted();
        assert!(compare(&a, &b, 2, DEFAULT_BUDGET).unwrap().distinguishable);
    }
}
