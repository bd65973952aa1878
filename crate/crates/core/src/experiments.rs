//! Seeded instance generators, tree enumeration and report batches.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cat::{cat_greedy, decode_run_cat, encode_cat_advice};
use crate::dpa_path::right_end_greedy;
use crate::engine::run;
use crate::error::{DpaError, Result};
use crate::lwdpa::{decode_run_lwdpa, encode_lwdpa_advice, lwdpa_greedy};
use crate::model::{GainMode, Graph, Instance, Request, Vertex};
use crate::oracle::brute_force_opt;
use crate::report::RatioReport;

/// Tree on `seq.len() + 2` vertices decoded from a Prüfer sequence.
pub fn prufer_tree(seq: &[Vertex]) -> Vec<(Vertex, Vertex)> {
    let n = seq.len() + 2;
    let mut degree = vec![1u32; n];
    for &v in seq {
        degree[v as usize] += 1;
    }
    let mut leaves: BTreeSet<Vertex> = (0..n as Vertex)
        .filter(|&v| degree[v as usize] == 1)
        .collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &v in seq {
        let leaf = leaves.pop_first().expect("a tree always has a leaf");
        edges.push((leaf, v));
        degree[v as usize] -= 1;
        if degree[v as usize] == 1 {
            leaves.insert(v);
        }
    }
    let last: Vec<Vertex> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    edges
}

/// Every labeled tree on `n >= 2` vertices.
pub fn all_labeled_trees(n: u32) -> Vec<Vec<(Vertex, Vertex)>> {
    if n < 2 {
        return Vec::new();
    }
    let len = (n - 2) as usize;
    let mut seq = vec![0; len];
    let mut out = Vec::new();
    loop {
        out.push(prufer_tree(&seq));
        // Odometer increment.
        let mut i = 0;
        while i < len && seq[i] + 1 == n {
            seq[i] = 0;
            i += 1;
        }
        if i == len {
            return out;
        }
        seq[i] += 1;
    }
}

/// Isomorphism-invariant encoding of a tree, rooted at its center(s).
pub fn canonical_form(n: u32, edges: &[(Vertex, Vertex)]) -> String {
    let mut adj = vec![Vec::new(); n as usize];
    for &(a, b) in edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    // Peel leaves until one or two vertices remain.
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut layer: Vec<Vertex> = (0..n).filter(|&v| degree[v as usize] <= 1).collect();
    let mut left = n as usize;
    while left > 2 {
        left -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for &w in &adj[v as usize] {
                degree[w as usize] -= 1;
                if degree[w as usize] == 1 {
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    fn encode(adj: &[Vec<Vertex>], v: Vertex, parent: Option<Vertex>) -> String {
        let mut kids: Vec<String> = adj[v as usize]
            .iter()
            .filter(|&&w| Some(w) != parent)
            .map(|&w| encode(adj, w, Some(v)))
            .collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    layer
        .iter()
        .map(|&c| encode(&adj, c, None))
        .min()
        .unwrap_or_default()
}

/// One labeled representative per isomorphism class of trees on `n` vertices.
pub fn unlabeled_trees(n: u32) -> Vec<Vec<(Vertex, Vertex)>> {
    let mut classes = BTreeMap::new();
    for t in all_labeled_trees(n) {
        classes.entry(canonical_form(n, &t)).or_insert(t);
    }
    classes.into_values().collect()
}

/// A uniformly random labeled tree on `n >= 2` vertices.
pub fn random_tree(rng: &mut impl Rng, n: u32) -> Vec<(Vertex, Vertex)> {
    let seq: Vec<Vertex> = (0..n.saturating_sub(2))
        .map(|_| rng.gen_range(0..n))
        .collect();
    prufer_tree(&seq)
}

/// Random relabeling of a tree's vertices.
pub fn relabel(rng: &mut impl Rng, n: u32, edges: &[(Vertex, Vertex)]) -> Vec<(Vertex, Vertex)> {
    let perm: Vec<Vertex> = sample(rng, n as usize, n as usize)
        .into_iter()
        .map(|v| v as Vertex)
        .collect();
    edges
        .iter()
        .map(|&(a, b)| (perm[a as usize], perm[b as usize]))
        .collect()
}

/// Up to `count` distinct random requests on `graph`.
pub fn random_requests(rng: &mut impl Rng, graph: &Arc<Graph>, count: usize) -> Result<Instance> {
    let all = graph.all_requests();
    let k = count.min(all.len());
    let picked: Vec<Request> = sample(rng, all.len(), k)
        .into_iter()
        .map(|i| all[i])
        .collect();
    Instance::new(graph.clone(), picked)
}

/// Random path of length `1..=max_length` with up to `max_requests` requests.
pub fn random_path_instance(
    rng: &mut impl Rng,
    max_length: u32,
    max_requests: usize,
) -> Result<Instance> {
    let graph = Graph::path(rng.gen_range(1..=max_length))?;
    let k = rng.gen_range(0..=max_requests);
    random_requests(rng, &graph, k)
}

/// Random tree on `2..=max_vertices` vertices with up to `max_requests` requests.
pub fn random_tree_instance(
    rng: &mut impl Rng,
    max_vertices: u32,
    max_requests: usize,
) -> Result<Instance> {
    let n = rng.gen_range(2..=max_vertices);
    let graph = Graph::tree(&random_tree(rng, n))?;
    let k = rng.gen_range(0..=max_requests);
    random_requests(rng, &graph, k)
}

/// All subsets of `items` with at most `max` elements, smallest first.
pub fn subsets_up_to<T: Copy>(items: &[T], max: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(usize, Vec<T>)> = vec![(0, Vec::new())];
    for _ in 0..max {
        let mut next = Vec::new();
        for (start, set) in &frontier {
            for (i, item) in items.iter().enumerate().skip(*start) {
                let mut grown = set.clone();
                grown.push(*item);
                out.push(grown.clone());
                next.push((i + 1, grown));
            }
        }
        frontier = next;
    }
    out
}

/// The seeded report batches behind the CLI and the determinism check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// Right-endpoint greedy on random paths, counting requests.
    PathGreedy,
    /// Longest-first greedy on random paths, counting length.
    LwdpaGreedy,
    /// Block-coded advice on random paths.
    LwdpaAdvice,
    /// Peak-order greedy on random trees.
    CatGreedy,
    /// Label-coded advice on random trees.
    CatAdvice,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::PathGreedy,
        Experiment::LwdpaGreedy,
        Experiment::LwdpaAdvice,
        Experiment::CatGreedy,
        Experiment::CatAdvice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PathGreedy => "path-greedy",
            Experiment::LwdpaGreedy => "lwdpa-greedy",
            Experiment::LwdpaAdvice => "lwdpa-advice",
            Experiment::CatGreedy => "cat-greedy",
            Experiment::CatAdvice => "cat-advice",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| DpaError::InvalidArgument(format!("unknown experiment {name:?}")))
    }

    fn mode(self) -> GainMode {
        match self {
            Experiment::LwdpaGreedy | Experiment::LwdpaAdvice => GainMode::Length,
            _ => GainMode::Count,
        }
    }

    fn instance(self, rng: &mut ChaCha8Rng) -> Result<Instance> {
        match self {
            Experiment::PathGreedy | Experiment::LwdpaGreedy | Experiment::LwdpaAdvice => {
                random_path_instance(rng, 16, 8)
            }
            Experiment::CatGreedy | Experiment::CatAdvice => random_tree_instance(rng, 12, 8),
        }
    }

    /// One report row for `instance`.
    pub fn report(self, instance: &Instance) -> Result<RatioReport> {
        let mode = self.mode();
        let (algorithm, gain_alg, bits) = match self {
            Experiment::PathGreedy => {
                let s = run(&mut right_end_greedy(), instance, None)?.solution;
                ("greedy-path", s.gain(mode), 0)
            }
            Experiment::LwdpaGreedy => {
                let s = run(&mut lwdpa_greedy(), instance, None)?.solution;
                ("greedy-lwdpa", s.gain(mode), 0)
            }
            Experiment::LwdpaAdvice => {
                let mut tape = encode_lwdpa_advice(instance)?;
                let s = decode_run_lwdpa(instance, &mut tape)?;
                ("advice-lwdpa", s.gain(mode), tape.consumed())
            }
            Experiment::CatGreedy => {
                let s = run(&mut cat_greedy(), instance, None)?.solution;
                ("greedy-cat", s.gain(mode), 0)
            }
            Experiment::CatAdvice => {
                let mut tape = encode_cat_advice(instance)?;
                let s = decode_run_cat(instance, &mut tape)?;
                ("advice-cat", s.gain(mode), tape.consumed())
            }
        };
        let gain_opt = brute_force_opt(instance, mode)?.optimum;
        Ok(RatioReport::new(
            instance.graph().descriptor(),
            algorithm,
            instance.fingerprint(),
            gain_alg,
            gain_opt,
            bits,
        ))
    }

    /// `count` reports on instances drawn from `seed`.
    pub fn batch(self, seed: u64, count: usize) -> Result<Vec<RatioReport>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let instance = self.instance(&mut rng)?;
                self.report(&instance)
            })
            .collect()
    }
}
