//! DPA on trees: the peak-ordered greedy, the degree-4 adversary, the
//! label-based advice scheme and edge-disjoint star packings.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::engine::{
    presentation_sequence, probe_first, replay_from_probe, run, FixedGreedy, PriorityAlgorithm,
    PriorityOrder, RunState, Verdict,
};
use crate::error::{DpaError, Result};
use crate::model::{
    gain, EdgeSet, GainMode, Graph, Instance, Request, Solution, TreeGraph, Vertex,
};
use crate::oracle::{brute_force_opt, greediest_opt};
use crate::report::AdversaryOutcome;
use crate::tape::{field_width, AdviceTape};

/// Degree statistics of a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeStats {
    pub leaves: u32,
    pub degree_three: u32,
    pub max_degree: u32,
    /// Sum over vertices of `floor(deg / 4)`.
    pub star_sum: u32,
    /// `ceil(star_sum / 2)`, the guaranteed number of disjoint stars.
    pub star_bound: u32,
}

pub fn tree_stats(tree: &TreeGraph) -> TreeStats {
    let degrees: Vec<u32> = (0..tree.vertex_count() as Vertex)
        .map(|v| tree.degree(v))
        .collect();
    let star_sum = degrees.iter().map(|d| d / 4).sum::<u32>();
    TreeStats {
        leaves: degrees.iter().filter(|&&d| d == 1).count() as u32,
        degree_three: degrees.iter().filter(|&&d| d == 3).count() as u32,
        max_degree: tree.max_degree(),
        star_sum,
        star_bound: star_sum.div_ceil(2),
    }
}

/// Upper bound on the advice the tree codec may read on `tree`.
pub fn cat_advice_bound(tree: &TreeGraph) -> u64 {
    let s = tree_stats(tree);
    if s.max_degree < 4 {
        return 0;
    }
    // ceil(log2(max_degree / 2)) = ceil(log2(max_degree)) - 1
    let per_label = field_width(u64::from(s.max_degree)) as u64 - 1;
    u64::from(s.leaves - s.degree_three - 2) * per_label
}

/// The vertex of a request's path closest to the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Peak {
    pub request: Request,
    pub vertex: Vertex,
    pub at_endpoint: bool,
}

pub fn peak(tree: &TreeGraph, request: &Request) -> Peak {
    let vertex = tree.lca(request.x(), request.y());
    Peak {
        request: *request,
        vertex,
        at_endpoint: request.has_endpoint(vertex),
    }
}

fn require_tree(graph: &Arc<Graph>) -> Result<&TreeGraph> {
    graph.as_tree().ok_or_else(|| {
        DpaError::InvalidArgument(format!("expected a tree, got {}", graph.descriptor()))
    })
}

/// Deeper peak first; equal depth: larger peak id first; same peak: requests
/// ending at the peak first.
pub fn cat_order(graph: &Arc<Graph>) -> Result<PriorityOrder> {
    require_tree(graph)?;
    let graph = graph.clone();
    Ok(PriorityOrder::by_key("cat", move |r: &Request| {
        let tree = graph.as_tree().expect("checked above");
        let p = peak(tree, r);
        (
            Reverse(tree.depth(p.vertex)),
            Reverse(p.vertex),
            !p.at_endpoint,
        )
    }))
}

pub fn cat_greedy() -> FixedGreedy {
    FixedGreedy::new("greedy-cat", cat_order)
}

pub fn greedy_cat(instance: &Instance) -> Result<Solution> {
    require_tree(instance.graph())?;
    Ok(run(&mut cat_greedy(), instance, None)?.solution)
}

/// Which requests the degree-4 adversary served.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StarCase {
    Rejected {
        first: Request,
    },
    /// `first` was accepted; two disjoint requests each meeting it followed.
    Split {
        first: Request,
        center: Vertex,
    },
}

/// Serves the top two-leaf path around the smallest-id vertex of degree at
/// least 4, then two disjoint paths each sharing an edge with it.
pub fn tree_adversary(
    alg: &mut dyn PriorityAlgorithm,
    graph: &Arc<Graph>,
) -> Result<AdversaryOutcome<StarCase>> {
    let tree = require_tree(graph)?;
    let center = (0..tree.vertex_count() as Vertex)
        .find(|&v| tree.degree(v) >= 4)
        .ok_or_else(|| {
            DpaError::InvalidTree(format!("maximum degree {} is below 4", tree.max_degree()))
        })?;
    let spokes: Vec<Vertex> = tree.neighbors(center).into_iter().take(4).collect();
    let mut candidates = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            candidates.push(graph.request(spokes[i], spokes[j])?);
        }
    }
    let probe = probe_first(alg, graph.clone(), &candidates)?;
    let first = probe.request;
    let (case, requests) = if probe.accepted {
        let rest: Vec<Vertex> = spokes
            .iter()
            .copied()
            .filter(|v| !first.has_endpoint(*v))
            .collect();
        (
            StarCase::Split { first, center },
            vec![
                first,
                graph.request(first.x(), rest[0])?,
                graph.request(first.y(), rest[1])?,
            ],
        )
    } else {
        (StarCase::Rejected { first }, vec![first])
    };
    let instance = Instance::new(graph.clone(), requests)?;
    let outcome = replay_from_probe(alg, &instance, &probe)?;
    let gain_alg = gain(&outcome.solution, GainMode::Count);
    let gain_opt = brute_force_opt(&instance, GainMode::Count)?.optimum;
    Ok(AdversaryOutcome {
        case,
        instance,
        solution: outcome.solution,
        gain_alg,
        gain_opt,
    })
}

/// Width of one label field at a peak of degree `degree`.
fn label_width(degree: u32) -> usize {
    field_width(u64::from((degree - 1) / 2) + 1)
}

/// Child edges of `v` not yet used, named by child vertex, in id order.
fn remaining_children(tree: &TreeGraph, v: Vertex, used: &EdgeSet) -> Vec<Vertex> {
    tree.children(v)
        .iter()
        .copied()
        .filter(|&c| !used.contains(c as usize))
        .collect()
}

/// The last label: the positive label seen once so far, or 0.
fn infer_last_label(labels: &[u64]) -> u64 {
    let mut counts: BTreeMap<u64, u32> = BTreeMap::new();
    for &l in labels.iter().filter(|&&l| l > 0) {
        *counts.entry(l).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|&(_, c)| c == 1)
        .map_or(0, |(l, _)| l)
}

/// Labels of one phase, filled in at the first request that needs them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseLabels {
    pub peak: Vertex,
    /// Remaining child edges, named by child vertex, in id order.
    pub children: Vec<Vertex>,
    pub labels: Vec<u64>,
}

impl PhaseLabels {
    fn label_of(&self, child: Vertex) -> u64 {
        self.children
            .iter()
            .position(|&c| c == child)
            .map_or(0, |i| self.labels[i])
    }
}

/// Encodes the greediest optimal solution under [`cat_order`] as per-phase
/// edge-pair labels.
pub fn encode_cat_advice(instance: &Instance) -> Result<AdviceTape> {
    Ok(encode_cat_phases(instance)?.0)
}

/// The tape together with the labels written for each phase.
pub fn encode_cat_phases(instance: &Instance) -> Result<(AdviceTape, Vec<PhaseLabels>)> {
    let graph = instance.graph();
    let tree = require_tree(graph)?;
    let order = cat_order(graph)?;
    let best = greediest_opt(instance, &order, GainMode::Count)?;
    let sequence = presentation_sequence(&order, instance)?;

    let mut tape = AdviceTape::new();
    let mut phases = Vec::new();
    let mut used = EdgeSet::new(graph.edge_slots());
    let mut labelled: Option<Vertex> = None;
    for r in &sequence {
        let p = peak(tree, r);
        let v = p.vertex;
        if tree.degree(v) >= 4 && !p.at_endpoint && labelled != Some(v) {
            labelled = Some(v);
            let children = remaining_children(tree, v, &used);
            let mut labels = Vec::with_capacity(children.len());
            let mut pair_label: BTreeMap<Request, u64> = BTreeMap::new();
            let mut later = 0;
            for &c in &children {
                let owner = best.accepted().iter().find(|q| {
                    let edges = graph.path_edges(q).expect("owned request");
                    edges.contains(c as usize)
                });
                let label = match owner {
                    Some(q) if tree.lca(q.x(), q.y()) == v => {
                        let next = pair_label.len() as u64 + 1;
                        *pair_label.entry(*q).or_insert(next)
                    }
                    Some(_) => {
                        later += 1;
                        0
                    }
                    None => 0,
                };
                labels.push(label);
            }
            if later > 1 {
                return Err(DpaError::InvalidArgument(format!(
                    "{later} remaining edges at vertex {v} belong to later phases"
                )));
            }
            let width = label_width(tree.degree(v));
            if let Some((_, sent)) = labels.split_last() {
                for &l in sent {
                    tape.push_bits(l, width);
                }
                debug_assert_eq!(infer_last_label(sent), *labels.last().expect("non-empty"));
            }
            phases.push(PhaseLabels {
                peak: v,
                children,
                labels,
            });
        }
        if best.contains(r) {
            used.union_with(&graph.path_edges(r)?);
        }
    }
    Ok((tape, phases))
}

/// Quasi-greedy tree algorithm reading edge-pair labels from the tape.
#[derive(Clone, Debug, Default)]
pub struct CatAdviceDecoder {
    phase: Option<PhaseLabels>,
}

impl CatAdviceDecoder {
    pub fn new() -> Self {
        Self::default()
    }
}

impl PriorityAlgorithm for CatAdviceDecoder {
    fn name(&self) -> String {
        "advice-cat".into()
    }

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        _: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder> {
        self.phase = None;
        cat_order(graph)
    }

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        advice: Option<&mut AdviceTape>,
    ) -> Result<Verdict> {
        let graph = state.graph();
        let tree = require_tree(graph)?;
        let p = peak(tree, request);
        let v = p.vertex;
        let greedy = if state.is_blocked(request) {
            Verdict::Reject
        } else {
            Verdict::Accept
        };
        if tree.degree(v) < 4 || p.at_endpoint {
            return Ok(greedy);
        }
        if self.phase.as_ref().map(|ph| ph.peak) != Some(v) {
            let children = remaining_children(tree, v, state.used_edges());
            let width = label_width(tree.degree(v));
            let tape =
                advice.ok_or_else(|| DpaError::MalformedAdvice("advice tape required".into()))?;
            let mut labels = Vec::with_capacity(children.len());
            for _ in 1..children.len() {
                labels.push(tape.read_bits(width)?);
            }
            if !children.is_empty() {
                labels.push(infer_last_label(&labels));
            }
            self.phase = Some(PhaseLabels {
                peak: v,
                children,
                labels,
            });
        }
        let phase = self.phase.as_ref().expect("set above");
        let left = tree
            .child_toward(v, request.x())
            .expect("peak is an inner vertex");
        let right = tree
            .child_toward(v, request.y())
            .expect("peak is an inner vertex");
        let (a, b) = (phase.label_of(left), phase.label_of(right));
        Ok(if a > 0 && a == b {
            greedy
        } else {
            Verdict::Reject
        })
    }
}

pub fn decode_run_cat(instance: &Instance, tape: &mut AdviceTape) -> Result<Solution> {
    tape.rewind();
    Ok(run(&mut CatAdviceDecoder::new(), instance, Some(tape))?.solution)
}

/// A copy of the star with four leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct StarCopy {
    pub center: Vertex,
    pub leaves: [Vertex; 4],
}

impl StarCopy {
    /// All six two-edge paths inside the star, in ascending endpoint order.
    pub fn two_edge_paths(&self, graph: &Graph) -> Result<Vec<Request>> {
        let mut out = Vec::with_capacity(6);
        for i in 0..4 {
            for j in i + 1..4 {
                out.push(graph.request(self.leaves[i], self.leaves[j])?);
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Pairwise edge-disjoint stars: repeatedly take a vertex of degree at least 4
/// with at most one neighbour of degree at least 4, cut as many stars at it as
/// its degree allows, and delete it.
pub fn pack_s4(tree: &TreeGraph) -> Vec<StarCopy> {
    let n = tree.vertex_count();
    let mut adjacency: Vec<BTreeSet<Vertex>> = (0..n as Vertex)
        .map(|v| tree.neighbors(v).into_iter().collect())
        .collect();
    let mut copies = Vec::new();
    loop {
        let heavy = |adj: &Vec<BTreeSet<Vertex>>, v: Vertex| adj[v as usize].len() >= 4;
        let pick = (0..n as Vertex).find(|&u| {
            heavy(&adjacency, u)
                && adjacency[u as usize]
                    .iter()
                    .filter(|&&w| heavy(&adjacency, w))
                    .count()
                    <= 1
        });
        let Some(u) = pick else { break };
        let around: Vec<Vertex> = adjacency[u as usize].iter().copied().collect();
        for group in around.chunks_exact(4) {
            copies.push(StarCopy {
                center: u,
                leaves: [group[0], group[1], group[2], group[3]],
            });
        }
        for w in around {
            adjacency[w as usize].remove(&u);
        }
        adjacency[u as usize].clear();
    }
    copies
}

/// A path `0..=2n+1` whose inner vertices each carry two extra leaves.
pub fn ladder_tree(n: u32) -> Result<Arc<Graph>> {
    if n < 1 {
        return Err(DpaError::InvalidParams(
            "the ladder tree needs n >= 1".into(),
        ));
    }
    let spine = 2 * n + 1;
    let mut edges: Vec<(Vertex, Vertex)> = (0..spine).map(|i| (i, i + 1)).collect();
    let mut next = spine + 1;
    for v in 1..spine {
        edges.push((v, next));
        edges.push((v, next + 1));
        next += 2;
    }
    Graph::tree(&edges)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::validate_solution;
    use crate::report::GainRatio;
    use proptest::prelude::*;

    pub(crate) fn sample_tree() -> Arc<Graph> {
        Graph::tree(&[
            (0, 1),
            (1, 2),
            (1, 3),
            (1, 4),
            (2, 5),
            (2, 6),
            (2, 7),
            (2, 8),
            (5, 11),
            (7, 12),
            (7, 13),
            (4, 9),
            (4, 10),
        ])
        .unwrap()
    }

    pub(crate) fn labelled_tree() -> Arc<Graph> {
        let mut edges = vec![(0, 1), (1, 2), (1, 3)];
        edges.extend((4..=10).map(|c| (3, c)));
        edges.extend([(4, 11), (6, 12), (6, 13), (9, 14), (10, 15)]);
        Graph::tree(&edges).unwrap()
    }

    fn star(leaves: u32) -> Arc<Graph> {
        Graph::tree(&(1..=leaves).map(|v| (0, v)).collect::<Vec<_>>()).unwrap()
    }

    fn pairs(s: &Solution) -> Vec<(u32, u32)> {
        s.accepted().iter().map(Request::endpoints).collect()
    }

    #[test]
    fn peaks_in_sample_tree() {
        let g = sample_tree();
        let t = g.as_tree().unwrap();
        assert_eq!(peak(t, &g.request(12, 13).unwrap()).vertex, 7);
        assert_eq!(peak(t, &g.request(11, 9).unwrap()).vertex, 1);
        let p = peak(t, &g.request(2, 11).unwrap());
        assert_eq!((p.vertex, p.at_endpoint), (2, true));
    }

    #[test]
    fn order_in_sample_tree() {
        let g = sample_tree();
        let inst = Instance::from_pairs(g.clone(), &[(11, 9), (6, 8), (12, 13)]).unwrap();
        let seq = presentation_sequence(&cat_order(&g).unwrap(), &inst).unwrap();
        let got: Vec<_> = seq.iter().map(Request::endpoints).collect();
        assert_eq!(got, vec![(12, 13), (6, 8), (9, 11)]);
        let o = cat_order(&g).unwrap();
        assert!(o.higher(&g.request(2, 11).unwrap(), &g.request(6, 8).unwrap()));
    }

    #[test]
    fn star_adversary_example() {
        let g = star(4);
        let inst = Instance::from_pairs(g.clone(), &[(1, 2), (1, 3), (2, 4)]).unwrap();
        let mut lex = FixedGreedy::new("lexicographic", |_| Ok(PriorityOrder::lexicographic()));
        let s = run(&mut lex, &inst, None).unwrap().solution;
        assert_eq!(pairs(&s), vec![(1, 2)]);
        assert_eq!(brute_force_opt(&inst, GainMode::Count).unwrap().optimum, 2);
    }

    #[test]
    fn adversary_on_star() {
        let g = star(4);
        let out = tree_adversary(&mut cat_greedy(), &g).unwrap();
        assert_eq!((out.gain_opt, out.gain_alg), (2, 1));
        let path = Graph::tree(&[(0, 1), (1, 2), (1, 3)]).unwrap();
        assert!(matches!(
            tree_adversary(&mut cat_greedy(), &path),
            Err(DpaError::InvalidTree(_))
        ));
    }

    #[test]
    fn labelled_tree_phase() {
        let g = labelled_tree();
        let chosen = [(11, 8), (5, 7), (12, 13), (3, 14), (2, 15)];
        let mut all = chosen.to_vec();
        all.extend([(4, 7), (2, 14)]);
        let inst = Instance::from_pairs(g.clone(), &all).unwrap();
        let (tape, phases) = encode_cat_phases(&inst).unwrap();
        let phase = phases.iter().find(|p| p.peak == 3).unwrap();
        assert_eq!(phase.children, vec![4, 5, 6, 7, 8, 10]);
        assert_eq!(phase.labels, vec![1, 2, 0, 2, 1, 0]);
        assert_eq!(tape.to_bit_string(), "0110001001");
        let t = g.as_tree().unwrap();
        let stats = tree_stats(t);
        assert_eq!(
            (stats.leaves, stats.degree_three, stats.max_degree),
            (10, 2, 8)
        );
        assert_eq!(cat_advice_bound(t), 12);

        let mut tape = tape;
        let s = decode_run_cat(&inst, &mut tape).unwrap();
        let mut expected: Vec<_> = chosen.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
        expected.sort();
        assert_eq!(pairs(&s), expected);
    }

    #[test]
    fn small_bounds() {
        assert_eq!(cat_advice_bound(star(4).as_tree().unwrap()), 2);
        assert_eq!(
            cat_advice_bound(
                Graph::tree(&[(0, 1), (1, 2), (1, 3)])
                    .unwrap()
                    .as_tree()
                    .unwrap()
            ),
            0
        );
        assert_eq!(infer_last_label(&[1, 2, 0, 2, 1]), 0);
        assert_eq!(infer_last_label(&[1, 0, 2, 2]), 1);
    }

    #[test]
    fn packings() {
        let k18 = star(8);
        assert_eq!(pack_s4(k18.as_tree().unwrap()).len(), 2);
        assert!(pack_s4(
            Graph::tree(&[(0, 1), (1, 2), (1, 3)])
                .unwrap()
                .as_tree()
                .unwrap()
        )
        .is_empty());
        for n in 1..=3 {
            let g = ladder_tree(n).unwrap();
            let t = g.as_tree().unwrap();
            assert_eq!(tree_stats(t).star_bound, n);
            assert!(pack_s4(t).len() as u32 >= n);
        }
        assert!(matches!(ladder_tree(0), Err(DpaError::InvalidParams(_))));
    }

    fn tree_instance(max_n: u32, max_requests: usize) -> impl Strategy<Value = Instance> {
        (2u32..=max_n)
            .prop_flat_map(move |n| {
                let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
                (
                    Just(n),
                    parents,
                    proptest::collection::vec((0..n, 0..n), 0..=max_requests),
                )
            })
            .prop_map(|(_, parents, reqs)| {
                let edges: Vec<_> = parents
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (p, i as u32 + 1))
                    .collect();
                let g = Graph::tree(&edges).unwrap();
                let pairs: BTreeSet<_> = reqs
                    .into_iter()
                    .filter(|(x, y)| x != y)
                    .map(|(x, y)| (x.min(y), x.max(y)))
                    .collect();
                Instance::from_pairs(g, &pairs.into_iter().collect::<Vec<_>>()).unwrap()
            })
    }

    proptest! {
        #[test]
        fn peak_is_unique_minimum(inst in tree_instance(25, 6)) {
            let t = inst.graph().as_tree().unwrap();
            for r in inst.requests() {
                let vs = t.path_vertices(r.x(), r.y());
                let min = vs.iter().map(|&v| t.depth(v)).min().unwrap();
                let at_min: Vec<_> = vs.iter().filter(|&&v| t.depth(v) == min).collect();
                prop_assert_eq!(at_min.len(), 1);
                prop_assert_eq!(*at_min[0], peak(t, r).vertex);
                prop_assert_eq!(vs.len() as u32 - 1, t.distance(r.x(), r.y()));
            }
        }

        #[test]
        fn greedy_two_competitive_with_containment(inst in tree_instance(9, 5)) {
            let g = inst.graph().clone();
            let t = g.as_tree().unwrap();
            let out = run(&mut cat_greedy(), &inst, None).unwrap();
            prop_assert!(validate_solution(&inst, &out.solution));
            let opt = brute_force_opt(&inst, GainMode::Count).unwrap().optimum;
            let ratio = GainRatio::new(opt, out.solution.len() as u64);
            prop_assert!(ratio <= GainRatio::new(2, 1));
            if t.max_degree() <= 3 {
                prop_assert_eq!(opt, out.solution.len() as u64);
            }
            let order = cat_order(&g).unwrap();
            for p in out.solution.accepted() {
                let pk = peak(t, p);
                if !pk.at_endpoint {
                    continue;
                }
                let other = if p.x() == pk.vertex { p.y() } else { p.x() };
                let edge = t.child_toward(pk.vertex, other).unwrap() as usize;
                for q in inst.requests() {
                    if order.higher(p, q) && g.intersects(p, q).unwrap() {
                        prop_assert!(g.path_edges(q).unwrap().contains(edge));
                    }
                }
            }
        }

        #[test]
        fn codec_attains_optimum(inst in tree_instance(12, 8)) {
            let t = inst.graph().as_tree().unwrap();
            let mut tape = encode_cat_advice(&inst).unwrap();
            let s = decode_run_cat(&inst, &mut tape).unwrap();
            prop_assert_eq!(tape.consumed(), tape.len());
            let best = greediest_opt(&inst, &cat_order(inst.graph()).unwrap(), GainMode::Count).unwrap();
            prop_assert_eq!(s.accepted(), best.accepted());
            prop_assert!(tape.len() as u64 <= cat_advice_bound(t));
            if t.max_degree() <= 3 {
                prop_assert_eq!(tape.len(), 0);
            }
        }

        #[test]
        fn packing_is_disjoint_and_large(inst in tree_instance(40, 0)) {
            let g = inst.graph();
            let t = g.as_tree().unwrap();
            let copies = pack_s4(t);
            let mut used = EdgeSet::new(g.edge_slots());
            for c in &copies {
                for leaf in c.leaves {
                    let e = t.edge_between(c.center, leaf).unwrap();
                    prop_assert!(!used.contains(e));
                    used.insert(e);
                }
            }
            prop_assert!(copies.len() as u32 >= tree_stats(t).star_bound);
        }
    }
}
