//! Exact offline optima by exhaustive search.

use crate::engine::{presentation_sequence, PriorityOrder};
use crate::error::{DpaError, Result};
use crate::model::{gain, EdgeId, EdgeSet, GainMode, Instance, Request, Solution};

/// Default bound on the number of requests searched exhaustively.
pub const DEFAULT_CAP: usize = 22;

/// Largest grid (by vertex count) the allocation-enumerating search accepts.
pub const GRID_VERTEX_CAP: usize = 9;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub optimum: u64,
    /// The maximizer with the smallest bitmask over the sorted requests.
    pub witness: Solution,
}

/// One way of serving a request: its edges and the gain it contributes.
#[derive(Clone, Debug)]
struct Alternative {
    edges: EdgeSet,
    path: Option<Vec<EdgeId>>,
    gain: u64,
}

struct Search<'a> {
    options: &'a [Vec<Alternative>],
    suffix_bound: Vec<u64>,
    /// suffix_union[i] holds every edge some option of items 0..i can use.
    suffix_union: Vec<EdgeSet>,
    /// Every gain unit occupies at least one edge.
    edge_total: u64,
    /// On paths: item indices by right end, with their edge spans.
    intervals: Option<Intervals>,
    /// Known achievable gain; branches that cannot reach it are cut.
    floor: u64,
    best: u64,
    best_choice: Option<Vec<Option<usize>>>,
    choice: Vec<Option<usize>>,
}

impl Search<'_> {
    fn new(options: &[Vec<Alternative>], edge_total: usize) -> Search<'_> {
        // suffix_bound[i] bounds the gain obtainable from items 0..i.
        let mut suffix_bound = vec![0u64; options.len() + 1];
        let mut suffix_union = vec![EdgeSet::default(); options.len() + 1];
        for i in 0..options.len() {
            let top = options[i].iter().map(|o| o.gain).max().unwrap_or(0);
            suffix_bound[i + 1] = suffix_bound[i] + top;
            let mut union = suffix_union[i].clone();
            options[i].iter().for_each(|o| union.union_with(&o.edges));
            suffix_union[i + 1] = union;
        }
        Search {
            options,
            suffix_bound,
            suffix_union,
            edge_total: edge_total as u64,
            intervals: None,
            floor: 0,
            best: 0,
            best_choice: None,
            choice: vec![None; options.len()],
        }
    }

    /// Decides items `i-1, i-2, .., 0`, excluding before including, so masks are
    /// visited in increasing numeric order.
    fn explore(&mut self, i: usize, used: &mut EdgeSet, current: u64) {
        let free = self.edge_total - used.len() as u64;
        let reachable_edges = self.suffix_union[i].count_outside(used) as u64;
        let mut reachable = current + self.suffix_bound[i].min(free).min(reachable_edges);
        if let Some(iv) = &self.intervals {
            reachable = reachable.min(current + iv.best_below(i, self.options, used));
        }
        if reachable < self.floor || (self.best_choice.is_some() && reachable <= self.best) {
            return;
        }
        if i == 0 {
            if self.best_choice.is_none() || current > self.best {
                self.best = current;
                self.best_choice = Some(self.choice.clone());
            }
            return;
        }
        let k = i - 1;
        self.choice[k] = None;
        self.explore(k, used, current);
        for (j, opt) in self.options[k].iter().enumerate() {
            if opt.edges.intersects(used) {
                continue;
            }
            used.union_with(&opt.edges);
            self.choice[k] = Some(j);
            self.explore(k, used, current + opt.gain);
            used.difference_with(&opt.edges);
        }
        self.choice[k] = None;
    }
}

/// Single-alternative items on a path, for an exact bound on what the
/// undecided items can still add.
struct Intervals {
    /// (right end, left end, item) sorted by right end.
    spans: Vec<(usize, usize, usize)>,
    length: usize,
}

impl Intervals {
    fn new(options: &[Vec<Alternative>], length: usize) -> Option<Self> {
        let mut spans = Vec::with_capacity(options.len());
        for (k, alts) in options.iter().enumerate() {
            let [alt] = alts.as_slice() else { return None };
            let lo = alt.edges.iter().next()?;
            let hi = lo + alt.edges.len();
            spans.push((hi, lo, k));
        }
        spans.sort_unstable();
        Some(Self { spans, length })
    }

    /// Weighted interval scheduling over items `0..limit` that avoid `used`.
    fn best_below(&self, limit: usize, options: &[Vec<Alternative>], used: &EdgeSet) -> u64 {
        let mut best = vec![0u64; self.length + 1];
        let mut next = self.spans.iter().peekable();
        for end in 1..=self.length {
            best[end] = best[end - 1];
            while let Some(&&(hi, lo, k)) = next.peek() {
                if hi != end {
                    break;
                }
                next.next();
                let alt = &options[k][0];
                if k < limit && !alt.edges.intersects(used) {
                    best[end] = best[end].max(best[lo] + alt.gain);
                }
            }
        }
        best[self.length]
    }
}

/// Best of a largest-first and a shortest-first packing, a lower bound for
/// the search.
fn greedy_floor(options: &[Vec<Alternative>], used: &EdgeSet) -> u64 {
    let mut order: Vec<(usize, &Alternative)> = options
        .iter()
        .enumerate()
        .flat_map(|(k, alts)| alts.iter().map(move |a| (k, a)))
        .collect();
    order.sort_by_key(|(_, a)| (std::cmp::Reverse(a.gain), a.edges.len()));
    let largest = pack(options.len(), &order, used);
    order.sort_by_key(|(_, a)| (a.edges.len(), std::cmp::Reverse(a.gain)));
    largest.max(pack(options.len(), &order, used))
}

fn pack(items: usize, order: &[(usize, &Alternative)], used: &EdgeSet) -> u64 {
    let mut used = used.clone();
    let mut taken = vec![false; items];
    let mut total = 0;
    for &(k, a) in order {
        if !taken[k] && !a.edges.intersects(&used) {
            taken[k] = true;
            used.union_with(&a.edges);
            total += a.gain;
        }
    }
    total
}

fn options_for(
    instance: &Instance,
    requests: &[Request],
    mode: GainMode,
) -> Result<Vec<Vec<Alternative>>> {
    let graph = instance.graph();
    let slots = graph.edge_slots();
    requests
        .iter()
        .map(|r| {
            if graph.is_cycle_free() {
                let edges = graph.path_edges(r)?;
                let g = match mode {
                    GainMode::Count => 1,
                    GainMode::Length => u64::from(graph.path_length(r)?),
                };
                Ok(vec![Alternative {
                    edges,
                    path: None,
                    gain: g,
                }])
            } else {
                let grid = graph.as_grid().expect("only grids have cycles");
                Ok(grid
                    .simple_paths(r.x(), r.y())
                    .into_iter()
                    .map(|p| {
                        let mut edges = EdgeSet::new(slots);
                        p.iter().for_each(|&e| edges.insert(e));
                        let g = match mode {
                            GainMode::Count => 1,
                            GainMode::Length => p.len() as u64,
                        };
                        Alternative {
                            edges,
                            path: Some(p),
                            gain: g,
                        }
                    })
                    .collect())
            }
        })
        .collect()
}

fn check_size(instance: &Instance, cap: usize) -> Result<()> {
    if instance.len() > cap {
        return Err(DpaError::InstanceTooLarge {
            size: instance.len(),
            cap,
        });
    }
    if let Some(grid) = instance.graph().as_grid() {
        if grid.vertex_count() > GRID_VERTEX_CAP {
            return Err(DpaError::InstanceTooLarge {
                size: grid.vertex_count(),
                cap: GRID_VERTEX_CAP,
            });
        }
    }
    Ok(())
}

/// Optimum over all valid subsets (and, on grids, all allocations).
pub fn brute_force_opt(instance: &Instance, mode: GainMode) -> Result<OracleResult> {
    brute_force_opt_with_cap(instance, mode, DEFAULT_CAP)
}

pub fn brute_force_opt_with_cap(
    instance: &Instance,
    mode: GainMode,
    cap: usize,
) -> Result<OracleResult> {
    check_size(instance, cap)?;
    let requests = instance.requests();
    let options = options_for(instance, requests, mode)?;
    let mut search = Search::new(&options, instance.graph().edge_count());
    if let Some(path) = instance.graph().as_path() {
        search.intervals = Intervals::new(&options, path.length() as usize);
    }
    let mut used = EdgeSet::new(instance.graph().edge_slots());
    search.floor = greedy_floor(&options, &used);
    search.explore(options.len(), &mut used, 0);
    let choice = search
        .best_choice
        .expect("the empty set is always feasible");
    let mut witness = Solution::empty(instance.graph().clone());
    for (k, c) in choice.iter().enumerate() {
        if let Some(j) = c {
            match &options[k][*j].path {
                Some(p) => witness.accept_with(requests[k], p.clone()),
                None => witness.accept(requests[k]),
            }
        }
    }
    debug_assert_eq!(gain(&witness, mode), search.best);
    Ok(OracleResult {
        optimum: search.best,
        witness,
    })
}

/// Best gain obtainable by adding a subset of `candidates` to `base`.
fn best_extension(
    instance: &Instance,
    base: &[Request],
    candidates: &[Request],
    mode: GainMode,
) -> Result<Option<u64>> {
    let graph = instance.graph();
    let mut used = EdgeSet::new(graph.edge_slots());
    let mut base_gain = 0;
    for r in base {
        let edges = graph.path_edges(r)?;
        if edges.intersects(&used) {
            return Ok(None);
        }
        used.union_with(&edges);
        base_gain += match mode {
            GainMode::Count => 1,
            GainMode::Length => u64::from(graph.path_length(r)?),
        };
    }
    let compatible: Vec<Request> = candidates
        .iter()
        .copied()
        .filter(|r| graph.path_edges(r).is_ok_and(|e| !e.intersects(&used)))
        .collect();
    let options = options_for(instance, &compatible, mode)?;
    let mut search = Search::new(&options, graph.edge_count());
    search.floor = greedy_floor(&options, &used);
    search.explore(options.len(), &mut used, 0);
    Ok(Some(base_gain + search.best))
}

/// The greediest optimal solution under `order`: requests are visited in
/// priority order and kept whenever the kept set plus the new request still
/// extends, using later requests only, to an optimal solution.
pub fn greediest_opt(
    instance: &Instance,
    order: &PriorityOrder,
    mode: GainMode,
) -> Result<Solution> {
    greediest_opt_with_cap(instance, order, mode, DEFAULT_CAP)
}

pub fn greediest_opt_with_cap(
    instance: &Instance,
    order: &PriorityOrder,
    mode: GainMode,
    cap: usize,
) -> Result<Solution> {
    if !instance.graph().is_cycle_free() {
        return Err(DpaError::InvalidArgument(
            "greediest optimal solutions are defined on cycle-free graphs".into(),
        ));
    }
    let optimum = brute_force_opt_with_cap(instance, mode, cap)?.optimum;
    let sequence = presentation_sequence(order, instance)?;
    let mut kept: Vec<Request> = Vec::new();
    for (k, r) in sequence.iter().enumerate() {
        kept.push(*r);
        if best_extension(instance, &kept, &sequence[k + 1..], mode)? != Some(optimum) {
            kept.pop();
        }
    }
    Ok(Solution::from_requests(instance.graph().clone(), kept))
}

/// Every optimal subset (cycle-free graphs, small instances only).
pub fn all_optimal(instance: &Instance, mode: GainMode) -> Result<Vec<Solution>> {
    const ALL_CAP: usize = 16;
    check_size(instance, ALL_CAP)?;
    if !instance.graph().is_cycle_free() {
        return Err(DpaError::InvalidArgument(
            "all_optimal needs a cycle-free graph".into(),
        ));
    }
    let optimum = brute_force_opt(instance, mode)?.optimum;
    let graph = instance.graph();
    let reqs = instance.requests();
    let edges: Vec<EdgeSet> = reqs
        .iter()
        .map(|r| graph.path_edges(r))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    'masks: for mask in 0u32..(1 << reqs.len()) {
        let mut used = EdgeSet::new(graph.edge_slots());
        for (k, e) in edges.iter().enumerate() {
            if mask >> k & 1 == 1 {
                if used.intersects(e) {
                    continue 'masks;
                }
                used.union_with(e);
            }
        }
        let s = Solution::from_requests(
            graph.clone(),
            (0..reqs.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| reqs[k]),
        );
        if gain(&s, mode) == optimum {
            out.push(s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_solution, Graph};
    use proptest::prelude::*;

    /// Straight subset enumeration, independent of the pruned search.
    fn enumerate_opt(instance: &Instance, mode: GainMode) -> u64 {
        let reqs = instance.requests();
        let mut best = 0;
        for mask in 0u32..(1 << reqs.len()) {
            let s = Solution::from_requests(
                instance.graph().clone(),
                (0..reqs.len())
                    .filter(|k| mask >> k & 1 == 1)
                    .map(|k| reqs[k]),
            );
            if validate_solution(instance, &s) {
                best = best.max(gain(&s, mode));
            }
        }
        best
    }

    fn pairs(s: &Solution) -> Vec<(u32, u32)> {
        s.accepted().iter().map(Request::endpoints).collect()
    }

    #[test]
    fn three_requests_on_path() {
        let g = Graph::path(5).unwrap();
        let inst = Instance::from_pairs(g, &[(0, 2), (1, 3), (2, 5)]).unwrap();
        assert_eq!(enumerate_opt(&inst, GainMode::Count), 2);
        assert_eq!(brute_force_opt(&inst, GainMode::Count).unwrap().optimum, 2);
        let by_length = brute_force_opt(&inst, GainMode::Length).unwrap();
        assert_eq!(by_length.optimum, 5);
        assert_eq!(pairs(&by_length.witness), vec![(0, 2), (2, 5)]);
    }

    #[test]
    fn singleton_and_cap() {
        let g = Graph::path(30).unwrap();
        let inst = Instance::from_pairs(g.clone(), &[(3, 9)]).unwrap();
        assert_eq!(brute_force_opt(&inst, GainMode::Length).unwrap().optimum, 6);
        let many: Vec<_> = (0..23).map(|i| (i, i + 1)).collect();
        let big = Instance::from_pairs(g, &many).unwrap();
        assert!(matches!(
            brute_force_opt(&big, GainMode::Count),
            Err(DpaError::InstanceTooLarge { size: 23, cap: 22 })
        ));
    }

    #[test]
    fn witness_is_smallest_mask() {
        // [0,1] and [1,2] versus [0,2]: both optimal in length mode.
        let g = Graph::path(2).unwrap();
        let inst = Instance::from_pairs(g, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let res = brute_force_opt(&inst, GainMode::Length).unwrap();
        assert_eq!(pairs(&res.witness), vec![(0, 2)]);
    }

    #[test]
    fn greediest_prefers_long_request() {
        let g = Graph::path(3).unwrap();
        let inst = Instance::from_pairs(g, &[(0, 3), (0, 1), (1, 2), (2, 3)]).unwrap();
        let order = PriorityOrder::by_key("lwdpa", |r: &Request| {
            (std::cmp::Reverse(r.y() - r.x()), r.x())
        });
        let s = greediest_opt(&inst, &order, GainMode::Length).unwrap();
        assert_eq!(pairs(&s), vec![(0, 3)]);
        let reversed = PriorityOrder::by_key("short", |r: &Request| (r.y() - r.x(), r.x()));
        let s = greediest_opt(&inst, &reversed, GainMode::Length).unwrap();
        assert_eq!(pairs(&s), vec![(0, 1), (1, 2), (2, 3)]);
        let empty = Instance::empty(inst.graph().clone());
        assert!(greediest_opt(&empty, &order, GainMode::Count)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn grid_oracle_enumerates_allocations() {
        let g = Graph::grid(3, 3).unwrap();
        let inst = Instance::from_pairs(g, &[(0, 8), (1, 7), (3, 5)]).unwrap();
        let res = brute_force_opt(&inst, GainMode::Count).unwrap();
        assert!(validate_solution(&inst, &res.witness));
        assert_eq!(res.optimum, enumerate_grid(&inst));
    }

    fn enumerate_grid(inst: &Instance) -> u64 {
        let grid = inst.graph().as_grid().unwrap();
        fn go(
            inst: &Instance,
            grid: &crate::model::GridGraph,
            k: usize,
            used: &mut Vec<bool>,
        ) -> u64 {
            if k == inst.len() {
                return 0;
            }
            let r = inst.requests()[k];
            let mut best = go(inst, grid, k + 1, used);
            for p in grid.simple_paths(r.x(), r.y()) {
                if p.iter().all(|&e| !used[e]) {
                    p.iter().for_each(|&e| used[e] = true);
                    best = best.max(1 + go(inst, grid, k + 1, used));
                    p.iter().for_each(|&e| used[e] = false);
                }
            }
            best
        }
        go(inst, grid, 0, &mut vec![false; grid.edge_count()])
    }

    fn path_instance() -> impl Strategy<Value = Instance> {
        (1u32..=6).prop_flat_map(|l| {
            proptest::collection::btree_set((0..l, 1..=l), 0..=5).prop_map(move |set| {
                let g = Graph::path(l).unwrap();
                let pairs: std::collections::BTreeSet<(u32, u32)> = set
                    .into_iter()
                    .filter(|(x, y)| x != y)
                    .map(|(x, y)| (x.min(y), x.max(y)))
                    .collect();
                Instance::from_pairs(g, &pairs.into_iter().collect::<Vec<_>>()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn search_matches_enumeration(inst in path_instance()) {
            for mode in [GainMode::Count, GainMode::Length] {
                let res = brute_force_opt(&inst, mode).unwrap();
                prop_assert_eq!(res.optimum, enumerate_opt(&inst, mode));
                prop_assert!(validate_solution(&inst, &res.witness));
            }
        }

        #[test]
        fn greediest_is_optimal_and_exchange_closed(inst in path_instance()) {
            let order = PriorityOrder::lexicographic();
            let g = greediest_opt(&inst, &order, GainMode::Count).unwrap();
            prop_assert!(validate_solution(&inst, &g));
            prop_assert_eq!(gain(&g, GainMode::Count), brute_force_opt(&inst, GainMode::Count).unwrap().optimum);
            for p in inst.requests() {
                for q in g.accepted() {
                    if order.higher(p, q) && !g.contains(p) {
                        let swapped = Solution::from_requests(
                            inst.graph().clone(),
                            g.accepted().iter().copied().filter(|r| r != q).chain([*p]),
                        );
                        prop_assert!(!validate_solution(&inst, &swapped));
                    }
                }
            }
        }

        #[test]
        fn optimum_is_monotone(inst in path_instance(), x in 0u32..6, len in 1u32..=6) {
            let l = inst.graph().as_path().unwrap().length();
            let (x, y) = (x.min(l - 1), (x + len).min(l));
            let bigger = inst.with(inst.graph().request(x, y).unwrap()).unwrap();
            for mode in [GainMode::Count, GainMode::Length] {
                prop_assert!(brute_force_opt(&bigger, mode).unwrap().optimum >= brute_force_opt(&inst, mode).unwrap().optimum);
            }
        }
    }
}
