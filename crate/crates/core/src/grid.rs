//! The 3x3 grid: an adversary forcing ratio at least 3/2 on any priority
//! algorithm, and an exhaustive check of its case analysis.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use crate::engine::{
    probe_first, replay_from_probe, PriorityAlgorithm, PriorityOrder, RunState, Verdict,
};
use crate::error::{DpaError, Result};
use crate::model::{
    EdgeId, EdgeSet, GainMode, Graph, GridGraph, Instance, Request, Solution, Vertex,
};
use crate::oracle::brute_force_opt;
use crate::report::GainRatio;
use crate::tape::AdviceTape;

/// A request together with the edge path serving it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridAllocation {
    pub request: Request,
    pub edges: Vec<EdgeId>,
}

impl GridAllocation {
    /// Checks that `edges` is a simple path joining the request's endpoints,
    /// listed from either end.
    pub fn new(graph: &Graph, request: Request, edges: Vec<EdgeId>) -> Result<Self> {
        let alloc = Self { request, edges };
        if alloc.walk(grid_of(graph)?).is_none() {
            return Err(DpaError::InvalidArgument(format!(
                "edges do not form a simple path for {request}"
            )));
        }
        Ok(alloc)
    }

    fn walk(&self, grid: &GridGraph) -> Option<Vec<Vertex>> {
        let (x, y) = self.request.endpoints();
        if let Some(w) = grid
            .walk_vertices(x, &self.edges)
            .filter(|w| w.last() == Some(&y))
        {
            return Some(w);
        }
        let mut w = grid
            .walk_vertices(y, &self.edges)
            .filter(|w| w.last() == Some(&x))?;
        w.reverse();
        Some(w)
    }

    /// Vertices from `request.x()` to `request.y()`.
    pub fn vertices(&self, grid: &GridGraph) -> Vec<Vertex> {
        self.walk(grid).expect("validated on construction")
    }
}

fn grid_of(graph: &Graph) -> Result<&GridGraph> {
    graph
        .as_grid()
        .ok_or_else(|| DpaError::InvalidGraph(format!("{} is not a grid", graph.descriptor())))
}

/// A symmetry of a square grid: optional transpose, then optional flips.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symmetry {
    pub transpose: bool,
    pub flip_rows: bool,
    pub flip_cols: bool,
}

impl Symmetry {
    pub fn all() -> Vec<Symmetry> {
        let mut out = Vec::with_capacity(8);
        for transpose in [false, true] {
            for flip_rows in [false, true] {
                for flip_cols in [false, true] {
                    out.push(Symmetry {
                        transpose,
                        flip_rows,
                        flip_cols,
                    });
                }
            }
        }
        out
    }

    pub fn apply(&self, grid: &GridGraph, v: Vertex) -> Vertex {
        let side = grid.rows();
        let (mut r, mut c) = grid.coords(v);
        if self.transpose {
            std::mem::swap(&mut r, &mut c);
        }
        if self.flip_rows {
            r = side - 1 - r;
        }
        if self.flip_cols {
            c = side - 1 - c;
        }
        grid.vertex(r, c)
    }
}

fn three_by_three() -> Result<Arc<Graph>> {
    Graph::grid(3, 3)
}

fn center(grid: &GridGraph) -> Vertex {
    grid.vertex(1, 1)
}

fn is_corner(grid: &GridGraph, v: Vertex) -> bool {
    let (r, c) = grid.coords(v);
    (r == 0 || r + 1 == grid.rows()) && (c == 0 || c + 1 == grid.cols())
}

/// All requests whose endpoints are at distance 3, sorted.
pub fn distance_three_pairs(graph: &Graph) -> Result<Vec<Request>> {
    let grid = grid_of(graph)?;
    let n = grid.vertex_count() as Vertex;
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if grid.distance(a, b) == 3 {
                out.push(graph.request(a, b)?);
            }
        }
    }
    Ok(out)
}

/// Which follow-up construction applies to an allocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "lowercase")]
pub enum GridCase {
    /// The top request was rejected; serving it alone is enough.
    Rejected { first: (Vertex, Vertex) },
    /// The path avoids the center and bends through `corner`.
    Corner {
        first: (Vertex, Vertex),
        corner: Vertex,
    },
    /// The path runs through the center.
    Center { first: (Vertex, Vertex) },
}

/// Follow-up requests for an accepted top request `first` served along `path`.
///
/// Returns the case, the follow-ups, and the gain they achieve on their own.
pub fn follow_ups(
    graph: &Graph,
    first: &Request,
    path: &[EdgeId],
) -> Result<(GridCase, Vec<Request>, u64)> {
    let grid = grid_of(graph)?;
    if grid.rows() != 3 || grid.cols() != 3 {
        return Err(DpaError::InvalidGraph(
            "the grid construction needs the 3x3 grid".into(),
        ));
    }
    let (v, w) = if is_corner(grid, first.x()) {
        (first.x(), first.y())
    } else {
        (first.y(), first.x())
    };
    let alloc = GridAllocation::new(graph, *first, path.to_vec())?;
    let mut walk = alloc.vertices(grid);
    if walk[0] != v {
        walk.reverse();
    }
    debug_assert_eq!(walk.last(), Some(&w));
    let ends = first.endpoints();
    if walk.contains(&center(grid)) {
        // Canonical frame: v=(0,0), t=(0,1), t'=(0,2), x=(1,0), y=(2,0), z=(2,2).
        let g = Symmetry::all()
            .into_iter()
            .find(|g| {
                g.apply(grid, grid.vertex(0, 0)) == v && g.apply(grid, grid.vertex(0, 1)) == walk[1]
            })
            .ok_or_else(|| {
                DpaError::InvalidArgument(format!("{first} does not start at a corner"))
            })?;
        let at = |r, c| g.apply(grid, grid.vertex(r, c));
        let (t, t2, x, y, z) = (at(0, 1), at(0, 2), at(1, 0), at(2, 0), at(2, 2));
        let mut reqs = vec![
            graph.request(t, y)?,
            graph.request(t, z)?,
            graph.request(t2, x)?,
        ];
        reqs.sort();
        return Ok((GridCase::Center { first: ends }, reqs, 3));
    }
    let corner = walk[1..walk.len() - 1]
        .iter()
        .copied()
        .find(|&u| is_corner(grid, u))
        .ok_or_else(|| {
            DpaError::InvalidArgument(format!(
                "path for {first} has neither center nor inner corner"
            ))
        })?;
    let n = grid.vertex_count() as Vertex;
    let reqs = (0..n)
        .filter(|&u| grid.distance(corner, u) == 3)
        .map(|u| graph.request(corner, u))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        GridCase::Corner {
            first: ends,
            corner,
        },
        reqs,
        2,
    ))
}

/// Largest number of `requests` that fit edge-disjointly while avoiding `blocked`.
pub fn max_packing(graph: &Graph, requests: &[Request], blocked: &EdgeSet) -> Result<u64> {
    let grid = grid_of(graph)?;
    let options: Vec<Vec<EdgeSet>> = requests
        .iter()
        .map(|r| {
            grid.simple_paths(r.x(), r.y())
                .into_iter()
                .map(|p| p.into_iter().collect::<EdgeSet>())
                .filter(|p| !p.intersects(blocked))
                .collect()
        })
        .collect();
    fn go(options: &[Vec<EdgeSet>], used: &mut EdgeSet) -> u64 {
        let Some((head, rest)) = options.split_first() else {
            return 0;
        };
        let mut best = go(rest, used);
        for p in head {
            if best == options.len() as u64 {
                break;
            }
            if !p.intersects(used) {
                used.union_with(p);
                best = best.max(1 + go(rest, used));
                used.difference_with(p);
            }
        }
        best
    }
    let mut used = blocked.clone();
    Ok(go(&options, &mut used))
}

/// Outcome of [`grid_adversary`].
#[derive(Clone, Debug)]
pub struct GridAdversaryOutcome {
    pub case: GridCase,
    pub instance: Instance,
    pub solution: Solution,
    pub gain_alg: u64,
    /// Exact optimum of the served instance.
    pub gain_opt: u64,
    /// Gain of the follow-ups alone over the most the committed path allows;
    /// holds whatever the algorithm does after its first decision.
    pub certified: GainRatio,
}

impl GridAdversaryOutcome {
    pub fn ratio(&self) -> GainRatio {
        GainRatio::new(self.gain_opt, self.gain_alg)
    }
}

/// Serves the top distance-3 request under `alg`'s initial order, then the
/// follow-ups matching the path it chose.
pub fn grid_adversary(alg: &mut dyn PriorityAlgorithm) -> Result<GridAdversaryOutcome> {
    let graph = three_by_three()?;
    let candidates = distance_three_pairs(&graph)?;
    let probe = probe_first(alg, graph.clone(), &candidates)?;
    let first = probe.request;
    let (case, extra, certified) = match (probe.accepted, &probe.allocation) {
        (false, _) => (
            GridCase::Rejected {
                first: first.endpoints(),
            },
            Vec::new(),
            GainRatio::new(1, 0),
        ),
        (true, Some(path)) => {
            let (case, reqs, witness) = follow_ups(&graph, &first, path)?;
            let blocked: EdgeSet = path.iter().copied().collect();
            let cap = 1 + max_packing(&graph, &reqs, &blocked)?;
            (case, reqs, GainRatio::new(witness, cap))
        }
        (true, None) => {
            return Err(DpaError::InvalidArgument(format!(
                "{} accepted {first} without a path",
                alg.name()
            )));
        }
    };
    let mut requests = extra;
    requests.push(first);
    let instance = Instance::new(graph, requests)?;
    let outcome = replay_from_probe(alg, &instance, &probe)?;
    let gain_alg = outcome.solution.len() as u64;
    let gain_opt = brute_force_opt(&instance, GainMode::Count)?.optimum;
    Ok(GridAdversaryOutcome {
        case,
        instance,
        solution: outcome.solution,
        gain_alg,
        gain_opt,
        certified,
    })
}

/// One (request, path) case of the exhaustive check.
#[derive(Clone, Debug, Serialize)]
pub struct CaseCheck {
    pub request: (Vertex, Vertex),
    pub path: Vec<EdgeId>,
    pub through_center: bool,
    pub inner_corner: bool,
    pub case: GridCase,
    pub follow_ups: Vec<(Vertex, Vertex)>,
    /// Follow-ups served on their own.
    pub witness_gain: u64,
    /// Most any algorithm can still gain, counting the first request.
    pub alg_cap: u64,
    /// Exact optimum of the first request plus follow-ups.
    pub oracle_opt: u64,
    pub certified: GainRatio,
    pub passed: bool,
}

/// Summary of [`exhaustive_verify_3x3`].
#[derive(Clone, Debug, Serialize)]
pub struct GridVerification {
    pub pairs: usize,
    /// Orbits of the pairs under the 8 grid symmetries.
    pub orbits: usize,
    pub cases: Vec<CaseCheck>,
    pub corner_cases: usize,
    pub center_cases: usize,
    pub failed: usize,
}

impl GridVerification {
    pub fn passed(&self) -> bool {
        self.failed == 0 && !self.cases.is_empty()
    }
}

/// Checks every distance-3 request and every simple path serving it.
pub fn exhaustive_verify_3x3() -> Result<GridVerification> {
    let graph = three_by_three()?;
    let grid = grid_of(&graph)?;
    let pairs = distance_three_pairs(&graph)?;

    let mut seen = BTreeSet::new();
    let mut orbits = 0;
    let mut orbit_sizes_ok = true;
    for r in &pairs {
        if seen.contains(&r.endpoints()) {
            continue;
        }
        orbits += 1;
        let orbit: BTreeSet<(Vertex, Vertex)> = Symmetry::all()
            .iter()
            .map(|g| {
                let (a, b) = (g.apply(grid, r.x()), g.apply(grid, r.y()));
                (a.min(b), a.max(b))
            })
            .collect();
        orbit_sizes_ok &= orbit.len() == 8;
        seen.extend(orbit);
    }

    let mut cases = Vec::new();
    for r in &pairs {
        let v = if is_corner(grid, r.x()) { r.x() } else { r.y() };
        let w = if v == r.x() { r.y() } else { r.x() };
        for path in grid.simple_paths(v, w) {
            cases.push(check_case(&graph, grid, r, path)?);
        }
    }
    let corner_cases = cases
        .iter()
        .filter(|c| matches!(c.case, GridCase::Corner { .. }))
        .count();
    let center_cases = cases
        .iter()
        .filter(|c| matches!(c.case, GridCase::Center { .. }))
        .count();
    let mut failed = cases.iter().filter(|c| !c.passed).count();
    if !orbit_sizes_ok || orbits * 8 != pairs.len() {
        failed += 1;
    }
    Ok(GridVerification {
        pairs: pairs.len(),
        orbits,
        cases,
        corner_cases,
        center_cases,
        failed,
    })
}

fn check_case(
    graph: &Arc<Graph>,
    grid: &GridGraph,
    r: &Request,
    path: Vec<EdgeId>,
) -> Result<CaseCheck> {
    let alloc = GridAllocation::new(graph, *r, path)?;
    let walk = alloc.vertices(grid);
    let through_center = walk.contains(&center(grid));
    let inner_corner = walk[1..walk.len() - 1].iter().any(|&u| is_corner(grid, u));
    let (case, reqs, claimed) = follow_ups(graph, r, &alloc.edges)?;
    let blocked: EdgeSet = alloc.edges.iter().copied().collect();
    let empty = EdgeSet::new(graph.edge_slots());
    let witness_gain = max_packing(graph, &reqs, &empty)?;
    let alg_cap = 1 + max_packing(graph, &reqs, &blocked)?;
    let mut all = reqs.clone();
    all.push(*r);
    let oracle_opt = brute_force_opt(&Instance::new(graph.clone(), all)?, GainMode::Count)?.optimum;
    let certified = GainRatio::new(witness_gain, alg_cap);
    let needed = match case {
        GridCase::Corner { .. } => GainRatio::new(2, 1),
        _ => GainRatio::new(3, 2),
    };
    let passed = (through_center || inner_corner)
        && witness_gain == claimed
        && certified >= needed
        && oracle_opt >= witness_gain;
    Ok(CaseCheck {
        request: r.endpoints(),
        path: alloc.edges,
        through_center,
        inner_corner,
        case,
        follow_ups: reqs.iter().map(Request::endpoints).collect(),
        witness_gain,
        alg_cap,
        oracle_opt,
        certified,
        passed,
    })
}

/// How a grid greedy picks among the free paths for a request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Routing {
    /// First free path in enumeration order.
    FirstFree,
    /// A shortest free path.
    Shortest,
    /// Shortest free path through the center, if any.
    PreferCenter,
    /// Shortest free path avoiding the center, if any.
    AvoidCenter,
}

impl Routing {
    pub fn name(self) -> &'static str {
        match self {
            Routing::FirstFree => "grid-first-free",
            Routing::Shortest => "grid-shortest",
            Routing::PreferCenter => "grid-prefer-center",
            Routing::AvoidCenter => "grid-avoid-center",
        }
    }
}

/// Accepts every request it can route, by `routing`, under a
/// shortest-request-first order.
pub struct GridGreedy {
    routing: Routing,
}

impl GridGreedy {
    pub fn new(routing: Routing) -> Self {
        Self { routing }
    }
}

impl PriorityAlgorithm for GridGreedy {
    fn name(&self) -> String {
        self.routing.name().into()
    }

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        _: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder> {
        let grid = grid_of(graph)?.clone();
        Ok(PriorityOrder::by_key("shortest-request", move |r| {
            grid.distance(r.x(), r.y())
        }))
    }

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        _: Option<&mut AdviceTape>,
    ) -> Result<Verdict> {
        let grid = grid_of(state.graph())?;
        let mut free = state.free_allocations(request);
        free.sort_by_key(Vec::len);
        let mid = center(grid);
        let touches = |p: &Vec<EdgeId>| {
            grid.walk_vertices(request.x(), p)
                .is_some_and(|w| w.contains(&mid))
        };
        let pick = match self.routing {
            Routing::FirstFree => state.free_allocations(request).into_iter().next(),
            Routing::Shortest => free.first().cloned(),
            Routing::PreferCenter => free.iter().find(|p| touches(p)).or(free.first()).cloned(),
            Routing::AvoidCenter => free.iter().find(|p| !touches(p)).or(free.first()).cloned(),
        };
        Ok(pick.map_or(Verdict::Reject, Verdict::AcceptVia))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::FixedGreedy;
    use proptest::prelude::*;

    struct RejectFirst;

    impl PriorityAlgorithm for RejectFirst {
        fn name(&self) -> String {
            "reject-first".into()
        }
        fn initial_order(
            &mut self,
            _: &Arc<Graph>,
            _: Option<&mut AdviceTape>,
        ) -> Result<PriorityOrder> {
            Ok(PriorityOrder::lexicographic())
        }
        fn decide(
            &mut self,
            r: &Request,
            state: &RunState,
            _: Option<&mut AdviceTape>,
        ) -> Result<Verdict> {
            if state.log().is_empty() {
                return Ok(Verdict::Reject);
            }
            Ok(state
                .free_allocations(r)
                .into_iter()
                .next()
                .map_or(Verdict::Reject, Verdict::AcceptVia))
        }
    }

    /// Accepts the first request along a fixed path, then routes greedily.
    struct Scripted {
        first: Vec<EdgeId>,
    }

    impl PriorityAlgorithm for Scripted {
        fn name(&self) -> String {
            "scripted".into()
        }
        fn initial_order(
            &mut self,
            _: &Arc<Graph>,
            _: Option<&mut AdviceTape>,
        ) -> Result<PriorityOrder> {
            // (0,0)-(1,2) first: vertices 0 and 5.
            Ok(PriorityOrder::by_key("pinned", |r| r.endpoints() != (0, 5)))
        }
        fn decide(
            &mut self,
            r: &Request,
            state: &RunState,
            _: Option<&mut AdviceTape>,
        ) -> Result<Verdict> {
            if state.log().is_empty() {
                return Ok(Verdict::AcceptVia(self.first.clone()));
            }
            Ok(state
                .free_allocations(r)
                .into_iter()
                .next()
                .map_or(Verdict::Reject, Verdict::AcceptVia))
        }
    }

    fn path_through(grid: &GridGraph, vertices: &[(u32, u32)]) -> Vec<EdgeId> {
        vertices
            .windows(2)
            .map(|w| {
                grid.edge_between(grid.vertex(w[0].0, w[0].1), grid.vertex(w[1].0, w[1].1))
                    .unwrap()
            })
            .collect()
    }

    /// Pair count by brute force over coordinates.
    #[test]
    fn pair_enumeration() {
        let graph = three_by_three().unwrap();
        let pairs = distance_three_pairs(&graph).unwrap();
        let mut count = 0;
        for a in 0..9i32 {
            for b in a + 1..9 {
                if (a / 3 - b / 3).abs() + (a % 3 - b % 3).abs() == 3 {
                    count += 1;
                }
            }
        }
        assert_eq!(pairs.len(), count);
        assert_eq!(count, 8);
        let grid = graph.as_grid().unwrap();
        for r in &pairs {
            assert_eq!(grid.simple_paths(r.x(), r.y()).len(), 10);
        }
    }

    #[test]
    fn symmetries_are_distinct_automorphisms() {
        let graph = three_by_three().unwrap();
        let grid = graph.as_grid().unwrap();
        let images: BTreeSet<Vec<Vertex>> = Symmetry::all()
            .iter()
            .map(|g| (0..9).map(|v| g.apply(grid, v)).collect())
            .collect();
        assert_eq!(images.len(), 8);
        for g in Symmetry::all() {
            for e in 0..grid.edge_count() {
                let (a, b) = grid.edge_endpoints(e);
                assert!(grid
                    .edge_between(g.apply(grid, a), g.apply(grid, b))
                    .is_some());
            }
        }
    }

    #[test]
    fn reject_first_is_unbounded() {
        let out = grid_adversary(&mut RejectFirst).unwrap();
        assert!(matches!(out.case, GridCase::Rejected { .. }));
        assert!(out.ratio().is_unbounded());
        assert_eq!(out.instance.len(), 1);
    }

    #[test]
    fn corner_path_blocks_both_follow_ups() {
        let graph = three_by_three().unwrap();
        let grid = graph.as_grid().unwrap();
        // (0,0) -> (0,1) -> (0,2) -> (1,2): bends through corner (0,2).
        let first = path_through(grid, &[(0, 0), (0, 1), (0, 2), (1, 2)]);
        let out = grid_adversary(&mut Scripted { first }).unwrap();
        assert_eq!(
            out.case,
            GridCase::Corner {
                first: (0, 5),
                corner: 2
            }
        );
        assert_eq!(out.gain_alg, 1);
        assert_eq!(
            out.certified.cmp(&GainRatio::new(2, 1)),
            std::cmp::Ordering::Equal
        );
        assert!(out.ratio() >= out.certified);
    }

    #[test]
    fn center_path_leaves_one_follow_up() {
        let graph = three_by_three().unwrap();
        let grid = graph.as_grid().unwrap();
        // (0,0) -> (1,0) -> (1,1) -> (1,2): straight through the center.
        let first = path_through(grid, &[(0, 0), (1, 0), (1, 1), (1, 2)]);
        let (case, reqs, witness) =
            follow_ups(&graph, &graph.request(0, 5).unwrap(), &first).unwrap();
        assert_eq!(case, GridCase::Center { first: (0, 5) });
        assert_eq!(witness, 3);
        let blocked: EdgeSet = first.iter().copied().collect();
        assert_eq!(max_packing(&graph, &reqs, &blocked).unwrap(), 1);
        let out = grid_adversary(&mut Scripted { first }).unwrap();
        assert!(out.certified >= GainRatio::new(3, 2));
        assert!(out.gain_alg <= 2);
    }

    #[test]
    fn exhaustive_check_passes() {
        let report = exhaustive_verify_3x3().unwrap();
        assert_eq!(report.pairs, 8);
        assert_eq!(report.orbits, 1);
        assert_eq!(report.cases.len(), 80);
        assert_eq!(report.corner_cases + report.center_cases, 80);
        assert!(
            report.passed(),
            "{:?}",
            report
                .cases
                .iter()
                .filter(|c| !c.passed)
                .collect::<Vec<_>>()
        );
        for c in &report.cases {
            assert!(c.through_center || c.inner_corner);
        }
    }

    #[test]
    fn battery_of_routings() {
        for routing in [
            Routing::FirstFree,
            Routing::Shortest,
            Routing::PreferCenter,
            Routing::AvoidCenter,
        ] {
            let out = grid_adversary(&mut GridGreedy::new(routing)).unwrap();
            assert!(out.certified >= GainRatio::new(3, 2), "{}", routing.name());
            assert!(out.ratio() >= out.certified);
        }
        let mut fixed = FixedGreedy::new("lex", |_| Ok(PriorityOrder::lexicographic()));
        assert!(grid_adversary(&mut fixed).unwrap().ratio() >= GainRatio::new(3, 2));
    }

    proptest! {
        #[test]
        fn packing_matches_oracle(picks in prop::collection::btree_set((0u32..9, 0u32..9), 1..5)) {
            let graph = three_by_three().unwrap();
            let reqs: BTreeSet<Request> = picks
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| graph.request(a, b).unwrap())
                .collect();
            let reqs: Vec<Request> = reqs.into_iter().collect();
            let empty = EdgeSet::new(graph.edge_slots());
            let packed = max_packing(&graph, &reqs, &empty).unwrap();
            let opt = brute_force_opt(&Instance::new(graph.clone(), reqs).unwrap(), GainMode::Count).unwrap().optimum;
            prop_assert_eq!(packed, opt);
        }
    }
}
