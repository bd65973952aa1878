//! Priority orders, the presentation loop and the algorithm interface.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{DpaError, Result};
use crate::model::{EdgeId, EdgeSet, Graph, Instance, Request, Solution};
use crate::tape::AdviceTape;

type Rule = dyn Fn(&Request, &Request) -> Ordering + Send + Sync;

/// A strict total order on the requests of one graph.
///
/// The rule returns `Greater` when its first argument has higher priority and
/// `Equal` when it does not decide; remaining ties go to the smaller
/// normalized endpoint pair.
#[derive(Clone)]
pub struct PriorityOrder {
    name: String,
    rule: Arc<Rule>,
}

impl fmt::Debug for PriorityOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PriorityOrder")
            .field("name", &self.name)
            .finish()
    }
}

impl PriorityOrder {
    pub fn new(
        name: impl Into<String>,
        rule: impl Fn(&Request, &Request) -> Ordering + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    /// Orders by ascending key: the smaller key has higher priority.
    pub fn by_key<K: Ord>(
        name: impl Into<String>,
        key: impl Fn(&Request) -> K + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, move |a, b| key(b).cmp(&key(a)))
    }

    /// Pure tie-break order: smaller endpoint pair first.
    pub fn lexicographic() -> Self {
        Self::new("lexicographic", |_, _| Ordering::Equal)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `Greater` iff `a` has higher priority than `b`.
    pub fn compare(&self, a: &Request, b: &Request) -> Ordering {
        (self.rule)(a, b).then_with(|| b.endpoints().cmp(&a.endpoints()))
    }

    pub fn higher(&self, a: &Request, b: &Request) -> bool {
        self.compare(a, b) == Ordering::Greater
    }

    /// Highest-priority request among `candidates`.
    pub fn max_of<'a>(&self, candidates: impl IntoIterator<Item = &'a Request>) -> Option<Request> {
        candidates
            .into_iter()
            .copied()
            .reduce(|best, r| if self.higher(&r, &best) { r } else { best })
    }

    /// Like [`max_of`](Self::max_of) but checks the winner strictly beats every
    /// other candidate in both directions.
    pub fn checked_max(&self, candidates: &[Request]) -> Result<Option<Request>> {
        let Some(best) = self.max_of(candidates) else {
            return Ok(None);
        };
        for r in candidates {
            if *r == best {
                continue;
            }
            if self.compare(&best, r) != Ordering::Greater
                || self.compare(r, &best) != Ordering::Less
            {
                return Err(DpaError::InvalidOrder(format!(
                    "order {} does not strictly separate {best} and {r}",
                    self.name
                )));
            }
        }
        Ok(Some(best))
    }
}

/// `instance` sorted by strictly descending priority.
pub fn presentation_sequence(order: &PriorityOrder, instance: &Instance) -> Result<Vec<Request>> {
    let mut remaining = instance.requests().to_vec();
    let mut out = Vec::with_capacity(remaining.len());
    while let Some(best) = order.checked_max(&remaining)? {
        remaining.retain(|r| *r != best);
        out.push(best);
    }
    Ok(out)
}

/// An algorithm's answer for one request.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    /// Accept along an explicit edge path (required on grids).
    AcceptVia(Vec<EdgeId>),
    Reject,
}

/// One logged decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub request: Request,
    pub accepted: bool,
    pub allocation: Option<Vec<EdgeId>>,
}

/// What an algorithm may see while deciding: its own past.
#[derive(Clone, Debug)]
pub struct RunState {
    graph: Arc<Graph>,
    used: EdgeSet,
    solution: Solution,
    log: Vec<Decision>,
}

impl RunState {
    pub fn new(graph: Arc<Graph>) -> Self {
        Self {
            used: EdgeSet::new(graph.edge_slots()),
            solution: Solution::empty(graph.clone()),
            graph,
            log: Vec::new(),
        }
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    /// Edges occupied by accepted requests.
    pub fn used_edges(&self) -> &EdgeSet {
        &self.used
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn log(&self) -> &[Decision] {
        &self.log
    }

    pub fn was_presented(&self, r: &Request) -> bool {
        self.log.iter().any(|d| d.request == *r)
    }

    /// Whether the unique path of `r` meets an accepted path.
    ///
    /// On grids this asks whether every simple realization is blocked.
    pub fn is_blocked(&self, r: &Request) -> bool {
        match self.graph.as_grid() {
            Some(_) if !self.graph.is_cycle_free() => self.free_allocations(r).is_empty(),
            _ => self
                .graph
                .path_edges(r)
                .map_or(true, |edges| edges.intersects(&self.used)),
        }
    }

    /// Simple grid paths for `r` avoiding all used edges.
    pub fn free_allocations(&self, r: &Request) -> Vec<Vec<EdgeId>> {
        let Some(grid) = self.graph.as_grid() else {
            return Vec::new();
        };
        grid.simple_paths(r.x(), r.y())
            .into_iter()
            .filter(|p| p.iter().all(|&e| !self.used.contains(e)))
            .collect()
    }

    fn record(&mut self, request: Request, verdict: Verdict, algorithm: &str) -> Result<Decision> {
        let illegal = || DpaError::IllegalAcceptance {
            algorithm: algorithm.to_string(),
            request: request.to_string(),
        };
        let decision = match verdict {
            Verdict::Reject => Decision {
                request,
                accepted: false,
                allocation: None,
            },
            Verdict::Accept => {
                if !self.graph.is_cycle_free() {
                    return Err(illegal());
                }
                let edges = self.graph.path_edges(&request)?;
                if edges.intersects(&self.used) {
                    return Err(illegal());
                }
                self.used.union_with(&edges);
                self.solution.accept(request);
                Decision {
                    request,
                    accepted: true,
                    allocation: None,
                }
            }
            Verdict::AcceptVia(alloc) => {
                let grid = self.graph.as_grid().ok_or_else(illegal)?;
                match grid.walk_vertices(request.x(), &alloc) {
                    Some(vs) if vs.last() == Some(&request.y()) => {}
                    _ => return Err(illegal()),
                }
                if alloc.iter().any(|&e| self.used.contains(e)) {
                    return Err(illegal());
                }
                alloc.iter().for_each(|&e| self.used.insert(e));
                self.solution.accept_with(request, alloc.clone());
                Decision {
                    request,
                    accepted: true,
                    allocation: Some(alloc),
                }
            }
        };
        self.log.push(decision.clone());
        Ok(decision)
    }
}

/// A (possibly adaptive, possibly advice-reading) priority algorithm.
///
/// `initial_order` starts a fresh run and must reset any per-run state.
pub trait PriorityAlgorithm {
    fn name(&self) -> String;

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        advice: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder>;

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        advice: Option<&mut AdviceTape>,
    ) -> Result<Verdict>;

    /// New order after a decision; `None` keeps the current one.
    fn reorder(&mut self, _state: &RunState) -> Option<PriorityOrder> {
        None
    }
}

/// An in-progress run that a driver feeds one request at a time.
///
/// Adversaries and reductions use it to look at the current order before
/// choosing what to present next.
pub struct Session<'a> {
    alg: &'a mut dyn PriorityAlgorithm,
    tape: Option<&'a mut AdviceTape>,
    order: PriorityOrder,
    state: RunState,
}

impl<'a> Session<'a> {
    pub fn start(
        alg: &'a mut dyn PriorityAlgorithm,
        graph: Arc<Graph>,
        mut tape: Option<&'a mut AdviceTape>,
    ) -> Result<Self> {
        let order = alg.initial_order(&graph, tape.as_deref_mut())?;
        Ok(Self {
            alg,
            tape,
            order,
            state: RunState::new(graph),
        })
    }

    pub fn order(&self) -> &PriorityOrder {
        &self.order
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn algorithm_name(&self) -> String {
        self.alg.name()
    }

    pub fn bits_consumed(&self) -> usize {
        self.tape.as_ref().map_or(0, |t| t.consumed())
    }

    /// Presents `r` and returns the algorithm's irrevocable decision.
    pub fn feed(&mut self, r: Request) -> Result<Decision> {
        if !self.state.graph.owns(&r) {
            return Err(DpaError::InvalidRequest(format!(
                "{r} is not on the session graph"
            )));
        }
        if self.state.was_presented(&r) {
            return Err(DpaError::InvalidRequest(format!(
                "{r} was already presented"
            )));
        }
        let verdict = self.alg.decide(&r, &self.state, self.tape.as_deref_mut())?;
        let name = self.alg.name();
        let decision = self.state.record(r, verdict, &name)?;
        if let Some(next) = self.alg.reorder(&self.state) {
            self.order = next;
        }
        Ok(decision)
    }

    pub fn finish(self) -> RunOutcome {
        let bits_consumed = self.bits_consumed();
        RunOutcome {
            solution: self.state.solution,
            log: self.state.log,
            bits_consumed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub solution: Solution,
    pub log: Vec<Decision>,
    pub bits_consumed: usize,
}

/// Presents `instance` to `alg`, always picking the current-order maximum of
/// the requests not yet presented.
pub fn run(
    alg: &mut dyn PriorityAlgorithm,
    instance: &Instance,
    tape: Option<&mut AdviceTape>,
) -> Result<RunOutcome> {
    let mut session = Session::start(alg, instance.graph().clone(), tape)?;
    let mut remaining = instance.requests().to_vec();
    while let Some(next) = session.order().checked_max(&remaining)? {
        remaining.retain(|r| *r != next);
        session.feed(next)?;
    }
    Ok(session.finish())
}

/// Starts a run, presents the highest-priority request among `candidates`
/// under the algorithm's initial order, and returns that first decision.
pub fn probe_first(
    alg: &mut dyn PriorityAlgorithm,
    graph: Arc<Graph>,
    candidates: &[Request],
) -> Result<Decision> {
    let mut session = Session::start(alg, graph, None)?;
    let top = session
        .order()
        .checked_max(candidates)?
        .ok_or_else(|| DpaError::InvalidArgument("no candidate requests".into()))?;
    session.feed(top)
}

/// Runs `instance` from scratch and checks that the run opens with the
/// decision seen by [`probe_first`].
pub fn replay_from_probe(
    alg: &mut dyn PriorityAlgorithm,
    instance: &Instance,
    probe: &Decision,
) -> Result<RunOutcome> {
    let outcome = run(alg, instance, None)?;
    if outcome.log.first() != Some(probe) {
        return Err(DpaError::InvalidArgument(format!(
            "{} did not repeat its first decision on {}",
            alg.name(),
            probe.request
        )));
    }
    Ok(outcome)
}

type OrderFactory = Box<dyn Fn(&Arc<Graph>) -> Result<PriorityOrder> + Send + Sync>;

/// Accepts every unblocked request under a fixed order.
pub struct FixedGreedy {
    name: String,
    make_order: OrderFactory,
}

impl FixedGreedy {
    pub fn new(
        name: impl Into<String>,
        make_order: impl Fn(&Arc<Graph>) -> Result<PriorityOrder> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            make_order: Box::new(make_order),
        }
    }
}

impl PriorityAlgorithm for FixedGreedy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        _: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder> {
        (self.make_order)(graph)
    }

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        _: Option<&mut AdviceTape>,
    ) -> Result<Verdict> {
        if !state.graph().is_cycle_free() {
            return Ok(match state.free_allocations(request).into_iter().next() {
                Some(path) => Verdict::AcceptVia(path),
                None => Verdict::Reject,
            });
        }
        Ok(if state.is_blocked(request) {
            Verdict::Reject
        } else {
            Verdict::Accept
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Graph;
    use proptest::prelude::*;

    fn right_end() -> PriorityOrder {
        PriorityOrder::by_key("right-end", |r: &Request| r.y())
    }

    #[test]
    fn presentation_follows_right_ends() {
        let g = Graph::path(5).unwrap();
        let inst = Instance::from_pairs(g.clone(), &[(2, 5), (0, 2), (1, 3)]).unwrap();
        let seq = presentation_sequence(&right_end(), &inst).unwrap();
        let pairs: Vec<_> = seq.iter().map(Request::endpoints).collect();
        assert_eq!(pairs, vec![(0, 2), (1, 3), (2, 5)]);
    }

    #[test]
    fn inconsistent_order_detected() {
        let g = Graph::path(5).unwrap();
        let inst = Instance::from_pairs(g, &[(0, 1), (1, 2)]).unwrap();
        let broken = PriorityOrder::new("always-greater", |_, _| Ordering::Greater);
        assert!(matches!(
            presentation_sequence(&broken, &inst),
            Err(DpaError::InvalidOrder(_))
        ));
    }

    #[test]
    fn greedy_run_and_advice_free_tape() {
        let g = Graph::path(5).unwrap();
        let inst = Instance::from_pairs(g.clone(), &[(0, 2), (1, 3), (2, 5)]).unwrap();
        let mut alg = FixedGreedy::new("greedy", |_| Ok(right_end()));
        let mut tape = AdviceTape::from_bit_str("1011").unwrap();
        let out = run(&mut alg, &inst, Some(&mut tape)).unwrap();
        let accepted: Vec<_> = out
            .solution
            .accepted()
            .iter()
            .map(Request::endpoints)
            .collect();
        assert_eq!(accepted, vec![(0, 2), (2, 5)]);
        assert_eq!(out.bits_consumed, 0);
        let visited: Vec<_> = out.log.iter().map(|d| d.request).collect();
        assert_eq!(visited, presentation_sequence(&right_end(), &inst).unwrap());
    }

    struct AcceptAll;

    impl PriorityAlgorithm for AcceptAll {
        fn name(&self) -> String {
            "accept-all".into()
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
            _: &Request,
            _: &RunState,
            _: Option<&mut AdviceTape>,
        ) -> Result<Verdict> {
            Ok(Verdict::Accept)
        }
    }

    #[test]
    fn blocked_acceptance_aborts() {
        let g = Graph::path(5).unwrap();
        let inst = Instance::from_pairs(g.clone(), &[(0, 2), (1, 3)]).unwrap();
        assert!(matches!(
            run(&mut AcceptAll, &inst, None),
            Err(DpaError::IllegalAcceptance { .. })
        ));
        let single = Instance::from_pairs(g, &[(1, 3)]).unwrap();
        assert_eq!(
            run(&mut AcceptAll, &single, None).unwrap().solution.len(),
            1
        );
    }

    proptest! {
        #[test]
        fn orders_are_strict_and_transitive(
            triples in proptest::collection::vec((0u32..8, 0u32..8), 3)
        ) {
            let g = Graph::path(8).unwrap();
            let reqs: Vec<Request> = triples
                .iter()
                .filter(|(x, y)| x != y)
                .map(|&(x, y)| g.request(x, y).unwrap())
                .collect();
            let order = PriorityOrder::by_key("len", |r: &Request| std::cmp::Reverse(r.y() - r.x()));
            for a in &reqs {
                prop_assert_eq!(order.compare(a, a), Ordering::Equal);
                for b in &reqs {
                    prop_assert_eq!(order.compare(a, b), order.compare(b, a).reverse());
                    for c in &reqs {
                        if order.higher(a, b) && order.higher(b, c) {
                            prop_assert!(order.higher(a, c));
                        }
                    }
                }
            }
        }
    }
}
