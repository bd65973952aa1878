//! A battery of fixed and adaptive priority strategies used to exercise the
//! adversaries and reductions, plus lookup by name.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cat::{cat_order, CatAdviceDecoder};
use crate::dpa_path::right_end_order;
use crate::engine::{PriorityAlgorithm, PriorityOrder, RunState, Verdict};
use crate::error::{DpaError, Result};
use crate::grid::{GridGreedy, Routing};
use crate::lwdpa::{lwdpa_order, LwdpaAdviceDecoder};
use crate::model::{Graph, Request};
use crate::tape::AdviceTape;

/// Number of seeded random-order greedies in the battery.
pub const SEEDED_ORDERS: u64 = 10;

/// Length of the request: path length on cycle-free graphs, distance on grids.
fn span(graph: &Graph, r: &Request) -> u32 {
    match graph.as_grid() {
        Some(grid) => grid.distance(r.x(), r.y()),
        None => graph.path_length(r).unwrap_or(0),
    }
}

/// A recipe for an initial order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderSpec {
    Lexicographic,
    /// Smaller right endpoint first.
    RightEnd,
    /// Longer first, then further left.
    LongestFirst,
    ShortestFirst,
    /// Deepest peak first; trees only.
    Peak,
    /// Independent random key per vertex pair.
    Seeded(u64),
}

impl OrderSpec {
    pub fn build(self, graph: &Arc<Graph>) -> Result<PriorityOrder> {
        Ok(match self {
            OrderSpec::Lexicographic => PriorityOrder::lexicographic(),
            OrderSpec::RightEnd => right_end_order(),
            OrderSpec::LongestFirst if graph.as_path().is_some() => lwdpa_order(),
            OrderSpec::LongestFirst => {
                let g = graph.clone();
                PriorityOrder::by_key("longest-first", move |r| Reverse(span(&g, r)))
            }
            OrderSpec::ShortestFirst => {
                let g = graph.clone();
                PriorityOrder::by_key("shortest-first", move |r| span(&g, r))
            }
            OrderSpec::Peak => cat_order(graph)?,
            OrderSpec::Seeded(seed) => seeded_order(graph, seed),
        })
    }

    fn label(self) -> String {
        match self {
            OrderSpec::Lexicographic => "lex".into(),
            OrderSpec::RightEnd => "path".into(),
            OrderSpec::LongestFirst => "lwdpa".into(),
            OrderSpec::ShortestFirst => "short".into(),
            OrderSpec::Peak => "cat".into(),
            OrderSpec::Seeded(seed) => format!("seed-{seed}"),
        }
    }
}

/// Random priorities: every vertex pair gets a key drawn in sorted pair order.
fn seeded_order(graph: &Arc<Graph>, seed: u64) -> PriorityOrder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: BTreeMap<(u32, u32), u64> = graph
        .all_requests()
        .into_iter()
        .map(|r| (r.endpoints(), rng.gen()))
        .collect();
    PriorityOrder::by_key(format!("seeded-{seed}"), move |r| {
        keys.get(&r.endpoints()).copied()
    })
}

/// Accept if some path is free; on grids pick the first free path.
fn accept_if_free(request: &Request, state: &RunState) -> Verdict {
    if state.graph().is_cycle_free() {
        if state.is_blocked(request) {
            Verdict::Reject
        } else {
            Verdict::Accept
        }
    } else {
        state
            .free_allocations(request)
            .into_iter()
            .next()
            .map_or(Verdict::Reject, Verdict::AcceptVia)
    }
}

/// What a battery member does with each request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Policy {
    Greedy,
    /// Rejects the first request, then greedy.
    RejectFirst,
    /// Accepts the first request and nothing else.
    FirstOnly,
    /// Accepts free requests with probability one half.
    Coin(u64),
}

/// A fixed-order member of the battery.
pub struct Strategy {
    order: OrderSpec,
    policy: Policy,
    rng: ChaCha8Rng,
}

impl Strategy {
    pub fn greedy(order: OrderSpec) -> Self {
        Self::with(order, Policy::Greedy)
    }

    pub fn reject_first(order: OrderSpec) -> Self {
        Self::with(order, Policy::RejectFirst)
    }

    pub fn first_only(order: OrderSpec) -> Self {
        Self::with(order, Policy::FirstOnly)
    }

    pub fn coin(order: OrderSpec, seed: u64) -> Self {
        Self::with(order, Policy::Coin(seed))
    }

    fn with(order: OrderSpec, policy: Policy) -> Self {
        Self {
            order,
            policy,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl PriorityAlgorithm for Strategy {
    fn name(&self) -> String {
        let order = self.order.label();
        match self.policy {
            Policy::Greedy => format!("greedy-{order}"),
            Policy::RejectFirst => format!("reject-first-{order}"),
            Policy::FirstOnly => format!("first-only-{order}"),
            Policy::Coin(seed) => format!("coin-{seed}-{order}"),
        }
    }

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        _: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder> {
        if let Policy::Coin(seed) = self.policy {
            self.rng = ChaCha8Rng::seed_from_u64(seed);
        }
        self.order.build(graph)
    }

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        _: Option<&mut AdviceTape>,
    ) -> Result<Verdict> {
        let first = state.log().is_empty();
        Ok(match self.policy {
            Policy::Greedy => accept_if_free(request, state),
            Policy::RejectFirst if first => Verdict::Reject,
            Policy::RejectFirst => accept_if_free(request, state),
            Policy::FirstOnly if first => accept_if_free(request, state),
            Policy::FirstOnly => Verdict::Reject,
            Policy::Coin(_) => {
                let verdict = accept_if_free(request, state);
                if verdict != Verdict::Reject && self.rng.gen_bool(0.5) {
                    verdict
                } else {
                    Verdict::Reject
                }
            }
        })
    }
}

/// Greedy that switches between longest-first and shortest-first after every
/// decision.
pub struct Alternating {
    graph: Option<Arc<Graph>>,
    decisions: usize,
}

impl Alternating {
    pub fn new() -> Self {
        Self {
            graph: None,
            decisions: 0,
        }
    }

    fn current(&self) -> Result<PriorityOrder> {
        let graph = self.graph.as_ref().expect("set by initial_order");
        if self.decisions.is_multiple_of(2) {
            OrderSpec::LongestFirst.build(graph)
        } else {
            OrderSpec::ShortestFirst.build(graph)
        }
    }
}

impl Default for Alternating {
    fn default() -> Self {
        Self::new()
    }
}

impl PriorityAlgorithm for Alternating {
    fn name(&self) -> String {
        "adaptive-alternating".into()
    }

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        _: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder> {
        self.graph = Some(graph.clone());
        self.decisions = 0;
        self.current()
    }

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        _: Option<&mut AdviceTape>,
    ) -> Result<Verdict> {
        Ok(accept_if_free(request, state))
    }

    fn reorder(&mut self, _: &RunState) -> Option<PriorityOrder> {
        self.decisions += 1;
        self.current().ok()
    }
}

/// Greedy that draws a fresh random order after every decision.
pub struct Reshuffling {
    seed: u64,
    rng: ChaCha8Rng,
    graph: Option<Arc<Graph>>,
}

impl Reshuffling {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            graph: None,
        }
    }

    fn draw(&mut self) -> PriorityOrder {
        let graph = self.graph.as_ref().expect("set by initial_order");
        let mut pairs: Vec<(u32, u32)> = graph
            .all_requests()
            .iter()
            .map(Request::endpoints)
            .collect();
        pairs.shuffle(&mut self.rng);
        let rank: BTreeMap<(u32, u32), usize> =
            pairs.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
        PriorityOrder::by_key(format!("reshuffled-{}", self.seed), move |r| {
            rank.get(&r.endpoints()).copied()
        })
    }
}

impl PriorityAlgorithm for Reshuffling {
    fn name(&self) -> String {
        format!("adaptive-random-{}", self.seed)
    }

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        _: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder> {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.graph = Some(graph.clone());
        Ok(self.draw())
    }

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        _: Option<&mut AdviceTape>,
    ) -> Result<Verdict> {
        Ok(accept_if_free(request, state))
    }

    fn reorder(&mut self, _: &RunState) -> Option<PriorityOrder> {
        Some(self.draw())
    }
}

pub type BoxedAlgorithm = Box<dyn PriorityAlgorithm>;

/// Strategies valid on every graph class.
pub fn battery() -> Vec<BoxedAlgorithm> {
    let mut out: Vec<BoxedAlgorithm> = vec![
        Box::new(Strategy::greedy(OrderSpec::Lexicographic)),
        Box::new(Strategy::greedy(OrderSpec::RightEnd)),
        Box::new(Strategy::greedy(OrderSpec::LongestFirst)),
        Box::new(Strategy::greedy(OrderSpec::ShortestFirst)),
        Box::new(Strategy::reject_first(OrderSpec::LongestFirst)),
        Box::new(Strategy::first_only(OrderSpec::Lexicographic)),
        Box::new(Strategy::coin(OrderSpec::LongestFirst, 7)),
        Box::new(Alternating::new()),
        Box::new(Reshuffling::new(11)),
    ];
    for seed in 0..SEEDED_ORDERS {
        out.push(Box::new(Strategy::greedy(OrderSpec::Seeded(seed))));
    }
    out
}

/// The general battery plus the peak-order greedy.
pub fn tree_battery() -> Vec<BoxedAlgorithm> {
    let mut out = battery();
    out.push(Box::new(Strategy::greedy(OrderSpec::Peak)));
    out.push(Box::new(Strategy::reject_first(OrderSpec::Peak)));
    out
}

/// The general battery plus the routing variants.
pub fn grid_battery() -> Vec<BoxedAlgorithm> {
    let mut out = battery();
    for routing in [
        Routing::FirstFree,
        Routing::Shortest,
        Routing::PreferCenter,
        Routing::AvoidCenter,
    ] {
        out.push(Box::new(GridGreedy::new(routing)));
    }
    out
}

/// Every name [`algorithm_by_name`] understands, besides the parametrized
/// `greedy-seed-N`, `coin-N-ORDER` and `adaptive-random-N` families.
pub const NAMED: &[&str] = &[
    "greedy-path",
    "greedy-lwdpa",
    "greedy-cat",
    "greedy-lex",
    "greedy-short",
    "reject-first",
    "first-only",
    "adaptive-alternating",
    "advice-lwdpa",
    "advice-cat",
    "grid-first-free",
    "grid-shortest",
    "grid-prefer-center",
    "grid-avoid-center",
];

fn order_by_label(label: &str) -> Option<OrderSpec> {
    Some(match label {
        "lex" => OrderSpec::Lexicographic,
        "path" => OrderSpec::RightEnd,
        "lwdpa" => OrderSpec::LongestFirst,
        "short" => OrderSpec::ShortestFirst,
        "cat" => OrderSpec::Peak,
        other => OrderSpec::Seeded(other.strip_prefix("seed-")?.parse().ok()?),
    })
}

/// Builds an algorithm from its name.
pub fn algorithm_by_name(name: &str) -> Result<BoxedAlgorithm> {
    let unknown = || DpaError::InvalidArgument(format!("unknown algorithm {name:?}"));
    let alg: BoxedAlgorithm = match name {
        "advice-lwdpa" => Box::new(LwdpaAdviceDecoder::new()),
        "advice-cat" => Box::new(CatAdviceDecoder::new()),
        "reject-first" => Box::new(Strategy::reject_first(OrderSpec::LongestFirst)),
        "first-only" => Box::new(Strategy::first_only(OrderSpec::Lexicographic)),
        "adaptive-alternating" => Box::new(Alternating::new()),
        "grid-first-free" => Box::new(GridGreedy::new(Routing::FirstFree)),
        "grid-shortest" => Box::new(GridGreedy::new(Routing::Shortest)),
        "grid-prefer-center" => Box::new(GridGreedy::new(Routing::PreferCenter)),
        "grid-avoid-center" => Box::new(GridGreedy::new(Routing::AvoidCenter)),
        _ => {
            if let Some(seed) = name.strip_prefix("adaptive-random-") {
                Box::new(Reshuffling::new(seed.parse().map_err(|_| unknown())?))
            } else if let Some(rest) = name.strip_prefix("reject-first-") {
                Box::new(Strategy::reject_first(
                    order_by_label(rest).ok_or_else(unknown)?,
                ))
            } else if let Some(rest) = name.strip_prefix("first-only-") {
                Box::new(Strategy::first_only(
                    order_by_label(rest).ok_or_else(unknown)?,
                ))
            } else if let Some(rest) = name.strip_prefix("coin-") {
                let (seed, order) = rest.split_once('-').ok_or_else(unknown)?;
                let seed = seed.parse().map_err(|_| unknown())?;
                Box::new(Strategy::coin(
                    order_by_label(order).ok_or_else(unknown)?,
                    seed,
                ))
            } else if let Some(rest) = name.strip_prefix("greedy-") {
                Box::new(Strategy::greedy(order_by_label(rest).ok_or_else(unknown)?))
            } else {
                return Err(unknown());
            }
        }
    };
    Ok(alg)
}
