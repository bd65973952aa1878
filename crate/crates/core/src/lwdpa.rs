//! Length-weighted DPA on paths: the longest-first greedy, its lower-bound
//! adversary, and the block-coded optimal advice scheme.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::sync::Arc;

use crate::engine::{
    probe_first, replay_from_probe, run, FixedGreedy, PriorityAlgorithm, PriorityOrder, RunState,
    Verdict,
};
use crate::error::{DpaError, Result};
use crate::model::{gain, GainMode, Graph, Instance, Request, Solution, Vertex};
use crate::oracle::{brute_force_opt_with_cap, greediest_opt};
use crate::report::AdversaryOutcome;
use crate::tape::AdviceTape;

/// Longer first, then further left.
pub fn lwdpa_order() -> PriorityOrder {
    PriorityOrder::by_key("lwdpa", |r: &Request| (Reverse(r.y() - r.x()), r.x()))
}

pub fn lwdpa_greedy() -> FixedGreedy {
    FixedGreedy::new("greedy-lwdpa", |_| Ok(lwdpa_order()))
}

fn require_path(instance: &Instance) -> Result<u32> {
    instance
        .graph()
        .as_path()
        .map(|p| p.length())
        .ok_or_else(|| {
            DpaError::InvalidArgument(format!(
                "expected a path, got {}",
                instance.graph().descriptor()
            ))
        })
}

/// Runs the longest-first greedy.
pub fn greedy_lwdpa(instance: &Instance) -> Result<Solution> {
    require_path(instance)?;
    Ok(run(&mut lwdpa_greedy(), instance, None)?.solution)
}

/// Length of the union of `p` and every lower-priority request of `instance`
/// that intersects it.
pub fn following_union_length(instance: &Instance, p: &Request) -> u32 {
    let order = lwdpa_order();
    let (mut lo, mut hi) = p.endpoints();
    for q in instance.requests() {
        if order.higher(p, q) && q.x().max(p.x()) < q.y().min(p.y()) {
            lo = lo.min(q.x());
            hi = hi.max(q.y());
        }
    }
    hi - lo
}

/// Parameters of the staircase construction; both at least 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PabParams {
    a: u32,
    b: u32,
}

impl PabParams {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a < 3 || b < 3 {
            return Err(DpaError::InvalidParams(format!(
                "a={a}, b={b}: both must be at least 3"
            )));
        }
        Ok(Self { a, b })
    }

    /// Parameters with `b = 2(a+1)`.
    pub fn balanced(a: u32) -> Result<Self> {
        Self::new(a, 2 * (a + 1))
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    /// Path length `a b^2 - 2b + 2` exactly filled by the long requests.
    pub fn length(&self) -> u32 {
        self.a * self.b * self.b - 2 * self.b + 2
    }

    /// Number of long requests, `2b - 1`.
    pub fn long_count(&self) -> u32 {
        2 * self.b - 1
    }

    /// Length of the `i`-th long request (1-based).
    pub fn long_length(&self, i: u32) -> u32 {
        if i <= self.b {
            i * self.a
        } else {
            (2 * self.b - i) * self.a
        }
    }

    /// Endpoints of the long requests, each starting on the last edge of the previous one.
    pub fn long_spans(&self) -> Vec<(Vertex, Vertex)> {
        let mut spans = Vec::with_capacity(self.long_count() as usize);
        let mut start = 0;
        for i in 1..=self.long_count() {
            let end = start + self.long_length(i);
            spans.push((start, end));
            start = end - 1;
        }
        spans
    }
}

/// The request universe of the staircase construction.
#[derive(Clone, Debug)]
pub struct PabUniverse {
    pub params: PabParams,
    pub graph: Arc<Graph>,
    /// `long[i - 1]` is the `i`-th long request.
    pub long: Vec<Request>,
    /// `units[e]` is the unit request on edge `e`, for every edge of the construction.
    pub units: Vec<Request>,
}

impl PabUniverse {
    pub fn all(&self) -> Vec<Request> {
        self.long.iter().chain(&self.units).copied().collect()
    }

    fn units_inside(&self, span: (Vertex, Vertex), skip: &[&Request]) -> Vec<Request> {
        (span.0..span.1)
            .map(|e| self.units[e as usize])
            .filter(|u| skip.iter().all(|q| !(q.x() <= u.x() && u.y() <= q.y())))
            .collect()
    }
}

pub fn build_pab(params: PabParams) -> Result<PabUniverse> {
    build_pab_on(params, params.length())
}

/// Builds the construction starting at vertex 0 of a path of length `path_length`.
pub fn build_pab_on(params: PabParams, path_length: u32) -> Result<PabUniverse> {
    if path_length < params.length() {
        return Err(DpaError::InvalidParams(format!(
            "path of length {path_length} cannot hold a construction of length {}",
            params.length()
        )));
    }
    let graph = Graph::path(path_length)?;
    let long = params
        .long_spans()
        .iter()
        .map(|&(x, y)| graph.request(x, y))
        .collect::<Result<Vec<_>>>()?;
    let units = (0..params.length())
        .map(|e| graph.request(e, e + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(PabUniverse {
        params,
        graph,
        long,
        units,
    })
}

/// Which request the algorithm ranked first, and what was served.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PabCase {
    /// The first request was rejected; only it is served.
    Rejected { first: Request },
    /// An inner long request other than the middle one, with both neighbours.
    Inner { index: u32 },
    /// The middle (longest) request with both neighbours.
    Middle { index: u32 },
    /// The first or last long request with its single neighbour.
    Outer { index: u32 },
    /// A unit request with the lowest-index long request containing it.
    Unit { edge: u32, container: u32 },
}

/// Oracle cap for adversary instances (at most `2a(b+1)` requests).
const ADVERSARY_CAP: usize = 64;

/// Plays the staircase adversary against `alg`.
pub fn adversary_play_lwdpa(
    alg: &mut dyn PriorityAlgorithm,
    params: PabParams,
) -> Result<AdversaryOutcome<PabCase>> {
    let universe = build_pab(params)?;
    adversary_on_universe(alg, &universe)
}

/// The adversary on a path of arbitrary length `l >= 178`, using the balanced
/// construction with the largest `a` that fits.
pub fn adversary_play_lwdpa_on_length(
    alg: &mut dyn PriorityAlgorithm,
    l: u32,
) -> Result<AdversaryOutcome<PabCase>> {
    let mut a = 3;
    if PabParams::balanced(a)?.length() > l {
        return Err(DpaError::InvalidParams(format!(
            "length {l} is below {} needed by the smallest construction",
            PabParams::balanced(3)?.length()
        )));
    }
    while PabParams::balanced(a + 1)?.length() <= l {
        a += 1;
    }
    let universe = build_pab_on(PabParams::balanced(a)?, l)?;
    adversary_on_universe(alg, &universe)
}

fn adversary_on_universe(
    alg: &mut dyn PriorityAlgorithm,
    universe: &PabUniverse,
) -> Result<AdversaryOutcome<PabCase>> {
    let params = universe.params;
    let all = universe.all();
    let probe = probe_first(alg, universe.graph.clone(), &all)?;
    let top = probe.request;
    let (case, requests) = if !probe.accepted {
        (PabCase::Rejected { first: top }, vec![top])
    } else if let Some(pos) = universe.long.iter().position(|r| *r == top) {
        let index = pos as u32 + 1;
        let last = params.long_count();
        let spans = params.long_spans();
        let p = &universe.long[pos];
        if index == 1 || index == last {
            let neighbour = if index == 1 {
                &universe.long[1]
            } else {
                &universe.long[pos - 1]
            };
            let mut reqs = vec![*p, *neighbour];
            reqs.extend(universe.units_inside(spans[pos], &[neighbour]));
            (PabCase::Outer { index }, reqs)
        } else {
            let (left, right) = (&universe.long[pos - 1], &universe.long[pos + 1]);
            let mut reqs = vec![*p, *left, *right];
            reqs.extend(universe.units_inside(spans[pos], &[left, right]));
            let case = if index == params.b() {
                PabCase::Middle { index }
            } else {
                PabCase::Inner { index }
            };
            (case, reqs)
        }
    } else {
        let edge = top.x();
        let container = universe
            .long
            .iter()
            .position(|q| q.x() <= top.x() && top.y() <= q.y())
            .expect("long requests cover every edge");
        (
            PabCase::Unit {
                edge,
                container: container as u32 + 1,
            },
            vec![top, universe.long[container]],
        )
    };
    let instance = Instance::new(universe.graph.clone(), requests)?;
    let outcome = replay_from_probe(alg, &instance, &probe)?;
    let gain_alg = gain(&outcome.solution, GainMode::Length);
    let gain_opt = brute_force_opt_with_cap(&instance, GainMode::Length, ADVERSARY_CAP)?.optimum;
    Ok(AdversaryOutcome {
        case,
        instance,
        solution: outcome.solution,
        gain_alg,
        gain_opt,
    })
}

/// Start offsets within a 4-vertex block, indexed by code.
const CODEBOOK: [&[u32]; 8] = [&[], &[0], &[1], &[2], &[3], &[0, 2], &[0, 3], &[1, 3]];

pub const BLOCK_BITS: usize = 3;
pub const BLOCK_SIZE: u32 = 4;

/// Code of a set of start offsets within one block.
pub fn encode_block(offsets: &[u32]) -> Result<u8> {
    CODEBOOK
        .iter()
        .position(|c| *c == offsets)
        .map(|c| c as u8)
        .ok_or_else(|| {
            DpaError::MalformedAdvice(format!("offsets {offsets:?} are not a block configuration"))
        })
}

pub fn decode_block(code: u8) -> Result<&'static [u32]> {
    CODEBOOK
        .get(code as usize)
        .copied()
        .ok_or_else(|| DpaError::MalformedAdvice(format!("block code {code} out of range")))
}

/// Advice length for a path of length `l`.
pub fn lwdpa_advice_len(l: u32) -> usize {
    BLOCK_BITS * l.div_ceil(BLOCK_SIZE) as usize
}

/// Encodes the start points of the long members of the greediest optimal solution.
pub fn encode_lwdpa_advice(instance: &Instance) -> Result<AdviceTape> {
    let l = require_path(instance)?;
    let best = greediest_opt(instance, &lwdpa_order(), GainMode::Length)?;
    let starts: BTreeSet<u32> = best
        .accepted()
        .iter()
        .filter(|r| r.y() - r.x() >= 2)
        .map(Request::x)
        .collect();
    let mut tape = AdviceTape::new();
    for block in 0..l.div_ceil(BLOCK_SIZE) {
        let base = block * BLOCK_SIZE;
        let offsets: Vec<u32> = starts
            .range(base..base + BLOCK_SIZE)
            .map(|s| s - base)
            .collect();
        tape.push_bits(u64::from(encode_block(&offsets)?), BLOCK_BITS);
    }
    Ok(tape)
}

/// Quasi-greedy decoder: long requests must match a conveyed start point and
/// end no later than the next one; unit requests are taken greedily.
#[derive(Clone, Debug, Default)]
pub struct LwdpaAdviceDecoder {
    starts: BTreeSet<u32>,
    used: BTreeSet<u32>,
    length: u32,
}

impl LwdpaAdviceDecoder {
    pub fn new() -> Self {
        Self::default()
    }
}

impl PriorityAlgorithm for LwdpaAdviceDecoder {
    fn name(&self) -> String {
        "advice-lwdpa".into()
    }

    fn initial_order(
        &mut self,
        graph: &Arc<Graph>,
        advice: Option<&mut AdviceTape>,
    ) -> Result<PriorityOrder> {
        let path = graph
            .as_path()
            .ok_or_else(|| DpaError::InvalidArgument("the advice decoder runs on paths".into()))?;
        let tape =
            advice.ok_or_else(|| DpaError::MalformedAdvice("advice tape required".into()))?;
        self.length = path.length();
        self.starts.clear();
        self.used.clear();
        for block in 0..self.length.div_ceil(BLOCK_SIZE) {
            let code = tape.read_bits(BLOCK_BITS)? as u8;
            for &offset in decode_block(code)? {
                self.starts.insert(block * BLOCK_SIZE + offset);
            }
        }
        Ok(lwdpa_order())
    }

    fn decide(
        &mut self,
        request: &Request,
        state: &RunState,
        _: Option<&mut AdviceTape>,
    ) -> Result<Verdict> {
        if state.is_blocked(request) {
            return Ok(Verdict::Reject);
        }
        if request.y() - request.x() == 1 {
            return Ok(Verdict::Accept);
        }
        let x = request.x();
        if !self.starts.contains(&x) || self.used.contains(&x) {
            return Ok(Verdict::Reject);
        }
        let limit = self
            .starts
            .range(x + 1..)
            .next()
            .copied()
            .unwrap_or(self.length);
        if request.y() > limit {
            return Ok(Verdict::Reject);
        }
        self.used.insert(x);
        Ok(Verdict::Accept)
    }
}

/// Runs the decoder on `instance` with `tape`.
pub fn decode_run_lwdpa(instance: &Instance, tape: &mut AdviceTape) -> Result<Solution> {
    tape.rewind();
    Ok(run(&mut LwdpaAdviceDecoder::new(), instance, Some(tape))?.solution)
}
