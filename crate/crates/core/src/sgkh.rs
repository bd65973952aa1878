//! Binary string guessing with known history, and the two reductions that turn
//! a priority algorithm into a guesser.
//!
//! Each guess is the algorithm's decision on the top request of a small gadget
//! (three edges of a path, or a four-leaf star). The driver then serves the
//! follow-up requests that make the guess right or wrong, but only once the
//! algorithm's current order ranks them first among everything still unserved.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cat::pack_s4;
use crate::engine::{PriorityAlgorithm, Session};
use crate::error::{DpaError, Result};
use crate::model::{GainMode, Graph, Instance, Request, Solution};
use crate::report::GainRatio;

/// The hidden bits `d_1..d_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessInstance {
    bits: Vec<bool>,
}

impl GuessInstance {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(DpaError::InvalidParams(
                "need at least one bit to guess".into(),
            ));
        }
        Ok(Self { bits })
    }

    /// Parses a string of `0` and `1`.
    pub fn from_bit_str(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(DpaError::Parse(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// The guesses `y_1..y_n`, each emitted before the matching bit was read.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuesserRun {
    pub guesses: Vec<bool>,
    pub correct: usize,
}

impl GuesserRun {
    pub fn wrong(&self) -> usize {
        self.guesses.len() - self.correct
    }
}

/// Which reduction produced an outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Three-edge path segments, length-weighted gain.
    Lwdpa,
    /// Four-leaf stars in a tree, request-count gain.
    Cat,
}

impl Reduction {
    /// Optimal gain inside one gadget.
    pub fn gadget_opt(self) -> u64 {
        match self {
            Reduction::Lwdpa => 3,
            Reduction::Cat => 2,
        }
    }

    fn mode(self) -> GainMode {
        match self {
            Reduction::Lwdpa => GainMode::Length,
            Reduction::Cat => GainMode::Count,
        }
    }

    /// Ratio forced by `wrong` bad gadgets out of `n` when every bad gadget
    /// loses exactly one unit and every good one is solved optimally.
    pub fn ratio_bound(self, n: u64, wrong: u64) -> GainRatio {
        let opt = self.gadget_opt();
        GainRatio::new(n * opt, wrong * (opt - 1) + (n - wrong) * opt)
    }
}

/// One gadget's line in the accounting table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetAccount {
    pub gadget: usize,
    /// Position of this gadget's guess in the guess sequence.
    pub step: usize,
    pub top: Request,
    pub guess: bool,
    pub truth: bool,
    pub alg_gain: u64,
    pub opt_gain: u64,
}

impl GadgetAccount {
    pub fn is_wrong(&self) -> bool {
        self.guess != self.truth
    }
}

/// Everything a reduction run produced.
#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub reduction: Reduction,
    pub run: GuesserRun,
    pub instance: Instance,
    pub solution: Solution,
    /// Requests in the order they were fed.
    pub feeds: Vec<Request>,
    /// Indexed by gadget.
    pub gadgets: Vec<GadgetAccount>,
}

impl ReductionOutcome {
    pub fn gain_alg(&self) -> u64 {
        self.solution.gain(self.reduction.mode())
    }

    pub fn gain_opt(&self) -> u64 {
        self.gadgets.iter().map(|g| g.opt_gain).sum()
    }

    pub fn ratio(&self) -> GainRatio {
        GainRatio::new(self.gain_opt(), self.gain_alg())
    }

    /// `n·opt / (w·(opt−1) + (n−w)·opt)` for the observed number of wrong guesses.
    pub fn ratio_bound(&self) -> GainRatio {
        self.reduction
            .ratio_bound(self.gadgets.len() as u64, self.run.wrong() as u64)
    }
}

/// Binary entropy in bits, exact at 0, 1/2 and 1.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else if x == 0.5 {
        1.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Advice bits any guesser needs to get more than `eps·n` bits right.
///
/// Defined for `1/2 <= eps < 1`; as `eps` tends to 1 the bound tends to `n`.
pub fn entropy_lower_bound(eps: f64, n: u64) -> Result<f64> {
    if !(0.5..1.0).contains(&eps) {
        return Err(DpaError::InvalidParams(format!(
            "eps must lie in [1/2, 1), got {eps}"
        )));
    }
    Ok((1.0 - binary_entropy(eps)) * n as f64)
}

/// The four requests inside segment `i` of the path: `[3i,3i+1]`, `[3i,3i+2]`,
/// `[3i+1,3i+3]`, `[3i+2,3i+3]`.
pub fn segment_requests(graph: &Graph, i: u32) -> Result<[Request; 4]> {
    let s = 3 * i;
    Ok([
        graph.request(s, s + 1)?,
        graph.request(s, s + 2)?,
        graph.request(s + 1, s + 3)?,
        graph.request(s + 2, s + 3)?,
    ])
}

/// Runs the path reduction on a path of length `3n`.
pub fn run_guess(alg: &mut dyn PriorityAlgorithm, g: &GuessInstance) -> Result<ReductionOutcome> {
    run_guess_on(alg, g, 3 * g.n() as u32)
}

/// Runs the path reduction on a longer path, using only its first `3n` edges.
pub fn run_guess_on(
    alg: &mut dyn PriorityAlgorithm,
    g: &GuessInstance,
    path_length: u32,
) -> Result<ReductionOutcome> {
    let n = g.n() as u32;
    if path_length < 3 * n {
        return Err(DpaError::InvalidParams(format!(
            "{n} segments need a path of length at least {}",
            3 * n
        )));
    }
    let graph = Graph::path(path_length)?;
    let gadgets = (0..n)
        .map(|i| segment_requests(&graph, i).map(|r| r.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    drive(
        alg,
        graph,
        g,
        gadgets,
        Reduction::Lwdpa,
        |gadget, top, truth| {
            // Index 0..4 pairs up as complements 0<->2 and 1<->3.
            let k = gadget
                .iter()
                .position(|r| r == top)
                .expect("top belongs to its gadget");
            let complement = gadget[(k + 2) % 4];
            Ok(if truth {
                vec![complement]
            } else {
                gadget
                    .iter()
                    .copied()
                    .filter(|r| r != top && *r != complement)
                    .collect()
            })
        },
    )
}

/// Runs the star reduction on `tree`, using the first `n` packed star copies.
pub fn run_tguess(
    alg: &mut dyn PriorityAlgorithm,
    g: &GuessInstance,
    tree: &Arc<Graph>,
) -> Result<ReductionOutcome> {
    let shape = tree
        .as_tree()
        .ok_or_else(|| DpaError::InvalidTree("the star reduction needs a tree".into()))?;
    let copies = pack_s4(shape);
    if copies.len() < g.n() {
        return Err(DpaError::InvalidTree(format!(
            "{} bits need {} disjoint four-leaf stars, the tree holds {}",
            g.n(),
            g.n(),
            copies.len()
        )));
    }
    let gadgets = copies[..g.n()]
        .iter()
        .map(|c| c.two_edge_paths(tree))
        .collect::<Result<Vec<_>>>()?;
    let graph = tree.clone();
    drive(
        alg,
        tree.clone(),
        g,
        gadgets,
        Reduction::Cat,
        move |gadget, top, truth| {
            let meets = |a: &Request, b: &Request| graph.intersects(a, b);
            if truth {
                let mut disjoint = Vec::new();
                for r in gadget {
                    if !meets(r, top)? {
                        disjoint.push(*r);
                    }
                }
                if disjoint.len() != 1 {
                    return Err(DpaError::InvalidTree(format!(
                        "expected one request disjoint from {top}, found {}",
                        disjoint.len()
                    )));
                }
                return Ok(disjoint);
            }
            let mut crossing = Vec::new();
            for r in gadget {
                if r != top && meets(r, top)? {
                    crossing.push(*r);
                }
            }
            for (i, a) in crossing.iter().enumerate() {
                for b in &crossing[i + 1..] {
                    if !meets(a, b)? {
                        return Ok(vec![*a, *b]);
                    }
                }
            }
            Err(DpaError::InvalidTree(format!(
                "no disjoint pair crosses {top}"
            )))
        },
    )
}

/// The shared guessing loop over unserved gadget requests `unserved` and
/// pending follow-ups `pending`.
fn drive(
    alg: &mut dyn PriorityAlgorithm,
    graph: Arc<Graph>,
    g: &GuessInstance,
    gadgets: Vec<Vec<Request>>,
    reduction: Reduction,
    follow_up: impl Fn(&[Request], &Request, bool) -> Result<Vec<Request>>,
) -> Result<ReductionOutcome> {
    let owner: BTreeMap<Request, usize> = gadgets
        .iter()
        .enumerate()
        .flat_map(|(i, rs)| rs.iter().map(move |r| (*r, i)))
        .collect();
    let mut unserved: Vec<Request> = owner.keys().copied().collect();
    let mut pending: Vec<Request> = Vec::new();
    let mut session = Session::start(alg, graph.clone(), None)?;
    let mut feeds = Vec::new();
    let mut guesses = Vec::with_capacity(g.n());
    let mut tops = vec![None; gadgets.len()];

    let top_of =
        |session: &Session, unserved: &[Request], pending: &[Request]| -> Result<Option<Request>> {
            let pool: Vec<Request> = unserved.iter().chain(pending).copied().collect();
            session.order().checked_max(&pool)
        };

    for (step, &truth) in g.bits().iter().enumerate() {
        while let Some(m) = top_of(&session, &unserved, &pending)?.filter(|m| pending.contains(m)) {
            pending.retain(|r| *r != m);
            session.feed(m)?;
            feeds.push(m);
        }
        let top = top_of(&session, &unserved, &pending)?
            .ok_or_else(|| DpaError::InvalidArgument("ran out of gadgets".into()))?;
        let gadget = owner[&top];
        unserved.retain(|r| owner[r] != gadget);
        let guess = session.feed(top)?.accepted;
        feeds.push(top);
        guesses.push(guess);
        tops[gadget] = Some((step, top, guess, truth));
        pending.extend(follow_up(&gadgets[gadget], &top, truth)?);
    }
    while let Some(m) = top_of(&session, &unserved, &pending)? {
        debug_assert!(unserved.is_empty());
        pending.retain(|r| *r != m);
        session.feed(m)?;
        feeds.push(m);
    }

    let solution = session.finish().solution;
    let mode = reduction.mode();
    let mut accounts = Vec::with_capacity(gadgets.len());
    for (i, rs) in gadgets.iter().enumerate() {
        let Some((step, top, guess, truth)) = tops[i] else {
            continue;
        };
        let mut alg_gain = 0;
        for r in rs.iter().filter(|r| solution.contains(r)) {
            alg_gain += match mode {
                GainMode::Count => 1,
                GainMode::Length => u64::from(graph.path_length(r)?),
            };
        }
        accounts.push(GadgetAccount {
            gadget: i,
            step,
            top,
            guess,
            truth,
            alg_gain,
            opt_gain: reduction.gadget_opt(),
        });
    }
    let correct = accounts.iter().filter(|a| !a.is_wrong()).count();
    Ok(ReductionOutcome {
        reduction,
        run: GuesserRun { guesses, correct },
        instance: Instance::new(graph, feeds.clone())?,
        solution,
        feeds,
        gadgets: accounts,
    })
}
