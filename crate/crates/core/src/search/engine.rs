//! The three enumeration strategies. All of them walk the same canonical
//! order and break ties toward the smaller [`StrategyIndex`], so they agree
//! on the reported best strategy whenever more than one applies.

use crate::error::{Error, Result};
use crate::par::{map_reduce, Parallelism};

use super::graph::ShiftGraph;
use super::kernel::{pick, Candidate, Edge, Kernel, Key};
use super::space::{StrategyIndex, StrategySpace};

/// Counts are in strategies, so the four of them add up to the space size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Outcome {
    /// Strategies scored one by one.
    pub visited: u128,
    /// Strategies whose Alice side fails the marginal conditions; each such
    /// Alice candidate is scored by Bob's best response instead.
    pub pruned: u128,
    /// Strategies covered by a best-response evaluation of their Alice side.
    pub best_response: u128,
    /// Strategies covered by solving a wiring's constraint graph.
    pub solved: u128,
    pub best: Option<Candidate>,
}

impl Outcome {
    fn merge(self, other: Outcome) -> Outcome {
        Outcome {
            visited: self.visited + other.visited,
            pruned: self.pruned + other.pruned,
            best_response: self.best_response + other.best_response,
            solved: self.solved + other.solved,
            best: pick(self.best, other.best),
        }
    }

    pub fn total(&self) -> u128 {
        self.visited + self.pruned + self.best_response + self.solved
    }
}

pub(crate) struct Run<'a> {
    pub space: &'a StrategySpace,
    pub kernel: Kernel<'a>,
    /// Exact-box ranking instead of equation success.
    pub exact: bool,
    /// Modulus for marginal pruning, when pruning applies.
    pub prune: Option<usize>,
    pub parallelism: Parallelism,
    pub budget: u128,
}

struct Counts {
    gb: u128,
    fa: u128,
    fb: u128,
}

impl Run<'_> {
    fn counts(&self) -> Result<Counts> {
        let overflow = || Error::Incompatible("strategy space component exceeds 2^128".into());
        Ok(Counts {
            gb: self.space.bob_wiring.count_u128().ok_or_else(overflow)?,
            fa: self.space.alice_output.count_u128().ok_or_else(overflow)?,
            fb: self.space.bob_output.count_u128().ok_or_else(overflow)?,
        })
    }

    fn edges(&self, ga: u128, gb: u128) -> Vec<Edge> {
        let alice = self.space.split_tables(&self.space.alice_wiring.decode(ga), true);
        let bob = self.space.split_tables(&self.space.bob_wiring.decode(gb), false);
        super::kernel::joint_edges(self.kernel.layout, self.kernel.ints, &alice, &bob)
    }

    /// Calls `visit(index, ga, gb, edges, fa)` for every Alice candidate with
    /// flat index in `[start, end)`, rebuilding edges only when the wiring
    /// changes.
    fn for_alice_candidates(
        &self,
        start: u128,
        end: u128,
        counts: &Counts,
        mut visit: impl FnMut(StrategyIndex, &[Edge], &[usize]),
    ) {
        let mut idx = start;
        while idx < end {
            let wiring = idx / counts.fa;
            let (ga, gb) = (wiring / counts.gb, wiring % counts.gb);
            let edges = self.edges(ga, gb);
            let stop = end.min((wiring + 1) * counts.fa);
            let first = idx - wiring * counts.fa;
            let mut fa = self.space.alice_output.decode(first);
            for f in first..first + (stop - idx) {
                let index = StrategyIndex { alice_wiring: ga, bob_wiring: gb, alice_output: f, bob_output: 0 };
                visit(index, &edges, &fa);
                self.space.alice_output.increment(&mut fa);
            }
            idx = stop;
        }
    }

    fn response_candidate(&self, mut index: StrategyIndex, edges: &[Edge], fa: &[usize], scores: &mut Vec<u128>) -> Candidate {
        let (success, response) = self.kernel.best_response(edges, fa, scores);
        index.bob_output = self.space.bob_output.encode(&response);
        Candidate { key: Key { tv: 0, success }, index }
    }

    fn prunes(&self, fa: &[usize], scratch: &mut Vec<usize>) -> bool {
        self.prune.is_some_and(|p| !self.kernel.alice_marginals_uniform(fa, p, scratch))
    }

    /// Scores every strategy, except that pruned Alice candidates are
    /// resolved by best response rather than by walking all of `F_B`.
    pub fn exhaustive(&self) -> Result<Outcome> {
        let counts = self.counts()?;
        let total = self
            .space
            .alice_candidate_count()
            .ok_or_else(|| Error::Incompatible("Alice candidate count exceeds 2^128".into()))?;
        let chunk = ((1u128 << 16) / counts.fb).max(1);
        map_reduce(
            total,
            chunk,
            self.parallelism,
            |start, end| {
                let mut out = Outcome::default();
                let mut scores = Vec::new();
                let mut scratch = Vec::new();
                let mut fb = vec![0usize; self.kernel.layout.bob_output_len()];
                self.for_alice_candidates(start, end, &counts, |index, edges, fa| {
                    if !self.exact && self.prunes(fa, &mut scratch) {
                        out.pruned += counts.fb;
                        let c = self.response_candidate(index, edges, fa, &mut scores);
                        out.best = pick(out.best, Some(c));
                        return;
                    }
                    out.visited += counts.fb;
                    fb.iter_mut().for_each(|v| *v = 0);
                    let mut best: Option<Candidate> = None;
                    for f in 0..counts.fb {
                        let key = if self.exact {
                            self.kernel.exact_key(edges, fa, &fb)
                        } else {
                            Key { tv: 0, success: self.kernel.success(edges, fa, &fb) }
                        };
                        let c = Candidate { key, index: StrategyIndex { bob_output: f, ..index } };
                        best = pick(best, Some(c));
                        self.space.bob_output.increment(&mut fb);
                    }
                    out.best = pick(out.best, best);
                });
                Ok(out)
            },
            Outcome::merge,
            Outcome::default,
        )
    }

    /// Every Alice candidate is resolved by Bob's best response.
    pub fn best_response(&self) -> Result<Outcome> {
        if self.exact {
            return Err(Error::Incompatible("best response ranks by equation success only".into()));
        }
        let counts = self.counts()?;
        let total = self
            .space
            .alice_candidate_count()
            .ok_or_else(|| Error::Incompatible("Alice candidate count exceeds 2^128".into()))?;
        map_reduce(
            total,
            4096,
            self.parallelism,
            |start, end| {
                let mut out = Outcome::default();
                let mut scores = Vec::new();
                let mut scratch = Vec::new();
                self.for_alice_candidates(start, end, &counts, |index, edges, fa| {
                    if self.prunes(fa, &mut scratch) {
                        out.pruned += counts.fb;
                    } else {
                        out.best_response += counts.fb;
                    }
                    let c = self.response_candidate(index, edges, fa, &mut scores);
                    out.best = pick(out.best, Some(c));
                });
                Ok(out)
            },
            Outcome::merge,
            Outcome::default,
        )
    }

    /// Solves each wiring's output functions exactly on its constraint graph.
    pub fn decomposed(&self, modulus: usize) -> Result<Outcome> {
        if self.exact {
            return Err(Error::Incompatible("the constraint graph ranks by equation success only".into()));
        }
        let counts = self.counts()?;
        let wirings = self
            .space
            .wiring_count()
            .ok_or_else(|| Error::Incompatible("wiring count exceeds 2^128".into()))?;
        let per_wiring = counts.fa * counts.fb;
        let layout = self.kernel.layout;
        map_reduce(
            wirings,
            1,
            self.parallelism,
            |start, end| {
                let mut out = Outcome::default();
                let mut scores = Vec::new();
                for wiring in start..end {
                    let (ga, gb) = (wiring / counts.gb, wiring % counts.gb);
                    let edges = self.edges(ga, gb);
                    let graph = ShiftGraph::new(
                        &edges,
                        modulus,
                        (layout.za_size, layout.zb_size),
                        (layout.target.x, layout.target.y),
                    );
                    let optimum = graph.optimum(&vec![None; graph.n_alice()], self.budget)?;
                    let fa = graph.first_optimal_alice(optimum, self.budget)?;
                    let index = StrategyIndex {
                        alice_wiring: ga,
                        bob_wiring: gb,
                        alice_output: self.space.alice_output.encode(&fa),
                        bob_output: 0,
                    };
                    let c = self.response_candidate(index, &edges, &fa, &mut scores);
                    if c.key.success != optimum {
                        return Err(Error::Internal(format!(
                            "constraint graph optimum {optimum} but best response scores {}",
                            c.key.success
                        )));
                    }
                    out.solved += per_wiring;
                    out.best = pick(out.best, Some(c));
                }
                Ok(out)
            },
            Outcome::merge,
            Outcome::default,
        )
    }
}
