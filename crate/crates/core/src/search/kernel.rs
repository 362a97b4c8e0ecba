//! Integer fast path for strategy evaluation.
//!
//! Each resource box is rescaled by the lcm of its denominators, so a joint
//! trajectory of resource outcomes carries an integer weight and every input
//! pair `(x, y)` carries the same total `scale`. Scores are then exact
//! integers over a fixed denominator, and only the final answer is turned
//! back into a [`Rational`](crate::rational::Rational).

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::boxes::{BipartiteBox, BoxShape};
use crate::error::{Error, Result};
use crate::wiring::{ResourceSet, StrategyLayout};

use super::space::StrategyIndex;

fn to_u128(v: &BigInt, what: &str) -> Result<u128> {
    v.to_u128()
        .ok_or_else(|| Error::Incompatible(format!("{what} does not fit the integer kernel")))
}

fn denominator_lcm<'a>(entries: impl Iterator<Item = &'a crate::rational::Rational>) -> BigInt {
    entries.fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

struct IntBox {
    shape: BoxShape,
    weights: Vec<u64>,
}

/// Resource boxes with integer weights; every input pair sums to `scale`.
pub(crate) struct IntResources {
    boxes: Vec<IntBox>,
    pub scale: u128,
}

impl IntResources {
    pub fn new(resources: &ResourceSet) -> Result<Self> {
        let mut scale: u128 = 1;
        let mut boxes = Vec::with_capacity(resources.len());
        for b in resources.boxes() {
            let d = denominator_lcm(b.entries().iter());
            let weights = b
                .entries()
                .iter()
                .map(|r| {
                    let w = r.numer() * (&d / r.denom());
                    w.to_u64().ok_or_else(|| {
                        Error::Incompatible("resource weights do not fit the integer kernel".into())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            scale = scale
                .checked_mul(to_u128(&d, "resource denominator")?)
                .ok_or_else(|| Error::Incompatible("joint denominator overflows".into()))?;
            boxes.push(IntBox { shape: b.shape(), weights });
        }
        Ok(IntResources { boxes, scale })
    }
}

/// A nonzero joint outcome: Alice string `za`, Bob string `zb` for inputs
/// `(x, y)`, with integer weight `w` out of `scale`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Edge {
    pub x: usize,
    pub y: usize,
    pub za: usize,
    pub zb: usize,
    pub w: u128,
}

pub(crate) fn joint_edges(
    layout: &StrategyLayout,
    ints: &IntResources,
    alice_inputs: &[Vec<usize>],
    bob_inputs: &[Vec<usize>],
) -> Vec<Edge> {
    fn walk(
        layout: &StrategyLayout,
        ints: &IntResources,
        alice_inputs: &[Vec<usize>],
        bob_inputs: &[Vec<usize>],
        (x, y): (usize, usize),
        (i, za, zb, w): (usize, usize, usize, u128),
        out: &mut Vec<Edge>,
    ) {
        if i == ints.boxes.len() {
            out.push(Edge { x, y, za, zb, w });
            return;
        }
        let bx = &ints.boxes[i];
        let s = bx.shape;
        let ix = alice_inputs[i][layout.alice_input_slot(i, x, za)];
        let iy = bob_inputs[i][layout.bob_input_slot(i, y, zb)];
        let base = (ix * s.y + iy) * s.a * s.b;
        for oa in 0..s.a {
            for ob in 0..s.b {
                let bw = bx.weights[base + oa * s.b + ob];
                if bw != 0 {
                    let next = (i + 1, za * s.a + oa, zb * s.b + ob, w * bw as u128);
                    walk(layout, ints, alice_inputs, bob_inputs, (x, y), next, out);
                }
            }
        }
    }

    let mut out = Vec::new();
    for x in 0..layout.target.x {
        for y in 0..layout.target.y {
            walk(layout, ints, alice_inputs, bob_inputs, (x, y), (0, 0, 0, 1), &mut out);
        }
    }
    out
}

/// Ranking key. In equation mode `tv` is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Key {
    pub tv: u128,
    pub success: u128,
}

/// `Greater` when `a` ranks above `b`: lower TV first in exact-box mode, then
/// higher equation success.
pub(crate) fn compare_keys(a: &Key, b: &Key) -> Ordering {
    b.tv.cmp(&a.tv).then(a.success.cmp(&b.success))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Candidate {
    pub key: Key,
    pub index: StrategyIndex,
}

/// Keeps the better candidate, the earlier one in canonical order on ties.
pub(crate) fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => match compare_keys(&a.key, &b.key) {
            Ordering::Greater => Some(a),
            Ordering::Less => Some(b),
            Ordering::Equal => Some(if a.index <= b.index { a } else { b }),
        },
    }
}

/// Target support and, for exact-box ranking, the target scaled to integers.
pub(crate) struct TargetTable {
    pub shape: BoxShape,
    support: Vec<bool>,
    support_lists: Vec<Vec<usize>>,
    exact: Option<ExactScale>,
}

struct ExactScale {
    /// `tv` numerators are over `2 · denom`.
    multiplier: u128,
    scaled: Vec<u128>,
}

impl TargetTable {
    pub fn new(target: &BipartiteBox, ints: &IntResources, exact: bool) -> Result<Self> {
        let shape = target.shape();
        let support: Vec<bool> = target.entries().iter().map(|r| !r.is_zero()).collect();
        let mut support_lists = Vec::with_capacity(shape.x * shape.y * shape.a);
        for x in 0..shape.x {
            for y in 0..shape.y {
                for a in 0..shape.a {
                    support_lists.push(
                        (0..shape.b).filter(|&b| support[target.index(x, y, a, b)]).collect(),
                    );
                }
            }
        }
        let exact = if exact {
            let denom = denominator_lcm(target.entries().iter()).lcm(&BigInt::from(ints.scale));
            let multiplier = to_u128(&(&denom / BigInt::from(ints.scale)), "target denominator")?;
            let scaled = target
                .entries()
                .iter()
                .map(|r| to_u128(&(r.numer() * (&denom / r.denom())), "target entry"))
                .collect::<Result<_>>()?;
            Some(ExactScale { multiplier, scaled })
        } else {
            None
        };
        Ok(TargetTable { shape, support, support_lists, exact })
    }

    pub fn tv_denominator(&self, ints: &IntResources) -> u128 {
        self.exact.as_ref().map_or(1, |e| 2 * e.multiplier * ints.scale)
    }

    #[inline]
    fn supports(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        let s = &self.shape;
        self.support[((x * s.y + y) * s.a + a) * s.b + b]
    }
}

/// Evaluation context for one (target, resources, layout) triple.
pub(crate) struct Kernel<'a> {
    pub layout: &'a StrategyLayout,
    pub ints: &'a IntResources,
    pub target: &'a TargetTable,
}

impl Kernel<'_> {
    pub fn success(&self, edges: &[Edge], fa: &[usize], fb: &[usize]) -> u128 {
        let (za_size, zb_size) = (self.layout.za_size, self.layout.zb_size);
        edges
            .iter()
            .filter(|e| {
                self.target.supports(e.x, e.y, fa[e.x * za_size + e.za], fb[e.y * zb_size + e.zb])
            })
            .map(|e| e.w)
            .sum()
    }

    /// Full key for exact-box ranking.
    pub fn exact_key(&self, edges: &[Edge], fa: &[usize], fb: &[usize]) -> Key {
        let exact = self.target.exact.as_ref().expect("exact scale prepared");
        let s = self.target.shape;
        let mut counts = vec![0u128; s.len()];
        for e in edges {
            let a = fa[e.x * self.layout.za_size + e.za];
            let b = fb[e.y * self.layout.zb_size + e.zb];
            counts[((e.x * s.y + e.y) * s.a + a) * s.b + b] += e.w;
        }
        let mut tv = 0u128;
        let mut success = 0u128;
        for (pair, chunk) in counts.chunks(s.a * s.b).enumerate() {
            let offset = pair * s.a * s.b;
            let mut distance = 0u128;
            for (k, &c) in chunk.iter().enumerate() {
                let sim = c * exact.multiplier;
                distance += sim.abs_diff(exact.scaled[offset + k]);
                if self.target.support[offset + k] {
                    success += c;
                }
            }
            tv = tv.max(distance);
        }
        Key { tv, success }
    }

    /// Bob's best response to a fixed Alice side: for each Bob slot the
    /// smallest output maximizing supported mass. Returns the total success
    /// and the response table.
    pub fn best_response(&self, edges: &[Edge], fa: &[usize], scores: &mut Vec<u128>) -> (u128, Vec<usize>) {
        let b_size = self.target.shape.b;
        let slots = self.layout.bob_output_len();
        scores.clear();
        scores.resize(slots * b_size, 0);
        let s = self.target.shape;
        for e in edges {
            let a = fa[e.x * self.layout.za_size + e.za];
            let slot = e.y * self.layout.zb_size + e.zb;
            for &b in &self.target.support_lists[(e.x * s.y + e.y) * s.a + a] {
                scores[slot * b_size + b] += e.w;
            }
        }
        let mut total = 0u128;
        let mut response = Vec::with_capacity(slots);
        for slot in scores.chunks(b_size) {
            let mut best = 0;
            for (b, &v) in slot.iter().enumerate() {
                if v > slot[best] {
                    best = b;
                }
            }
            total += slot[best];
            response.push(best);
        }
        (total, response)
    }

    /// Counting marginals of `fa` are uniform over `p` outputs for every
    /// input, the condition any perfect mod-p strategy needs.
    pub fn alice_marginals_uniform(&self, fa: &[usize], p: usize, counts: &mut Vec<usize>) -> bool {
        let za_size = self.layout.za_size;
        for x in 0..self.layout.target.x {
            counts.clear();
            counts.resize(p, 0);
            for &a in &fa[x * za_size..(x + 1) * za_size] {
                counts[a] += 1;
            }
            if counts.iter().any(|&c| c * p != za_size) {
                return false;
            }
        }
        true
    }
}
