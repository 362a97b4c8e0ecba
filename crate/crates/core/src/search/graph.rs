//! Exact output-function optimization for a fixed input wiring.
//!
//! Once the resource inputs are wired, equation-mode success is a weighted
//! sum over constraints `F_B(y, z_B) − F_A(x, z_A) ≡ x·y (mod p)`: a bipartite
//! graph whose nodes are Alice slots `(x, z_A)` and Bob slots `(y, z_B)`.
//! Components are independent. Paths and cycles (every node of degree at
//! most two, which is what mod-p resources produce) are solved by dynamic
//! programming around the walk; anything denser falls back to enumerating
//! the component's Alice slots with Bob best responses.

use crate::error::{Error, Result};

use super::kernel::Edge;

#[derive(Clone, Copy, Debug)]
struct Arc {
    alice: usize,
    bob: usize,
    w: u128,
    shift: usize,
}

impl Arc {
    #[inline]
    fn satisfied(&self, a: usize, b: usize, p: usize) -> bool {
        (b + p - a) % p == self.shift
    }
}

struct Component {
    /// Node ids: Alice slots `0..n_alice`, Bob slots offset by `n_alice`.
    nodes: Vec<usize>,
    arcs: Vec<usize>,
    simple: bool,
}

pub(crate) struct ShiftGraph {
    p: usize,
    n_alice: usize,
    arcs: Vec<Arc>,
    incident: Vec<Vec<usize>>,
    components: Vec<Component>,
    component_of_alice: Vec<usize>,
}

impl ShiftGraph {
    pub fn new(
        edges: &[Edge],
        p: usize,
        (za_size, zb_size): (usize, usize),
        (x_size, y_size): (usize, usize),
    ) -> Self {
        let n_alice = x_size * za_size;
        let n_bob = y_size * zb_size;
        let arcs: Vec<Arc> = edges
            .iter()
            .map(|e| Arc {
                alice: e.x * za_size + e.za,
                bob: e.y * zb_size + e.zb,
                w: e.w,
                shift: (e.x * e.y) % p,
            })
            .collect();
        let mut incident = vec![Vec::new(); n_alice + n_bob];
        for (k, arc) in arcs.iter().enumerate() {
            incident[arc.alice].push(k);
            incident[n_alice + arc.bob].push(k);
        }

        let mut seen = vec![false; n_alice + n_bob];
        let mut components = Vec::new();
        let mut component_of_alice = vec![0; n_alice];
        for start in 0..n_alice + n_bob {
            if seen[start] {
                continue;
            }
            let mut nodes = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < nodes.len() {
                let v = nodes[head];
                head += 1;
                for &k in &incident[v] {
                    let arc = &arcs[k];
                    let other = if v < n_alice { n_alice + arc.bob } else { arc.alice };
                    if !seen[other] {
                        seen[other] = true;
                        nodes.push(other);
                    }
                }
            }
            nodes.sort_unstable();
            let mut comp_arcs: Vec<usize> = nodes
                .iter()
                .filter(|&&v| v < n_alice)
                .flat_map(|&v| incident[v].iter().copied())
                .collect();
            comp_arcs.sort_unstable();
            let simple = nodes.iter().all(|&v| incident[v].len() <= 2);
            for &v in nodes.iter().filter(|&&v| v < n_alice) {
                component_of_alice[v] = components.len();
            }
            components.push(Component { nodes, arcs: comp_arcs, simple });
        }
        ShiftGraph {
            p,
            n_alice,
            arcs,
            incident,
            components,
            component_of_alice,
        }
    }

    pub fn n_alice(&self) -> usize {
        self.n_alice
    }

    fn domain(&self, node: usize, fixed: &[Option<usize>]) -> Vec<usize> {
        match (node < self.n_alice).then(|| fixed[node]).flatten() {
            Some(v) => vec![v],
            None => (0..self.p).collect(),
        }
    }

    /// Maximum satisfied weight with some Alice slots pinned.
    pub fn optimum(&self, fixed: &[Option<usize>], budget: u128) -> Result<u128> {
        let mut total = 0;
        for c in 0..self.components.len() {
            total += self.component_optimum(c, fixed, budget)?;
        }
        Ok(total)
    }

    pub fn component_optimum(&self, c: usize, fixed: &[Option<usize>], budget: u128) -> Result<u128> {
        let comp = &self.components[c];
        if comp.arcs.is_empty() {
            return Ok(0);
        }
        if comp.simple {
            Ok(self.walk_optimum(comp, fixed))
        } else {
            self.enumerate_optimum(comp, fixed, budget)
        }
    }

    fn neighbour(&self, v: usize, arc: &Arc) -> usize {
        if v < self.n_alice {
            self.n_alice + arc.bob
        } else {
            arc.alice
        }
    }

    /// Nodes along the path or cycle and the arcs joining consecutive nodes;
    /// for a cycle the last arc closes back to the first node.
    fn walk(&self, comp: &Component) -> (Vec<usize>, Vec<usize>, bool) {
        let cycle = comp.nodes.iter().all(|&v| self.incident[v].len() == 2);
        let start = if cycle {
            comp.nodes[0]
        } else {
            *comp
                .nodes
                .iter()
                .find(|&&v| self.incident[v].len() <= 1)
                .expect("a path has an endpoint")
        };
        let mut nodes = vec![start];
        let mut arcs = Vec::new();
        let mut prev_arc: Option<usize> = None;
        let mut v = start;
        loop {
            let next = self.incident[v].iter().copied().find(|&k| Some(k) != prev_arc);
            let Some(k) = next else { break };
            let u = self.neighbour(v, &self.arcs[k]);
            arcs.push(k);
            if u == start {
                break;
            }
            nodes.push(u);
            prev_arc = Some(k);
            v = u;
        }
        (nodes, arcs, cycle)
    }

    fn arc_value(&self, k: usize, from: usize, from_val: usize, to_val: usize) -> u128 {
        let arc = &self.arcs[k];
        let (a, b) = if from < self.n_alice { (from_val, to_val) } else { (to_val, from_val) };
        if arc.satisfied(a, b, self.p) {
            arc.w
        } else {
            0
        }
    }

    fn walk_optimum(&self, comp: &Component, fixed: &[Option<usize>]) -> u128 {
        let p = self.p;
        let (nodes, arcs, cycle) = self.walk(comp);
        let mut best = 0u128;
        for start_val in self.domain(nodes[0], fixed) {
            // dp[v] = best weight along the walk so far with current node = v
            let mut dp: Vec<Option<u128>> = vec![None; p];
            dp[start_val] = Some(0);
            for step in 0..nodes.len() - 1 {
                let (from, to) = (nodes[step], nodes[step + 1]);
                let mut next = vec![None; p];
                for to_val in self.domain(to, fixed) {
                    let mut cell: Option<u128> = None;
                    for (from_val, d) in dp.iter().enumerate() {
                        if let Some(d) = d {
                            let v = d + self.arc_value(arcs[step], from, from_val, to_val);
                            cell = Some(cell.map_or(v, |c| c.max(v)));
                        }
                    }
                    next[to_val] = cell;
                }
                dp = next;
            }
            let last = *nodes.last().expect("nonempty walk");
            for (val, d) in dp.iter().enumerate() {
                if let Some(d) = d {
                    let close = if cycle {
                        self.arc_value(*arcs.last().expect("cycle arc"), last, val, start_val)
                    } else {
                        0
                    };
                    best = best.max(d + close);
                }
            }
        }
        best
    }

    fn enumerate_optimum(&self, comp: &Component, fixed: &[Option<usize>], budget: u128) -> Result<u128> {
        let p = self.p;
        let alice: Vec<usize> = comp.nodes.iter().copied().filter(|&v| v < self.n_alice).collect();
        let bob: Vec<usize> = comp.nodes.iter().copied().filter(|&v| v >= self.n_alice).collect();
        let mut domains: Vec<Vec<usize>> = alice.iter().map(|&v| self.domain(v, fixed)).collect();
        // A common shift of every value in the component preserves all arcs.
        if alice.iter().all(|&v| fixed[v].is_none()) {
            domains[0] = vec![0];
        }
        let work = domains
            .iter()
            .try_fold(1u128, |acc, d| acc.checked_mul(d.len() as u128));
        match work {
            Some(w) if w <= budget => {}
            _ => {
                return Err(Error::CapExceeded {
                    what: "dense constraint component".into(),
                    needed: work.map_or_else(|| "more than 2^128".into(), |w| w.to_string()),
                    cap: budget,
                })
            }
        }

        let mut position = vec![0usize; alice.len()];
        let mut values = vec![0usize; self.n_alice];
        let mut scores = vec![0u128; p];
        let mut best = 0u128;
        loop {
            for (k, &v) in alice.iter().enumerate() {
                values[v] = domains[k][position[k]];
            }
            let mut total = 0u128;
            for &bnode in &bob {
                scores.iter_mut().for_each(|s| *s = 0);
                for &k in &self.incident[bnode] {
                    let arc = &self.arcs[k];
                    scores[(values[arc.alice] + arc.shift) % p] += arc.w;
                }
                total += scores.iter().copied().max().unwrap_or(0);
            }
            best = best.max(total);

            let mut k = alice.len();
            loop {
                if k == 0 {
                    return Ok(best);
                }
                k -= 1;
                position[k] += 1;
                if position[k] < domains[k].len() {
                    break;
                }
                position[k] = 0;
            }
        }
    }

    /// Lexicographically first Alice table achieving `optimum`.
    pub fn first_optimal_alice(&self, optimum: u128, budget: u128) -> Result<Vec<usize>> {
        let mut fixed: Vec<Option<usize>> = vec![None; self.n_alice];
        let mut per_component = (0..self.components.len())
            .map(|c| self.component_optimum(c, &fixed, budget))
            .collect::<Result<Vec<_>>>()?;
        let mut current: u128 = per_component.iter().sum();
        if current != optimum {
            return Err(Error::Internal(format!(
                "graph optimum {current} differs from expected {optimum}"
            )));
        }
        for node in 0..self.n_alice {
            let c = self.component_of_alice[node];
            let mut chosen = None;
            for v in 0..self.p {
                fixed[node] = Some(v);
                let value = self.component_optimum(c, &fixed, budget)?;
                if current - per_component[c] + value == optimum {
                    current = current - per_component[c] + value;
                    per_component[c] = value;
                    chosen = Some(v);
                    break;
                }
            }
            if chosen.is_none() {
                return Err(Error::Internal("no value keeps the optimum".into()));
            }
        }
        Ok(fixed.into_iter().map(|v| v.expect("all slots fixed")).collect())
    }
}
