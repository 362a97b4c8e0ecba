//! Deterministic two-party wirings of resource boxes.
//!
//! Both parties feed their resource ports in one fixed box order. Box `i`'s
//! Alice input is a function of `x` and, for adaptive wirings, of the outputs
//! Alice already received from boxes `0..i`. The simulated outputs are
//! `a = F_A(x, z_A)` and `b = F_B(y, z_B)` where `z_A`, `z_B` are the full
//! output strings. Output strings are indexed in mixed radix with box 0 as
//! the most significant digit, so the index of a prefix `z^{<i}` is the full
//! index divided by the product of the remaining alphabet sizes.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::boxes::{check_function, BipartiteBox, BoxShape, MarginalTable, Side};
use crate::error::{Error, Result};
use crate::format::{check_version, FORMAT_VERSION};
use crate::rational::Rational;

/// Resource boxes, each consumed exactly once, with display labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceSet {
    boxes: Vec<BipartiteBox>,
    labels: Vec<String>,
}

impl ResourceSet {
    pub fn new(boxes: Vec<BipartiteBox>) -> Result<Self> {
        let labels = (0..boxes.len()).map(|i| format!("box{i}")).collect();
        ResourceSet::with_labels(boxes, labels)
    }

    pub fn with_labels(boxes: Vec<BipartiteBox>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != boxes.len() {
            return Err(Error::Dimension("one label per resource box".into()));
        }
        for b in &boxes {
            b.ensure_valid()?;
        }
        Ok(ResourceSet { boxes, labels })
    }

    /// Mod-p boxes labelled `modpK`.
    pub fn modp(moduli: &[u64]) -> Result<Self> {
        let boxes = moduli.iter().map(|&p| BipartiteBox::modp(p)).collect::<Result<_>>()?;
        let labels = moduli.iter().map(|p| format!("modp{p}")).collect();
        ResourceSet::with_labels(boxes, labels)
    }

    pub fn empty() -> Self {
        ResourceSet { boxes: Vec::new(), labels: Vec::new() }
    }

    pub fn boxes(&self) -> &[BipartiteBox] {
        &self.boxes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn shapes(&self) -> Vec<BoxShape> {
        self.boxes.iter().map(|b| b.shape()).collect()
    }

    /// The multiset of Alice output alphabet sizes (the `M_n` counts).
    pub fn alice_sizes(&self) -> Vec<usize> {
        self.boxes.iter().map(|b| b.shape().a).collect()
    }

    pub fn bob_sizes(&self) -> Vec<usize> {
        self.boxes.iter().map(|b| b.shape().b).collect()
    }

    pub fn all_uniform(&self) -> bool {
        self.boxes.iter().all(|b| b.is_uniform_output())
    }

    pub fn require_uniform(&self) -> Result<()> {
        match self.boxes.iter().position(|b| !b.is_uniform_output()) {
            Some(index) => Err(Error::NotUniform { index }),
            None => Ok(()),
        }
    }
}

/// Table geometry shared by every strategy over one resource list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyLayout {
    pub target: BoxShape,
    pub resources: Vec<BoxShape>,
    pub adaptive: bool,
    /// Number of distinct Alice prefixes `z_A^{<i}` seen by box `i`'s input
    /// function (1 when non-adaptive).
    pub alice_prefixes: Vec<usize>,
    pub bob_prefixes: Vec<usize>,
    pub za_size: usize,
    pub zb_size: usize,
}

impl StrategyLayout {
    pub fn new(target: BoxShape, resources: Vec<BoxShape>, adaptive: bool) -> Self {
        let mut alice_prefixes = Vec::with_capacity(resources.len());
        let mut bob_prefixes = Vec::with_capacity(resources.len());
        let (mut za, mut zb) = (1usize, 1usize);
        for r in &resources {
            alice_prefixes.push(if adaptive { za } else { 1 });
            bob_prefixes.push(if adaptive { zb } else { 1 });
            za *= r.a;
            zb *= r.b;
        }
        StrategyLayout {
            target,
            resources,
            adaptive,
            alice_prefixes,
            bob_prefixes,
            za_size: za,
            zb_size: zb,
        }
    }

    pub fn alice_input_len(&self, i: usize) -> usize {
        self.target.x * self.alice_prefixes[i]
    }

    pub fn bob_input_len(&self, i: usize) -> usize {
        self.target.y * self.bob_prefixes[i]
    }

    pub fn alice_output_len(&self) -> usize {
        self.target.x * self.za_size
    }

    pub fn bob_output_len(&self) -> usize {
        self.target.y * self.zb_size
    }

    #[inline]
    pub fn alice_input_slot(&self, i: usize, x: usize, prefix: usize) -> usize {
        if self.adaptive {
            x * self.alice_prefixes[i] + prefix
        } else {
            x
        }
    }

    #[inline]
    pub fn bob_input_slot(&self, i: usize, y: usize, prefix: usize) -> usize {
        if self.adaptive {
            y * self.bob_prefixes[i] + prefix
        } else {
            y
        }
    }
}

/// Explicit function tables for one deterministic strategy. Every table is
/// listed in canonical domain order: the party's own input is the most
/// significant coordinate, followed by the (prefix of the) output string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WiringStrategy {
    /// Input alphabets of the simulated box and its output alphabets.
    pub target: BoxShape,
    pub resources: Vec<BoxShape>,
    pub adaptive: bool,
    /// `alice_inputs[i][x * prefixes + prefix]`: what Alice types into box `i`.
    pub alice_inputs: Vec<Vec<usize>>,
    pub bob_inputs: Vec<Vec<usize>>,
    /// `alice_output[x * |Z_A| + z_A]`.
    pub alice_output: Vec<usize>,
    pub bob_output: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    #[serde(default)]
    format: Option<u32>,
    #[serde(flatten)]
    strategy: WiringStrategy,
}

impl WiringStrategy {
    pub fn layout(&self) -> StrategyLayout {
        StrategyLayout::new(self.target, self.resources.clone(), self.adaptive)
    }

    /// Checks table lengths and that every value is inside its alphabet.
    pub fn validate(&self) -> Result<()> {
        let layout = self.layout();
        if self.alice_inputs.len() != self.resources.len()
            || self.bob_inputs.len() != self.resources.len()
        {
            return Err(Error::Dimension(format!(
                "strategy lists {} Alice and {} Bob input tables for {} resources",
                self.alice_inputs.len(),
                self.bob_inputs.len(),
                self.resources.len()
            )));
        }
        for (i, r) in self.resources.iter().enumerate() {
            check_function(&format!("g_A[{i}]"), &self.alice_inputs[i], layout.alice_input_len(i), r.x)?;
            check_function(&format!("g_B[{i}]"), &self.bob_inputs[i], layout.bob_input_len(i), r.y)?;
        }
        check_function("F_A", &self.alice_output, layout.alice_output_len(), self.target.a)?;
        check_function("F_B", &self.bob_output, layout.bob_output_len(), self.target.b)?;
        Ok(())
    }

    /// Feeds `x`/`y` straight into a single box and outputs what it returns,
    /// embedded into `outputs`-symbol alphabets.
    pub fn identity(resource: BoxShape, outputs: (usize, usize)) -> Self {
        WiringStrategy {
            target: BoxShape::new(resource.x, resource.y, outputs.0, outputs.1),
            resources: vec![resource],
            adaptive: false,
            alice_inputs: vec![(0..resource.x).collect()],
            bob_inputs: vec![(0..resource.y).collect()],
            alice_output: (0..resource.x).flat_map(|_| 0..resource.a).collect(),
            bob_output: (0..resource.y).flat_map(|_| 0..resource.b).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = StrategyFile { format: Some(FORMAT_VERSION), strategy: self.clone() };
        serde_json::to_string_pretty(&file).expect("strategy serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StrategyFile = serde_json::from_str(text)?;
        check_version(file.format)?;
        file.strategy.validate()?;
        Ok(file.strategy)
    }
}

fn check_compatible(strategy: &WiringStrategy, resources: &ResourceSet) -> Result<()> {
    if strategy.resources != resources.shapes() {
        return Err(Error::Dimension(format!(
            "strategy expects resources {:?}, got {:?}",
            strategy.resources,
            resources.shapes()
        )));
    }
    strategy.validate()
}

/// The exact box produced by running `strategy` on `resources`.
pub fn induced_box(strategy: &WiringStrategy, resources: &ResourceSet) -> Result<BipartiteBox> {
    check_compatible(strategy, resources)?;
    let layout = strategy.layout();
    let target = strategy.target;
    let mut table = vec![Rational::zero(); target.len()];

    struct Walk<'a> {
        strategy: &'a WiringStrategy,
        layout: &'a StrategyLayout,
        boxes: &'a [BipartiteBox],
        x: usize,
        y: usize,
    }

    impl Walk<'_> {
        fn run(
            &self,
            i: usize,
            za: usize,
            zb: usize,
            weight: Rational,
            emit: &mut dyn FnMut(usize, usize, &Rational),
        ) {
            if i == self.boxes.len() {
                let a = self.strategy.alice_output[self.x * self.layout.za_size + za];
                let b = self.strategy.bob_output[self.y * self.layout.zb_size + zb];
                emit(a, b, &weight);
                return;
            }
            let bx = &self.boxes[i];
            let s = bx.shape();
            let ix = self.strategy.alice_inputs[i][self.layout.alice_input_slot(i, self.x, za)];
            let iy = self.strategy.bob_inputs[i][self.layout.bob_input_slot(i, self.y, zb)];
            for oa in 0..s.a {
                for ob in 0..s.b {
                    let p = bx.prob(ix, iy, oa, ob);
                    if p.is_zero() {
                        continue;
                    }
                    self.run(i + 1, za * s.a + oa, zb * s.b + ob, &weight * p, emit);
                }
            }
        }
    }

    for x in 0..target.x {
        for y in 0..target.y {
            let walk = Walk { strategy, layout: &layout, boxes: resources.boxes(), x, y };
            let base = (x * target.y + y) * target.a;
            walk.run(0, 0, 0, Rational::one(), &mut |a, b, w| {
                table[(base + a) * target.b + b] += w;
            });
        }
    }

    let induced = BipartiteBox::from_table(target, table)?;
    if let Some(v) = induced.check_invariants().first_violation() {
        return Err(Error::Internal(format!("wiring of valid resources produced an invalid box: {v}")));
    }
    Ok(induced)
}

/// Counting marginals `p_A(a|x) = |{z_A : F_A(x, z_A) = a}| / |Z_A|` (and Bob's),
/// valid because uniform-output resources make `z_A` uniform. The counting
/// tables are checked against the marginals of the induced box.
pub fn strategy_marginals(
    strategy: &WiringStrategy,
    resources: &ResourceSet,
) -> Result<(MarginalTable, MarginalTable)> {
    resources.require_uniform()?;
    check_compatible(strategy, resources)?;
    let layout = strategy.layout();
    let alice = counting_marginal(Side::Alice, &strategy.alice_output, strategy.target.x, layout.za_size, strategy.target.a);
    let bob = counting_marginal(Side::Bob, &strategy.bob_output, strategy.target.y, layout.zb_size, strategy.target.b);

    let (induced_alice, induced_bob) = induced_box(strategy, resources)?.marginals()?;
    if induced_alice != alice || induced_bob != bob {
        return Err(Error::Internal(
            "counting marginals disagree with the induced box marginals".into(),
        ));
    }
    Ok((alice, bob))
}

fn counting_marginal(
    side: Side,
    output: &[usize],
    inputs: usize,
    strings: usize,
    outputs: usize,
) -> MarginalTable {
    let mut counts = vec![0u64; inputs * outputs];
    for i in 0..inputs {
        for z in 0..strings {
            counts[i * outputs + output[i * strings + z]] += 1;
        }
    }
    let table = counts
        .into_iter()
        .map(|c| Rational::new(c, strings as u64).expect("nonempty string set"))
        .collect();
    MarginalTable::new(side, inputs, outputs, table).expect("sized above")
}

/// One of the four consistency conditions between the parties' marginals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarginalCondition {
    pub x: usize,
    pub y: usize,
    /// `x·y mod p`.
    pub shift: usize,
    pub satisfied: bool,
    /// Smallest `q` with `p_B(q|y) ≠ p_A(q − shift|x)`.
    pub first_violation: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub modulus: usize,
    pub conditions: Vec<MarginalCondition>,
    /// The conditions, taken together, force `p_B(q|1) = p_B(q+1|1)` for all `q`.
    pub forces_uniform: bool,
}

impl ConditionReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.0[v] != v {
            self.0[v] = self.0[self.0[v]];
            v = self.0[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Checks `p_B(q|y) = p_A((q − x·y) mod p | x)` for all `(x, y) ∈ {0,1}²`.
/// A perfect simulation of the mod-p box forces all four (b equals a shifted
/// by `xy` with certainty). `forces_uniform` is derived symbolically: each
/// condition identifies marginal variables, and the report asks whether the
/// identifications chain `p_B(q|1)` to `p_B(q+1|1)` for every `q`.
pub fn check_marginal_conditions(
    alice: &MarginalTable,
    bob: &MarginalTable,
    p: usize,
) -> Result<ConditionReport> {
    for t in [alice, bob] {
        if t.input_size != 2 || t.output_size != p {
            return Err(Error::Dimension(format!(
                "{:?} marginal is {}x{}, expected 2x{p}",
                t.side, t.input_size, t.output_size
            )));
        }
    }
    if p < 2 {
        return Err(Error::InvalidModulus(p as u64));
    }
    let a_var = |x: usize, q: usize| x * p + q;
    let b_var = |y: usize, q: usize| 2 * p + y * p + q;
    let mut classes = UnionFind::new(4 * p);
    let mut conditions = Vec::with_capacity(4);
    for x in 0..2 {
        for y in 0..2 {
            let shift = (x * y) % p;
            let mut first_violation = None;
            for q in 0..p {
                let src = (q + p - shift) % p;
                classes.union(b_var(y, q), a_var(x, src));
                if first_violation.is_none() && bob.get(y, q) != alice.get(x, src) {
                    first_violation = Some(q);
                }
            }
            conditions.push(MarginalCondition {
                x,
                y,
                shift,
                satisfied: first_violation.is_none(),
                first_violation,
            });
        }
    }
    let forces_uniform = (0..p).all(|q| classes.find(b_var(1, q)) == classes.find(b_var(1, (q + 1) % p)));
    Ok(ConditionReport { modulus: p, conditions, forces_uniform })
}

/// Whether some Bob marginal could satisfy all four conditions together with
/// `alice`. Conditions `(0,0)` and `(0,1)` pin Bob's table to `p_A(·|0)` on
/// both inputs, so that table is the only candidate worth checking.
pub fn alice_marginal_admissible(alice: &MarginalTable, p: usize) -> Result<bool> {
    if alice.input_size != 2 || alice.output_size != p {
        return Err(Error::Dimension(format!(
            "Alice marginal is {}x{}, expected 2x{p}",
            alice.input_size, alice.output_size
        )));
    }
    let forced = MarginalTable::from_fn(Side::Bob, 2, p, |_, q| alice.get(0, q).clone());
    Ok(check_marginal_conditions(alice, &forced, p)?.all_satisfied())
}

/// True iff `p` divides the product of `sizes`, i.e. iff some function from
/// the product set onto `{0..p−1}` has equal preimage sizes.
pub fn can_marginal_be_uniform(sizes: &[usize], p: usize) -> bool {
    if p == 0 {
        return false;
    }
    sizes.iter().fold(1 % p, |acc, &s| (acc * (s % p)) % p) == 0
}

/// The unique residue mod `p·q` congruent to `u` mod `p` and `v` mod `q`.
pub fn crt_combine(u: u64, v: u64, p: u64, q: u64) -> Result<u64> {
    let egcd = (p as i128).extended_gcd(&(q as i128));
    if egcd.gcd != 1 {
        return Err(Error::NotCoprime(p, q));
    }
    // p·inv ≡ 1 (mod q)
    let inv = egcd.x.mod_floor(&(q as i128));
    let k = ((v as i128 - u as i128) * inv).mod_floor(&(q as i128));
    Ok((u as i128 + p as i128 * k) as u64)
}

/// Wires a mod-p and a mod-q box into a mod-pq box by combining each
/// party's two outputs with the Chinese remainder map.
pub fn compose_crt(p: u64, q: u64) -> Result<(WiringStrategy, ResourceSet)> {
    if p < 2 {
        return Err(Error::InvalidModulus(p));
    }
    if q < 2 {
        return Err(Error::InvalidModulus(q));
    }
    if p.gcd(&q) != 1 {
        return Err(Error::NotCoprime(p, q));
    }
    let resources = ResourceSet::modp(&[p, q])?;
    let r = (p * q) as usize;
    let mut combined = Vec::with_capacity(r);
    for u in 0..p {
        for v in 0..q {
            combined.push(crt_combine(u, v, p, q)? as usize);
        }
    }
    let outputs: Vec<usize> = (0..2).flat_map(|_| combined.iter().copied()).collect();
    let strategy = WiringStrategy {
        target: BoxShape::binary_inputs(r),
        resources: resources.shapes(),
        adaptive: false,
        alice_inputs: vec![vec![0, 1], vec![0, 1]],
        bob_inputs: vec![vec![0, 1], vec![0, 1]],
        alice_output: outputs.clone(),
        bob_output: outputs,
    };
    Ok((strategy, resources))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn mod2() -> ResourceSet {
        ResourceSet::modp(&[2]).unwrap()
    }

    #[test]
    fn identity_wiring_reproduces_pr_box() {
        let s = WiringStrategy::identity(BoxShape::binary_inputs(2), (2, 2));
        assert_eq!(induced_box(&s, &mod2()).unwrap(), BipartiteBox::modp(2).unwrap());
    }

    #[test]
    fn empty_resources_give_local_box() {
        let s = WiringStrategy {
            target: BoxShape::binary_inputs(3),
            resources: vec![],
            adaptive: false,
            alice_inputs: vec![],
            bob_inputs: vec![],
            alice_output: vec![0, 0],
            bob_output: vec![0, 0],
        };
        let expected = BipartiteBox::local_deterministic(2, 2, 3, 3, &[0, 0], &[0, 0]).unwrap();
        assert_eq!(induced_box(&s, &ResourceSet::empty()).unwrap(), expected);
    }

    #[test]
    fn embedded_pr_box_hits_mod3_relation_seven_eighths() {
        let s = WiringStrategy::identity(BoxShape::binary_inputs(2), (3, 3));
        let b = induced_box(&s, &mod2()).unwrap();
        // Hand count: xy = 0 always succeeds; xy = 1 succeeds when b − a = 1,
        // i.e. (a,b) = (0,1), probability 1/2.
        let mut success = Rational::zero();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..3 {
                    success += b.prob(x, y, a, (a + x * y) % 3);
                }
            }
        }
        assert_eq!(success * Rational::unit_fraction(4), q(7, 8));
    }

    #[test]
    fn mismatched_resources_are_rejected() {
        let s = WiringStrategy::identity(BoxShape::binary_inputs(2), (2, 2));
        assert!(matches!(
            induced_box(&s, &ResourceSet::modp(&[3]).unwrap()),
            Err(Error::Dimension(_))
        ));
        let mut bad = s.clone();
        bad.alice_output[0] = 5;
        assert!(matches!(induced_box(&bad, &mod2()), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn identity_marginals_uniform() {
        let s = WiringStrategy::identity(BoxShape::binary_inputs(2), (2, 2));
        let (alice, bob) = strategy_marginals(&s, &mod2()).unwrap();
        assert!(alice.is_uniform() && bob.is_uniform());
    }

    #[test]
    fn constant_output_marginal() {
        let mut s = WiringStrategy::identity(BoxShape::binary_inputs(2), (2, 2));
        s.alice_output = vec![0; 4];
        let (alice, _) = strategy_marginals(&s, &mod2()).unwrap();
        assert!(alice.get(0, 0).is_one() && alice.get(1, 0).is_one());
    }

    #[test]
    fn two_strings_into_three_bins() {
        let s = WiringStrategy::identity(BoxShape::binary_inputs(2), (3, 3));
        let (alice, bob) = strategy_marginals(&s, &mod2()).unwrap();
        for x in 0..2 {
            assert_eq!(alice.row(x), &[q(1, 2), q(1, 2), q(0, 1)]);
            assert_eq!(bob.row(x), &[q(1, 2), q(1, 2), q(0, 1)]);
        }
        let report = check_marginal_conditions(&alice, &bob, 3).unwrap();
        let c11 = &report.conditions[3];
        assert_eq!((c11.x, c11.y, c11.satisfied, c11.first_violation), (1, 1, false, Some(0)));
        assert!(report.conditions[..3].iter().all(|c| c.satisfied));
    }

    #[test]
    fn non_uniform_resource_is_refused() {
        let local = BipartiteBox::local_deterministic(2, 2, 2, 2, &[0, 0], &[0, 0]).unwrap();
        let res = ResourceSet::new(vec![local]).unwrap();
        let s = WiringStrategy::identity(BoxShape::binary_inputs(2), (2, 2));
        assert!(matches!(strategy_marginals(&s, &res), Err(Error::NotUniform { index: 0 })));
    }

    #[test]
    fn uniform_marginals_satisfy_everything() {
        let u = MarginalTable::from_fn(Side::Alice, 2, 3, |_, _| q(1, 3));
        let report = check_marginal_conditions(&u, &u, 3).unwrap();
        assert!(report.all_satisfied());
        assert!(report.forces_uniform);
    }

    #[test]
    fn general_conditions_match_the_mod3_list() {
        // For p = 3 the four generic conditions are exactly
        //   p_A(q|0) = p_B(q|0), p_A(q|0) = p_B(q|1),
        //   p_A(q|1) = p_B(q|0), p_A(q|1) = p_B(q+1|1).
        let tables = [
            [q(1, 2), q(1, 4), q(1, 4)],
            [q(1, 4), q(1, 2), q(1, 4)],
            [q(1, 4), q(1, 4), q(1, 2)],
            [q(1, 1), q(0, 1), q(0, 1)],
        ];
        for a0 in &tables {
            for a1 in &tables {
                for b0 in &tables {
                    for b1 in &tables {
                        let alice = MarginalTable::from_fn(Side::Alice, 2, 3, |x, o| [a0, a1][x][o].clone());
                        let bob = MarginalTable::from_fn(Side::Bob, 2, 3, |y, o| [b0, b1][y][o].clone());
                        let report = check_marginal_conditions(&alice, &bob, 3).unwrap();
                        let listed = [
                            (0..3).all(|q| alice.get(0, q) == bob.get(0, q)),
                            (0..3).all(|q| alice.get(0, q) == bob.get(1, q)),
                            (0..3).all(|q| alice.get(1, q) == bob.get(0, q)),
                            (0..3).all(|q| alice.get(1, q) == bob.get(1, (q + 1) % 3)),
                        ];
                        let got: Vec<bool> = report.conditions.iter().map(|c| c.satisfied).collect();
                        assert_eq!(got, listed);
                    }
                }
            }
        }
    }

    #[test]
    fn forces_uniform_for_every_modulus() {
        for p in 2..9 {
            let u = MarginalTable::from_fn(Side::Alice, 2, p, |_, _| Rational::unit_fraction(p as u64));
            assert!(check_marginal_conditions(&u, &u, p).unwrap().forces_uniform);
        }
    }

    #[test]
    fn condition_dimension_errors() {
        let u = MarginalTable::from_fn(Side::Alice, 2, 3, |_, _| q(1, 3));
        assert!(check_marginal_conditions(&u, &u, 4).is_err());
    }

    #[test]
    fn divisibility_examples() {
        assert!(!can_marginal_be_uniform(&[2, 2, 2], 3));
        assert!(can_marginal_be_uniform(&[2, 3], 3));
        assert!(!can_marginal_be_uniform(&[2, 3, 4], 5));
        assert!(!can_marginal_be_uniform(&[], 3));
    }

    #[test]
    fn crt_values() {
        assert_eq!(crt_combine(1, 2, 2, 3).unwrap(), 5);
        assert_eq!(crt_combine(0, 0, 3, 5).unwrap(), 0);
        for u in 0..3 {
            for v in 0..5 {
                let r = crt_combine(u, v, 3, 5).unwrap();
                assert_eq!((r % 3, r % 5), (u, v));
            }
        }
        assert!(crt_combine(0, 1, 2, 4).is_err());
    }

    #[test]
    fn crt_composition_is_exact() {
        for (p, qq) in [(2, 3), (3, 5), (2, 5), (3, 7), (5, 7), (4, 5)] {
            let (s, res) = compose_crt(p, qq).unwrap();
            assert_eq!(induced_box(&s, &res).unwrap(), BipartiteBox::modp(p * qq).unwrap(), "{p}x{qq}");
        }
        assert!(matches!(compose_crt(2, 2), Err(Error::NotCoprime(2, 2))));
        assert!(matches!(compose_crt(6, 4), Err(Error::NotCoprime(6, 4))));
    }

    #[test]
    fn strategy_json_roundtrip() {
        let (s, _) = compose_crt(2, 3).unwrap();
        assert_eq!(WiringStrategy::from_json(&s.to_json()).unwrap(), s);
        let mut bad = s.clone();
        bad.bob_output.pop();
        assert!(WiringStrategy::from_json(&bad.to_json()).is_err());
    }

    #[test]
    fn adaptive_wiring_on_two_boxes_is_valid() {
        // Box 1's input is Alice's output from box 0; Bob feeds y to both.
        let pr = BoxShape::binary_inputs(2);
        let s = WiringStrategy {
            target: BoxShape::binary_inputs(2),
            resources: vec![pr, pr],
            adaptive: true,
            alice_inputs: vec![vec![0, 1], vec![0, 1, 0, 1]],
            bob_inputs: vec![vec![0, 1], vec![0, 0, 1, 1]],
            alice_output: vec![0, 1, 1, 0, 0, 1, 1, 0],
            bob_output: vec![0, 1, 1, 0, 0, 1, 1, 0],
        };
        let res = ResourceSet::modp(&[2, 2]).unwrap();
        let b = induced_box(&s, &res).unwrap();
        assert!(b.check_invariants().is_valid());
        strategy_marginals(&s, &res).unwrap();
    }
}
