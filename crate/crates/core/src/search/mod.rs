//! Exhaustive search over deterministic wirings.
//!
//! Three engines cover the same canonical order. `Exhaustive` scores every
//! strategy, `BestResponse` resolves each Alice candidate `(g_A, g_B, F_A)`
//! by Bob's optimal reply, and `Decomposed` solves `F_A` and `F_B` together
//! per wiring on a constraint graph. All report the best strategy with ties
//! broken toward the earliest index, so any two engines that finish agree.

mod engine;
mod graph;
mod kernel;
mod metrics;
mod space;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::boxes::{BipartiteBox, BoxShape};
use crate::error::{Error, Result};
use crate::format::FORMAT_VERSION;
use crate::par::Parallelism;
use crate::rational::Rational;
use crate::wiring::{can_marginal_be_uniform, induced_box, ResourceSet, WiringStrategy};

pub use metrics::FidelityMetrics;
pub use space::{count_strategy_space, StrategyIndex, StrategySpace};

use engine::{Outcome, Run};
use kernel::{IntResources, Kernel, TargetTable};

pub const DEFAULT_CAP: u128 = 1_000_000_000;

pub const ENUMERATION_ORDER: &str =
    "lexicographic over (g_A, g_B, F_A, F_B); each table read as a mixed-radix number, first entry most significant";

/// Reason attached to a precheck that settles impossibility.
pub const DIVISIBILITY_REASON: &str = "product of output sizes coprime to p";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchMode {
    /// Success means `b − a ≡ x·y (mod p)` with certainty.
    Equation { modulus: usize },
    /// Success means reproducing the target box exactly.
    ExactBox,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Auto,
    Exhaustive,
    BestResponse,
    Decomposed,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Auto => "auto",
            Engine::Exhaustive => "exhaustive",
            Engine::BestResponse => "best_response",
            Engine::Decomposed => "decomposed",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "exhaustive" => Ok(Engine::Exhaustive),
            "best_response" | "best-response" => Ok(Engine::BestResponse),
            "decomposed" => Ok(Engine::Decomposed),
            other => Err(Error::Format(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: SearchMode,
    pub adaptive: bool,
    pub prune: bool,
    /// Upper bound on the work units an engine may spend.
    pub cap: u128,
    pub engine: Engine,
    pub parallelism: Parallelism,
}

impl SearchOptions {
    pub fn equation(p: usize) -> Self {
        SearchOptions {
            mode: SearchMode::Equation { modulus: p },
            adaptive: false,
            prune: true,
            cap: DEFAULT_CAP,
            engine: Engine::Auto,
            parallelism: Parallelism::Auto,
        }
    }

    pub fn exact() -> Self {
        SearchOptions { mode: SearchMode::ExactBox, ..SearchOptions::equation(2) }
    }
}

mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDescriptor {
    pub label: String,
    pub shape: BoxShape,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecheckReport {
    pub modulus: u64,
    pub alice_output_sizes: Vec<usize>,
    pub bob_output_sizes: Vec<usize>,
    #[serde(with = "as_string")]
    pub alice_product: BigUint,
    #[serde(with = "as_string")]
    pub bob_product: BigUint,
    pub provably_impossible: bool,
    pub reason: Option<String>,
}

/// Outcome of a completed search. Counts are decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCertificate {
    pub format: u32,
    pub target: BoxDescriptor,
    pub resources: Vec<BoxDescriptor>,
    pub mode: SearchMode,
    pub adaptive: bool,
    pub prune: bool,
    /// Whether marginal pruning was active (equation mode, uniform resources).
    pub pruning_applied: bool,
    pub engine: Engine,
    pub enumeration_order: String,
    #[serde(with = "as_string")]
    pub space_size: BigUint,
    /// Strategies scored individually.
    #[serde(with = "as_string")]
    pub visited_count: u128,
    #[serde(with = "as_string")]
    pub pruned_count: u128,
    #[serde(with = "as_string")]
    pub best_response_count: u128,
    #[serde(with = "as_string")]
    pub solved_count: u128,
    pub best_index: StrategyIndex,
    pub perfect: bool,
    pub perfect_strategy: Option<WiringStrategy>,
    pub best_strategy: WiringStrategy,
    pub best_metrics: FidelityMetrics,
    pub precheck: Option<PrecheckReport>,
}

impl SearchCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cert: SearchCertificate = serde_json::from_str(text)?;
        crate::format::check_version(Some(cert.format))?;
        Ok(cert)
    }
}

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime strictly above every listed size.
pub fn prime_escalation(resource_output_sizes: &[usize]) -> u64 {
    let floor = resource_output_sizes.iter().copied().max().unwrap_or(1) as u64;
    (floor + 1..).find(|&n| is_prime(n)).expect("primes are unbounded")
}

fn product(sizes: &[usize]) -> BigUint {
    sizes.iter().fold(BigUint::one(), |acc, &s| acc * BigUint::from(s))
}

pub fn precheck_report(p: u64, resources: &ResourceSet) -> Result<PrecheckReport> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    resources.require_uniform()?;
    let alice = resources.alice_sizes();
    let bob = resources.bob_sizes();
    let impossible = !can_marginal_be_uniform(&alice, p as usize) && !can_marginal_be_uniform(&bob, p as usize);
    Ok(PrecheckReport {
        modulus: p,
        alice_product: product(&alice),
        bob_product: product(&bob),
        alice_output_sizes: alice,
        bob_output_sizes: bob,
        provably_impossible: impossible,
        reason: impossible.then(|| DIVISIBILITY_REASON.to_string()),
    })
}

/// True when the divisibility argument alone rules out a perfect simulation
/// of the mod-p box.
pub fn impossibility_precheck(p: u64, resources: &ResourceSet) -> Result<bool> {
    Ok(precheck_report(p, resources)?.provably_impossible)
}

pub fn evaluate_strategy(
    strategy: &WiringStrategy,
    target: &BipartiteBox,
    resources: &ResourceSet,
) -> Result<FidelityMetrics> {
    FidelityMetrics::compute(&induced_box(strategy, resources)?, target)
}

fn target_label(target: &BipartiteBox) -> String {
    let s = target.shape();
    if s.x == 2 && s.y == 2 && s.a == s.b {
        if let Ok(m) = BipartiteBox::modp(s.a as u64) {
            if &m == target {
                return format!("modp{}", s.a);
            }
        }
    }
    "custom".into()
}

fn cap_check(what: &str, needed: Option<u128>, cap: u128) -> Result<u128> {
    match needed {
        Some(n) if n <= cap => Ok(n),
        _ => Err(Error::CapExceeded {
            what: what.into(),
            needed: needed.map_or_else(|| "more than 2^128".into(), |n| n.to_string()),
            cap,
        }),
    }
}

/// Searches every deterministic wiring of `resources` for the best
/// simulation of `target`.
pub fn exhaustive_search(
    target: &BipartiteBox,
    resources: &ResourceSet,
    opts: &SearchOptions,
) -> Result<SearchCertificate> {
    target.ensure_valid()?;
    let shape = target.shape();
    let modulus = match opts.mode {
        SearchMode::Equation { modulus } => {
            let expected = BipartiteBox::modp(modulus as u64)?;
            if &expected != target {
                return Err(Error::Incompatible(format!(
                    "equation mode with modulus {modulus} needs the mod-{modulus} box as target"
                )));
            }
            Some(modulus)
        }
        SearchMode::ExactBox => None,
    };
    let exact = modulus.is_none();
    let pruning_applied = opts.prune && !exact && resources.all_uniform();

    let space = StrategySpace::new(shape, resources.shapes(), opts.adaptive);
    let space_size = space.size();
    let alice_candidates = space.alice_candidate_count();

    let engine = match opts.engine {
        Engine::Auto => {
            let all_pruned = pruning_applied
                && !can_marginal_be_uniform(&[space.layout.za_size], modulus.unwrap_or(1));
            let exhaustive_work = if all_pruned { alice_candidates } else { space.size_u128() };
            if exhaustive_work.is_some_and(|w| w <= opts.cap) {
                Engine::Exhaustive
            } else if exact {
                cap_check("exact-box search", exhaustive_work, opts.cap)?;
                unreachable!("cap check fails above")
            } else if alice_candidates.is_some_and(|w| w <= opts.cap) {
                Engine::BestResponse
            } else {
                cap_check("constraint-graph search", space.wiring_count(), opts.cap)?;
                Engine::Decomposed
            }
        }
        Engine::Exhaustive => {
            cap_check("exhaustive search", space.size_u128(), opts.cap)?;
            Engine::Exhaustive
        }
        Engine::BestResponse => {
            cap_check("best-response search", alice_candidates, opts.cap)?;
            Engine::BestResponse
        }
        Engine::Decomposed => {
            cap_check("constraint-graph search", space.wiring_count(), opts.cap)?;
            Engine::Decomposed
        }
    };
    if exact && engine != Engine::Exhaustive {
        return Err(Error::Incompatible(format!("engine {engine} cannot rank exact-box fidelity")));
    }

    let ints = IntResources::new(resources)?;
    let table = TargetTable::new(target, &ints, exact)?;
    let run = Run {
        space: &space,
        kernel: Kernel { layout: &space.layout, ints: &ints, target: &table },
        exact,
        prune: if pruning_applied { modulus } else { None },
        parallelism: opts.parallelism,
        budget: opts.cap,
    };
    let outcome: Outcome = match engine {
        Engine::Exhaustive => run.exhaustive()?,
        Engine::BestResponse => run.best_response()?,
        Engine::Decomposed => run.decomposed(modulus.expect("equation mode"))?,
        Engine::Auto => unreachable!("resolved above"),
    };

    if BigUint::from(outcome.total()) != space_size {
        return Err(Error::Internal(format!(
            "search covered {} strategies but the space has {space_size}",
            outcome.total()
        )));
    }
    let best = outcome.best.ok_or_else(|| Error::Internal("empty strategy space".into()))?;
    let best_strategy = space.strategy(&best.index);
    let best_metrics = evaluate_strategy(&best_strategy, target, resources)?;

    let pairs = (shape.x * shape.y) as u128;
    let kernel_avg = Rational::new(best.key.success, pairs * ints.scale)?;
    if kernel_avg != best_metrics.equation_success_avg {
        return Err(Error::Internal(format!(
            "integer kernel scored {kernel_avg} but exact evaluation gives {}",
            best_metrics.equation_success_avg
        )));
    }
    if exact {
        let kernel_tv = Rational::new(best.key.tv, table.tv_denominator(&ints))?;
        if kernel_tv != best_metrics.tv_distance_to_target {
            return Err(Error::Internal(format!(
                "integer kernel distance {kernel_tv} but exact evaluation gives {}",
                best_metrics.tv_distance_to_target
            )));
        }
    }

    let perfect = if exact { best_metrics.is_exact() } else { best_metrics.satisfies_equation() };
    let precheck = match modulus {
        Some(p) if is_prime(p as u64) && resources.all_uniform() => Some(precheck_report(p as u64, resources)?),
        _ => None,
    };
    if perfect && precheck.as_ref().is_some_and(|r| r.provably_impossible) {
        return Err(Error::Internal(
            "search found a perfect strategy that the divisibility precheck rules out".into(),
        ));
    }

    Ok(SearchCertificate {
        format: FORMAT_VERSION,
        target: BoxDescriptor { label: target_label(target), shape },
        resources: resources
            .labels()
            .iter()
            .zip(resources.shapes())
            .map(|(label, shape)| BoxDescriptor { label: label.clone(), shape })
            .collect(),
        mode: opts.mode,
        adaptive: opts.adaptive,
        prune: opts.prune,
        pruning_applied,
        engine,
        enumeration_order: ENUMERATION_ORDER.into(),
        space_size,
        visited_count: outcome.visited,
        pruned_count: outcome.pruned,
        best_response_count: outcome.best_response,
        solved_count: outcome.solved,
        best_index: best.index,
        perfect,
        perfect_strategy: perfect.then(|| best_strategy.clone()),
        best_strategy,
        best_metrics,
        precheck,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::Side;
    use crate::boxes::MarginalTable;
    use crate::rational::q;
    use crate::wiring::alice_marginal_admissible;

    fn search(p: usize, moduli: &[u64], engine: Engine, prune: bool) -> SearchCertificate {
        let target = BipartiteBox::modp(p as u64).unwrap();
        let resources = ResourceSet::modp(moduli).unwrap();
        let opts = SearchOptions { engine, prune, cap: u128::MAX, ..SearchOptions::equation(p) };
        exhaustive_search(&target, &resources, &opts).unwrap()
    }

    #[test]
    fn primes_and_escalation() {
        let primes: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(prime_escalation(&[2]), 3);
        assert_eq!(prime_escalation(&[2, 3, 4]), 5);
        assert_eq!(prime_escalation(&[6]), 7);
    }

    #[test]
    fn precheck_examples() {
        assert!(impossibility_precheck(3, &ResourceSet::modp(&[2; 5]).unwrap()).unwrap());
        assert!(impossibility_precheck(5, &ResourceSet::modp(&[2, 3, 4]).unwrap()).unwrap());
        assert!(!impossibility_precheck(3, &ResourceSet::modp(&[3]).unwrap()).unwrap());
        assert!(matches!(
            impossibility_precheck(4, &ResourceSet::modp(&[2]).unwrap()),
            Err(Error::NotPrime(4))
        ));
        let r = precheck_report(5, &ResourceSet::modp(&[2, 3]).unwrap()).unwrap();
        assert_eq!(r.reason.as_deref(), Some(DIVISIBILITY_REASON));
        assert_eq!(r.alice_product, BigUint::from(6u32));
    }

    #[test]
    fn precheck_requires_uniform_resources() {
        let local = BipartiteBox::local_deterministic(2, 2, 2, 2, &[0, 0], &[0, 0]).unwrap();
        let set = ResourceSet::new(vec![local]).unwrap();
        assert!(matches!(impossibility_precheck(3, &set), Err(Error::NotUniform { .. })));
    }

    #[test]
    fn self_simulation_is_perfect() {
        let cert = search(2, &[2], Engine::Auto, true);
        assert!(cert.perfect);
        let s = cert.perfect_strategy.unwrap();
        assert_eq!(s, WiringStrategy::identity(BoxShape::binary_inputs(2), (2, 2)));
        assert!(cert.best_metrics.is_exact());
    }

    #[test]
    fn exact_mode_self_simulation() {
        let target = BipartiteBox::modp(2).unwrap();
        let resources = ResourceSet::modp(&[2]).unwrap();
        let cert = exhaustive_search(&target, &resources, &SearchOptions::exact()).unwrap();
        assert!(cert.perfect);
        assert_eq!(cert.visited_count, 4 * 4 * 16 * 16);
        assert_eq!(cert.best_metrics.tv_distance_to_target, q(0, 1));
    }

    #[test]
    fn n1_engines_agree() {
        let unpruned = search(3, &[2], Engine::Exhaustive, false);
        assert_eq!(unpruned.visited_count, 104_976);
        assert!(!unpruned.perfect);
        assert_eq!(unpruned.best_metrics.equation_success_avg, q(7, 8));
        for (engine, prune) in [
            (Engine::Exhaustive, true),
            (Engine::BestResponse, false),
            (Engine::BestResponse, true),
            (Engine::Decomposed, false),
        ] {
            let other = search(3, &[2], engine, prune);
            assert_eq!(other.best_index, unpruned.best_index, "{engine} prune={prune}");
            assert_eq!(other.best_metrics, unpruned.best_metrics);
            assert_eq!(other.perfect, unpruned.perfect);
        }
        let pruned = search(3, &[2], Engine::Exhaustive, true);
        assert_eq!(pruned.pruned_count, 104_976);
    }

    #[test]
    fn p5_single_box_engines_agree() {
        let a = search(5, &[2], Engine::Exhaustive, false);
        let b = search(5, &[2], Engine::Decomposed, false);
        let c = search(5, &[2], Engine::BestResponse, true);
        assert!(!a.perfect);
        assert_eq!(a.best_index, b.best_index);
        assert_eq!(a.best_index, c.best_index);
        assert_eq!(a.best_metrics, b.best_metrics);
    }

    #[test]
    fn zero_resources() {
        let cert = search(3, &[], Engine::Exhaustive, false);
        assert_eq!(cert.space_size, BigUint::from(81u32));
        assert_eq!(cert.best_metrics.equation_success_avg, q(3, 4));
    }

    #[test]
    fn worker_count_does_not_change_certificate() {
        let target = BipartiteBox::modp(3).unwrap();
        let resources = ResourceSet::modp(&[2]).unwrap();
        let mut opts = SearchOptions { prune: false, ..SearchOptions::equation(3) };
        let base = exhaustive_search(&target, &resources, &opts).unwrap();
        for par in [Parallelism::Sequential, Parallelism::Workers(3)] {
            opts.parallelism = par;
            assert_eq!(exhaustive_search(&target, &resources, &opts).unwrap(), base);
        }
    }

    #[test]
    fn kernel_pruning_matches_marginal_conditions() {
        for p in [2usize, 3] {
            let space = StrategySpace::new(BoxShape::binary_inputs(p), vec![BoxShape::binary_inputs(2)], false);
            let resources = ResourceSet::modp(&[2]).unwrap();
            let ints = IntResources::new(&resources).unwrap();
            let target = BipartiteBox::modp(p as u64).unwrap();
            let table = TargetTable::new(&target, &ints, false).unwrap();
            let kernel = Kernel { layout: &space.layout, ints: &ints, target: &table };
            let mut scratch = Vec::new();
            let mut fa = vec![0; space.layout.alice_output_len()];
            loop {
                let marginal = MarginalTable::from_fn(Side::Alice, 2, p, |x, a| {
                    let hits = fa[x * 2..x * 2 + 2].iter().filter(|&&v| v == a).count();
                    Rational::new(hits as u64, 2u64).unwrap()
                });
                let admissible = alice_marginal_admissible(&marginal, p).unwrap();
                assert_eq!(kernel.alice_marginals_uniform(&fa, p, &mut scratch), admissible, "{fa:?}");
                if !space.alice_output.increment(&mut fa) {
                    break;
                }
            }
        }
    }

    #[test]
    fn certificate_json_roundtrip() {
        let cert = search(3, &[2], Engine::BestResponse, true);
        let back = SearchCertificate::from_json(&cert.to_json()).unwrap();
        assert_eq!(back, cert);
        assert!(cert.to_json().contains("\"space_size\": \"104976\""));
    }

    #[test]
    fn cap_is_enforced() {
        let target = BipartiteBox::modp(3).unwrap();
        let resources = ResourceSet::modp(&[2]).unwrap();
        let opts = SearchOptions { cap: 10, prune: false, ..SearchOptions::equation(3) };
        let err = exhaustive_search(&target, &resources, &opts).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }), "{err}");
        // 16 wirings fit a cap of 1000 even though the raw space does not.
        let opts = SearchOptions { cap: 1000, ..opts };
        assert_eq!(exhaustive_search(&target, &resources, &opts).unwrap().engine, Engine::Decomposed);
    }
}
