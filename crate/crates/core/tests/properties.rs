use proptest::prelude::*;

use boxkit::boxes::{make_modp_box, BipartiteBox};
use boxkit::locality::{enumerate_local_vertices, is_local, DEFAULT_VERTEX_CAP};
use boxkit::rational::{q, Rational};
use boxkit::search::{
    count_strategy_space, evaluate_strategy, exhaustive_search, impossibility_precheck, is_prime, Engine,
    FidelityMetrics, SearchOptions, StrategyIndex, StrategySpace,
};
use boxkit::wiring::{induced_box, ResourceSet};

fn mod3_from_pr() -> (BipartiteBox, ResourceSet, StrategySpace) {
    let target = make_modp_box(3).unwrap();
    let resources = ResourceSet::modp(&[2]).unwrap();
    let space = StrategySpace::new(target.shape(), resources.shapes(), false);
    (target, resources, space)
}

fn index_strategy(space: &StrategySpace) -> impl Strategy<Value = StrategyIndex> {
    let [ga, gb, fa, fb] = space.component_counts().unwrap();
    (0..ga, 0..gb, 0..fa, 0..fb).prop_map(|(a, b, c, d)| StrategyIndex {
        alice_wiring: a,
        bob_wiring: b,
        alice_output: c,
        bob_output: d,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Mixing two deterministic strategies never beats the better of them.
    #[test]
    fn mixtures_are_convex(
        (i, j) in {
            let (_, _, space) = mod3_from_pr();
            (index_strategy(&space), index_strategy(&space))
        },
        w in 1i64..100,
    ) {
        let (target, resources, space) = mod3_from_pr();
        let w = q(w, 100);
        let b1 = induced_box(&space.strategy(&i), &resources).unwrap();
        let b2 = induced_box(&space.strategy(&j), &resources).unwrap();
        let m1 = FidelityMetrics::compute(&b1, &target).unwrap();
        let m2 = FidelityMetrics::compute(&b2, &target).unwrap();
        let mixed = FidelityMetrics::compute(&b1.mix(&b2, &w).unwrap(), &target).unwrap();
        let combo = &w * &m1.equation_success_avg + (Rational::one() - &w) * &m2.equation_success_avg;
        prop_assert_eq!(&mixed.equation_success_avg, &combo);
        let best = std::cmp::max(m1.equation_success_avg, m2.equation_success_avg);
        prop_assert!(mixed.equation_success_avg <= best);
    }

    #[test]
    fn metrics_are_ordered(idx in { let (_, _, s) = mod3_from_pr(); index_strategy(&s) }) {
        let (target, resources, space) = mod3_from_pr();
        let strategy = space.strategy(&idx);
        prop_assert_eq!(space.index_of(&strategy), idx);
        let b = induced_box(&strategy, &resources).unwrap();
        prop_assert!(b.check_invariants().is_valid());
        let m = evaluate_strategy(&strategy, &target, &resources).unwrap();
        prop_assert!(Rational::zero() <= m.equation_success_worst);
        prop_assert!(m.equation_success_worst <= m.equation_success_avg);
        prop_assert!(m.equation_success_avg <= Rational::one());
        prop_assert_eq!(m.equation_success_avg.is_one(), m.equation_success_worst.is_one());
        prop_assert_eq!(m.tv_distance_to_target.is_zero(), b == target);
    }

    /// Random rational mixtures of local vertices are certified local.
    #[test]
    fn local_mixtures_decompose(
        picks in proptest::collection::vec((0usize..16, 1i64..30), 1..6),
    ) {
        let shape = boxkit::boxes::BoxShape::binary_inputs(2);
        let vertices = enumerate_local_vertices(shape, DEFAULT_VERTEX_CAP).unwrap();
        let total: i64 = picks.iter().map(|p| p.1).sum();
        let weights: Vec<Rational> = picks.iter().map(|p| q(p.1, total)).collect();
        let boxes: Vec<BipartiteBox> = picks.iter().map(|p| vertices[p.0].to_box(shape).unwrap()).collect();
        let mixed = BipartiteBox::mixture(shape, weights.iter().zip(&boxes)).unwrap();
        let verdict = is_local(&mixed).unwrap();
        prop_assert!(verdict.is_local);
        let parts = verdict.decomposition.unwrap();
        let rebuilt: Vec<(Rational, BipartiteBox)> =
            parts.iter().map(|wv| (wv.weight.clone(), wv.vertex.to_box(shape).unwrap())).collect();
        let rebuilt = BipartiteBox::mixture(shape, rebuilt.iter().map(|(w, b)| (w, b))).unwrap();
        prop_assert_eq!(rebuilt, mixed);
    }
}

fn run(p: u64, moduli: &[u64], engine: Engine, prune: bool) -> boxkit::search::SearchCertificate {
    let target = make_modp_box(p).unwrap();
    let resources = ResourceSet::modp(moduli).unwrap();
    let opts = SearchOptions { engine, prune, cap: u128::MAX, ..SearchOptions::equation(p as usize) };
    exhaustive_search(&target, &resources, &opts).unwrap()
}

/// Small instances where every engine finishes: they agree with each other,
/// pruning never changes the answer, and the precheck never contradicts it.
#[test]
fn engines_pruning_and_precheck_agree() {
    let cases: [(u64, &[u64]); 8] = [
        (2, &[]),
        (2, &[2]),
        (3, &[]),
        (3, &[2]),
        (3, &[3]),
        (2, &[3]),
        (5, &[2]),
        (4, &[2]),
    ];
    for (p, moduli) in cases {
        let reference = run(p, moduli, Engine::Exhaustive, false);
        let expected = count_strategy_space(
            &ResourceSet::modp(moduli).unwrap().shapes(),
            make_modp_box(p).unwrap().shape(),
            false,
        );
        assert_eq!(reference.space_size, expected);
        assert_eq!(reference.visited_count.to_string(), expected.to_string(), "p={p} {moduli:?}");
        for (engine, prune) in [
            (Engine::Exhaustive, true),
            (Engine::BestResponse, false),
            (Engine::BestResponse, true),
            (Engine::Decomposed, false),
        ] {
            let other = run(p, moduli, engine, prune);
            assert_eq!(other.best_metrics, reference.best_metrics, "p={p} {moduli:?} {engine} {prune}");
            assert_eq!(other.perfect, reference.perfect, "p={p} {moduli:?} {engine} {prune}");
            assert_eq!(other.best_index, reference.best_index, "p={p} {moduli:?} {engine} {prune}");
        }
        if is_prime(p) && impossibility_precheck(p, &ResourceSet::modp(moduli).unwrap()).unwrap() {
            assert!(!reference.perfect, "p={p} {moduli:?}");
        }
    }
    // A box simulates itself.
    assert!(run(3, &[3], Engine::Auto, true).perfect);
}

#[test]
fn mod6_wiring_is_found() {
    // One mod-2 and one mod-3 box: the CRT wiring is in the (non-adaptive) space.
    let target = make_modp_box(6).unwrap();
    let resources = ResourceSet::modp(&[2, 3]).unwrap();
    let opts = SearchOptions { engine: Engine::Decomposed, cap: u128::MAX, ..SearchOptions::equation(6) };
    let cert = exhaustive_search(&target, &resources, &opts).unwrap();
    assert!(cert.perfect);
    assert!(cert.precheck.is_none(), "6 is not prime");
    assert_eq!(induced_box(cert.perfect_strategy.as_ref().unwrap(), &resources).unwrap(), target);
}

/// Adaptive wirings of two PR boxes do better than non-adaptive ones (15/16
/// against 7/8) but still fall short of the mod-3 relation.
#[test]
fn adaptive_two_boxes_find_nothing_perfect() {
    let target = make_modp_box(3).unwrap();
    let resources = ResourceSet::modp(&[2, 2]).unwrap();
    let search = |engine| {
        let opts = SearchOptions { adaptive: true, engine, ..SearchOptions::equation(3) };
        exhaustive_search(&target, &resources, &opts).unwrap()
    };
    let graph = search(Engine::Decomposed);
    let pruned = search(Engine::Auto);
    assert_eq!(pruned.engine, Engine::Exhaustive);
    assert!(!graph.perfect && !pruned.perfect);
    assert_eq!(graph.best_index, pruned.best_index);
    assert_eq!(graph.best_metrics, pruned.best_metrics);
    assert_eq!(graph.best_metrics.equation_success_avg, q(15, 16));
    assert_eq!(graph.best_metrics.equation_success_worst, q(3, 4));
}
