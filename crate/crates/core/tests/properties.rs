//! Invariants over random automata. Each case draws a seed and builds its
//! instance from it, so failures report a reproducible seed.

use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use catdet::automata::{accepted, brute_force_paths, enumerate_words, ulf_factorization_check};
use catdet::determinize::{
    classical_subset_construction, det_span, mdet, prune_reachable, reachable_iso_check, DEFAULT_POWERSET_CAP,
};
use catdet::gen::{classical_nfa, span_automaton, AutomatonParams};
use catdet::io::{loaded_document, parse_automaton, span_document, to_json};
use catdet::simulation::{canonical_det_simulation, check_bisimulation, check_simulation, Simulation, Strength};
use catdet::span::{NatMatrix, Span};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, failure_persistence: Some(Box::new(FileFailurePersistence::Off)), ..ProptestConfig::default() }
}

fn automaton(seed: u64) -> catdet::SpanAutomaton {
    span_automaton(&mut ChaCha8Rng::seed_from_u64(seed), &AutomatonParams::default())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn determinization_preserves_language(seed in any::<u64>()) {
        let a = automaton(seed);
        let d = det_span(&a, DEFAULT_POWERSET_CAP).unwrap().automaton;
        for n in 0..a.base.nodes().len() {
            for w in enumerate_words(&a.base, n, 4) {
                prop_assert_eq!(accepted(&a, &w), accepted(&d, &w));
            }
        }
    }

    #[test]
    fn multiset_runs_count_paths(seed in any::<u64>()) {
        let a = automaton(seed);
        let m = mdet(&a).unwrap();
        for w in enumerate_words(&a.base, a.initial.node, 4) {
            let paths = brute_force_paths(&a, &w).unwrap().len() as u64;
            prop_assert_eq!(m.accept_count(&w).unwrap(), paths);
        }
    }

    #[test]
    fn classical_and_categorical_agree(seed in any::<u64>()) {
        let n = classical_nfa(&mut ChaCha8Rng::seed_from_u64(seed), 5, 3, 0.3);
        let classical = classical_subset_construction(&n, DEFAULT_POWERSET_CAP).unwrap();
        let categorical = det_span(&n.to_span_automaton().unwrap(), DEFAULT_POWERSET_CAP).unwrap().automaton;
        prop_assert!(reachable_iso_check(&classical, &categorical).is_some());
    }

    #[test]
    fn determinizing_a_deterministic_automaton_changes_nothing_reachable(seed in any::<u64>()) {
        let a = span_automaton(&mut ChaCha8Rng::seed_from_u64(seed), &AutomatonParams { max_states: 2, ..Default::default() });
        let d = det_span(&a, DEFAULT_POWERSET_CAP).unwrap().automaton;
        let dd = det_span(&d.to_span_automaton(), DEFAULT_POWERSET_CAP).unwrap().automaton;
        prop_assert!(reachable_iso_check(&dd, &d).is_some());
    }

    #[test]
    fn pruning_is_idempotent(seed in any::<u64>()) {
        let d = det_span(&automaton(seed), DEFAULT_POWERSET_CAP).unwrap().automaton;
        let once = prune_reachable(&d);
        let twice = prune_reachable(&once);
        prop_assert_eq!(once.fibers, twice.fibers);
    }

    #[test]
    fn canonical_simulation_is_lax_and_pseudo_iff_squares_match(seed in any::<u64>()) {
        let a = automaton(seed);
        let canon = canonical_det_simulation(&a, DEFAULT_POWERSET_CAP).unwrap();
        prop_assert!(check_simulation(&canon.sim, Strength::Lax, None).unwrap().holds());
        let squares_match = (0..a.base.edges().len()).all(|e| {
            let (t, s) = canon.sim.square(e).unwrap();
            t.to_matrix() == s.to_matrix()
        });
        prop_assert_eq!(check_simulation(&canon.sim, Strength::Pseudo, None).unwrap().holds(), squares_match);
    }

    #[test]
    fn bisimulation_is_symmetric(seed in any::<u64>()) {
        let a = automaton(seed);
        let canon = canonical_det_simulation(&a, DEFAULT_POWERSET_CAP).unwrap();
        let id = Simulation::identity(&a, Strength::Pseudo);
        for sim in [canon.sim, id] {
            prop_assert_eq!(check_bisimulation(&sim).unwrap(), check_bisimulation(&sim.dagger()).unwrap());
        }
    }

    #[test]
    fn generator_squares_extend_to_words(seed in any::<u64>()) {
        let a = automaton(seed);
        let canon = canonical_det_simulation(&a, DEFAULT_POWERSET_CAP).unwrap();
        let sim = &canon.sim;
        let run = |aut: &catdet::SpanAutomaton, w: &catdet::Word| {
            w.edges().iter().fold(NatMatrix::identity(&aut.fibers[w.start()]), |m, &e| m.compose(&aut.transitions[e].to_matrix()).unwrap())
        };
        for n in 0..a.base.nodes().len() {
            for w in enumerate_words(&a.base, n, 3) {
                let end = w.end(&a.base);
                let target = run(&sim.target, &w).compose(&sim.components[end].to_matrix()).unwrap();
                let source = sim.components[n].to_matrix().compose(&run(&sim.source, &w)).unwrap();
                prop_assert!(target.support().pairs().is_subset(source.support().pairs()));
            }
        }
    }

    #[test]
    fn random_automata_have_unique_lifts(seed in any::<u64>()) {
        let a = span_automaton(&mut ChaCha8Rng::seed_from_u64(seed), &AutomatonParams { max_states: 3, ..Default::default() });
        prop_assert!(ulf_factorization_check(&a, 3));
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let a = automaton(seed);
        let text = to_json(&span_document(&a));
        let back = parse_automaton(&text).unwrap();
        prop_assert_eq!(to_json(&loaded_document(&back)), text);
        let spans: Vec<Span> = back.to_span().transitions;
        for (x, y) in spans.iter().zip(&a.transitions) {
            prop_assert!(x.iso_eq(y).unwrap());
        }
    }
}
