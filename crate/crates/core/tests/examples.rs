//! Worked examples with hand-computed expected values.

use std::collections::BTreeSet;
use std::sync::Arc;

use catdet::automata::fixtures::{example1, example2};
use catdet::automata::{
    accepted, brute_force_paths, count_paths, enumerate_words, is_deterministic, language, run_word_span, ulf_factorization_check,
    unique_lift_check, Automaton, BaseGraph, StateRef,
};
use catdet::determinize::{
    classical_subset_construction, det, det_span, mdet, prune_reachable, reachable_iso_check, rel_of, ClassicalNfa,
    DEFAULT_POWERSET_CAP,
};
use catdet::simulation::{
    canonical_det_simulation, canonical_mdet_simulation, check_bisimulation, check_simulation, factor_det, factor_mdet,
    SimError, Simulation, Strength, Verdict,
};
use catdet::span::{FinSet, Multiset, MultisetBag, NatMatrix, Relation, Span};

fn set(labels: &[&str]) -> FinSet {
    FinSet::new(labels.iter().copied()).unwrap()
}

fn labels<T: catdet::automata::Transition>(a: &Automaton<T>) -> Vec<String> {
    a.fibers.iter().flat_map(|f| f.labels().to_vec()).collect()
}

#[test]
fn doubled_token_composes_to_two_tokens() {
    let (a, b, c) = (set(&["1"]), set(&["2"]), set(&["3"]));
    let s = Span::from_label_pairs(a, b.clone(), &[("1", "2"), ("1", "2")]).unwrap();
    let t = Span::from_label_pairs(b, c, &[("2", "3")]).unwrap();
    let st = s.compose(&t).unwrap();
    assert_eq!(st.tokens().len(), 2);
    assert_eq!(st.multiplicity(0, 0), 2);
}

#[test]
fn extension_is_the_weighted_row_sum() {
    let a = set(&["1", "2"]);
    let b = set(&["x", "y"]);
    let m = NatMatrix::from_rows(a.clone(), b.clone(), &[vec![2, 0], vec![1, 1]]).unwrap();
    let v = Multiset::new(a, vec![1, 1]).unwrap();
    assert_eq!(m.extend(&v).unwrap().counts(), &[3, 1]);
}

#[test]
fn flatten_scales_by_weight() {
    let b = set(&["x"]);
    let mut bag = MultisetBag::new(b.clone());
    bag.insert(&Multiset::new(b, vec![2]).unwrap(), 3).unwrap();
    assert_eq!(bag.flatten().unwrap().counts(), &[6]);
}

#[test]
fn one_by_one_matrices_multiply() {
    let a = set(&["p"]);
    let m = NatMatrix::from_rows(a.clone(), a.clone(), &[vec![2]]).unwrap();
    let n = NatMatrix::from_rows(a.clone(), a, &[vec![3]]).unwrap();
    assert_eq!(m.compose(&n).unwrap().to_rows(), vec![vec![6]]);
}

#[test]
fn parallel_tokens_admit_a_morphism_but_no_iso() {
    let (a, b) = (set(&["1"]), set(&["2"]));
    let s = Span::from_label_pairs(a.clone(), b.clone(), &[("1", "2")]).unwrap();
    let t = Span::from_label_pairs(a, b, &[("1", "2"), ("1", "2")]).unwrap();
    assert!(catdet::span::span_morphism_search(&s, &t, false).unwrap().is_some());
    assert!(catdet::span::span_morphism_search(&s, &t, true).unwrap().is_none());
}

#[test]
fn example2_words_up_to_two() {
    let a = example2();
    let words: Vec<String> = enumerate_words(&a.base, 0, 2).iter().map(|w| w.ids(&a.base).concat()).collect();
    assert_eq!(words, ["", "a", "b", "x", "aa", "ab", "ax", "ba", "bb", "bx", "xc", "xd"]);
}

#[test]
fn example1_runs_and_counts() {
    let a = example1();
    let ab = a.base.word("*", &["a", "b"]).unwrap();
    let aa = a.base.word("*", &["a", "a"]).unwrap();
    let ba = a.base.word("*", &["b", "a"]).unwrap();
    let eps = a.base.word("*", &[]).unwrap();
    assert_eq!(run_word_span(&a, &ab).unwrap().get(0, 1), 2);
    let m = run_word_span(&a, &aa).unwrap();
    assert_eq!((m.get(0, 0), m.get(0, 1)), (1, 1));
    assert_eq!(run_word_span(&a, &eps).unwrap(), NatMatrix::identity(&a.fibers[0]));
    assert!(accepted(&a, &ab));
    assert!(!accepted(&a, &eps));
    assert!(!accepted(&a, &ba));
    assert_eq!(count_paths(&a, &ab).unwrap(), 2);
    assert_eq!(brute_force_paths(&a, &ab).unwrap().len(), 2);
    assert_eq!(brute_force_paths(&a, &a.base.word("*", &["b"]).unwrap()).unwrap().len(), 1);
    let lang: Vec<String> = language(&a, 2).iter().map(|w| w.ids(&a.base).concat()).collect();
    assert_eq!(lang, ["a", "b", "aa", "ab", "bb"]);
    assert!(language(&a, 0).is_empty());
}

#[test]
fn unique_lifting_and_determinism() {
    let a = example1();
    assert!(ulf_factorization_check(&a, 3));
    assert!(!is_deterministic(&rel_of(&a)));
    let d = det_span(&a, DEFAULT_POWERSET_CAP).unwrap().automaton;
    assert!(unique_lift_check(&d, 4));
    assert!(is_deterministic(&d.to_rel()));
}

#[test]
fn example1_determinizes_to_the_four_subset_dfa() {
    let r = rel_of(&example1());
    let q = &r.fibers[0];
    assert_eq!(r.transitions[0], Relation::from_label_pairs(q.clone(), q.clone(), &[("1", "1"), ("1", "2")]).unwrap());
    assert_eq!(r.transitions[1], Relation::from_label_pairs(q.clone(), q.clone(), &[("1", "2"), ("2", "2")]).unwrap());

    let d = det(&r, DEFAULT_POWERSET_CAP).unwrap().automaton;
    assert_eq!(labels(&d), ["{}", "{1}", "{2}", "{1,2}"]);
    let step = |e: usize, s: &str| d.fibers[0].label(d.transitions[e].apply(d.fibers[0].position(s).unwrap())).to_string();
    for (s, a, b) in [("{1}", "{1,2}", "{2}"), ("{2}", "{}", "{2}"), ("{1,2}", "{1,2}", "{2}"), ("{}", "{}", "{}")] {
        assert_eq!((step(0, s), step(1, s)), (a.to_string(), b.to_string()), "from {s}");
    }
    assert_eq!(d.state_label(d.initial), "{1}");
    let finals: Vec<&str> = d.finals.iter().map(|&f| d.state_label(f)).collect();
    assert_eq!(finals, ["{2}", "{1,2}"]);
}

#[test]
fn example2_keeps_fibers_apart() {
    let d = det_span(&example2(), DEFAULT_POWERSET_CAP).unwrap();
    assert_eq!(d.automaton.fibers[0].len(), 4);
    assert_eq!(d.automaton.fibers[1].len(), 8);
    for (n, subsets) in d.subsets.iter().enumerate() {
        assert!(subsets.iter().all(|s| s.node == n));
    }
    assert!(d.automaton.fibers[1].labels().iter().all(|l| l.starts_with("d:")));
}

#[test]
fn empty_relations_send_everything_to_the_empty_subset() {
    let mut a = example1();
    let q = a.fibers[0].clone();
    a.transitions = vec![Span::new(q.clone(), q.clone(), vec![]).unwrap(), Span::new(q.clone(), q, vec![]).unwrap()];
    let d = det_span(&a, DEFAULT_POWERSET_CAP).unwrap().automaton;
    for t in &d.transitions {
        assert!(t.table().iter().all(|&s| d.fibers[0].label(s) == "{}"));
    }
}

#[test]
fn mdet_of_example1() {
    let m = mdet(&example1()).unwrap();
    assert_eq!(m.matrices[0].to_rows(), vec![vec![1, 1], vec![0, 0]]);
    assert_eq!(m.matrices[1].to_rows(), vec![vec![0, 1], vec![0, 1]]);
    let base = &m.base;
    assert_eq!(m.run(&base.word("*", &["a"]).unwrap()).unwrap().counts(), &[1, 1]);
    assert_eq!(m.run(&base.word("*", &["a", "b"]).unwrap()).unwrap().counts(), &[0, 2]);
    assert_eq!(m.run(&base.word("*", &[]).unwrap()).unwrap(), m.initial_vector);
    assert_eq!(m.accept_count(&base.word("*", &["a", "b"]).unwrap()).unwrap(), 2);
    assert_eq!(m.accept_count(&base.word("*", &[]).unwrap()).unwrap(), 0);
    assert_eq!(m.accept_count(&base.word("*", &["b", "b"]).unwrap()).unwrap(), 1);
}

#[test]
fn expansion_of_deterministic_input_matches_its_reachable_part() {
    let d = det_span(&example1(), DEFAULT_POWERSET_CAP).unwrap().automaton;
    let x = mdet(&d.to_span_automaton()).unwrap().expand(100, 10).unwrap();
    assert!(!x.truncated);
    let closed = x.to_det().unwrap();
    assert!(reachable_iso_check(&closed, &d).is_some());
}

#[test]
fn classical_construction_examples() {
    let q = set(&["1", "2"]);
    let letters = vec!["a".to_string(), "b".to_string()];
    let delta = vec![
        vec![BTreeSet::from([0, 1]), BTreeSet::from([1])],
        vec![BTreeSet::new(), BTreeSet::from([1])],
    ];
    let n = ClassicalNfa::new("*", letters.clone(), q, delta, 0, BTreeSet::from([1])).unwrap();
    let classical = classical_subset_construction(&n, DEFAULT_POWERSET_CAP).unwrap();
    let categorical = det_span(&example1(), DEFAULT_POWERSET_CAP).unwrap().automaton;
    assert!(reachable_iso_check(&classical, &categorical).is_some());

    let one = set(&["p"]);
    let n = ClassicalNfa::new("*", vec!["a".into()], one.clone(), vec![vec![BTreeSet::from([0])]], 0, BTreeSet::new()).unwrap();
    assert_eq!(classical_subset_construction(&n, DEFAULT_POWERSET_CAP).unwrap().fibers[0].len(), 2);

    let silent = ClassicalNfa::new("*", letters, one, vec![vec![BTreeSet::new(), BTreeSet::new()]], 0, BTreeSet::new()).unwrap();
    let d = classical_subset_construction(&silent, DEFAULT_POWERSET_CAP).unwrap();
    let empty = d.fibers[0].position("{}").unwrap();
    assert!(d.transitions.iter().all(|t| t.table().iter().all(|&s| s == empty)));
}

#[test]
fn pruning_example1_keeps_all_four_states() {
    let d = det_span(&example1(), DEFAULT_POWERSET_CAP).unwrap();
    let pruned = d.pruned();
    assert_eq!(pruned.automaton.state_count(), 4);
    let twice = prune_reachable(&prune_reachable(&d.automaton));
    assert_eq!(labels(&twice), labels(&prune_reachable(&d.automaton)));
}

#[test]
fn iso_check_rejects_different_languages() {
    let d = det_span(&example1(), DEFAULT_POWERSET_CAP).unwrap().automaton;
    let mut other = d.clone();
    other.finals = BTreeSet::from([other.initial]);
    assert!(reachable_iso_check(&d, &other).is_none());
    let id = reachable_iso_check(&d, &d).unwrap();
    assert!(id.iter().all(|(x, y)| x == y));
}

#[test]
fn canonical_simulations_on_example1() {
    let a = example1();
    let canon = canonical_det_simulation(&a, DEFAULT_POWERSET_CAP).unwrap();
    assert!(check_simulation(&canon.sim, Strength::Lax, None).unwrap().holds());

    let m = canonical_mdet_simulation(&a, 4, 1000).unwrap();
    assert!(m.check().unwrap().holds());
    let both = m.expansion.states.iter().position(|s| s.vector.counts() == [1, 1]).unwrap();
    let span = m.component_span(0).unwrap();
    let r = m.expansion.state_ref(both);
    assert_eq!((span.multiplicity(r.index, 0), span.multiplicity(r.index, 1)), (1, 1));
}

#[test]
fn counit_simulation_is_not_a_bisimulation() {
    let canon = canonical_det_simulation(&example1(), DEFAULT_POWERSET_CAP).unwrap();
    assert!(!check_bisimulation(&canon.sim).unwrap());
}

/// `F` has one loop sending both states to 1; `G` has one state `x` related
/// to 1 only. The simulation is pseudo but its converse is not natural.
#[test]
fn dagger_of_a_pseudo_simulation_need_not_be_natural() {
    let base = Arc::new(BaseGraph::from_strs(&["*"], &[("a", "a", "*", "*")]).unwrap());
    let q = set(&["1", "2"]);
    let x = set(&["x"]);
    let f = Automaton {
        base: base.clone(),
        fibers: vec![q.clone()],
        transitions: vec![Span::from_label_pairs(q.clone(), q.clone(), &[("1", "1"), ("2", "1")]).unwrap()],
        initial: StateRef::new(0, 0),
        finals: BTreeSet::new(),
    };
    let g = Automaton {
        base,
        fibers: vec![x.clone()],
        transitions: vec![Span::identity(&x)],
        initial: StateRef::new(0, 0),
        finals: BTreeSet::new(),
    };
    let alpha = Simulation::new(f, g, vec![Span::from_label_pairs(x, q, &[("x", "1")]).unwrap()], Strength::Pseudo).unwrap();
    assert!(check_simulation(&alpha, Strength::Pseudo, None).unwrap().holds());
    assert_eq!(check_simulation(&alpha.dagger(), Strength::Pseudo, None).unwrap(), Verdict::FailsAt { edge: 0 });
}

#[test]
fn lax_canonical_simulation_is_not_accepted_by_the_multiset_factorization() {
    let a = example1();
    let canon = canonical_det_simulation(&a, DEFAULT_POWERSET_CAP).unwrap();
    let r = factor_mdet(&canon.sim, &canon.det.automaton, 4, 1000);
    assert!(matches!(r, Err(SimError::LaxRejected)));
    let r = factor_det(&canon.sim, &canon.det.automaton, DEFAULT_POWERSET_CAP).unwrap();
    assert!(r.composite_ok && r.bisim_ok);
}
