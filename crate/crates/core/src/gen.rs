//! Seeded random instances for tests, benchmarks and the acceptance suite.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::automata::{Automaton, BaseGraph, DetAutomaton, SpanAutomaton, StateRef};
use crate::determinize::{ClassicalNfa, DEFAULT_POWERSET_CAP};
use crate::simulation::{canonical_det_simulation, canonical_mdet_simulation, SimError, Simulation, Strength};
use crate::span::{FinFunction, FinSet, NatMatrix, Span};

const NODE_NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
const LETTERS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Shape bounds for [`span_automaton`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutomatonParams {
    pub max_nodes: usize,
    pub max_states: usize,
    /// Edge labels per ordered node pair.
    pub max_labels: usize,
    pub max_mult: u64,
    /// Probability that a `(q, q')` block of a transition is empty.
    pub zero_prob: f64,
    pub final_prob: f64,
}

impl Default for AutomatonParams {
    fn default() -> Self {
        AutomatonParams { max_nodes: 3, max_states: 4, max_labels: 3, max_mult: 2, zero_prob: 0.7, final_prob: 0.4 }
    }
}

fn count_matrix<R: Rng>(rng: &mut R, dom: &FinSet, cod: &FinSet, max: u64, zero_prob: f64) -> NatMatrix {
    let mut m = NatMatrix::zero(dom.clone(), cod.clone());
    for a in 0..dom.len() {
        for b in 0..cod.len() {
            if max > 0 && !rng.gen_bool(zero_prob) {
                m.set(a, b, rng.gen_range(1..=max));
            }
        }
    }
    m
}

/// A random span automaton. Every fiber is nonempty; the initial state lies
/// over the first node. State labels are the node name followed by an index.
pub fn span_automaton<R: Rng>(rng: &mut R, p: &AutomatonParams) -> SpanAutomaton {
    let n = rng.gen_range(1..=p.max_nodes.clamp(1, NODE_NAMES.len()));
    let nodes: Vec<String> = NODE_NAMES[..n].iter().map(|s| s.to_string()).collect();
    let mut edges = Vec::new();
    for src in &nodes {
        for dst in &nodes {
            let k = rng.gen_range(0..=p.max_labels.min(LETTERS.len()));
            let mut letters = LETTERS.to_vec();
            letters.shuffle(rng);
            let mut chosen = letters[..k].to_vec();
            chosen.sort();
            for l in chosen {
                edges.push((format!("{l}{src}{dst}"), l.to_string(), src.clone(), dst.clone()));
            }
        }
    }
    let base = Arc::new(BaseGraph::new(nodes.clone(), edges).expect("distinct ids and labels"));
    let fibers: Vec<FinSet> = nodes
        .iter()
        .map(|node| {
            let k = rng.gen_range(1..=p.max_states.max(1));
            FinSet::numbered(node, k)
        })
        .collect();
    let transitions = base
        .edges()
        .iter()
        .map(|e| Span::from_matrix(&count_matrix(rng, &fibers[e.src], &fibers[e.dst], p.max_mult, p.zero_prob)))
        .collect();
    let initial = StateRef::new(0, rng.gen_range(0..fibers[0].len()));
    let finals = fibers
        .iter()
        .enumerate()
        .flat_map(|(n, f)| (0..f.len()).map(move |i| StateRef::new(n, i)))
        .filter(|_| rng.gen_bool(p.final_prob))
        .collect();
    Automaton { base, fibers, transitions, initial, finals }
}

/// A random textbook NFA with `1..=max_states` states and `1..=max_letters`
/// letters; each transition is present with probability `density`.
pub fn classical_nfa<R: Rng>(rng: &mut R, max_states: usize, max_letters: usize, density: f64) -> ClassicalNfa {
    let n = rng.gen_range(1..=max_states.max(1));
    let k = rng.gen_range(1..=max_letters.clamp(1, LETTERS.len()));
    let states = FinSet::numbered("q", n);
    let alphabet = LETTERS[..k].iter().map(|s| s.to_string()).collect();
    let delta = (0..n)
        .map(|_| (0..k).map(|_| (0..n).filter(|_| rng.gen_bool(density)).collect()).collect())
        .collect();
    let finals = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
    ClassicalNfa::new("*", alphabet, states, delta, rng.gen_range(0..n), finals).expect("well formed")
}

/// `d x {0..copies-1}`: each edge acts on the copy index by a random
/// permutation. Returns the product and the projection onto `d`.
fn with_copies<R: Rng>(rng: &mut R, d: &DetAutomaton, copies: usize) -> (DetAutomaton, Vec<FinFunction>) {
    let fibers: Vec<FinSet> = d
        .fibers
        .iter()
        .map(|f| FinSet::new((0..f.len()).flat_map(|s| (0..copies).map(move |i| format!("{}|{i}", f.label(s))))).expect("distinct"))
        .collect();
    let transitions = d
        .base
        .edges()
        .iter()
        .zip(&d.transitions)
        .map(|(e, t)| {
            let mut perm: Vec<usize> = (0..copies).collect();
            perm.shuffle(rng);
            let map = (0..d.fibers[e.src].len())
                .flat_map(|s| perm.iter().map(move |&j| t.apply(s) * copies + j))
                .collect();
            FinFunction::new(fibers[e.src].clone(), fibers[e.dst].clone(), map).expect("in range")
        })
        .collect();
    let projections = fibers
        .iter()
        .zip(&d.fibers)
        .map(|(g, f)| FinFunction::new(g.clone(), f.clone(), (0..g.len()).map(|x| x / copies).collect()).expect("in range"))
        .collect();
    let g = Automaton {
        base: d.base.clone(),
        fibers,
        transitions,
        initial: StateRef::new(d.initial.node, d.initial.index * copies),
        finals: d
            .finals
            .iter()
            .flat_map(|f| (0..copies).map(move |i| StateRef::new(f.node, f.index * copies + i)))
            .collect(),
    };
    (g, projections)
}

/// A simulation from `f` into a deterministic `G` that factors through the
/// powerset determinization: `G = Det(f) x K` with `K` permuted along edges,
/// and `alpha` the projection followed by membership. Lax strength.
pub fn det_factor_instance<R: Rng>(
    rng: &mut R,
    f: &SpanAutomaton,
    copies: usize,
) -> Result<(Simulation<Span>, DetAutomaton), SimError> {
    let canon = canonical_det_simulation(f, DEFAULT_POWERSET_CAP)?;
    let (g, proj) = with_copies(rng, &canon.det.automaton, copies);
    let components = proj
        .iter()
        .zip(&canon.sim.components)
        .map(|(p, eps)| Span::from_function(p).compose(eps))
        .collect::<Result<Vec<_>, _>>()?;
    let alpha = Simulation::new(f.clone(), g.to_span_automaton(), components, Strength::Lax)?;
    Ok((alpha, g))
}

/// Like [`det_factor_instance`] through the multiset determinization, when
/// the reachable multiset states close within the bounds. Pseudo strength.
pub fn mdet_factor_instance<R: Rng>(
    rng: &mut R,
    f: &SpanAutomaton,
    copies: usize,
    max_len: usize,
    max_states: usize,
) -> Result<Option<(Simulation<Span>, DetAutomaton)>, SimError> {
    let canon = canonical_mdet_simulation(f, max_len, max_states)?;
    let Some(d) = canon.expansion.to_det() else {
        return Ok(None);
    };
    let (g, proj) = with_copies(rng, &d, copies);
    let components = proj
        .iter()
        .zip(&canon.sim.components)
        .map(|(p, mu)| p.to_matrix().compose(mu).map(|m| Span::from_matrix(&m)))
        .collect::<Result<Vec<_>, _>>()?;
    let alpha = Simulation::new(f.clone(), g.to_span_automaton(), components, Strength::Pseudo)?;
    Ok(Some((alpha, g)))
}

/// Random subsets of `0..n`, each element kept with probability one half.
pub fn subset<R: Rng>(rng: &mut R, n: usize) -> BTreeSet<usize> {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}
