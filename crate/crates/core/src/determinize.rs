//! Determinization.
//!
//! * [`det`] / [`det_span`]: forget multiplicities with the image functor, then
//!   apply the powerset functor fiberwise. Subset states never mix fibers.
//! * [`mdet`]: send each span to its multiplicity matrix; runs are then
//!   multiset-valued and count paths. [`MDetMachine::expand`] explores the
//!   (generally infinite) multiset state space up to a bound.
//! * [`classical_subset_construction`]: the textbook algorithm on a
//!   [`ClassicalNfa`], kept independent of the categorical code so that the two
//!   can be compared with [`reachable_iso_check`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::automata::{
    Automaton, AutomatonError, BaseGraph, DetAutomaton, RelAutomaton, SpanAutomaton, StateRef, Word,
};
use crate::span::{subset_label, FinFunction, FinSet, Multiset, NatMatrix, Powerset, Span, SpanError};

/// Default limit on fiber size for the powerset construction.
pub const DEFAULT_POWERSET_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetError {
    #[error("fiber over `{node}` has {size} states, above the powerset cap {cap}")]
    FiberTooLarge { node: String, size: usize, cap: usize },
    #[error("word starts at `{got}` but the machine starts at `{expected}`")]
    IllBased { expected: String, got: String },
    #[error("classical automaton: {0}")]
    Classical(String),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// A state of a powerset determinization: a subset of one fiber.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetState {
    pub node: usize,
    pub members: BTreeSet<usize>,
}

/// The image of a span automaton in relations: same fibers, each transition
/// replaced by the image of its span.
pub fn rel_of(a: &SpanAutomaton) -> RelAutomaton {
    a.map_transitions(Span::image)
}

/// A deterministic automaton whose states are subsets of the original fibers.
#[derive(Debug, Clone)]
pub struct Determinized {
    pub automaton: DetAutomaton,
    /// `subsets[node][i]` is the subset named by state `i` of that fiber.
    pub subsets: Vec<Vec<SubsetState>>,
    lookup: Vec<HashMap<BTreeSet<usize>, usize>>,
}

impl Determinized {
    fn new(automaton: DetAutomaton, subsets: Vec<Vec<SubsetState>>) -> Self {
        let lookup = subsets
            .iter()
            .map(|f| f.iter().enumerate().map(|(i, s)| (s.members.clone(), i)).collect())
            .collect();
        Determinized { automaton, subsets, lookup }
    }

    pub fn subset(&self, s: StateRef) -> &SubsetState {
        &self.subsets[s.node][s.index]
    }

    /// The state naming `members` over `node`, if present.
    pub fn state_of(&self, node: usize, members: &BTreeSet<usize>) -> Option<StateRef> {
        self.lookup[node].get(members).map(|&i| StateRef::new(node, i))
    }

    /// Restriction to the states reachable from the initial one.
    pub fn pruned(&self) -> Determinized {
        let (automaton, kept) = prune_with_map(&self.automaton);
        let subsets = kept
            .iter()
            .enumerate()
            .map(|(n, idx)| idx.iter().map(|&i| self.subsets[n][i].clone()).collect())
            .collect();
        Determinized::new(automaton, subsets)
    }
}

fn subset_state_label(base: &BaseGraph, node: usize, fiber: &FinSet, members: &BTreeSet<usize>) -> String {
    let s = subset_label(fiber, members);
    if base.nodes().len() == 1 {
        s
    } else {
        format!("{}:{}", base.nodes()[node], s)
    }
}

/// Powerset determinization of a relational automaton.
///
/// Each fiber becomes its full powerset, including the empty subset; use
/// [`prune_reachable`] or [`Determinized::pruned`] to drop unreachable subsets.
pub fn det(a: &RelAutomaton, cap: usize) -> Result<Determinized, DetError> {
    let base = a.base.clone();
    let mut powersets = Vec::with_capacity(a.fibers.len());
    for (n, fiber) in a.fibers.iter().enumerate() {
        if fiber.len() > cap {
            return Err(DetError::FiberTooLarge { node: base.nodes()[n].clone(), size: fiber.len(), cap });
        }
        powersets.push(Powerset::with_labels(fiber, cap, |m| subset_state_label(&base, n, fiber, m))?);
    }
    let transitions = base
        .edges()
        .iter()
        .zip(&a.transitions)
        .map(|(e, r)| r.powerset_map().as_function(&powersets[e.src], &powersets[e.dst]))
        .collect::<Result<Vec<_>, _>>()?;
    let q0 = a.initial;
    let initial = StateRef::new(
        q0.node,
        powersets[q0.node]
            .index_of(&BTreeSet::from([q0.index]))
            .expect("singletons are subsets"),
    );
    let mut finals = BTreeSet::new();
    for (n, p) in powersets.iter().enumerate() {
        let accepting: BTreeSet<usize> = a.finals.iter().filter(|f| f.node == n).map(|f| f.index).collect();
        for (i, s) in p.subsets().iter().enumerate() {
            if !s.is_disjoint(&accepting) {
                finals.insert(StateRef::new(n, i));
            }
        }
    }
    let subsets = powersets
        .iter()
        .enumerate()
        .map(|(n, p)| {
            p.subsets()
                .iter()
                .map(|m| SubsetState { node: n, members: m.clone() })
                .collect()
        })
        .collect();
    let automaton = Automaton {
        base,
        fibers: powersets.iter().map(|p| p.as_set().clone()).collect(),
        transitions,
        initial,
        finals,
    };
    Ok(Determinized::new(automaton, subsets))
}

/// Image, then powerset.
pub fn det_span(a: &SpanAutomaton, cap: usize) -> Result<Determinized, DetError> {
    det(&rel_of(a), cap)
}

/// The multiset determinization: transitions as multiplicity matrices, runs
/// as multisets of states.
#[derive(Debug, Clone)]
pub struct MDetMachine {
    pub base: Arc<BaseGraph>,
    pub fibers: Vec<FinSet>,
    pub matrices: Vec<NatMatrix>,
    pub initial: StateRef,
    pub initial_vector: Multiset,
    pub finals: BTreeSet<StateRef>,
}

pub fn mdet(a: &SpanAutomaton) -> Result<MDetMachine, DetError> {
    Ok(MDetMachine {
        base: a.base.clone(),
        fibers: a.fibers.clone(),
        matrices: a.transitions.iter().map(Span::to_matrix).collect(),
        initial: a.initial,
        initial_vector: Multiset::unit(&a.fibers[a.initial.node], a.initial.index)?,
        finals: a.finals.clone(),
    })
}

impl MDetMachine {
    /// Runs `w` from `v`, a multiset over the fiber at the word's start.
    pub fn run_from(&self, v: &Multiset, w: &Word) -> Result<Multiset, DetError> {
        w.edges()
            .iter()
            .try_fold(v.clone(), |v, &e| self.matrices[e].extend(&v))
            .map_err(DetError::from)
    }

    pub fn run(&self, w: &Word) -> Result<Multiset, DetError> {
        if w.start() != self.initial.node {
            return Err(DetError::IllBased {
                expected: self.base.nodes()[self.initial.node].clone(),
                got: self.base.nodes()[w.start()].clone(),
            });
        }
        self.run_from(&self.initial_vector, w)
    }

    /// Weight of a multiset state over `node`: the total count on final states.
    pub fn weight(&self, node: usize, v: &Multiset) -> Result<u64, DetError> {
        self.finals
            .iter()
            .filter(|f| f.node == node)
            .try_fold(0u64, |acc, f| acc.checked_add(v.get(f.index)))
            .ok_or(DetError::Span(SpanError::Overflow))
    }

    /// Number of accepting paths over `w`; zero for words not based at the
    /// initial node.
    pub fn accept_count(&self, w: &Word) -> Result<u64, DetError> {
        if w.start() != self.initial.node {
            return Ok(0);
        }
        let v = self.run(w)?;
        self.weight(w.end(&self.base), &v)
    }

    /// Breadth-first exploration of reachable multiset states.
    pub fn expand(&self, max_states: usize, max_len: usize) -> Result<MultisetExpansion, DetError> {
        self.expand_from(&[(self.initial.node, self.initial_vector.clone())], max_states, max_len)
    }

    /// Like [`MDetMachine::expand`] but starting from several seed states; the
    /// first seed is the expansion's initial state.
    pub fn expand_from(
        &self,
        seeds: &[(usize, Multiset)],
        max_states: usize,
        max_len: usize,
    ) -> Result<MultisetExpansion, DetError> {
        let mut states: Vec<ExpandedState> = Vec::new();
        let mut index: HashMap<(usize, Vec<u64>), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut truncated = false;
        for (node, v) in seeds {
            let key = (*node, v.counts().to_vec());
            if index.contains_key(&key) {
                continue;
            }
            if states.len() >= max_states.max(1) {
                truncated = true;
                break;
            }
            index.insert(key, states.len());
            queue.push_back(states.len());
            states.push(ExpandedState {
                node: *node,
                vector: v.clone(),
                depth: 0,
                weight: self.weight(*node, v)?,
                successors: Vec::new(),
                complete: false,
            });
        }
        while let Some(s) = queue.pop_front() {
            if states[s].depth >= max_len {
                truncated |= !self.base.outgoing(states[s].node).is_empty();
                continue;
            }
            let mut complete = true;
            let mut successors = Vec::new();
            for &e in self.base.outgoing(states[s].node) {
                let dst = self.base.edge(e).dst;
                let next = self.matrices[e].extend(&states[s].vector)?;
                let key = (dst, next.counts().to_vec());
                let t = match index.get(&key) {
                    Some(&t) => t,
                    None if states.len() < max_states => {
                        let t = states.len();
                        index.insert(key, t);
                        queue.push_back(t);
                        states.push(ExpandedState {
                            node: dst,
                            weight: self.weight(dst, &next)?,
                            vector: next,
                            depth: states[s].depth + 1,
                            successors: Vec::new(),
                            complete: false,
                        });
                        t
                    }
                    None => {
                        truncated = true;
                        complete = false;
                        continue;
                    }
                };
                successors.push((e, t));
            }
            states[s].successors = successors;
            states[s].complete = complete;
        }
        MultisetExpansion::new(self.base.clone(), states, truncated)
    }
}

#[derive(Debug, Clone)]
pub struct ExpandedState {
    pub node: usize,
    pub vector: Multiset,
    /// BFS depth at discovery.
    pub depth: usize,
    /// Number of accepting paths ending here.
    pub weight: u64,
    /// `(edge, state)` for every recorded transition.
    pub successors: Vec<(usize, usize)>,
    /// All outgoing transitions are recorded.
    pub complete: bool,
}

/// A bounded explicit exploration of a multiset machine.
#[derive(Debug, Clone)]
pub struct MultisetExpansion {
    pub base: Arc<BaseGraph>,
    pub states: Vec<ExpandedState>,
    pub truncated: bool,
    refs: Vec<StateRef>,
    fibers: Vec<FinSet>,
}

fn multiset_label(base: &BaseGraph, node: usize, v: &Multiset) -> String {
    let inner: Vec<String> = v
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(q, c)| format!("{}:{}", v.base().label(q), c))
        .collect();
    let s = format!("[{}]", inner.join(","));
    if base.nodes().len() == 1 {
        s
    } else {
        format!("{}:{}", base.nodes()[node], s)
    }
}

impl MultisetExpansion {
    fn new(base: Arc<BaseGraph>, states: Vec<ExpandedState>, truncated: bool) -> Result<Self, DetError> {
        let mut per_node: Vec<Vec<String>> = vec![Vec::new(); base.nodes().len()];
        let mut refs = Vec::with_capacity(states.len());
        for s in &states {
            refs.push(StateRef::new(s.node, per_node[s.node].len()));
            per_node[s.node].push(multiset_label(&base, s.node, &s.vector));
        }
        let fibers = per_node.into_iter().map(FinSet::new).collect::<Result<_, _>>()?;
        Ok(MultisetExpansion { base, states, truncated, refs, fibers })
    }

    pub fn fibers(&self) -> &[FinSet] {
        &self.fibers
    }

    /// Fiber position of expanded state `s`.
    pub fn state_ref(&self, s: usize) -> StateRef {
        self.refs[s]
    }

    /// Expanded state at a fiber position.
    pub fn state_at(&self, r: StateRef) -> usize {
        self.refs
            .iter()
            .position(|&x| x == r)
            .expect("state reference from this expansion")
    }

    pub fn find(&self, node: usize, v: &Multiset) -> Option<usize> {
        self.states.iter().position(|s| s.node == node && &s.vector == v)
    }

    /// Per node and fiber position: whether the state's transitions are all
    /// recorded.
    pub fn complete_rows(&self) -> Vec<Vec<bool>> {
        let mut out: Vec<Vec<bool>> = self.fibers.iter().map(|f| vec![false; f.len()]).collect();
        for (s, st) in self.states.iter().enumerate() {
            let r = self.refs[s];
            out[r.node][r.index] = st.complete;
        }
        out
    }

    /// The expansion as an automaton with 0/1 transition matrices; rows of
    /// states whose transitions were not explored are zero.
    pub fn to_matrix_automaton(&self) -> Automaton<NatMatrix> {
        let mut transitions: Vec<NatMatrix> = self
            .base
            .edges()
            .iter()
            .map(|e| NatMatrix::zero(self.fibers[e.src].clone(), self.fibers[e.dst].clone()))
            .collect();
        for (s, st) in self.states.iter().enumerate() {
            for &(e, t) in &st.successors {
                transitions[e].set(self.refs[s].index, self.refs[t].index, 1);
            }
        }
        Automaton {
            base: self.base.clone(),
            fibers: self.fibers.clone(),
            transitions,
            initial: self.refs[0],
            finals: self
                .states
                .iter()
                .enumerate()
                .filter(|(_, st)| st.weight > 0)
                .map(|(s, _)| self.refs[s])
                .collect(),
        }
    }

    /// The expansion as a deterministic automaton, when it is closed.
    pub fn to_det(&self) -> Option<DetAutomaton> {
        if self.states.iter().any(|s| !s.complete) {
            return None;
        }
        let m = self.to_matrix_automaton();
        let transitions = m
            .transitions
            .iter()
            .map(|t| t.support().as_function())
            .collect::<Option<Vec<_>>>()?;
        Some(Automaton {
            base: m.base,
            fibers: m.fibers,
            transitions,
            initial: m.initial,
            finals: m.finals,
        })
    }
}

/// A textbook nondeterministic automaton over a letter alphabet.
#[derive(Debug, Clone)]
pub struct ClassicalNfa {
    /// Name of the single base node when viewed as a fibered automaton.
    pub node: String,
    pub alphabet: Vec<String>,
    pub states: FinSet,
    /// `delta[state][letter]`.
    pub delta: Vec<Vec<BTreeSet<usize>>>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
}

impl ClassicalNfa {
    pub fn new(
        node: impl Into<String>,
        alphabet: Vec<String>,
        states: FinSet,
        delta: Vec<Vec<BTreeSet<usize>>>,
        initial: usize,
        finals: BTreeSet<usize>,
    ) -> Result<Self, DetError> {
        let n = states.len();
        if delta.len() != n || delta.iter().any(|row| row.len() != alphabet.len()) {
            return Err(DetError::Classical("transition table is not total on states x letters".into()));
        }
        if delta.iter().flatten().flatten().any(|&q| q >= n) || initial >= n || finals.iter().any(|&q| q >= n) {
            return Err(DetError::Classical("state out of range".into()));
        }
        Ok(ClassicalNfa { node: node.into(), alphabet, states, delta, initial, finals })
    }

    /// The same automaton over a one-node base with a loop per letter.
    pub fn to_span_automaton(&self) -> Result<SpanAutomaton, DetError> {
        let base = Arc::new(BaseGraph::bouquet(&self.node, &self.alphabet)?);
        let transitions = (0..self.alphabet.len())
            .map(|l| {
                let feet = (0..self.states.len())
                    .flat_map(|q| self.delta[q][l].iter().map(move |&r| (q, r)));
                Span::from_feet(self.states.clone(), self.states.clone(), feet)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Automaton {
            base,
            fibers: vec![self.states.clone()],
            transitions,
            initial: StateRef::new(0, self.initial),
            finals: self.finals.iter().map(|&q| StateRef::new(0, q)).collect(),
        })
    }
}

/// Rabin-Scott subset construction on bitmasks.
pub fn classical_subset_construction(n: &ClassicalNfa, cap: usize) -> Result<DetAutomaton, DetError> {
    let size = n.states.len();
    if size > cap || size >= 63 {
        return Err(DetError::FiberTooLarge { node: n.node.clone(), size, cap });
    }
    let masks: Vec<Vec<u64>> = n
        .delta
        .iter()
        .map(|row| row.iter().map(|set| set.iter().fold(0u64, |m, &q| m | 1 << q)).collect())
        .collect();
    let count = 1usize << size;
    let labels = (0..count).map(|mask| {
        let members: BTreeSet<usize> = (0..size).filter(|q| mask >> q & 1 == 1).collect();
        subset_label(&n.states, &members)
    });
    let dfa_states = FinSet::new(labels)?;
    let transitions = (0..n.alphabet.len())
        .map(|l| {
            let table = (0..count)
                .map(|mask| {
                    (0..size)
                        .filter(|q| mask >> q & 1 == 1)
                        .fold(0u64, |acc, q| acc | masks[q][l]) as usize
                })
                .collect();
            FinFunction::new(dfa_states.clone(), dfa_states.clone(), table)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let accepting = n.finals.iter().fold(0usize, |m, &q| m | 1 << q);
    Ok(Automaton {
        base: Arc::new(BaseGraph::bouquet(&n.node, &n.alphabet)?),
        fibers: vec![dfa_states],
        transitions,
        initial: StateRef::new(0, 1 << n.initial),
        finals: (0..count).filter(|m| m & accepting != 0).map(|m| StateRef::new(0, m)).collect(),
    })
}

fn prune_with_map(d: &DetAutomaton) -> (DetAutomaton, Vec<Vec<usize>>) {
    let reachable = d.reachable();
    let kept: Vec<Vec<usize>> = (0..d.fibers.len())
        .map(|n| (0..d.fibers[n].len()).filter(|&i| reachable.contains(&StateRef::new(n, i))).collect())
        .collect();
    let new_pos: Vec<HashMap<usize, usize>> = kept
        .iter()
        .map(|idx| idx.iter().enumerate().map(|(new, &old)| (old, new)).collect())
        .collect();
    let fibers: Vec<FinSet> = kept
        .iter()
        .enumerate()
        .map(|(n, idx)| {
            FinSet::new(idx.iter().map(|&i| d.fibers[n].label(i).to_string())).expect("subset of distinct labels")
        })
        .collect();
    let transitions = d
        .base
        .edges()
        .iter()
        .zip(&d.transitions)
        .map(|(e, f)| {
            let map = kept[e.src].iter().map(|&i| new_pos[e.dst][&f.apply(i)]).collect();
            FinFunction::new(fibers[e.src].clone(), fibers[e.dst].clone(), map).expect("reachable set is closed")
        })
        .collect();
    let relocate = |s: &StateRef| StateRef::new(s.node, new_pos[s.node][&s.index]);
    let pruned = Automaton {
        base: d.base.clone(),
        fibers,
        transitions,
        initial: relocate(&d.initial),
        finals: d.finals.iter().filter(|f| reachable.contains(f)).map(relocate).collect(),
    };
    (pruned, kept)
}

/// Restriction to the states reachable from the initial state.
pub fn prune_reachable(d: &DetAutomaton) -> DetAutomaton {
    prune_with_map(d).0
}

/// Searches for the label-respecting bijection between the reachable parts of
/// two deterministic automata over matching bases (nodes matched by id, edges
/// by endpoints and label). Returns the pairs sorted by the first component.
pub fn reachable_iso_check(d1: &DetAutomaton, d2: &DetAutomaton) -> Option<Vec<(StateRef, StateRef)>> {
    let (b1, b2) = (&d1.base, &d2.base);
    if b1.nodes().len() != b2.nodes().len() || b1.edges().len() != b2.edges().len() {
        return None;
    }
    let node_map: Vec<usize> = b1
        .nodes()
        .iter()
        .map(|n| b2.node_position(n))
        .collect::<Option<_>>()?;
    let shape2: HashMap<(usize, usize, &str), usize> = b2
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| ((e.src, e.dst, e.label.as_str()), i))
        .collect();
    let edge_map: Vec<usize> = b1
        .edges()
        .iter()
        .map(|e| shape2.get(&(node_map[e.src], node_map[e.dst], e.label.as_str())).copied())
        .collect::<Option<_>>()?;

    if d1.initial.node >= node_map.len() || node_map[d1.initial.node] != d2.initial.node {
        return None;
    }
    let mut fwd: BTreeMap<StateRef, StateRef> = BTreeMap::new();
    let mut back: HashMap<StateRef, StateRef> = HashMap::new();
    let mut queue = VecDeque::from([(d1.initial, d2.initial)]);
    fwd.insert(d1.initial, d2.initial);
    back.insert(d2.initial, d1.initial);
    while let Some((s1, s2)) = queue.pop_front() {
        if d1.is_final(s1) != d2.is_final(s2) {
            return None;
        }
        for &e1 in b1.outgoing(s1.node) {
            let e2 = edge_map[e1];
            let dst = b1.edge(e1).dst;
            let n1 = StateRef::new(dst, d1.transitions[e1].apply(s1.index));
            let n2 = StateRef::new(b2.edge(e2).dst, d2.transitions[e2].apply(s2.index));
            match (fwd.get(&n1), back.get(&n2)) {
                (Some(&m2), Some(&m1)) if m2 == n2 && m1 == n1 => {}
                (None, None) => {
                    fwd.insert(n1, n2);
                    back.insert(n2, n1);
                    queue.push_back((n1, n2));
                }
                _ => return None,
            }
        }
    }
    Some(fwd.into_iter().collect())
}
