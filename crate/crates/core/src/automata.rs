//! Base graphs, their free categories, and automata fibered over them.
//!
//! An automaton assigns a finite fiber of states to every node of a base graph
//! and a transition morphism to every edge. Because the base category is free,
//! the generator images determine everything: a word (a path in the graph) is
//! run by composing the transitions along it.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::span::{FinFunction, FinSet, Multiset, NatMatrix, Relation, Span, SpanError};

/// Longest word [`brute_force_paths`] accepts.
pub const ORACLE_MAX_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("edges `{0}` and `{1}` share endpoints and label")]
    AmbiguousLabel(String, String),
    #[error("edge `{edge}` does not start where the word is")]
    NotComposable { edge: String },
    #[error("word of length {len} exceeds the oracle bound {bound}")]
    OracleBound { len: usize, bound: usize },
    #[error(transparent)]
    Span(#[from] SpanError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub label: String,
    pub src: usize,
    pub dst: usize,
}

/// A finite directed multigraph; its free category is the base category.
#[derive(Debug, Clone)]
pub struct BaseGraph {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    // outgoing edges per node, sorted by edge id
    outgoing: Vec<Vec<usize>>,
}

impl BaseGraph {
    /// `edges` are `(id, label, src, dst)` with endpoints given by node id.
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self, AutomatonError>
    where
        N: IntoIterator,
        N::Item: Into<String>,
        E: IntoIterator<Item = (String, String, String, String)>,
    {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        let mut node_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.clone(), i).is_some() {
                return Err(AutomatonError::DuplicateNode(n.clone()));
            }
        }
        let mut edge_list = Vec::new();
        let mut edge_index = HashMap::new();
        let mut by_shape: HashMap<(usize, usize, String), String> = HashMap::new();
        for (id, label, src, dst) in edges {
            let s = *node_index.get(&src).ok_or(AutomatonError::UnknownNode(src))?;
            let d = *node_index.get(&dst).ok_or(AutomatonError::UnknownNode(dst))?;
            if edge_index.insert(id.clone(), edge_list.len()).is_some() {
                return Err(AutomatonError::DuplicateEdge(id));
            }
            if let Some(other) = by_shape.insert((s, d, label.clone()), id.clone()) {
                return Err(AutomatonError::AmbiguousLabel(other, id));
            }
            edge_list.push(Edge { id, label, src: s, dst: d });
        }
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (i, e) in edge_list.iter().enumerate() {
            outgoing[e.src].push(i);
        }
        for out in &mut outgoing {
            out.sort_by(|&a, &b| edge_list[a].id.cmp(&edge_list[b].id));
        }
        Ok(BaseGraph { nodes, edges: edge_list, node_index, edge_index, outgoing })
    }

    /// Convenience for literals: `(id, label, src, dst)`.
    pub fn from_strs(nodes: &[&str], edges: &[(&str, &str, &str, &str)]) -> Result<Self, AutomatonError> {
        BaseGraph::new(
            nodes.iter().copied(),
            edges.iter().map(|&(i, l, s, d)| (i.into(), l.into(), s.into(), d.into())),
        )
    }

    /// One node with a loop per letter; edge id and label are the letter.
    pub fn bouquet(node: &str, letters: &[String]) -> Result<Self, AutomatonError> {
        BaseGraph::new(
            [node],
            letters.iter().map(|l| (l.clone(), l.clone(), node.to_string(), node.to_string())),
        )
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn node_position(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edge_position(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    /// Outgoing edges of `node`, sorted by edge id.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    /// Parses a word written as edge ids.
    pub fn word(&self, start: &str, edge_ids: &[&str]) -> Result<Word, AutomatonError> {
        let start = self
            .node_position(start)
            .ok_or_else(|| AutomatonError::UnknownNode(start.to_string()))?;
        let edges = edge_ids
            .iter()
            .map(|id| self.edge_position(id).ok_or_else(|| AutomatonError::UnknownEdge(id.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Word::new(self, start, edges)
    }

    pub fn same_shape(&self, other: &BaseGraph) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

/// A morphism of the free category: a composable edge sequence, or an
/// identity at `start` when empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    start: usize,
    edges: Vec<usize>,
}

impl Word {
    pub fn new(base: &BaseGraph, start: usize, edges: Vec<usize>) -> Result<Self, AutomatonError> {
        if start >= base.nodes.len() {
            return Err(AutomatonError::UnknownNode(format!("#{start}")));
        }
        let mut at = start;
        for &e in &edges {
            let edge = base
                .edges
                .get(e)
                .ok_or_else(|| AutomatonError::UnknownEdge(format!("#{e}")))?;
            if edge.src != at {
                return Err(AutomatonError::NotComposable { edge: edge.id.clone() });
            }
            at = edge.dst;
        }
        Ok(Word { start, edges })
    }

    pub fn empty(node: usize) -> Self {
        Word { start: node, edges: Vec::new() }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end(&self, base: &BaseGraph) -> usize {
        self.edges.last().map_or(self.start, |&e| base.edges[e].dst)
    }

    /// Extends by one edge, which must leave the current end.
    pub fn push(&self, base: &BaseGraph, edge: usize) -> Result<Word, AutomatonError> {
        if base.edges[edge].src != self.end(base) {
            return Err(AutomatonError::NotComposable { edge: base.edges[edge].id.clone() });
        }
        let mut edges = self.edges.clone();
        edges.push(edge);
        Ok(Word { start: self.start, edges })
    }

    pub fn concat(&self, base: &BaseGraph, other: &Word) -> Result<Word, AutomatonError> {
        if other.start != self.end(base) {
            return Err(AutomatonError::NotComposable {
                edge: other.edges.first().map_or_else(String::new, |&e| base.edges[e].id.clone()),
            });
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Ok(Word { start: self.start, edges })
    }

    /// `(prefix, suffix)` with the prefix holding the first `k` edges.
    pub fn split_at(&self, base: &BaseGraph, k: usize) -> (Word, Word) {
        let prefix = Word { start: self.start, edges: self.edges[..k].to_vec() };
        let mid = prefix.end(base);
        (prefix, Word { start: mid, edges: self.edges[k..].to_vec() })
    }

    pub fn ids<'a>(&self, base: &'a BaseGraph) -> Vec<&'a str> {
        self.edges.iter().map(|&e| base.edges[e].id.as_str()).collect()
    }
}

/// All words from `from` of length at most `max_len`, by length and then
/// lexicographically by edge id.
pub fn enumerate_words(base: &BaseGraph, from: usize, max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty(from)];
    let mut layer = vec![(Word::empty(from), from)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (w, end) in &layer {
            for &e in base.outgoing(*end) {
                let mut edges = w.edges.clone();
                edges.push(e);
                next.push((Word { start: from, edges }, base.edges[e].dst));
            }
        }
        out.extend(next.iter().map(|(w, _)| w.clone()));
        layer = next;
    }
    out
}

/// A state: a fiber (by node) and a position in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateRef {
    pub node: usize,
    pub index: usize,
}

impl StateRef {
    pub fn new(node: usize, index: usize) -> Self {
        StateRef { node, index }
    }
}

/// What an automaton stores on an edge.
pub trait Transition: Clone + fmt::Debug {
    fn dom(&self) -> &FinSet;
    fn cod(&self) -> &FinSet;
    /// Targets reachable from `from`, repeated according to multiplicity.
    fn successors(&self, from: usize) -> Vec<usize>;
    fn to_span(&self) -> Span;
    fn to_matrix(&self) -> NatMatrix;
    /// Structural problems independent of the surrounding automaton.
    fn defects(&self) -> Vec<String> {
        Vec::new()
    }
}

impl Transition for Span {
    fn dom(&self) -> &FinSet {
        Span::dom(self)
    }
    fn cod(&self) -> &FinSet {
        Span::cod(self)
    }
    fn successors(&self, from: usize) -> Vec<usize> {
        self.tokens().iter().filter(|t| t.left == from).map(|t| t.right).collect()
    }
    fn to_span(&self) -> Span {
        self.clone()
    }
    fn to_matrix(&self) -> NatMatrix {
        Span::to_matrix(self)
    }
}

impl Transition for Relation {
    fn dom(&self) -> &FinSet {
        Relation::dom(self)
    }
    fn cod(&self) -> &FinSet {
        Relation::cod(self)
    }
    fn successors(&self, from: usize) -> Vec<usize> {
        Relation::successors(self, from).collect()
    }
    fn to_span(&self) -> Span {
        Span::from_relation(self)
    }
    fn to_matrix(&self) -> NatMatrix {
        Relation::to_matrix(self)
    }
}

impl Transition for FinFunction {
    fn dom(&self) -> &FinSet {
        FinFunction::dom(self)
    }
    fn cod(&self) -> &FinSet {
        FinFunction::cod(self)
    }
    fn successors(&self, from: usize) -> Vec<usize> {
        vec![self.apply(from)]
    }
    fn to_span(&self) -> Span {
        Span::from_function(self)
    }
    fn to_matrix(&self) -> NatMatrix {
        FinFunction::to_matrix(self)
    }
}

impl Transition for NatMatrix {
    fn dom(&self) -> &FinSet {
        NatMatrix::dom(self)
    }
    fn cod(&self) -> &FinSet {
        NatMatrix::cod(self)
    }
    fn successors(&self, from: usize) -> Vec<usize> {
        (0..self.cod().len())
            .flat_map(|b| std::iter::repeat(b).take(self.get(from, b) as usize))
            .collect()
    }
    fn to_span(&self) -> Span {
        Span::from_matrix(self)
    }
    fn to_matrix(&self) -> NatMatrix {
        self.clone()
    }
}

/// An automaton over a free category: fibers per node, a transition per edge,
/// one initial state and a set of final states.
#[derive(Debug, Clone)]
pub struct Automaton<T> {
    pub base: Arc<BaseGraph>,
    pub fibers: Vec<FinSet>,
    pub transitions: Vec<T>,
    pub initial: StateRef,
    pub finals: BTreeSet<StateRef>,
}

pub type SpanAutomaton = Automaton<Span>;
pub type RelAutomaton = Automaton<Relation>;
pub type DetAutomaton = Automaton<FinFunction>;

/// A broken invariant, with a path locating it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl<T: Transition> Automaton<T> {
    pub fn fiber(&self, node: usize) -> &FinSet {
        &self.fibers[node]
    }

    pub fn state_label(&self, s: StateRef) -> &str {
        self.fibers[s.node].label(s.index)
    }

    /// Looks a state up by label across all fibers.
    pub fn find_state(&self, label: &str) -> Option<StateRef> {
        self.fibers
            .iter()
            .enumerate()
            .find_map(|(n, f)| f.position(label).map(|i| StateRef::new(n, i)))
    }

    pub fn is_final(&self, s: StateRef) -> bool {
        self.finals.contains(&s)
    }

    pub fn state_count(&self) -> usize {
        self.fibers.iter().map(FinSet::len).sum()
    }

    pub fn map_transitions<U, F>(&self, f: F) -> Automaton<U>
    where
        F: FnMut(&T) -> U,
    {
        Automaton {
            base: self.base.clone(),
            fibers: self.fibers.clone(),
            transitions: self.transitions.iter().map(f).collect(),
            initial: self.initial,
            finals: self.finals.clone(),
        }
    }

    pub fn to_span_automaton(&self) -> SpanAutomaton {
        self.map_transitions(Transition::to_span)
    }

    pub fn to_matrix_automaton(&self) -> Automaton<NatMatrix> {
        self.map_transitions(Transition::to_matrix)
    }

    /// Every broken invariant; empty iff the automaton is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |path: String, message: String| out.push(Violation { path, message });
        let base = &self.base;
        if self.fibers.len() != base.nodes.len() {
            push(
                "fibers".into(),
                format!("{} fibers for {} nodes", self.fibers.len(), base.nodes.len()),
            );
            return out;
        }
        if self.transitions.len() != base.edges.len() {
            push(
                "transitions".into(),
                format!("{} transitions for {} edges", self.transitions.len(), base.edges.len()),
            );
            return out;
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for (n, fiber) in self.fibers.iter().enumerate() {
            for l in fiber.labels() {
                if let Some(prev) = owner.insert(l, &base.nodes[n]) {
                    push(
                        format!("fibers.{}", base.nodes[n]),
                        format!("state `{l}` also lies in the fiber over `{prev}`"),
                    );
                }
            }
        }
        for (e, (edge, t)) in base.edges.iter().zip(&self.transitions).enumerate() {
            let path = format!("transitions.{}", edge.id);
            if !t.dom().same_order(&self.fibers[edge.src]) {
                push(path.clone(), format!("domain {:?} is not the fiber over `{}`", t.dom(), base.nodes[edge.src]));
            }
            if !t.cod().same_order(&self.fibers[edge.dst]) {
                push(path.clone(), format!("codomain {:?} is not the fiber over `{}`", t.cod(), base.nodes[edge.dst]));
            }
            for d in self.transitions[e].defects() {
                push(path.clone(), d);
            }
        }
        let valid = |s: &StateRef| s.node < self.fibers.len() && s.index < self.fibers[s.node].len();
        if !valid(&self.initial) {
            push("initial".into(), "initial state lies in no fiber".into());
        }
        for f in &self.finals {
            if !valid(f) {
                push("finals".into(), format!("final state {f:?} lies in no fiber"));
            }
        }
        out
    }

    /// Every state reachable from the initial state.
    pub fn reachable(&self) -> BTreeSet<StateRef> {
        let mut seen = BTreeSet::from([self.initial]);
        let mut stack = vec![self.initial];
        while let Some(s) = stack.pop() {
            for &e in self.base.outgoing(s.node) {
                let dst = self.base.edges[e].dst;
                for t in self.transitions[e].successors(s.index) {
                    let next = StateRef::new(dst, t);
                    if seen.insert(next) {
                        stack.push(next);
                    }
                }
            }
        }
        seen
    }

    /// Lifted paths of `w` from `from`, as sequences of visited state indices.
    fn lifts(&self, from: usize, w: &Word) -> Vec<Vec<usize>> {
        let mut paths = vec![vec![from]];
        for &e in &w.edges {
            let t = &self.transitions[e];
            paths = paths
                .into_iter()
                .flat_map(|p| {
                    let last = *p.last().expect("nonempty path");
                    t.successors(last).into_iter().map(move |q| {
                        let mut p = p.clone();
                        p.push(q);
                        p
                    })
                })
                .collect();
        }
        paths
    }
}

/// Acceptance of a word, per automaton flavor.
pub trait Accepts {
    fn base(&self) -> &BaseGraph;
    fn initial_node(&self) -> usize;
    fn accepts(&self, w: &Word) -> bool;
}

impl Accepts for SpanAutomaton {
    fn base(&self) -> &BaseGraph {
        &self.base
    }
    fn initial_node(&self) -> usize {
        self.initial.node
    }
    fn accepts(&self, w: &Word) -> bool {
        match count_paths(self, w) {
            Ok(c) => c > 0,
            Err(_) => true, // only overflow can fail, and then the count is positive
        }
    }
}

impl Accepts for RelAutomaton {
    fn base(&self) -> &BaseGraph {
        &self.base
    }
    fn initial_node(&self) -> usize {
        self.initial.node
    }
    fn accepts(&self, w: &Word) -> bool {
        if w.start != self.initial.node {
            return false;
        }
        let mut current = BTreeSet::from([self.initial.index]);
        for &e in &w.edges {
            let r = &self.transitions[e];
            current = current.iter().flat_map(|&q| r.successors(q)).collect();
        }
        let end = w.end(&self.base);
        current.iter().any(|&q| self.finals.contains(&StateRef::new(end, q)))
    }
}

impl Accepts for DetAutomaton {
    fn base(&self) -> &BaseGraph {
        &self.base
    }
    fn initial_node(&self) -> usize {
        self.initial.node
    }
    fn accepts(&self, w: &Word) -> bool {
        if w.start != self.initial.node {
            return false;
        }
        let q = w.edges.iter().fold(self.initial.index, |q, &e| self.transitions[e].apply(q));
        self.finals.contains(&StateRef::new(w.end(&self.base), q))
    }
}

pub fn accepted<A: Accepts>(a: &A, w: &Word) -> bool {
    a.accepts(w)
}

/// Accepted words from the initial node up to `max_len`, in enumeration order.
pub fn language<A: Accepts>(a: &A, max_len: usize) -> Vec<Word> {
    enumerate_words(a.base(), a.initial_node(), max_len)
        .into_iter()
        .filter(|w| a.accepts(w))
        .collect()
}

/// The composite of the transition spans along `w`, as a matrix: entry
/// `(q, q')` counts the paths over `w` from `q` to `q'`.
pub fn run_word_span(a: &SpanAutomaton, w: &Word) -> Result<NatMatrix, AutomatonError> {
    let w = Word::new(&a.base, w.start, w.edges.clone())?;
    let mut acc = NatMatrix::identity(&a.fibers[w.start]);
    for &e in &w.edges {
        acc = acc.compose(&a.transitions[e].to_matrix())?;
    }
    Ok(acc)
}

/// Number of paths over `w` from the initial state to a final state.
pub fn count_paths(a: &SpanAutomaton, w: &Word) -> Result<u64, SpanError> {
    if w.start != a.initial.node {
        return Ok(0);
    }
    let mut v = Multiset::unit(&a.fibers[w.start], a.initial.index)?;
    for &e in &w.edges {
        v = a.transitions[e].to_matrix().extend(&v)?;
    }
    let end = w.end(&a.base);
    let mut total = 0u64;
    for f in a.finals.iter().filter(|f| f.node == end) {
        total = total.checked_add(v.get(f.index)).ok_or(SpanError::Overflow)?;
    }
    Ok(total)
}

/// One step of an explicit run: the edge and the token taken along it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenStep {
    pub edge: usize,
    pub token: usize,
}

/// Every accepting run over `w` spelled out token by token, found by
/// depth-first search over the apexes without any matrix arithmetic.
pub fn brute_force_paths(a: &SpanAutomaton, w: &Word) -> Result<Vec<Vec<TokenStep>>, AutomatonError> {
    if w.len() > ORACLE_MAX_LEN {
        return Err(AutomatonError::OracleBound { len: w.len(), bound: ORACLE_MAX_LEN });
    }
    let mut out = Vec::new();
    if w.start != a.initial.node {
        return Ok(out);
    }
    let end = w.end(&a.base);
    fn go(
        a: &SpanAutomaton,
        w: &Word,
        end: usize,
        depth: usize,
        at: usize,
        trail: &mut Vec<TokenStep>,
        out: &mut Vec<Vec<TokenStep>>,
    ) {
        if depth == w.edges.len() {
            if a.finals.contains(&StateRef::new(end, at)) {
                out.push(trail.clone());
            }
            return;
        }
        let edge = w.edges[depth];
        for (i, t) in a.transitions[edge].tokens().iter().enumerate() {
            if t.left == at {
                trail.push(TokenStep { edge, token: i });
                go(a, w, end, depth + 1, t.right, trail, out);
                trail.pop();
            }
        }
    }
    go(a, w, end, 0, a.initial.index, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Every state has exactly one lift of every word of length at most `max_len`
/// starting at its node.
pub fn unique_lift_check<T: Transition>(a: &Automaton<T>, max_len: usize) -> bool {
    (0..a.base.nodes.len()).all(|n| {
        let words = enumerate_words(&a.base, n, max_len);
        (0..a.fibers[n].len()).all(|q| words.iter().all(|w| a.lifts(q, w).len() == 1))
    })
}

/// Checks unique lifting of factorizations on all paths over words of length
/// at most `max_len`: each lifted path over `u.v` is the composite of exactly
/// one lifted pair over `u` and `v`.
pub fn ulf_factorization_check(a: &SpanAutomaton, max_len: usize) -> bool {
    // Token-level lifts: sequences of token indices.
    fn token_lifts(a: &SpanAutomaton, from: usize, w: &Word) -> Vec<(Vec<usize>, usize)> {
        let mut paths = vec![(Vec::new(), from)];
        for &e in &w.edges {
            let tokens = a.transitions[e].tokens();
            paths = paths
                .into_iter()
                .flat_map(|(p, at)| {
                    tokens.iter().enumerate().filter(move |(_, t)| t.left == at).map(move |(i, t)| {
                        let mut p = p.clone();
                        p.push(i);
                        (p, t.right)
                    })
                })
                .collect();
        }
        paths
    }
    for n in 0..a.base.nodes.len() {
        for w in enumerate_words(&a.base, n, max_len) {
            for q in 0..a.fibers[n].len() {
                let whole = token_lifts(a, q, &w);
                for k in 0..=w.len() {
                    let (u, v) = w.split_at(&a.base, k);
                    let mut composites: HashMap<Vec<usize>, usize> = HashMap::new();
                    for (beta, mid) in token_lifts(a, q, &u) {
                        for (gamma, _) in token_lifts(a, mid, &v) {
                            let mut c = beta.clone();
                            c.extend(gamma);
                            *composites.entry(c).or_insert(0) += 1;
                        }
                    }
                    let lifted: HashSet<&Vec<usize>> = whole.iter().map(|(p, _)| p).collect();
                    if composites.len() != lifted.len()
                        || whole.iter().any(|(p, _)| composites.get(p) != Some(&1))
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Every transition relation is a total function.
pub fn is_deterministic(a: &RelAutomaton) -> bool {
    a.transitions.iter().all(|r| r.as_function().is_some())
}

impl RelAutomaton {
    /// The same automaton with functional transitions, if it is deterministic.
    pub fn to_det(&self) -> Option<DetAutomaton> {
        let transitions = self
            .transitions
            .iter()
            .map(Relation::as_function)
            .collect::<Option<Vec<_>>>()?;
        Some(Automaton {
            base: self.base.clone(),
            fibers: self.fibers.clone(),
            transitions,
            initial: self.initial,
            finals: self.finals.clone(),
        })
    }
}

impl DetAutomaton {
    pub fn to_rel(&self) -> RelAutomaton {
        self.map_transitions(FinFunction::graph)
    }
}

/// The two worked examples: a one-node automaton over letters a, b and a
/// two-node automaton whose fibers must stay separate under determinization.
pub mod fixtures {
    use super::*;

    fn set(labels: &[&str]) -> FinSet {
        FinSet::new(labels.iter().copied()).unwrap()
    }

    /// States {1,2} over one node; a: 1->1, 1->2; b: 1->2, 2->2; q0 = 1, F = {2}.
    pub fn example1() -> SpanAutomaton {
        let base = Arc::new(BaseGraph::from_strs(&["*"], &[("a", "a", "*", "*"), ("b", "b", "*", "*")]).unwrap());
        let q = set(&["1", "2"]);
        let a = Span::from_label_pairs(q.clone(), q.clone(), &[("1", "1"), ("1", "2")]).unwrap();
        let b = Span::from_label_pairs(q.clone(), q.clone(), &[("1", "2"), ("2", "2")]).unwrap();
        Automaton {
            base,
            fibers: vec![q],
            transitions: vec![a, b],
            initial: StateRef::new(0, 0),
            finals: BTreeSet::from([StateRef::new(0, 1)]),
        }
    }

    /// The two-fiber example: {1,2} over c with loops a, b; x: c -> d;
    /// {3,4,5} over d with loops c, d.
    pub fn example2() -> SpanAutomaton {
        let base = Arc::new(
            BaseGraph::from_strs(
                &["c", "d"],
                &[
                    ("a", "a", "c", "c"),
                    ("b", "b", "c", "c"),
                    ("x", "x", "c", "d"),
                    ("c", "c", "d", "d"),
                    ("d", "d", "d", "d"),
                ],
            )
            .unwrap(),
        );
        let up = set(&["1", "2"]);
        let down = set(&["3", "4", "5"]);
        let span = |d: &FinSet, c: &FinSet, p: &[(&str, &str)]| Span::from_label_pairs(d.clone(), c.clone(), p).unwrap();
        Automaton {
            base,
            fibers: vec![up.clone(), down.clone()],
            transitions: vec![
                span(&up, &up, &[("1", "1"), ("1", "2")]),
                span(&up, &up, &[("1", "2"), ("2", "2")]),
                span(&up, &down, &[("1", "3"), ("2", "4")]),
                span(&down, &down, &[("3", "4"), ("3", "5")]),
                span(&down, &down, &[("5", "4")]),
            ],
            initial: StateRef::new(0, 0),
            finals: BTreeSet::from([StateRef::new(1, 1)]),
        }
    }
}
