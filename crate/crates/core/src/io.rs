//! JSON documents for automata and simulations, word printing and DOT output.
//!
//! Serialization is canonical: keys in a fixed order, fibers in node order,
//! transition entries sorted by state position, multiplicities as counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{count_paths, enumerate_words, Automaton, BaseGraph, DetAutomaton, RelAutomaton, SpanAutomaton, StateRef, Transition, Word};
use crate::determinize::{ClassicalNfa, MDetMachine, MultisetExpansion};
use crate::simulation::{FactorizationResult, Morphism, Simulation, Strength};
use crate::span::{FinFunction, FinSet, NatMatrix, Relation, Span};

pub const FORMAT_VERSION: &str = "1";

/// A located input problem.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct IoError {
    pub path: String,
    pub message: String,
}

impl IoError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        IoError { path: path.into(), message: message.into() }
    }
}

/// Several problems found in one document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .0.first().map(ToString::to_string).unwrap_or_default())]
pub struct IoErrors(pub Vec<IoError>);

impl From<IoError> for IoErrors {
    fn from(e: IoError) -> Self {
        IoErrors(vec![e])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Span,
    Rel,
    Det,
    ClassicalNfa,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub id: String,
    pub label: String,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseDocument {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonDocument {
    pub format_version: String,
    pub kind: Kind,
    pub base: BaseDocument,
    pub fibers: IndexMap<String, Vec<String>>,
    #[serde(default)]
    pub transitions: IndexMap<String, Vec<Entry>>,
    pub initial: String,
    #[serde(default)]
    pub finals: Vec<String>,
}

/// A parsed automaton of any kind.
#[derive(Debug, Clone)]
pub enum Loaded {
    Span(SpanAutomaton),
    Rel(RelAutomaton),
    Det(DetAutomaton),
    Classical(ClassicalNfa),
}

impl Loaded {
    pub fn kind(&self) -> Kind {
        match self {
            Loaded::Span(_) => Kind::Span,
            Loaded::Rel(_) => Kind::Rel,
            Loaded::Det(_) => Kind::Det,
            Loaded::Classical(_) => Kind::ClassicalNfa,
        }
    }

    pub fn to_span(&self) -> SpanAutomaton {
        match self {
            Loaded::Span(a) => a.clone(),
            Loaded::Rel(a) => a.to_span_automaton(),
            Loaded::Det(a) => a.to_span_automaton(),
            Loaded::Classical(n) => n.to_span_automaton().expect("validated on load"),
        }
    }

    /// A deterministic view: det documents directly, other kinds when every
    /// transition is a total function with multiplicity one.
    pub fn to_det(&self) -> Option<DetAutomaton> {
        match self {
            Loaded::Det(a) => Some(a.clone()),
            _ => {
                let s = self.to_span();
                if s.transitions.iter().any(|t| !t.is_relation_like()) {
                    return None;
                }
                s.map_transitions(Span::image).to_det()
            }
        }
    }
}

fn json_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> IoError {
    let path = e.path().to_string();
    let path = if path == "." { "document".to_string() } else { path };
    IoError::new(path, e.into_inner().to_string())
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(json_error)
}

pub fn parse_document(text: &str) -> Result<AutomatonDocument, IoError> {
    parse_json(text)
}

/// Parses and checks an automaton document, reporting the first problem.
pub fn parse_automaton(text: &str) -> Result<Loaded, IoError> {
    load(&parse_document(text)?).map_err(|mut e| e.0.swap_remove(0))
}

/// Every problem in a document; empty iff it loads.
pub fn validate_document(text: &str) -> Vec<IoError> {
    match parse_document(text) {
        Ok(doc) => load(&doc).err().map(|e| e.0).unwrap_or_default(),
        Err(e) => vec![e],
    }
}

struct Builder<'a> {
    doc: &'a AutomatonDocument,
    errors: Vec<IoError>,
}

impl Builder<'_> {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(IoError::new(path, message));
    }

    fn base(&mut self) -> Option<BaseGraph> {
        let b = &self.doc.base;
        let edges = b.edges.iter().map(|e| (e.id.clone(), e.label.clone(), e.src.clone(), e.dst.clone()));
        match BaseGraph::new(b.nodes.clone(), edges) {
            Ok(g) => Some(g),
            Err(e) => {
                self.fail("base", e.to_string());
                None
            }
        }
    }

    fn fibers(&mut self, base: &BaseGraph) -> Vec<FinSet> {
        for key in self.doc.fibers.keys() {
            if base.node_position(key).is_none() {
                self.fail(format!("fibers.{key}"), format!("`{key}` is not a node"));
            }
        }
        let mut owner: HashMap<String, String> = HashMap::new();
        let mut out = Vec::new();
        for node in base.nodes() {
            let path = format!("fibers.{node}");
            let labels = self.doc.fibers.get(node).cloned().unwrap_or_default();
            for l in &labels {
                if let Some(prev) = owner.insert(l.clone(), node.clone()) {
                    if &prev == node {
                        self.fail(path.clone(), format!("duplicate state label `{l}`"));
                    } else {
                        self.fail(path.clone(), format!("state `{l}` also lies in the fiber over `{prev}`"));
                    }
                }
            }
            let mut seen = BTreeSet::new();
            let unique: Vec<String> = labels.into_iter().filter(|l| seen.insert(l.clone())).collect();
            out.push(FinSet::new(unique).expect("duplicates removed"));
        }
        out
    }

    fn state(&mut self, fibers: &[FinSet], path: &str, label: &str) -> Option<StateRef> {
        let found = fibers
            .iter()
            .enumerate()
            .find_map(|(n, f)| f.position(label).map(|i| StateRef::new(n, i)));
        if found.is_none() {
            self.fail(path, format!("unknown state `{label}`"));
        }
        found
    }

    /// Per edge, `(from, to, count)` triples with endpoints checked.
    fn entries(&mut self, base: &BaseGraph, fibers: &[FinSet]) -> Vec<Vec<(usize, usize, u64)>> {
        for key in self.doc.transitions.keys() {
            if base.edge_position(key).is_none() {
                self.fail(format!("transitions.{key}"), format!("`{key}` is not an edge"));
            }
        }
        let counted = self.doc.kind == Kind::Span;
        let mut out = Vec::new();
        for edge in base.edges() {
            let mut triples = Vec::new();
            let mut seen = BTreeSet::new();
            let list = self.doc.transitions.get(&edge.id).cloned().unwrap_or_default();
            for (i, entry) in list.iter().enumerate() {
                let path = format!("transitions.{}[{i}]", edge.id);
                let from = fibers[edge.src].position(&entry.from);
                let to = fibers[edge.dst].position(&entry.to);
                if from.is_none() {
                    self.fail(format!("{path}.from"), format!("`{}` is not a state over `{}`", entry.from, base.nodes()[edge.src]));
                }
                if to.is_none() {
                    self.fail(format!("{path}.to"), format!("`{}` is not a state over `{}`", entry.to, base.nodes()[edge.dst]));
                }
                let count = match (counted, entry.count) {
                    (true, None) => 1,
                    (true, Some(0)) => {
                        self.fail(format!("{path}.count"), "count must be at least 1");
                        continue;
                    }
                    (true, Some(c)) => c,
                    (false, None) => 1,
                    (false, Some(_)) => {
                        self.fail(format!("{path}.count"), "counts are only allowed in span documents");
                        continue;
                    }
                };
                if let (Some(f), Some(t)) = (from, to) {
                    if !seen.insert((f, t)) {
                        self.fail(path, format!("repeated entry `{}` -> `{}`", entry.from, entry.to));
                        continue;
                    }
                    triples.push((f, t, count));
                }
            }
            out.push(triples);
        }
        out
    }
}

fn load(doc: &AutomatonDocument) -> Result<Loaded, IoErrors> {
    let mut b = Builder { doc, errors: Vec::new() };
    if doc.format_version != FORMAT_VERSION {
        b.fail("format_version", format!("unsupported version `{}`", doc.format_version));
    }
    let Some(base) = b.base() else {
        return Err(IoErrors(b.errors));
    };
    let base = Arc::new(base);
    let fibers = b.fibers(&base);
    let entries = b.entries(&base, &fibers);
    let initial = b.state(&fibers, "initial", &doc.initial);
    let mut finals = BTreeSet::new();
    for (i, f) in doc.finals.iter().enumerate() {
        if let Some(s) = b.state(&fibers, &format!("finals[{i}]"), f) {
            if !finals.insert(s) {
                b.fail(format!("finals[{i}]"), format!("repeated final state `{f}`"));
            }
        }
    }
    if let Some(init) = initial {
        if init.node != 0 && doc.kind == Kind::ClassicalNfa {
            b.fail("initial", "initial state must lie over the only node");
        }
    }

    let span_at = |e: usize| {
        let edge = base.edge(e);
        let feet = entries[e].iter().flat_map(|&(f, t, c)| std::iter::repeat_n((f, t), c as usize));
        Span::from_feet(fibers[edge.src].clone(), fibers[edge.dst].clone(), feet)
    };
    let loaded = match doc.kind {
        Kind::Span => {
            let transitions: Vec<Span> = (0..base.edges().len())
                .map(span_at)
                .collect::<Result<_, _>>()
                .map_err(|e| IoError::new("transitions", e.to_string()))?;
            initial.map(|initial| Loaded::Span(Automaton { base: base.clone(), fibers: fibers.clone(), transitions, initial, finals }))
        }
        Kind::Rel => {
            let transitions: Vec<Relation> = base
                .edges()
                .iter()
                .enumerate()
                .map(|(e, edge)| {
                    Relation::new(fibers[edge.src].clone(), fibers[edge.dst].clone(), entries[e].iter().map(|&(f, t, _)| (f, t)))
                })
                .collect::<Result<_, _>>()
                .map_err(|e| IoError::new("transitions", e.to_string()))?;
            initial.map(|initial| Loaded::Rel(Automaton { base: base.clone(), fibers: fibers.clone(), transitions, initial, finals }))
        }
        Kind::Det => {
            let mut transitions = Vec::new();
            for (e, edge) in base.edges().iter().enumerate() {
                let mut map = vec![None; fibers[edge.src].len()];
                for &(f, t, _) in &entries[e] {
                    if map[f].replace(t).is_some() {
                        b.fail(format!("transitions.{}", edge.id), format!("two entries from `{}`", fibers[edge.src].label(f)));
                    }
                }
                let missing: Vec<&str> = (0..map.len()).filter(|&q| map[q].is_none()).map(|q| fibers[edge.src].label(q)).collect();
                if !missing.is_empty() {
                    b.fail(format!("transitions.{}", edge.id), format!("no entry from {}", missing.join(", ")));
                    continue;
                }
                let map = map.into_iter().map(|t| t.expect("checked")).collect();
                transitions.push(FinFunction::new(fibers[edge.src].clone(), fibers[edge.dst].clone(), map).expect("positions in range"));
            }
            match initial {
                Some(initial) if transitions.len() == base.edges().len() => {
                    Some(Loaded::Det(Automaton { base: base.clone(), fibers: fibers.clone(), transitions, initial, finals }))
                }
                _ => None,
            }
        }
        Kind::ClassicalNfa => {
            if base.nodes().len() != 1 {
                b.fail("base.nodes", "a classical automaton has exactly one node");
            }
            let mut letters = BTreeSet::new();
            for (i, e) in base.edges().iter().enumerate() {
                if !letters.insert(e.label.clone()) {
                    b.fail(format!("base.edges[{i}].label"), format!("letter `{}` used twice", e.label));
                }
            }
            match initial {
                Some(initial) if b.errors.is_empty() => {
                    let q = fibers[0].clone();
                    let mut delta = vec![vec![BTreeSet::new(); base.edges().len()]; q.len()];
                    for (e, list) in entries.iter().enumerate() {
                        for &(f, t, _) in list {
                            delta[f][e].insert(t);
                        }
                    }
                    let alphabet = base.edges().iter().map(|e| e.label.clone()).collect();
                    let finals = finals.iter().map(|s| s.index).collect();
                    let n = ClassicalNfa::new(base.nodes()[0].clone(), alphabet, q, delta, initial.index, finals)
                        .map_err(|e| IoError::new("document", e.to_string()))?;
                    if let Err(e) = n.to_span_automaton() {
                        b.fail("base", e.to_string());
                    }
                    Some(Loaded::Classical(n))
                }
                _ => None,
            }
        }
    };
    if !b.errors.is_empty() {
        return Err(IoErrors(b.errors));
    }
    let loaded = loaded.ok_or_else(|| IoError::new("document", "automaton could not be built"))?;
    let violations = loaded.to_span().validate();
    if !violations.is_empty() {
        return Err(IoErrors(violations.into_iter().map(|v| IoError::new(v.path, v.message)).collect()));
    }
    Ok(loaded)
}

fn base_document(base: &BaseGraph) -> BaseDocument {
    BaseDocument {
        nodes: base.nodes().to_vec(),
        edges: base
            .edges()
            .iter()
            .map(|e| EdgeDocument {
                id: e.id.clone(),
                label: e.label.clone(),
                src: base.nodes()[e.src].clone(),
                dst: base.nodes()[e.dst].clone(),
            })
            .collect(),
    }
}

fn fiber_map(base: &BaseGraph, fibers: &[FinSet]) -> IndexMap<String, Vec<String>> {
    base.nodes().iter().cloned().zip(fibers.iter().map(|f| f.labels().to_vec())).collect()
}

fn matrix_entries(m: &NatMatrix, counted: bool) -> Vec<Entry> {
    let mut out = Vec::new();
    for r in 0..m.dom().len() {
        for c in 0..m.cod().len() {
            let k = m.get(r, c);
            if k > 0 {
                out.push(Entry {
                    from: m.dom().label(r).to_string(),
                    to: m.cod().label(c).to_string(),
                    count: counted.then_some(k),
                });
            }
        }
    }
    out
}

fn document_of<T: Transition>(a: &Automaton<T>, kind: Kind) -> AutomatonDocument {
    AutomatonDocument {
        format_version: FORMAT_VERSION.into(),
        kind,
        base: base_document(&a.base),
        fibers: fiber_map(&a.base, &a.fibers),
        transitions: a
            .base
            .edges()
            .iter()
            .zip(&a.transitions)
            .map(|(e, t)| (e.id.clone(), matrix_entries(&t.to_matrix(), kind == Kind::Span)))
            .collect(),
        initial: a.state_label(a.initial).to_string(),
        finals: a.finals.iter().map(|&s| a.state_label(s).to_string()).collect(),
    }
}

pub fn span_document(a: &SpanAutomaton) -> AutomatonDocument {
    document_of(a, Kind::Span)
}

pub fn rel_document(a: &RelAutomaton) -> AutomatonDocument {
    document_of(a, Kind::Rel)
}

pub fn det_document(a: &DetAutomaton) -> AutomatonDocument {
    document_of(a, Kind::Det)
}

pub fn classical_document(n: &ClassicalNfa) -> AutomatonDocument {
    document_of(&n.to_span_automaton().expect("valid automaton"), Kind::ClassicalNfa)
}

pub fn loaded_document(l: &Loaded) -> AutomatonDocument {
    match l {
        Loaded::Span(a) => span_document(a),
        Loaded::Rel(a) => rel_document(a),
        Loaded::Det(a) => det_document(a),
        Loaded::Classical(n) => classical_document(n),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// The multiset machine: fibers plus one count matrix per edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdetDocument {
    pub format_version: String,
    pub kind: String,
    pub base: BaseDocument,
    pub fibers: IndexMap<String, Vec<String>>,
    pub matrices: IndexMap<String, Vec<Vec<u64>>>,
    pub initial: String,
    pub finals: Vec<String>,
}

pub fn mdet_document(m: &MDetMachine) -> MdetDocument {
    let label = |s: StateRef| m.fibers[s.node].label(s.index).to_string();
    MdetDocument {
        format_version: FORMAT_VERSION.into(),
        kind: "mdet".into(),
        base: base_document(&m.base),
        fibers: fiber_map(&m.base, &m.fibers),
        matrices: m.base.edges().iter().zip(&m.matrices).map(|(e, x)| (e.id.clone(), x.to_rows())).collect(),
        initial: label(m.initial),
        finals: m.finals.iter().map(|&s| label(s)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedStateDocument {
    pub label: String,
    pub node: String,
    pub depth: usize,
    pub weight: u64,
    pub complete: bool,
}

/// A bounded exploration of the multiset machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionDocument {
    pub format_version: String,
    pub kind: String,
    pub base: BaseDocument,
    pub truncated: bool,
    pub states: Vec<ExpandedStateDocument>,
    pub transitions: IndexMap<String, Vec<Entry>>,
    pub initial: String,
}

pub fn expansion_document(x: &MultisetExpansion) -> ExpansionDocument {
    let m = x.to_matrix_automaton();
    let label = |s: usize| m.state_label(x.state_ref(s)).to_string();
    ExpansionDocument {
        format_version: FORMAT_VERSION.into(),
        kind: "mdet-expansion".into(),
        base: base_document(&x.base),
        truncated: x.truncated,
        states: x
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| ExpandedStateDocument {
                label: label(i),
                node: x.base.nodes()[s.node].clone(),
                depth: s.depth,
                weight: s.weight,
                complete: s.complete,
            })
            .collect(),
        transitions: m
            .base
            .edges()
            .iter()
            .zip(&m.transitions)
            .map(|(e, t)| (e.id.clone(), matrix_entries(t, false)))
            .collect(),
        initial: label(0),
    }
}

/// Where a simulation endpoint comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutomatonRef {
    Path(String),
    Inline(Box<AutomatonDocument>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDocument {
    pub format_version: String,
    pub source_ref: AutomatonRef,
    pub target_ref: AutomatonRef,
    pub strength: Strength,
    /// Per node, entries from target states to source states.
    #[serde(default)]
    pub components: IndexMap<String, Vec<Entry>>,
}

/// A loaded simulation, keeping the target as parsed.
#[derive(Debug, Clone)]
pub struct LoadedSimulation {
    pub sim: Simulation<Span>,
    pub target: Loaded,
}

pub fn parse_simulation_document(text: &str) -> Result<SimulationDocument, IoError> {
    parse_json(text)
}

fn resolve(r: &AutomatonRef, dir: &Path, path: &str) -> Result<Loaded, IoError> {
    let located = |e: IoError| IoError::new(format!("{path}.{}", e.path), e.message);
    match r {
        AutomatonRef::Inline(doc) => load(doc).map_err(|mut e| located(e.0.swap_remove(0))),
        AutomatonRef::Path(p) => {
            let file = dir.join(p);
            let text = std::fs::read_to_string(&file).map_err(|e| IoError::new(path, format!("{}: {e}", file.display())))?;
            parse_automaton(&text).map_err(|e| IoError::new(path, format!("{}: {e}", file.display())))
        }
    }
}

/// Parses a simulation document; relative paths resolve against `dir`.
pub fn parse_simulation(text: &str, dir: &Path) -> Result<LoadedSimulation, IoError> {
    let doc = parse_simulation_document(text)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(IoError::new("format_version", format!("unsupported version `{}`", doc.format_version)));
    }
    let source = resolve(&doc.source_ref, dir, "source_ref")?.to_span();
    let target_loaded = resolve(&doc.target_ref, dir, "target_ref")?;
    let target = target_loaded.to_span();
    if !source.base.same_shape(&target.base) {
        return Err(IoError::new("target_ref", "source and target have different bases"));
    }
    for key in doc.components.keys() {
        if source.base.node_position(key).is_none() {
            return Err(IoError::new(format!("components.{key}"), format!("`{key}` is not a node")));
        }
    }
    let mut components = Vec::new();
    for (n, node) in source.base.nodes().iter().enumerate() {
        let (dom, cod) = (&target.fibers[n], &source.fibers[n]);
        let mut feet = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, e) in doc.components.get(node).map(Vec::as_slice).unwrap_or_default().iter().enumerate() {
            let path = format!("components.{node}[{i}]");
            let f = dom.position(&e.from).ok_or_else(|| IoError::new(format!("{path}.from"), format!("`{}` is not a target state over `{node}`", e.from)))?;
            let t = cod.position(&e.to).ok_or_else(|| IoError::new(format!("{path}.to"), format!("`{}` is not a source state over `{node}`", e.to)))?;
            let c = e.count.unwrap_or(1);
            if c == 0 {
                return Err(IoError::new(format!("{path}.count"), "count must be at least 1"));
            }
            if !seen.insert((f, t)) {
                return Err(IoError::new(path, format!("repeated entry `{}` -> `{}`", e.from, e.to)));
            }
            feet.extend(std::iter::repeat_n((f, t), c as usize));
        }
        components.push(Span::from_feet(dom.clone(), cod.clone(), feet).map_err(|e| IoError::new(format!("components.{node}"), e.to_string()))?);
    }
    let sim = Simulation::new(source, target, components, doc.strength).map_err(|e| IoError::new("components", e.to_string()))?;
    Ok(LoadedSimulation { sim, target: target_loaded })
}

fn component_map<M: Morphism>(sim: &Simulation<M>) -> IndexMap<String, Vec<Entry>> {
    sim.source
        .base
        .nodes()
        .iter()
        .cloned()
        .zip(sim.components.iter().map(|c| matrix_entries(&c.to_matrix(), true)))
        .collect()
}

pub fn simulation_document(sim: &Simulation<Span>) -> SimulationDocument {
    SimulationDocument {
        format_version: FORMAT_VERSION.into(),
        source_ref: AutomatonRef::Inline(Box::new(span_document(&sim.source))),
        target_ref: AutomatonRef::Inline(Box::new(span_document(&sim.target))),
        strength: sim.strength,
        components: component_map(sim),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorizationDocument {
    pub format_version: String,
    pub kind: String,
    pub target: String,
    pub composite_ok: bool,
    pub bisim_ok: bool,
    pub unique_ok: Option<bool>,
    /// The determinized automaton the mate starts from.
    pub mate_source: AutomatonDocument,
    /// Per node, entries from states of the deterministic target to states
    /// of `mate_source`.
    pub mate: IndexMap<String, Vec<Entry>>,
}

pub fn factorization_document<M: Morphism>(target: &str, r: &FactorizationResult<M>, source_kind: Kind) -> FactorizationDocument {
    let mate_source = match source_kind {
        Kind::Det => r.mate.source.to_span_automaton().map_transitions(Span::image).to_det().map(|d| det_document(&d)),
        _ => None,
    }
    .unwrap_or_else(|| span_document(&r.mate.source.to_span_automaton()));
    FactorizationDocument {
        format_version: FORMAT_VERSION.into(),
        kind: "factorization".into(),
        target: target.into(),
        composite_ok: r.composite_ok,
        bisim_ok: r.bisim_ok,
        unique_ok: r.unique_ok,
        mate_source,
        mate: component_map(&r.mate),
    }
}

/// Printable form of a word: labels, joined without separator when all are
/// single characters and with `.` otherwise; a label shared by two edges out
/// of the same node is followed by the edge id in parentheses. The empty word
/// prints as `ε`.
pub fn word_text(base: &BaseGraph, w: &Word) -> String {
    if w.is_empty() {
        return "ε".into();
    }
    let mut shared: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for e in base.edges() {
        *shared.entry((e.src, e.label.as_str())).or_default() += 1;
    }
    let parts: Vec<String> = w
        .edges()
        .iter()
        .map(|&e| {
            let edge = base.edge(e);
            if shared[&(edge.src, edge.label.as_str())] > 1 {
                format!("{}({})", edge.label, edge.id)
            } else {
                edge.label.clone()
            }
        })
        .collect();
    let sep = if parts.iter().all(|p| p.chars().count() == 1) { "" } else { "." };
    parts.join(sep)
}

/// Accepted words up to `max_len` from the initial node, one per line, with
/// the number of accepting paths after a tab when `with_count` is set.
pub fn language_lines(a: &SpanAutomaton, max_len: usize, with_count: bool) -> Result<Vec<String>, IoError> {
    let mut out = Vec::new();
    for w in enumerate_words(&a.base, a.initial.node, max_len) {
        let c = count_paths(a, &w).map_err(|e| IoError::new("document", e.to_string()))?;
        if c == 0 {
            continue;
        }
        let text = word_text(&a.base, &w);
        out.push(if with_count { format!("{text}\t{c}") } else { text });
    }
    Ok(out)
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz text: one node per state (finals double-circled, the initial
/// state bold), one edge per token. States are grouped by base node when
/// there is more than one.
pub fn dot(a: &SpanAutomaton) -> String {
    let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
    let clustered = a.base.nodes().len() > 1;
    for (n, fiber) in a.fibers.iter().enumerate() {
        let indent = if clustered {
            let _ = writeln!(out, "  subgraph {} {{\n    label={};", dot_id(&format!("cluster_{}", a.base.nodes()[n])), dot_id(&a.base.nodes()[n]));
            "    "
        } else {
            "  "
        };
        for i in 0..fiber.len() {
            let s = StateRef::new(n, i);
            let shape = if a.is_final(s) { "doublecircle" } else { "circle" };
            let start = if s == a.initial { ", style=bold, xlabel=\"start\"" } else { "" };
            let _ = writeln!(out, "{indent}{} [shape={shape}{start}];", dot_id(fiber.label(i)));
        }
        if clustered {
            out.push_str("  }\n");
        }
    }
    for (edge, t) in a.base.edges().iter().zip(&a.transitions) {
        for tok in t.tokens() {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                dot_id(t.dom().label(tok.left)),
                dot_id(t.cod().label(tok.right)),
                dot_id(&edge.label)
            );
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::fixtures::{example1, example2};
    use crate::determinize::{det_span, DEFAULT_POWERSET_CAP};

    #[test]
    fn span_document_round_trips() {
        for a in [example1(), example2()] {
            let doc = span_document(&a);
            let text = to_json(&doc);
            let back = parse_automaton(&text).unwrap();
            assert_eq!(to_json(&loaded_document(&back)), text);
            assert_eq!(back.to_span().to_matrix_automaton().transitions, a.to_matrix_automaton().transitions);
        }
    }

    #[test]
    fn example1_document_has_four_tokens() {
        let text = to_json(&span_document(&example1()));
        let Loaded::Span(a) = parse_automaton(&text).unwrap() else { panic!("span kind") };
        assert_eq!(a.state_count(), 2);
        assert_eq!(a.transitions.iter().map(|t| t.tokens().len()).sum::<usize>(), 4);
    }

    #[test]
    fn counts_replace_repeated_entries() {
        let mut a = example1();
        let q = a.fibers[0].clone();
        a.transitions[0] = Span::from_label_pairs(q.clone(), q, &[("1", "2"), ("1", "2")]).unwrap();
        let doc = span_document(&a);
        assert_eq!(doc.transitions["a"], vec![Entry { from: "1".into(), to: "2".into(), count: Some(2) }]);
    }

    #[test]
    fn empty_transitions_parse() {
        let text = r#"{"format_version":"1","kind":"span","base":{"nodes":["*"],"edges":[{"id":"a","label":"a","src":"*","dst":"*"}]},"fibers":{"*":["p"]},"initial":"p"}"#;
        let Loaded::Span(a) = parse_automaton(text).unwrap() else { panic!("span kind") };
        assert!(a.transitions[0].tokens().is_empty());
        assert!(a.finals.is_empty());
    }

    #[test]
    fn duplicate_state_names_the_fiber() {
        let text = r#"{"format_version":"1","kind":"span","base":{"nodes":["*"]},"fibers":{"*":["p","p"]},"initial":"p"}"#;
        let e = parse_automaton(text).unwrap_err();
        assert_eq!(e.path, "fibers.*");
        assert!(e.message.contains("duplicate"));
    }

    #[test]
    fn schema_errors_are_located() {
        let text = r#"{"format_version":"1","kind":"span","base":{"nodes":["*"],"edges":[{"id":"a","label":"a","src":"*"}]},"fibers":{},"initial":"p"}"#;
        let e = parse_automaton(text).unwrap_err();
        assert_eq!(e.path, "base.edges[0]");
        assert!(e.message.contains("dst"));

        let text = r#"{"format_version":"1","kind":"span","base":{"nodes":["*"],"edges":[{"id":"a","label":"a","src":"*","dst":"*"}]},"fibers":{"*":["p"]},"transitions":{"a":[{"from":"p","to":"q"}]},"initial":"p"}"#;
        let e = parse_automaton(text).unwrap_err();
        assert_eq!(e.path, "transitions.a[0].to");
    }

    #[test]
    fn det_documents_must_be_total() {
        let text = r#"{"format_version":"1","kind":"det","base":{"nodes":["*"],"edges":[{"id":"a","label":"a","src":"*","dst":"*"}]},"fibers":{"*":["p","q"]},"transitions":{"a":[{"from":"p","to":"q"}]},"initial":"p"}"#;
        let errs = validate_document(text);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "transitions.a");
        assert!(errs[0].message.contains("q"));
    }

    #[test]
    fn det_document_round_trips() {
        let d = det_span(&example2(), DEFAULT_POWERSET_CAP).unwrap().automaton;
        let text = to_json(&det_document(&d));
        let back = parse_automaton(&text).unwrap();
        assert_eq!(back.kind(), Kind::Det);
        assert_eq!(to_json(&loaded_document(&back)), text);
    }

    #[test]
    fn words_print_as_labels() {
        let a = example1();
        let lines = language_lines(&a, 2, true).unwrap();
        assert_eq!(lines, ["a\t1", "b\t1", "aa\t1", "ab\t2", "bb\t1"]);
        let base = BaseGraph::from_strs(&["p", "q"], &[("e1", "go", "p", "p"), ("e2", "go", "p", "q")]).unwrap();
        let w = Word::new(&base, 0, vec![0, 1]).unwrap();
        assert_eq!(word_text(&base, &w), "go(e1).go(e2)");
        assert_eq!(word_text(&base, &Word::empty(0)), "ε");
    }

    #[test]
    fn dot_has_a_node_per_state_and_an_edge_per_token() {
        let a = example2();
        let text = dot(&a);
        let nodes = text.lines().filter(|l| l.contains("shape=")).count();
        let edges = text.lines().filter(|l| l.contains("->")).count();
        assert_eq!(nodes, a.state_count());
        assert_eq!(edges, a.transitions.iter().map(|t| t.tokens().len()).sum::<usize>());
        assert!(text.contains("\"4\" [shape=doublecircle]"));
    }

    #[test]
    fn inline_simulation_round_trips() {
        let a = example1();
        let sim = Simulation::identity(&a, Strength::Pseudo);
        let text = to_json(&simulation_document(&sim));
        let back = parse_simulation(&text, Path::new(".")).unwrap();
        assert_eq!(to_json(&simulation_document(&back.sim)), text);
    }
}
