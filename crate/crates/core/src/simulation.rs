//! Simulations between automata over a shared base.
//!
//! A simulation *from* `F` *to* `F'` is a transformation `F' => F`: one
//! component per node, a morphism from the `F'`-fiber to the `F`-fiber. For an
//! edge `e: n -> m` it relates two composites from `F'(n)` to `F(m)`:
//!
//! ```text
//!   target route:  F'(e) ; alpha_m
//!   source route:  alpha_n ; F(e)
//! ```
//!
//! Strict and pseudo naturality ask for the two to be equal (for spans: equal
//! up to apex isomorphism, i.e. equal multiplicity matrices). Lax naturality
//! asks for a span morphism from the target route into the source route.
//! Squares on generating edges are enough because the base is free.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Automaton, SpanAutomaton, Transition};
use crate::determinize::{det_span, mdet, DetError, Determinized, MDetMachine, MultisetExpansion};
use crate::span::{span_morphism_search, FinFunction, FinSet, Multiset, NatMatrix, Relation, Span, SpanError, SpanMorphism, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("source and target automata have different bases")]
    BaseMismatch,
    #[error("component over `{node}` does not go from the target fiber to the source fiber")]
    ComponentMismatch { node: String },
    #[error("{0} components for {1} nodes")]
    ComponentCount(usize, usize),
    #[error("simulation is not natural at edge `{edge}`")]
    NotNatural { edge: String },
    #[error("a forward-backward (pseudo) simulation is required, got a lax one")]
    LaxRejected,
    #[error("bounded expansion does not contain the state {0}")]
    Truncated(String),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error(transparent)]
    Det(#[from] DetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Strict,
    Pseudo,
    Lax,
}

impl Strength {
    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Strict => "strict",
            Strength::Pseudo => "pseudo",
            Strength::Lax => "lax",
        }
    }
}

impl std::str::FromStr for Strength {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Strength::Strict),
            "pseudo" => Ok(Strength::Pseudo),
            "lax" => Ok(Strength::Lax),
            other => Err(format!("unknown strength `{other}`")),
        }
    }
}

/// Morphisms that can serve as simulation components.
pub trait Morphism: Transition + Sized {
    fn identity(a: &FinSet) -> Self;
    fn then(&self, next: &Self) -> Result<Self, SpanError>;
    fn converse(&self) -> Self;
}

impl Morphism for Relation {
    fn identity(a: &FinSet) -> Self {
        Relation::identity(a)
    }
    fn then(&self, next: &Self) -> Result<Self, SpanError> {
        self.compose(next)
    }
    fn converse(&self) -> Self {
        self.dagger()
    }
}

impl Morphism for Span {
    fn identity(a: &FinSet) -> Self {
        Span::identity(a)
    }
    fn then(&self, next: &Self) -> Result<Self, SpanError> {
        self.compose(next)
    }
    fn converse(&self) -> Self {
        self.dagger()
    }
}

impl Morphism for NatMatrix {
    fn identity(a: &FinSet) -> Self {
        NatMatrix::identity(a)
    }
    fn then(&self, next: &Self) -> Result<Self, SpanError> {
        self.compose(next)
    }
    fn converse(&self) -> Self {
        self.transpose()
    }
}

/// A simulation from `source` to `target`, stored as components
/// `target fiber -> source fiber`.
#[derive(Debug, Clone)]
pub struct Simulation<M> {
    pub source: Automaton<M>,
    pub target: Automaton<M>,
    pub components: Vec<M>,
    pub strength: Strength,
}

impl<M: Morphism> Simulation<M> {
    pub fn new(
        source: Automaton<M>,
        target: Automaton<M>,
        components: Vec<M>,
        strength: Strength,
    ) -> Result<Self, SimError> {
        if !source.base.same_shape(&target.base) {
            return Err(SimError::BaseMismatch);
        }
        if components.len() != source.fibers.len() {
            return Err(SimError::ComponentCount(components.len(), source.fibers.len()));
        }
        for (n, c) in components.iter().enumerate() {
            if !c.dom().same_order(&target.fibers[n]) || !c.cod().same_order(&source.fibers[n]) {
                return Err(SimError::ComponentMismatch { node: source.base.nodes()[n].clone() });
            }
        }
        Ok(Simulation { source, target, components, strength })
    }

    /// Identity components from an automaton to itself.
    pub fn identity(a: &Automaton<M>, strength: Strength) -> Self {
        Simulation {
            source: a.clone(),
            target: a.clone(),
            components: a.fibers.iter().map(M::identity).collect(),
            strength,
        }
    }

    /// Componentwise converse, with source and target exchanged.
    pub fn dagger(&self) -> Simulation<M> {
        Simulation {
            source: self.target.clone(),
            target: self.source.clone(),
            components: self.components.iter().map(M::converse).collect(),
            strength: self.strength,
        }
    }

    /// Composite of a simulation `F -> F'` (self) with one `F' -> F''`.
    pub fn then(&self, next: &Simulation<M>) -> Result<Simulation<M>, SimError> {
        let components = next
            .components
            .iter()
            .zip(&self.components)
            .map(|(b, a)| b.then(a))
            .collect::<Result<Vec<_>, _>>()?;
        let strength = match (self.strength, next.strength) {
            (Strength::Lax, _) | (_, Strength::Lax) => Strength::Lax,
            (Strength::Pseudo, _) | (_, Strength::Pseudo) => Strength::Pseudo,
            _ => Strength::Strict,
        };
        Simulation::new(self.source.clone(), next.target.clone(), components, strength)
    }

    /// `(target route, source route)` for edge `e`.
    pub fn square(&self, e: usize) -> Result<(M, M), SimError> {
        let edge = self.source.base.edge(e);
        let target_route = self.target.transitions[e].then(&self.components[edge.dst])?;
        let source_route = self.components[edge.src].then(&self.source.transitions[e])?;
        Ok((target_route, source_route))
    }
}

/// Outcome of a naturality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// First failing edge, in base edge order.
    FailsAt { edge: usize },
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

fn rows_agree(target: &NatMatrix, source: &NatMatrix, mode: Strength, rows: Option<&[bool]>) -> bool {
    let (n, m) = (target.dom().len(), target.cod().len());
    (0..n).filter(|&r| rows.is_none_or(|rs| rs[r])).all(|r| {
        (0..m).all(|c| {
            let (t, s) = (target.get(r, c), source.get(r, c));
            match mode {
                Strength::Strict | Strength::Pseudo => t == s,
                Strength::Lax => t == 0 || s > 0,
            }
        })
    })
}

/// Naturality on every generating edge at the given strength. With `rows`,
/// only the listed target-fiber states (per node) are compared.
pub fn check_simulation<M: Morphism>(
    sim: &Simulation<M>,
    mode: Strength,
    rows: Option<&[Vec<bool>]>,
) -> Result<Verdict, SimError> {
    if !sim.source.base.same_shape(&sim.target.base) {
        return Err(SimError::BaseMismatch);
    }
    for e in 0..sim.source.base.edges().len() {
        let (t, s) = sim.square(e)?;
        let src = sim.source.base.edge(e).src;
        let filter = rows.map(|r| r[src].as_slice());
        if !rows_agree(&t.to_matrix(), &s.to_matrix(), mode, filter) {
            return Ok(Verdict::FailsAt { edge: e });
        }
    }
    Ok(Verdict::Holds)
}

/// Strict naturality of a relational simulation.
pub fn check_rel_simulation(sim: &Simulation<Relation>) -> Result<Verdict, SimError> {
    check_simulation(sim, Strength::Strict, None)
}

/// Result of a span-level check: on success, one span morphism per edge
/// witnessing the square.
#[derive(Debug, Clone)]
pub struct SpanCheck {
    pub verdict: Verdict,
    pub witnesses: Vec<SpanMorphism>,
}

/// Lax or pseudo naturality of a span simulation, decided by searching for
/// the 2-cells themselves (target route into source route; isomorphisms for
/// pseudo and strict).
pub fn check_span_simulation(sim: &Simulation<Span>, mode: Strength) -> Result<SpanCheck, SimError> {
    if !sim.source.base.same_shape(&sim.target.base) {
        return Err(SimError::BaseMismatch);
    }
    let mut witnesses = Vec::new();
    for e in 0..sim.source.base.edges().len() {
        let (t, s) = sim.square(e)?;
        match span_morphism_search(&t, &s, mode != Strength::Lax)? {
            Some(w) => witnesses.push(w),
            None => return Ok(SpanCheck { verdict: Verdict::FailsAt { edge: e }, witnesses: Vec::new() }),
        }
    }
    Ok(SpanCheck { verdict: Verdict::Holds, witnesses })
}

/// Both the simulation and its dagger are natural at the declared strength.
pub fn check_bisimulation<M: Morphism>(sim: &Simulation<M>) -> Result<bool, SimError> {
    check_bisimulation_on(sim, None, None)
}

/// [`check_bisimulation`] restricted to the given rows of each direction.
pub fn check_bisimulation_on<M: Morphism>(
    sim: &Simulation<M>,
    rows: Option<&[Vec<bool>]>,
    dagger_rows: Option<&[Vec<bool>]>,
) -> Result<bool, SimError> {
    Ok(check_simulation(sim, sim.strength, rows)?.holds()
        && check_simulation(&sim.dagger(), sim.strength, dagger_rows)?.holds())
}

/// The canonical simulation from a span automaton to its determinization.
#[derive(Debug, Clone)]
pub struct CanonicalDet {
    pub sim: Simulation<Span>,
    pub det: Determinized,
}

/// Membership spans `subset fiber -> original fiber`, one token per `(S, q)`
/// with `q` in `S`. The result is lax natural; it is pseudo only when
/// multiplicities never exceed what the image keeps.
pub fn canonical_det_simulation(a: &SpanAutomaton, cap: usize) -> Result<CanonicalDet, SimError> {
    let det = det_span(a, cap)?;
    let components = (0..a.fibers.len())
        .map(|n| membership_span(&det, &a.fibers[n], n))
        .collect::<Result<Vec<_>, _>>()?;
    let sim = Simulation::new(a.clone(), det.automaton.to_span_automaton(), components, Strength::Lax)?;
    Ok(CanonicalDet { sim, det })
}

fn membership_span(det: &Determinized, fiber: &FinSet, n: usize) -> Result<Span, SpanError> {
    let dom = det.automaton.fibers[n].clone();
    let feet = det.subsets[n]
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.members.iter().map(move |&q| (i, q)));
    Span::from_feet(dom, fiber.clone(), feet)
}

/// The canonical simulation from a span automaton to its multiset
/// determinization, on a bounded expansion.
#[derive(Debug, Clone)]
pub struct MdetSimulation {
    pub sim: Simulation<NatMatrix>,
    pub machine: MDetMachine,
    pub expansion: MultisetExpansion,
    /// Target states whose transitions were explored, per node.
    pub rows: Vec<Vec<bool>>,
}

impl MdetSimulation {
    /// Pseudo naturality on every edge, over the explored states.
    pub fn check(&self) -> Result<Verdict, SimError> {
        check_simulation(&self.sim, Strength::Pseudo, Some(&self.rows))
    }

    /// The component over `node` as a span with apex `{(m, q, i) | 1 <= i <= m(q)}`.
    pub fn component_span(&self, node: usize) -> Result<Span, SpanError> {
        let m = &self.sim.components[node];
        let mut tokens = Vec::new();
        for s in 0..m.dom().len() {
            for q in 0..m.cod().len() {
                for i in 1..=m.get(s, q) {
                    tokens.push(Token {
                        label: format!("({},{},{})", m.dom().label(s), m.cod().label(q), i),
                        left: s,
                        right: q,
                    });
                }
            }
        }
        Span::new(m.dom().clone(), m.cod().clone(), tokens)
    }
}

/// Components relate each multiset state `m` to each original state `q`
/// with multiplicity `m(q)`.
pub fn canonical_mdet_simulation(a: &SpanAutomaton, max_len: usize, max_states: usize) -> Result<MdetSimulation, SimError> {
    let machine = mdet(a)?;
    let expansion = machine.expand(max_states, max_len)?;
    let target = expansion.to_matrix_automaton();
    let components = multiplicity_components(&expansion, &a.fibers)?;
    let sim = Simulation::new(a.to_matrix_automaton(), target, components, Strength::Pseudo)?;
    let rows = expansion.complete_rows();
    Ok(MdetSimulation { sim, machine, expansion, rows })
}

fn multiplicity_components(x: &MultisetExpansion, fibers: &[FinSet]) -> Result<Vec<NatMatrix>, SpanError> {
    let mut comps: Vec<NatMatrix> = x
        .fibers()
        .iter()
        .zip(fibers)
        .map(|(d, c)| NatMatrix::zero(d.clone(), c.clone()))
        .collect();
    for (s, st) in x.states.iter().enumerate() {
        let r = x.state_ref(s);
        for (q, &c) in st.vector.counts().iter().enumerate() {
            comps[r.node].set(r.index, q, c);
        }
    }
    Ok(comps)
}

/// A simulation into a deterministic automaton, split as a mate followed by
/// the canonical simulation.
#[derive(Debug, Clone)]
pub struct FactorizationResult<M> {
    /// The factoring simulation, from the determinization to `G`.
    pub mate: Simulation<M>,
    pub composite_ok: bool,
    pub bisim_ok: bool,
    /// Whether the mate is the only one; computed only when the source has
    /// fibers of at most two states, at most two edges, and few candidates.
    pub unique_ok: Option<bool>,
}

/// Largest number of candidate mates tried by the uniqueness search.
pub const UNIQUENESS_SEARCH_LIMIT: usize = 4096;

fn check_target_is(alpha_target: &SpanAutomaton, g: &crate::automata::DetAutomaton) -> Result<(), SimError> {
    if !alpha_target.base.same_shape(&g.base) {
        return Err(SimError::BaseMismatch);
    }
    for (n, (a, b)) in alpha_target.fibers.iter().zip(&g.fibers).enumerate() {
        if !a.same_order(b) {
            return Err(SimError::ComponentMismatch { node: g.base.nodes()[n].clone() });
        }
    }
    Ok(())
}

fn small_instance(alpha: &Simulation<Span>) -> bool {
    alpha.source.fibers.iter().all(|f| f.len() <= 2) && alpha.source.base.edges().len() <= 2
}

/// Every combination of per-node functions `dom[n] -> cod[n]`, or `None`
/// past the search limit.
fn all_function_families(dom: &[FinSet], cod: &[FinSet]) -> Option<Vec<Vec<Vec<usize>>>> {
    let mut total = 1usize;
    for (d, c) in dom.iter().zip(cod) {
        total = total.checked_mul(c.len().checked_pow(d.len() as u32)?)?;
        if total > UNIQUENESS_SEARCH_LIMIT {
            return None;
        }
    }
    let per_node: Vec<Vec<Vec<usize>>> = dom
        .iter()
        .zip(cod)
        .map(|(d, c)| {
            let mut fns = vec![Vec::new()];
            for _ in 0..d.len() {
                fns = fns
                    .into_iter()
                    .flat_map(|f| (0..c.len()).map(move |y| {
                        let mut f = f.clone();
                        f.push(y);
                        f
                    }))
                    .collect();
            }
            fns
        })
        .collect();
    let mut families = vec![Vec::new()];
    for options in per_node {
        families = families
            .into_iter()
            .flat_map(|fam: Vec<Vec<usize>>| {
                options.iter().map(move |f| {
                    let mut fam = fam.clone();
                    fam.push(f.clone());
                    fam
                })
            })
            .collect();
    }
    Some(families)
}

/// Factors a simulation `alpha` from `F` to a deterministic `G` through the
/// canonical simulation to the powerset determinization of `F`.
///
/// The mate sends `x` in `G(n)` to the subset `{q | (x, q) in alpha_n}`.
pub fn factor_det(
    alpha: &Simulation<Span>,
    g: &crate::automata::DetAutomaton,
    cap: usize,
) -> Result<FactorizationResult<Span>, SimError> {
    check_target_is(&alpha.target, g)?;
    if let Verdict::FailsAt { edge } = check_simulation(alpha, alpha.strength, None)? {
        return Err(SimError::NotNatural { edge: alpha.source.base.edge(edge).id.clone() });
    }
    let canon = canonical_det_simulation(&alpha.source, cap)?;
    let det_fibers = &canon.det.automaton.fibers;

    let mut maps = Vec::with_capacity(g.fibers.len());
    for (n, c) in alpha.components.iter().enumerate() {
        let image = c.image();
        let map = (0..g.fibers[n].len())
            .map(|x| {
                let members: BTreeSet<usize> = image.successors(x).collect();
                canon.det.state_of(n, &members).expect("every subset is a state").index
            })
            .collect::<Vec<_>>();
        maps.push(map);
    }
    let build = |maps: &[Vec<usize>]| -> Result<Simulation<Span>, SimError> {
        let components = maps
            .iter()
            .enumerate()
            .map(|(n, m)| Ok(Span::from_function(&FinFunction::new(g.fibers[n].clone(), det_fibers[n].clone(), m.clone())?)))
            .collect::<Result<Vec<_>, SpanError>>()?;
        Simulation::new(canon.det.automaton.to_span_automaton(), g.to_span_automaton(), components, Strength::Pseudo)
    };
    let composite_holds = |mate: &Simulation<Span>| -> Result<bool, SimError> {
        for (n, (b, e)) in mate.components.iter().zip(&canon.sim.components).enumerate() {
            if b.compose(e)?.image() != alpha.components[n].image() {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let mate = build(&maps)?;
    let composite_ok = composite_holds(&mate)?;
    let bisim_ok = check_bisimulation(&mate)?;

    let unique_ok = if small_instance(alpha) {
        match all_function_families(&g.fibers, det_fibers) {
            Some(families) => {
                let mut found = Vec::new();
                for fam in families {
                    let cand = build(&fam)?;
                    if composite_holds(&cand)? && check_bisimulation(&cand)? {
                        found.push(fam);
                    }
                }
                Some(found.len() == 1 && found[0] == maps)
            }
            None => None,
        }
    } else {
        None
    };
    Ok(FactorizationResult { mate, composite_ok, bisim_ok, unique_ok })
}

/// Factors a forward-backward simulation `alpha` from `F` to a deterministic
/// `G` through the canonical simulation to the multiset determinization.
///
/// The mate sends `x` in `G(n)` to the multiset `q -> alpha_n(x, q)`. The
/// multiset states are explored from the initial state and from every mate
/// value, for `max_len` steps; checks only compare explored rows.
pub fn factor_mdet(
    alpha: &Simulation<Span>,
    g: &crate::automata::DetAutomaton,
    max_len: usize,
    max_states: usize,
) -> Result<FactorizationResult<NatMatrix>, SimError> {
    if alpha.strength == Strength::Lax {
        return Err(SimError::LaxRejected);
    }
    check_target_is(&alpha.target, g)?;
    if let Verdict::FailsAt { edge } = check_simulation(alpha, alpha.strength, None)? {
        return Err(SimError::NotNatural { edge: alpha.source.base.edge(edge).id.clone() });
    }
    let machine = mdet(&alpha.source)?;
    let alpha_matrices: Vec<NatMatrix> = alpha.components.iter().map(Span::to_matrix).collect();
    let mut seeds = vec![(machine.initial.node, machine.initial_vector.clone())];
    for (n, m) in alpha_matrices.iter().enumerate() {
        seeds.extend((0..g.fibers[n].len()).map(|x| (n, m.row(x))));
    }
    let expansion = machine.expand_from(&seeds, max_states, max_len)?;
    let mu = multiplicity_components(&expansion, &alpha.source.fibers)?;
    let exp_fibers = expansion.fibers().to_vec();
    let complete = expansion.complete_rows();

    let mut maps = Vec::with_capacity(g.fibers.len());
    for (n, m) in alpha_matrices.iter().enumerate() {
        let map = (0..g.fibers[n].len())
            .map(|x| {
                let v: Multiset = m.row(x);
                expansion
                    .find(n, &v)
                    .map(|s| expansion.state_ref(s).index)
                    .ok_or_else(|| SimError::Truncated(format!("{v:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        maps.push(map);
    }
    let exp_automaton = expansion.to_matrix_automaton();
    let g_matrices = g.to_matrix_automaton();
    let build = |maps: &[Vec<usize>]| -> Result<Simulation<NatMatrix>, SimError> {
        let components = maps
            .iter()
            .enumerate()
            .map(|(n, m)| Ok(FinFunction::new(g.fibers[n].clone(), exp_fibers[n].clone(), m.clone())?.to_matrix()))
            .collect::<Result<Vec<_>, SpanError>>()?;
        Simulation::new(exp_automaton.clone(), g_matrices.clone(), components, Strength::Pseudo)
    };
    let evaluate = |maps: &[Vec<usize>]| -> Result<(Simulation<NatMatrix>, bool, bool), SimError> {
        let mate = build(maps)?;
        let mut composite = true;
        for (n, b) in mate.components.iter().enumerate() {
            if b.compose(&mu[n])? != alpha_matrices[n] {
                composite = false;
            }
        }
        let mate_rows: Vec<Vec<bool>> = maps
            .iter()
            .enumerate()
            .map(|(n, m)| m.iter().map(|&s| complete[n][s]).collect())
            .collect();
        let bisim = check_bisimulation_on(&mate, Some(&mate_rows), Some(&complete))?;
        Ok((mate, composite, bisim))
    };

    let (mate, composite_ok, bisim_ok) = evaluate(&maps)?;
    let unique_ok = if small_instance(alpha) {
        match all_function_families(&g.fibers, &exp_fibers) {
            Some(families) => {
                let mut found = Vec::new();
                for fam in families {
                    let (_, c, b) = evaluate(&fam)?;
                    if c && b {
                        found.push(fam);
                    }
                }
                Some(found.len() == 1 && found[0] == maps)
            }
            None => None,
        }
    } else {
        None
    };
    Ok(FactorizationResult { mate, composite_ok, bisim_ok, unique_ok })
}
