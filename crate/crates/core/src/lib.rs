//! Determinization of span automata over free categories.

pub mod automata;
pub mod determinize;
pub mod gen;
pub mod io;
pub mod laws;
pub mod simulation;
pub mod span;

pub use automata::{Automaton, BaseGraph, DetAutomaton, RelAutomaton, SpanAutomaton, StateRef, Transition, Word};
pub use determinize::{det, det_span, mdet, Determinized, MDetMachine, MultisetExpansion};
pub use simulation::{Simulation, Strength, Verdict};
pub use span::{FinFunction, FinSet, Multiset, NatMatrix, Relation, Span};
