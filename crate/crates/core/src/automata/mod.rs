//! Atom types, rigid structure, type automaton and gluing automaton.

pub mod gluing;
pub mod types;
pub mod witness;

use crate::atoms::AtomId;

pub use gluing::{gluing_automaton, run_gluing_query, Closure, Coding, GluingAutomaton, Verdict};
pub use types::{build_rigid_structure, classify_types, type_automaton, RigidStructure, TypeAutomaton, TypeTable};
pub use witness::{Mapper, Witness};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("types need a group ball; graph files carry no witnesses")]
    Unlabeled,
    #[error("a product of length {0} exceeds the certified length of the rewriting system")]
    Uncertified(usize),
    #[error("no witness carries atom {0} back to a child of its parent's representative")]
    WitnessMissing(AtomId),
    #[error("type inconsistency: {0}")]
    TypeInconsistency(String),
    #[error("gluing automaton is not deterministic: {0}")]
    NonDeterministic(String),
    #[error("gluing states did not stabilise within {0} levels; build more levels")]
    NonClosed(u32),
    #[error("invalid coding: {0}")]
    CodingInvalid(String),
}
