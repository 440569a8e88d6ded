//! The gluing automaton over pairs of rigid symbols, and coding queries.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::atoms::{AtomId, AtomTree};

use super::types::{RigidStructure, TypeAutomaton, TypeTable};
use super::witness::{Mapper, Witness};
use super::TypeError;

/// Levels in a row without new states needed to call the state set closed.
pub const CLOSURE_LEVELS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingState {
    pub types: (u32, u32),
    /// ψ_b⁻¹ ∘ ψ_a for the representative pair (a, b).
    pub relative: Witness,
    /// Least pair of the class, on the level where the class first appears.
    pub representative: (AtomId, AtomId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    /// No new state on this level or the one before it.
    Closed { level: u32 },
    NonClosed { levels: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingAutomaton {
    pub lambda: u32,
    pub symbols: Vec<String>,
    pub type_automaton: TypeAutomaton,
    pub states: Vec<GluingState>,
    pub initial: u32,
    /// (from, (r, s), to), sorted.
    pub transitions: Vec<(u32, (u32, u32), u32)>,
    pub new_per_level: Vec<usize>,
    pub closure: Closure,
}

/// State of every Δ_k pair, per level.
pub type PairStates = Vec<FxHashMap<(u32, u32), u32>>;

pub fn gluing_automaton(
    mapper: &Mapper,
    tree: &AtomTree,
    types: &TypeTable,
    rigid: &RigidStructure,
    type_automaton: &TypeAutomaton,
    deltas: &[Vec<(u32, u32)>],
    lambda: u32,
) -> Result<(GluingAutomaton, PairStates), TypeError> {
    let mut ids: FxHashMap<(u32, u32, Witness), u32> = FxHashMap::default();
    let mut states = Vec::new();
    let mut pair_state: PairStates = Vec::new();
    let mut new_per_level = Vec::new();
    for (k, delta) in deltas.iter().enumerate() {
        let mut map = FxHashMap::default();
        let before = states.len();
        for &(a, b) in delta {
            let (ia, ib) = (AtomId::new(k as u32, a), AtomId::new(k as u32, b));
            let psi_a = &rigid.marking[k][a as usize];
            let psi_b = &rigid.marking[k][b as usize];
            let relative = mapper.compose(&mapper.inverse(psi_b)?, psi_a)?;
            let key = (types.type_of(ia), types.type_of(ib), relative);
            let next = states.len() as u32;
            let s = *ids.entry(key.clone()).or_insert_with(|| {
                states.push(GluingState { types: (key.0, key.1), relative: key.2, representative: (ia, ib) });
                next
            });
            map.insert((a, b), s);
        }
        new_per_level.push(states.len() - before);
        pair_state.push(map);
    }
    let mut delta_map: BTreeMap<(u32, (u32, u32)), (u32, (AtomId, AtomId))> = BTreeMap::new();
    for k in 0..deltas.len().saturating_sub(1) {
        for &(a, b) in &deltas[k] {
            let from = pair_state[k][&(a, b)];
            let (ia, ib) = (AtomId::new(k as u32, a), AtomId::new(k as u32, b));
            for ca in tree.children(ia) {
                for cb in tree.children(ib) {
                    let Some(&to) = pair_state[k + 1].get(&(ca.index, cb.index)) else { continue };
                    let letter = (rigid.symbol(ca).unwrap(), rigid.symbol(cb).unwrap());
                    match delta_map.get(&(from, letter)) {
                        Some(&(prev, witness)) if prev != to => {
                            return Err(TypeError::NonDeterministic(format!(
                                "state {from} reads ({}, {}) into {prev} from {} and into {to} from ({ca}, {cb})",
                                rigid.symbols[letter.0 as usize],
                                rigid.symbols[letter.1 as usize],
                                format_pair(witness)
                            )));
                        }
                        Some(_) => {}
                        None => {
                            delta_map.insert((from, letter), (to, (ca, cb)));
                        }
                    }
                }
            }
        }
    }
    let transitions = delta_map.into_iter().map(|((f, l), (t, _))| (f, l, t)).collect();
    let closure = (1..new_per_level.len())
        .find(|&k| k + 1 >= CLOSURE_LEVELS && new_per_level[k + 1 - CLOSURE_LEVELS..=k].iter().all(|&n| n == 0))
        .map_or(Closure::NonClosed { levels: new_per_level.len() as u32 }, |k| Closure::Closed { level: k as u32 });
    let m = GluingAutomaton {
        lambda,
        symbols: rigid.symbols.clone(),
        type_automaton: type_automaton.clone(),
        states,
        initial: 0,
        transitions,
        new_per_level,
        closure,
    };
    Ok((m, pair_state))
}

fn format_pair(p: (AtomId, AtomId)) -> String {
    format!("({}, {})", p.0, p.1)
}

/// A finite or eventually periodic coding over the rigid alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coding {
    pub prefix: Vec<u32>,
    pub period: Vec<u32>,
}

impl Coding {
    pub fn finite(prefix: Vec<u32>) -> Self {
        Coding { prefix, period: Vec::new() }
    }

    pub fn is_periodic(&self) -> bool {
        !self.period.is_empty()
    }

    pub fn at(&self, i: usize) -> Option<u32> {
        match self.prefix.get(i) {
            Some(&s) => Some(s),
            None if self.period.is_empty() => None,
            None => Some(self.period[(i - self.prefix.len()) % self.period.len()]),
        }
    }

    /// Comma-separated symbols with an optional bracketed period, e.g.
    /// `3,C1,C2[C0,C1]`.
    pub fn parse(text: &str, symbols: &[String]) -> Result<Self, TypeError> {
        let text = text.trim();
        let (head, period) = match text.find('[') {
            Some(i) => {
                let rest = text[i + 1..].strip_suffix(']').ok_or_else(|| TypeError::CodingInvalid(format!("unclosed period in '{text}'")))?;
                (&text[..i], Some(rest))
            }
            None => (text, None),
        };
        let list = |s: &str| -> Result<Vec<u32>, TypeError> {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    symbols
                        .iter()
                        .position(|x| x == t)
                        .map(|i| i as u32)
                        .ok_or_else(|| TypeError::CodingInvalid(format!("unknown symbol '{t}'")))
                })
                .collect()
        };
        let coding = Coding { prefix: list(head)?, period: period.map(list).transpose()?.unwrap_or_default() };
        if period.is_some() && coding.period.is_empty() {
            return Err(TypeError::CodingInvalid(format!("empty period in '{text}'")));
        }
        Ok(coding)
    }

    pub fn format(&self, symbols: &[String]) -> String {
        let join = |v: &[u32]| v.iter().map(|&s| symbols[s as usize].as_str()).collect::<Vec<_>>().join(",");
        if self.period.is_empty() {
            join(&self.prefix)
        } else {
            format!("{}[{}]", join(&self.prefix), join(&self.period))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    /// First level whose letter has no transition.
    Reject { level: u32 },
    /// The run reached a state whose transitions were never explored
    /// (only possible for a non-closed automaton).
    Undetermined { level: u32 },
}

/// Runs a coding through the type automaton; periodic codings are checked
/// until a (state, phase) pair repeats.
fn validate(ta: &TypeAutomaton, c: &Coding) -> Result<(), TypeError> {
    let invalid = |i: usize| TypeError::CodingInvalid(format!("no type transition at level {}", i + 1));
    let mut state = ta.initial;
    for (i, &s) in c.prefix.iter().enumerate() {
        state = ta.step(state, s).ok_or_else(|| invalid(i))?;
    }
    if c.period.is_empty() {
        return Ok(());
    }
    let mut seen = std::collections::HashSet::new();
    let mut i = c.prefix.len();
    loop {
        let phase = (i - c.prefix.len()) % c.period.len();
        if !seen.insert((state, phase)) {
            return Ok(());
        }
        state = ta.step(state, c.period[phase]).ok_or_else(|| invalid(i))?;
        i += 1;
    }
}

pub fn run_gluing_query(m: &GluingAutomaton, u: &Coding, v: &Coding) -> Result<Verdict, TypeError> {
    validate(&m.type_automaton, u)?;
    validate(&m.type_automaton, v)?;
    if u.is_periodic() != v.is_periodic() || (!u.is_periodic() && u.prefix.len() != v.prefix.len()) {
        return Err(TypeError::CodingInvalid("codings must be both finite of equal length or both eventually periodic".into()));
    }
    let index: FxHashMap<(u32, (u32, u32)), u32> = m.transitions.iter().map(|&(f, l, t)| ((f, l), t)).collect();
    let start = u.prefix.len().max(v.prefix.len());
    let mut seen = std::collections::HashSet::new();
    let mut state = m.initial;
    for i in 0.. {
        let (Some(r), Some(s)) = (u.at(i), v.at(i)) else { return Ok(Verdict::Accept) };
        if i >= start {
            let phase = ((i - u.prefix.len()) % u.period.len(), (i - v.prefix.len()) % v.period.len());
            if !seen.insert((state, phase)) {
                return Ok(Verdict::Accept);
            }
        }
        match index.get(&(state, (r, s))) {
            Some(&t) => state = t,
            None if m.is_frontier(state) => return Ok(Verdict::Undetermined { level: i as u32 + 1 }),
            None => return Ok(Verdict::Reject { level: i as u32 + 1 }),
        }
    }
    unreachable!()
}

impl GluingAutomaton {
    pub fn step(&self, state: u32, letter: (u32, u32)) -> Option<u32> {
        let i = self.transitions.partition_point(|&(f, l, _)| (f, l) < (state, letter));
        self.transitions.get(i).filter(|&&(f, l, _)| (f, l) == (state, letter)).map(|&(_, _, t)| t)
    }

    /// States of the form (a, a), with their type.
    pub fn diagonal(&self) -> Vec<(u32, u32)> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.representative.0 == s.representative.1)
            .map(|(i, s)| (i as u32, s.types.0))
            .collect()
    }

    /// True for states first reached at the deepest level of a non-closed
    /// automaton; their outgoing transitions are unknown.
    pub fn is_frontier(&self, state: u32) -> bool {
        matches!(self.closure, Closure::NonClosed { .. })
            && self.states[state as usize].representative.0.level + 1 >= self.new_per_level.len() as u32
    }

    pub fn require_closed(&self) -> Result<(), TypeError> {
        match self.closure {
            Closure::Closed { .. } => Ok(()),
            Closure::NonClosed { levels } => Err(TypeError::NonClosed(levels)),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph gluing {\n  rankdir=LR;\n");
        for (i, s) in self.states.iter().enumerate() {
            let (a, b) = s.representative;
            let shape = if i as u32 == self.initial { ", shape=doublecircle" } else { "" };
            out.push_str(&format!("  {i} [label=\"({a},{b})\"{shape}];\n"));
        }
        for &(f, (r, s), t) in &self.transitions {
            out.push_str(&format!("  {f} -> {t} [label=\"{}|{}\"];\n", self.symbols[r as usize], self.symbols[s as usize]));
        }
        out.push_str("}\n");
        out
    }
}
