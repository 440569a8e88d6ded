//! Types of atoms, the rigid structure and the type automaton.
//!
//! Two atoms share a type when some witness is a morphism between them: it
//! carries the tip onto the tip, the members near the tip onto the members
//! near the tip with a constant depth shift, and children onto children.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::atoms::{Atom, AtomId, AtomTree};
use crate::ball::cones::cone;
use crate::ball::CayleyBall;

use super::witness::{Mapper, Witness};
use super::TypeError;

/// Depths past the tip compared by the member check.
pub const MEMBER_WINDOW: u32 = 3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypeTable {
    pub names: Vec<String>,
    /// Least atom of each type (the root for type 0).
    pub representative: Vec<AtomId>,
    /// Type per level and atom index.
    pub type_of: Vec<Vec<u32>>,
    /// τ: witness from the representative of the atom's type onto the atom.
    pub witness: Vec<Vec<Witness>>,
    /// Number of types first seen at each level.
    pub new_per_level: Vec<usize>,
}

impl TypeTable {
    pub fn type_of(&self, a: AtomId) -> u32 {
        self.type_of[a.level as usize][a.index as usize]
    }

    pub fn witness(&self, a: AtomId) -> &Witness {
        &self.witness[a.level as usize][a.index as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Cumulative type count at each level.
    pub fn cumulative(&self) -> Vec<usize> {
        self.new_per_level
            .iter()
            .scan(0, |acc, &n| {
                *acc += n;
                Some(*acc)
            })
            .collect()
    }

    /// First level ≥ 1 after which no new type appears among the built levels.
    pub fn stabilization_level(&self) -> Option<u32> {
        let last_new = self.new_per_level.iter().rposition(|&n| n > 0)? as u32;
        (last_new + 1 < self.new_per_level.len() as u32).then_some(last_new + 1)
    }
}

pub fn type_name(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("T{i}")
    }
}

/// Members of `a` at depths up to `tip_depth + w`.
fn window<'a>(ball: &'a CayleyBall, a: &'a Atom, w: u32) -> impl Iterator<Item = u32> + 'a {
    let limit = a.tip_depth + w;
    a.members.iter().copied().take_while(move |&v| ball.depth(v) <= limit)
}

/// Whether `phi` is a morphism from `a` onto `b`.
pub fn is_morphism(mapper: &Mapper, tree: &AtomTree, a: &Atom, b: &Atom, phi: &Witness) -> Result<bool, TypeError> {
    let ball = mapper.ball;
    if a.tip.len() != b.tip.len() || a.hooking() != b.hooking() {
        return Ok(false);
    }
    let (la, lb) = (tree.level(a.id.level), tree.level(b.id.level));
    let w = MEMBER_WINDOW.min(la.horizon.saturating_sub(a.tip_depth)).min(lb.horizon.saturating_sub(b.tip_depth));
    if window(ball, a, w).count() != window(ball, b, w).count() {
        return Ok(false);
    }
    let shift = b.tip_depth as i64 - a.tip_depth as i64;
    for x in window(ball, a, w) {
        let Some(y) = mapper.apply(phi, x)? else { return Ok(false) };
        if lb.atom_of(y) != Some(b.id.index) || ball.depth(y) as i64 - ball.depth(x) as i64 != shift {
            return Ok(false);
        }
    }
    let (ka, kb) = (a.id.level as usize + 1, b.id.level as usize + 1);
    if ka < tree.levels.len() && kb < tree.levels.len() {
        if a.children.len() != b.children.len() {
            return Ok(false);
        }
        let mut hit = Vec::with_capacity(b.children.len());
        for &c in &a.children {
            let x = tree.levels[ka].atoms[c as usize].least_tip();
            let Some(y) = mapper.apply(phi, x)? else { return Ok(false) };
            match tree.levels[kb].atom_of(y) {
                Some(d) if b.children.contains(&d) => hit.push(d),
                _ => return Ok(false),
            }
        }
        hit.sort_unstable();
        hit.dedup();
        if hit.len() != b.children.len() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All morphisms from `a` onto `b`, in candidate order.
pub fn morphisms(mapper: &Mapper, tree: &AtomTree, a: &Atom, b: &Atom, first_only: bool) -> Result<Vec<Witness>, TypeError> {
    let mut out = Vec::new();
    if a.tip.len() != b.tip.len() || a.hooking() != b.hooking() {
        return Ok(out);
    }
    for &y in &b.tip {
        for phi in mapper.candidates(a.least_tip(), y)? {
            if is_morphism(mapper, tree, a, b, &phi)? {
                out.push(phi);
                if first_only {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

/// Cheap invariants that every morphism preserves.
fn bucket_key(ball: &CayleyBall, a: &Atom) -> (u32, usize, usize, usize) {
    let at = |d: u32| a.members.iter().filter(|&&v| ball.depth(v) == d).count();
    (a.hooking(), a.tip.len(), at(a.tip_depth + 1), at(a.tip_depth + 2))
}

pub fn classify_types(mapper: &Mapper, tree: &AtomTree) -> Result<TypeTable, TypeError> {
    let ball = mapper.ball;
    let mut names = vec![type_name(0)];
    let mut representative = vec![AtomId::new(0, 0)];
    let mut type_of = vec![vec![0]];
    let mut witness = vec![vec![Witness::identity()]];
    let mut new_per_level = vec![1];
    let mut buckets: BTreeMap<(u32, usize, usize, usize), Vec<u32>> = BTreeMap::new();
    for level in tree.levels.iter().skip(1) {
        let mut types = Vec::with_capacity(level.atoms.len());
        let mut taus = Vec::with_capacity(level.atoms.len());
        let mut fresh = 0;
        for atom in &level.atoms {
            let key = bucket_key(ball, atom);
            let mut found = None;
            for &t in buckets.get(&key).into_iter().flatten() {
                let rep = tree.atom(representative[t as usize]);
                if let Some(phi) = morphisms(mapper, tree, rep, atom, true)?.pop() {
                    found = Some((t, phi));
                    break;
                }
            }
            let (t, phi) = match found {
                Some(hit) => hit,
                None => {
                    let t = names.len() as u32;
                    names.push(type_name(t as usize));
                    representative.push(atom.id);
                    buckets.entry(key).or_default().push(t);
                    fresh += 1;
                    (t, Witness::identity())
                }
            };
            types.push(t);
            taus.push(phi);
        }
        type_of.push(types);
        witness.push(taus);
        new_per_level.push(fresh);
    }
    Ok(TypeTable { names, representative, type_of, witness, new_per_level })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RigidStructure {
    /// The rigid-type alphabet R.
    pub symbols: Vec<String>,
    /// Symbol per level and atom index (`u32::MAX` for the root).
    pub symbol_of: Vec<Vec<u32>>,
    /// ψ: witness from the representative of the atom's type onto the atom.
    pub marking: Vec<Vec<Witness>>,
    /// Per type: (symbol, child type) for each child of the representative.
    pub child_symbols: Vec<Vec<(u32, u32)>>,
}

impl RigidStructure {
    pub fn symbol(&self, a: AtomId) -> Option<u32> {
        match self.symbol_of[a.level as usize][a.index as usize] {
            u32::MAX => None,
            s => Some(s),
        }
    }

    pub fn symbol_index(&self, name: &str) -> Option<u32> {
        self.symbols.iter().position(|s| s == name).map(|i| i as u32)
    }

    /// Atom reached from the root by reading `coding`.
    pub fn atom_of_coding(&self, tree: &AtomTree, coding: &[u32]) -> Option<AtomId> {
        let mut cur = AtomId::new(0, 0);
        for &s in coding {
            cur = tree.children(cur).find(|&c| self.symbol(c) == Some(s))?;
        }
        Some(cur)
    }

    /// Symbols along the root path of `a`.
    pub fn coding(&self, tree: &AtomTree, a: AtomId) -> Vec<u32> {
        tree.path(a).into_iter().skip(1).map(|c| self.symbol(c).expect("non-root atom")).collect()
    }
}

pub fn build_rigid_structure(mapper: &Mapper, tree: &AtomTree, types: &TypeTable) -> Result<RigidStructure, TypeError> {
    let mut symbols = Vec::new();
    let mut child_symbols = vec![Vec::new(); types.len()];
    // Symbol of each child of each representative, keyed by (level, index).
    let mut rep_child_symbol: BTreeMap<AtomId, u32> = BTreeMap::new();
    for (t, &rep) in types.representative.iter().enumerate() {
        if rep.level as usize + 1 >= tree.levels.len() {
            continue;
        }
        for (i, c) in tree.children(rep).enumerate() {
            let name = if t == 0 { i.to_string() } else { format!("{}{}", types.names[t], i) };
            let s = symbols.len() as u32;
            symbols.push(name);
            rep_child_symbol.insert(c, s);
            child_symbols[t].push((s, types.type_of(c)));
        }
    }
    let mut symbol_of = vec![vec![u32::MAX]];
    let mut marking = vec![vec![Witness::identity()]];
    for k in 1..tree.levels.len() {
        let mut syms = Vec::with_capacity(tree.levels[k].atoms.len());
        let mut marks = Vec::with_capacity(tree.levels[k].atoms.len());
        for y in &tree.levels[k].atoms {
            let x = AtomId::new(k as u32 - 1, y.parent.expect("non-root atom"));
            let psi_x = &marking[k - 1][x.index as usize];
            let rep = types.representative[types.type_of(x) as usize];
            // o: the child of rep(type x) that ψ_x carries onto y.
            let back = mapper.apply(&mapper.inverse(psi_x)?, y.least_tip())?;
            let o = back
                .and_then(|v| tree.levels.get(rep.level as usize + 1)?.atom_of(v))
                .map(|i| AtomId::new(rep.level + 1, i))
                .filter(|o| tree.atom(rep).children.contains(&o.index))
                .ok_or(TypeError::WitnessMissing(y.id))?;
            if types.type_of(o) != types.type_of(y.id) {
                return Err(TypeError::TypeInconsistency(format!(
                    "atom {} has type {} but corresponds to {} of type {}",
                    y.id,
                    types.names[types.type_of(y.id) as usize],
                    o,
                    types.names[types.type_of(o) as usize]
                )));
            }
            let psi_y = mapper.compose(psi_x, types.witness(o))?;
            syms.push(rep_child_symbol[&o]);
            marks.push(psi_y);
        }
        symbol_of.push(syms);
        marking.push(marks);
    }
    Ok(RigidStructure { symbols, symbol_of, marking, child_symbols })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeAutomaton {
    pub states: Vec<String>,
    pub symbols: Vec<String>,
    pub initial: u32,
    /// (from, symbol, to), sorted.
    pub transitions: Vec<(u32, u32, u32)>,
}

impl TypeAutomaton {
    pub fn step(&self, state: u32, symbol: u32) -> Option<u32> {
        self.transitions.iter().find(|&&(f, s, _)| f == state && s == symbol).map(|&(_, _, t)| t)
    }

    /// Number of transitions from `from` to `to`.
    pub fn multiplicity(&self, from: u32, to: u32) -> usize {
        self.transitions.iter().filter(|&&(f, _, t)| f == from && t == to).count()
    }

    /// Final state after reading `coding`, or the position of the first
    /// symbol without a transition.
    pub fn run(&self, coding: &[u32]) -> Result<u32, usize> {
        coding.iter().enumerate().try_fold(self.initial, |s, (i, &c)| self.step(s, c).ok_or(i))
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph types {\n  rankdir=LR;\n");
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("  {i} [label=\"{s}\"{}];\n", if i as u32 == self.initial { ", shape=doublecircle" } else { "" }));
        }
        for &(f, s, t) in &self.transitions {
            out.push_str(&format!("  {f} -> {t} [label=\"{}\"];\n", self.symbols[s as usize]));
        }
        out.push_str("}\n");
        out
    }
}

/// Type automaton, after checking that every atom with children has the
/// child-type multiset of its type's representative.
pub fn type_automaton(tree: &AtomTree, types: &TypeTable, rigid: &RigidStructure) -> Result<TypeAutomaton, TypeError> {
    let child_types = |a: AtomId| {
        let mut v: Vec<u32> = tree.children(a).map(|c| types.type_of(c)).collect();
        v.sort_unstable();
        v
    };
    for k in 0..tree.depth() {
        for atom in &tree.level(k).atoms {
            let t = types.type_of(atom.id);
            let rep = types.representative[t as usize];
            if rep.level < tree.depth() && child_types(atom.id) != child_types(rep) {
                return Err(TypeError::TypeInconsistency(format!(
                    "atom {} and representative {} of type {} have different child types",
                    atom.id, rep, types.names[t as usize]
                )));
            }
        }
    }
    let mut transitions: Vec<(u32, u32, u32)> = rigid
        .child_symbols
        .iter()
        .enumerate()
        .flat_map(|(t, cs)| cs.iter().map(move |&(s, c)| (t as u32, s, c)))
        .collect();
    transitions.sort_unstable();
    Ok(TypeAutomaton { states: types.names.clone(), symbols: rigid.symbols.clone(), initial: 0, transitions })
}

/// Result of the three-part geometric equivalence check for one witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometricCheck {
    pub source: AtomId,
    pub target: AtomId,
    pub witness: Witness,
    pub proximal_match: bool,
    pub signature_agreement: bool,
    pub cone_match: bool,
}

impl GeometricCheck {
    pub fn holds(&self) -> bool {
        self.proximal_match && self.signature_agreement && self.cone_match
    }
}

/// Checks a witness against the proximal sets, the signature differences on
/// them, and the cones of proximal points (two layers deep).
pub fn check_geometric(mapper: &Mapper, tree: &AtomTree, a: AtomId, b: AtomId, phi: &Witness) -> Result<GeometricCheck, TypeError> {
    let ball = mapper.ball;
    let (x, y) = (tree.atom(a), tree.atom(b));
    let mut images = Vec::with_capacity(x.proximal.len());
    for &p in &x.proximal {
        images.push(mapper.apply(phi, p)?);
    }
    let mut sorted: Vec<u32> = images.iter().flatten().copied().collect();
    sorted.sort_unstable();
    let proximal_match = images.iter().all(Option::is_some) && sorted == y.proximal;
    let signature_agreement = proximal_match && {
        let offs: Vec<i32> = x
            .proximal
            .iter()
            .zip(&images)
            .map(|(&p, q)| y.signature[q.unwrap() as usize] - x.signature[p as usize])
            .collect();
        offs.windows(2).all(|w| w[0] == w[1])
    };
    let mut cone_match = proximal_match;
    for (&p, q) in x.proximal.iter().zip(&images) {
        if !cone_match {
            break;
        }
        let q = q.unwrap();
        let near = |v: u32, c: Vec<u32>| -> Vec<u32> { c.into_iter().filter(|&w| ball.depth(w) <= ball.depth(v) + 2).collect() };
        let mut mapped = Vec::new();
        for w in near(p, cone(ball, p)) {
            match mapper.apply(phi, w)? {
                Some(u) => mapped.push(u),
                None => {
                    cone_match = false;
                    break;
                }
            }
        }
        mapped.sort_unstable();
        cone_match &= mapped == near(q, cone(ball, q));
    }
    Ok(GeometricCheck { source: a, target: b, witness: phi.clone(), proximal_match, signature_agreement, cone_match })
}

/// λ-types: atoms whose λ-neighbourhoods are carried onto each other by a
/// morphism of the centres. Returns the class of every atom per level and
/// the number of classes first seen at each level.
pub fn lambda_types(
    mapper: &Mapper,
    tree: &AtomTree,
    types: &TypeTable,
    neighborhoods: &[Vec<Vec<u32>>],
) -> Result<(Vec<Vec<u32>>, Vec<usize>), TypeError> {
    let mut reps: Vec<AtomId> = Vec::new();
    let mut class_of = Vec::new();
    let mut fresh = Vec::new();
    for (k, level) in tree.levels.iter().enumerate() {
        let mut classes = Vec::with_capacity(level.atoms.len());
        let mut new = 0;
        for atom in &level.atoms {
            let nb = &neighborhoods[k][atom.id.index as usize];
            let mut found = None;
            for (c, &r) in reps.iter().enumerate() {
                let rnb = &neighborhoods[r.level as usize][r.index as usize];
                if types.type_of(r) != types.type_of(atom.id) || rnb.len() != nb.len() {
                    continue;
                }
                let rep = tree.atom(r);
                if r == atom.id {
                    found = Some(c);
                    break;
                }
                for phi in morphisms(mapper, tree, rep, atom, false)? {
                    if carries_neighborhood(mapper, tree, types, r, rnb, atom.id, nb, &phi)? {
                        found = Some(c);
                        break;
                    }
                }
                if found.is_some() {
                    break;
                }
            }
            let c = found.unwrap_or_else(|| {
                reps.push(atom.id);
                new += 1;
                reps.len() - 1
            });
            classes.push(c as u32);
        }
        class_of.push(classes);
        fresh.push(new);
    }
    Ok((class_of, fresh))
}

#[allow(clippy::too_many_arguments)]
fn carries_neighborhood(
    mapper: &Mapper,
    tree: &AtomTree,
    types: &TypeTable,
    a: AtomId,
    na: &[u32],
    b: AtomId,
    nb: &[u32],
    phi: &Witness,
) -> Result<bool, TypeError> {
    let lb = tree.level(b.level);
    let mut hit = Vec::with_capacity(na.len());
    for &n in na {
        let src = AtomId::new(a.level, n);
        let Some(y) = mapper.apply(phi, tree.atom(src).least_tip())? else { return Ok(false) };
        match lb.atom_of(y) {
            Some(d) if nb.binary_search(&d).is_ok() && types.type_of(AtomId::new(b.level, d)) == types.type_of(src) => hit.push(d),
            _ => return Ok(false),
        }
    }
    hit.sort_unstable();
    hit.dedup();
    Ok(hit.len() == nb.len())
}
