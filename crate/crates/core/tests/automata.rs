mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use atomforge::atoms::AtomId;
use atomforge::automata::types::{check_geometric, is_morphism};
use atomforge::automata::{
    build_rigid_structure, classify_types, gluing_automaton, run_gluing_query, type_automaton, Closure, Coding, GluingAutomaton,
    Mapper, RigidStructure, TypeAutomaton, TypeError, TypeTable, Verdict, Witness,
};
use atomforge::metrics::Metrics;
use common::{small_coxeter, small_tiling, small_tree3, Fixture};
use proptest::prelude::*;

struct Built {
    types: TypeTable,
    rigid: RigidStructure,
    ta: TypeAutomaton,
    gluing: GluingAutomaton,
    deltas: Vec<Vec<(u32, u32)>>,
}

fn build(f: &Fixture) -> Built {
    let mapper = Mapper::new(&f.ball).unwrap();
    let types = classify_types(&mapper, &f.tree).unwrap();
    let rigid = build_rigid_structure(&mapper, &f.tree, &types).unwrap();
    let ta = type_automaton(&f.tree, &types, &rigid).unwrap();
    let mut m = Metrics::new(&f.ball, &f.tree);
    let deltas: Vec<_> = (0..=f.tree.depth()).map(|k| m.gluing_pairs(k, 1)).collect();
    let (gluing, _) = gluing_automaton(&mapper, &f.tree, &types, &rigid, &ta, &deltas, 1).unwrap();
    Built { types, rigid, ta, gluing, deltas }
}

fn tiling() -> &'static Built {
    static B: OnceLock<Built> = OnceLock::new();
    B.get_or_init(|| build(small_tiling()))
}

fn coxeter() -> &'static Built {
    static B: OnceLock<Built> = OnceLock::new();
    B.get_or_init(|| build(small_coxeter()))
}

fn targets(ta: &TypeAutomaton, from: u32) -> Vec<u32> {
    ta.transitions.iter().filter(|t| t.0 == from).map(|t| t.2).collect::<BTreeSet<_>>().into_iter().collect()
}

#[test]
fn tiling_type_automaton_has_four_states() {
    let ta = &tiling().ta;
    assert_eq!(ta.states.len(), 4);
    assert_eq!(ta.transitions.len(), 17);
    let root = ta.initial;
    let level1 = targets(ta, root);
    assert_eq!(level1.len(), 2);
    assert!(level1.iter().all(|&t| ta.multiplicity(root, t) == 5));
    // One level-1 type feeds the other, which feeds the fourth type, which
    // returns to the first.
    let (b, c) = match (ta.multiplicity(level1[0], level1[1]), ta.multiplicity(level1[1], level1[0])) {
        (1, 0) => (level1[0], level1[1]),
        (0, 1) => (level1[1], level1[0]),
        other => panic!("unexpected multiplicities {other:?}"),
    };
    let d = (0..4).find(|&t| t != root && t != b && t != c).unwrap();
    assert_eq!((ta.multiplicity(b, b), ta.multiplicity(b, c), targets(ta, b).len()), (2, 1, 2));
    assert_eq!((ta.multiplicity(c, c), ta.multiplicity(c, d), targets(ta, c).len()), (2, 1, 2));
    assert_eq!((ta.multiplicity(d, b), targets(ta, d)), (1, vec![b]));
}

#[test]
fn regular_tree_has_a_single_non_root_type() {
    let b = build(small_tree3());
    assert_eq!(b.ta.states.len(), 2);
    assert_eq!(b.ta.multiplicity(0, 1), 3);
    assert_eq!(b.ta.multiplicity(1, 1), 2);
}

#[test]
fn coxeter_wide_and_narrow_atoms_have_distinct_types() {
    let f = small_coxeter();
    let b = coxeter();
    let level = f.tree.level(1);
    let ty = |narrow: bool| -> BTreeSet<u32> {
        level.atoms.iter().filter(|a| (a.children.len() == 1) == narrow).map(|a| b.types.type_of(a.id)).collect()
    };
    let (wide, narrow) = (ty(false), ty(true));
    assert_eq!((wide.len(), narrow.len()), (1, 1));
    let (w, n) = (*wide.first().unwrap(), *narrow.first().unwrap());
    assert_ne!(w, n);
    assert_eq!((b.ta.multiplicity(0, w), b.ta.multiplicity(0, n)), (4, 6));
    // Narrow atoms have a single child; wide ones branch.
    assert_eq!(b.ta.transitions.iter().filter(|t| t.0 == n).count(), 1);
    assert!(b.ta.transitions.iter().filter(|t| t.0 == w).count() > 1);
}

#[test]
fn same_type_atoms_look_alike() {
    for (f, b) in [(small_tiling(), tiling()), (small_coxeter(), coxeter())] {
        let mapper = Mapper::new(&f.ball).unwrap();
        for level in f.tree.levels.iter().skip(1) {
            for atom in &level.atoms {
                let t = b.types.type_of(atom.id);
                let rep = f.tree.atom(b.types.representative[t as usize]);
                assert_eq!((atom.hooking(), atom.tip.len()), (rep.hooking(), rep.tip.len()));
                let tau = b.types.witness(atom.id);
                assert!(is_morphism(&mapper, &f.tree, rep, atom, tau).unwrap());
                // τ carries the tip of the representative onto the tip.
                let mut image: Vec<u32> = rep.tip.iter().map(|&v| mapper.apply(tau, v).unwrap().unwrap()).collect();
                image.sort_unstable();
                assert_eq!(image, atom.tip, "{}", atom.id);
            }
        }
    }
}

#[test]
fn geometric_equivalence_implies_a_morphism() {
    for f in [small_tiling(), small_coxeter()] {
        let mapper = Mapper::new(&f.ball).unwrap();
        for k in 1..f.tree.depth() {
            for a in &f.tree.level(k).atoms {
                assert!(check_geometric(&mapper, &f.tree, a.id, a.id, &Witness::identity()).unwrap().holds());
            }
        }
        let mut hits = 0;
        let atoms = &f.tree.level(1).atoms;
        for a in atoms {
            for b in atoms.iter().filter(|b| b.proximal.len() == a.proximal.len()) {
                for phi in mapper.candidates(a.proximal[0], b.proximal[0]).unwrap() {
                    if check_geometric(&mapper, &f.tree, a.id, b.id, &phi).unwrap().holds() {
                        hits += 1;
                        assert!(is_morphism(&mapper, &f.tree, a, b, &phi).unwrap(), "{} {}", a.id, b.id);
                    }
                }
            }
        }
        assert!(hits > 0);
    }
}

#[test]
fn codings_follow_the_tree() {
    for (f, b) in [(small_tiling(), tiling()), (small_coxeter(), coxeter())] {
        for level in &f.tree.levels {
            for atom in &level.atoms {
                let coding = b.rigid.coding(&f.tree, atom.id);
                assert_eq!(b.rigid.atom_of_coding(&f.tree, &coding), Some(atom.id));
                assert_eq!(b.ta.run(&coding), Ok(b.types.type_of(atom.id)));
            }
        }
    }
}

#[test]
fn gluing_automaton_structure() {
    for b in [tiling(), coxeter()] {
        let g = &b.gluing;
        // Deterministic: one target per (state, letter).
        assert!(g.transitions.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        // Every transition projects onto the type automaton on both sides.
        for &(from, (r, s), to) in &g.transitions {
            let (ta, tb) = g.states[from as usize].types;
            assert_eq!(g.states[to as usize].types, (b.ta.step(ta, r).unwrap(), b.ta.step(tb, s).unwrap()));
        }
        // The diagonal is a copy of the type automaton.
        let diag = g.diagonal();
        let types: BTreeSet<u32> = diag.iter().map(|d| d.1).collect();
        assert_eq!(types.len(), b.ta.states.len());
        let diag_state = |t: u32| diag.iter().find(|d| d.1 == t).unwrap().0;
        for &(from, s, to) in &b.ta.transitions {
            assert_eq!(g.step(diag_state(from), (s, s)), Some(diag_state(to)));
        }
        assert_eq!(g.states[g.initial as usize].types, (0, 0));
    }
}

#[test]
fn queries_agree_with_the_gluing_pairs() {
    for (f, b) in [(small_tiling(), tiling()), (small_coxeter(), coxeter())] {
        let k = f.tree.depth();
        let n = f.tree.level(k).atoms.len() as u32;
        let glued: Vec<BTreeSet<(u32, u32)>> = b.deltas.iter().map(|d| d.iter().copied().collect()).collect();
        let mut rejected = 0;
        for a in 0..n {
            for c in 0..n {
                let (pa, pc) = (f.tree.path(AtomId::new(k, a)), f.tree.path(AtomId::new(k, c)));
                let expected = (1..=k as usize).find(|&l| !glued[l].contains(&(pa[l].index, pc[l].index)));
                let u = Coding::finite(b.rigid.coding(&f.tree, pa[k as usize]));
                let v = Coding::finite(b.rigid.coding(&f.tree, pc[k as usize]));
                let got = run_gluing_query(&b.gluing, &u, &v).unwrap();
                match expected {
                    None => assert_eq!(got, Verdict::Accept),
                    Some(l) => {
                        rejected += 1;
                        assert_eq!(got, Verdict::Reject { level: l as u32 });
                    }
                }
                // Symmetry of the relation.
                assert_eq!(run_gluing_query(&b.gluing, &v, &u).unwrap() == Verdict::Accept, expected.is_none());
            }
        }
        assert!(rejected > 0);
    }
}

#[test]
fn coding_text_round_trips() {
    let symbols = &tiling().rigid.symbols;
    let ta = &tiling().ta;
    // A valid finite coding of length three and a periodic tail through a self-loop.
    let path: Vec<u32> = {
        let mut s = ta.initial;
        (0..3)
            .map(|_| {
                let &(_, sym, t) = ta.transitions.iter().find(|x| x.0 == s).unwrap();
                s = t;
                sym
            })
            .collect()
    };
    let c = Coding::finite(path.clone());
    assert_eq!(Coding::parse(&c.format(symbols), symbols).unwrap(), c);
    let loop_sym = ta.transitions.iter().find(|&&(f, _, t)| f == t).unwrap();
    let periodic = Coding { prefix: vec![ta.transitions.iter().find(|x| x.0 == 0 && x.2 == loop_sym.0).unwrap().1], period: vec![loop_sym.1] };
    let text = periodic.format(symbols);
    assert!(text.contains('['));
    assert_eq!(Coding::parse(&text, symbols).unwrap(), periodic);
    assert_eq!(run_gluing_query(&tiling().gluing, &periodic, &periodic).unwrap(), Verdict::Accept);
    assert_eq!(run_gluing_query(&tiling().gluing, &c, &c).unwrap(), Verdict::Accept);

    assert!(matches!(Coding::parse("nope", symbols), Err(TypeError::CodingInvalid(_))));
    assert!(matches!(Coding::parse(&format!("{}[", symbols[0]), symbols), Err(TypeError::CodingInvalid(_))));
    assert!(matches!(Coding::parse(&format!("{}[]", symbols[0]), symbols), Err(TypeError::CodingInvalid(_))));
    let short = Coding::finite(path[..2].to_vec());
    assert!(matches!(run_gluing_query(&tiling().gluing, &c, &short), Err(TypeError::CodingInvalid(_))));
    assert!(matches!(run_gluing_query(&tiling().gluing, &c, &periodic), Err(TypeError::CodingInvalid(_))));
}

#[test]
fn frontier_states_give_undetermined_verdicts() {
    let f = small_coxeter();
    let b = coxeter();
    let mut g = b.gluing.clone();
    g.closure = Closure::NonClosed { levels: g.new_per_level.len() as u32 };
    let k = f.tree.depth();
    let first_symbol = |t: u32| b.ta.transitions.iter().find(|tr| tr.0 == t).map(|tr| tr.1);
    // A state first seen on the deepest level, both of whose types can be extended.
    let frontier = (0..g.states.len() as u32).find(|&s| {
        let (ta, tb) = g.states[s as usize].types;
        g.is_frontier(s) && first_symbol(ta).is_some() && first_symbol(tb).is_some()
    });
    let Some(s) = frontier else {
        assert_eq!(g.new_per_level.last(), Some(&0));
        return;
    };
    let (a, c) = g.states[s as usize].representative;
    assert_eq!(a.level, k);
    let extend = |x: AtomId| {
        let mut coding = b.rigid.coding(&f.tree, x);
        coding.push(first_symbol(b.types.type_of(x)).unwrap());
        Coding::finite(coding)
    };
    assert_eq!(run_gluing_query(&g, &extend(a), &extend(c)).unwrap(), Verdict::Undetermined { level: k + 1 });
    g.closure = Closure::Closed { level: k };
    assert_eq!(run_gluing_query(&g, &extend(a), &extend(c)).unwrap(), Verdict::Reject { level: k + 1 });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn witnesses_form_a_group(x in 0u32..400, y in 0u32..400, z in 0u32..400, v in 0u32..400, i in 0usize..64, j in 0usize..64) {
        let f = small_tiling();
        let mapper = Mapper::new(&f.ball).unwrap();
        let small = f.ball.ball(3).count() as u32;
        let (x, y, z, v) = (x % small, y % small, z % small, v % small);
        let a = mapper.candidates(x, y).unwrap();
        let b = mapper.candidates(y, z).unwrap();
        let (a, b) = (&a[i % a.len()], &b[j % b.len()]);
        prop_assert_eq!(mapper.apply(a, x).unwrap(), Some(y));
        let id = Witness::identity();
        prop_assert_eq!(&mapper.compose(&id, a).unwrap(), a);
        prop_assert_eq!(&mapper.compose(a, &id).unwrap(), a);
        prop_assert_eq!(mapper.compose(a, &mapper.inverse(a).unwrap()).unwrap(), id.clone());
        prop_assert_eq!(mapper.compose(&mapper.inverse(a).unwrap(), a).unwrap(), id);
        let ba = mapper.compose(b, a).unwrap();
        prop_assert_eq!(mapper.apply(&ba, x).unwrap(), Some(z));
        let step = mapper.apply(a, v).unwrap().and_then(|w| mapper.apply(b, w).unwrap());
        if let (Some(s), Some(direct)) = (step, mapper.apply(&ba, v).unwrap()) {
            prop_assert_eq!(s, direct);
        }
    }
}
