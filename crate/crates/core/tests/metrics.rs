mod common;

use std::collections::BTreeSet;

use atomforge::atoms::AtomId;
use atomforge::metrics::{least_squares_slope, ExtDist, Metrics, RowKind};
use common::{bfs, small_coxeter, small_tiling, Fixture};
use proptest::prelude::*;

fn off_diagonal(pairs: &[(u32, u32)]) -> Vec<(u32, u32)> {
    pairs.iter().copied().filter(|(a, b)| a != b).collect()
}

/// d_Γ from `a` to every atom of its level: plain BFS from all stored
/// members, minimised over each target's stored members.
fn brute_row(f: &Fixture, a: AtomId) -> Vec<u32> {
    let row = bfs(&f.ball, &f.tree.atom(a).members);
    f.tree.level(a.level).atoms.iter().map(|b| b.members.iter().map(|&y| row[y as usize]).min().unwrap()).collect()
}

#[test]
fn d_gamma_matches_pairwise_bfs_on_the_first_levels() {
    for f in [small_tiling(), small_coxeter()] {
        let mut m = Metrics::new(&f.ball, &f.tree);
        for k in 0..=1 {
            let n = f.tree.level(k).atoms.len() as u32;
            for a in 0..n {
                let a = AtomId::new(k, a);
                let oracle = brute_row(f, a);
                let row: Vec<Option<u32>> = m.row(a, RowKind::Gamma, false).unwrap().into_iter().map(ExtDist::value).collect();
                let expected: Vec<Option<u32>> = oracle.into_iter().map(Some).collect();
                assert_eq!(row, expected, "row of {a}");
            }
        }
    }
}

#[test]
fn zero_lambda_glues_only_the_diagonal() {
    let f = small_tiling();
    let mut m = Metrics::new(&f.ball, &f.tree);
    for k in 0..=f.tree.depth() {
        let pairs = m.gluing_pairs(k, 0);
        assert!(off_diagonal(&pairs).is_empty());
        assert_eq!(pairs.len(), f.tree.level(k).atoms.len());
    }
}

#[test]
fn tiling_first_level_pairs_form_an_alternating_ten_cycle() {
    let f = small_tiling();
    let mut m = Metrics::new(&f.ball, &f.tree);
    let pairs = off_diagonal(&m.gluing_pairs(1, 1));
    assert_eq!(pairs.len(), 20);
    let level = f.tree.level(1);
    let shallow = |a: u32| level.atoms[a as usize].tip_depth == 1;
    for &(a, b) in &pairs {
        assert_ne!(shallow(a), shallow(b), "pair ({a}, {b}) does not alternate");
    }
    // Walk the cycle: every atom has two neighbours and the walk closes after ten steps.
    let nb = |a: u32| pairs.iter().filter(|p| p.0 == a).map(|p| p.1).collect::<Vec<_>>();
    assert!((0..10).all(|a| nb(a).len() == 2));
    let (mut prev, mut cur, mut seen) = (0, nb(0)[0], BTreeSet::from([0]));
    while cur != 0 {
        assert!(seen.insert(cur));
        let next = nb(cur).into_iter().find(|&x| x != prev).unwrap();
        (prev, cur) = (cur, next);
    }
    assert_eq!(seen.len(), 10);
}

#[test]
fn coxeter_first_level_pairs_are_the_tetrahedron_incidences() {
    let f = small_coxeter();
    let mut m = Metrics::new(&f.ball, &f.tree);
    let pairs = off_diagonal(&m.gluing_pairs(1, 1));
    let level = f.tree.level(1);
    let wide: Vec<u32> = (0..10).filter(|&a| level.atoms[a as usize].children.len() > 1).collect();
    let narrow: Vec<u32> = (0..10).filter(|&a| level.atoms[a as usize].children.len() == 1).collect();
    assert_eq!((wide.len(), narrow.len()), (4, 6));
    // Each unordered incidence appears in both orders.
    assert_eq!(pairs.len(), 24);
    for &(a, b) in &pairs {
        assert!(pairs.contains(&(b, a)));
        assert_ne!(wide.contains(&a), wide.contains(&b), "({a}, {b}) is not wide/narrow");
    }
    // Narrow atoms are edge midpoints: two wide neighbours each, and every
    // pair of wide atoms shares exactly one narrow atom.
    let wide_of = |n: u32| pairs.iter().filter(|p| p.0 == n).map(|p| p.1).collect::<BTreeSet<_>>();
    let mut edges = BTreeSet::new();
    for &n in &narrow {
        let w = wide_of(n);
        assert_eq!(w.len(), 2);
        assert!(edges.insert(w));
    }
    assert_eq!(edges.len(), 6);
}

#[test]
fn identical_atoms_have_zero_distances() {
    for f in [small_tiling(), small_coxeter()] {
        let mut m = Metrics::new(&f.ball, &f.tree);
        for k in 0..=f.tree.depth() {
            let tt = m.tip_table(k).unwrap();
            for a in 0..f.tree.level(k).atoms.len() as u32 {
                let id = AtomId::new(k, a);
                assert_eq!(m.d_gamma(id, id, false).unwrap(), 0);
                assert_eq!(m.d_b(id, id, false).unwrap().value(), Some(0));
                assert_eq!(m.d_h(id, id).unwrap(), 0);
                assert_eq!((tt.dist(a, a), tt.hausdorff(a, a) <= 2 * f.tree.lambda_a), (0, true));
                assert_eq!(m.d_f(id, id).unwrap().value(), Some(0));
                assert!(tt.product(a, a) >= k as f64);
                if f.tree.atom(id).tip.len() == 1 {
                    assert_eq!(tt.hausdorff(a, a), 0);
                }
            }
        }
    }
}

/// Tail distance at the first n with 2(n − k + 1) > m_n, by plain BFS.
fn brute_d_f(f: &Fixture, a: AtomId, b: AtomId) -> Option<u32> {
    let k = a.level;
    let tail = |id: AtomId, n: u32| -> Vec<u32> {
        f.tree.atom(id).members.iter().copied().filter(|&v| f.ball.depth(v) >= n).collect()
    };
    for n in k..=f.tree.level(k).horizon {
        let (ta, tb) = (tail(a, n), tail(b, n));
        if ta.is_empty() || tb.is_empty() {
            return None;
        }
        let row = bfs(&f.ball, &ta);
        let m = tb.iter().map(|&y| row[y as usize]).min().unwrap();
        if m != u32::MAX && 2 * (n - k + 1) > m {
            return Some(m);
        }
    }
    None
}

#[test]
fn d_f_matches_tail_bfs_on_the_first_levels() {
    for f in [small_tiling(), small_coxeter()] {
        let mut m = Metrics::new(&f.ball, &f.tree);
        for k in 1..=2 {
            let n = f.tree.level(k).atoms.len() as u32;
            for a in (0..n).step_by(3) {
                let a = AtomId::new(k, a);
                for b in 0..n {
                    let b = AtomId::new(k, b);
                    assert_eq!(m.d_f(a, b).unwrap().value(), brute_d_f(f, a, b), "{a} {b}");
                }
            }
        }
    }
}

#[test]
fn divergence_profile_of_an_atom_with_itself_is_flat() {
    let f = small_tiling();
    let mut m = Metrics::new(&f.ball, &f.tree);
    let u = AtomId::new(f.tree.depth(), 7);
    let p = m.divergence_profile(u, u, 1).unwrap();
    assert_eq!(p.onset, None);
    assert!(p.levels.iter().all(|l| l.d_gamma.value() == Some(0) && l.t_gamma.value() == Some(0)));
}

#[test]
fn coxeter_wide_narrow_pair_stays_glued() {
    let f = small_coxeter();
    let mut m = Metrics::new(&f.ball, &f.tree);
    let k = f.tree.depth();
    let narrow_root = |a: AtomId| f.tree.atom(f.tree.ancestor(a, 1)).children.len() == 1;
    let found = m.gluing_pairs(k, 1).into_iter().any(|(a, b)| {
        let (a, b) = (AtomId::new(k, a), AtomId::new(k, b));
        narrow_root(a) && !narrow_root(b) && {
            let p = m.divergence_profile(a, b, 1).unwrap();
            p.levels.iter().all(|l| l.d_gamma.value().is_some_and(|d| d <= 1))
        }
    });
    assert!(found, "no wide/narrow coding pair stays within distance 1");
}

#[test]
fn slope_of_a_line_is_recovered() {
    let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 0.5 * i as f64 + 2.0)).collect();
    assert!((least_squares_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(least_squares_slope(&pts[..1]), None);
    assert_eq!(least_squares_slope(&[(1.0, 0.0), (1.0, 3.0)]), None);
}

fn sample(f: &Fixture, level: u32, a: usize, b: usize) -> (AtomId, AtomId) {
    let k = level % (f.tree.depth() + 1);
    let n = f.tree.level(k).atoms.len();
    (AtomId::new(k, (a % n) as u32), AtomId::new(k, (b % n) as u32))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_inequalities(level in 0u32..4, a in 0usize..10_000, b in 0usize..10_000, coxeter in any::<bool>()) {
        let f = if coxeter { small_coxeter() } else { small_tiling() };
        let (a, b) = sample(f, level, a, b);
        let mut m = Metrics::new(&f.ball, &f.tree);
        let la = f.tree.lambda_a;
        let delta = f.delta;
        let g = m.d_gamma(a, b, false);
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        // Certification depends on the BFS side; the values may not.
        prop_assert_eq!(Some(g), m.row(b, RowKind::Gamma, false).unwrap()[a.index as usize].value());
        let h = m.d_h(a, b).unwrap();
        prop_assert!(h <= 2 * g && g <= h + 2 * la, "d_h {} d_gamma {}", h, g);
        if let ExtDist::Finite { value: db, certified: true } = m.d_b(a, b, false).unwrap() {
            prop_assert!(g <= db);
            if let ExtDist::Finite { value: df, certified: true } = m.d_f(a, b).unwrap() {
                prop_assert!(db <= df, "d_b {} d_f {}", db, df);
            }
        }
        let tt = m.tip_table(a.level).unwrap();
        let t = tt.dist(a.index, b.index);
        prop_assert!(g <= t && t <= 2 * g + 4 * delta + 2 * la, "d_gamma {} tips {}", g, t);
        let haus = tt.hausdorff(a.index, b.index);
        prop_assert!(t <= haus && haus <= t + 2 * la, "tips {} hausdorff {}", t, haus);
        prop_assert_eq!(haus, tt.hausdorff(b.index, a.index));
    }

    /// Along two coding paths the level distances never decrease.
    #[test]
    fn d_gamma_is_monotone_along_paths(a in 0usize..10_000, b in 0usize..10_000, coxeter in any::<bool>()) {
        let f = if coxeter { small_coxeter() } else { small_tiling() };
        let (a, b) = sample(f, f.tree.depth(), a, b);
        let mut m = Metrics::new(&f.ball, &f.tree);
        // Certified prefix of the trace.
        let trace: Vec<u32> = f.tree.path(a).into_iter().zip(f.tree.path(b))
            .map_while(|(x, y)| m.d_gamma(x, y, false).ok())
            .collect();
        prop_assert!(trace.windows(2).all(|w| w[0] <= w[1]), "{:?}", trace);
    }
}
