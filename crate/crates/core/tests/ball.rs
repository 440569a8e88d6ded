use std::collections::VecDeque;

use atomforge::ball::bfs::Bfs;
use atomforge::ball::cones::{cone, cone_types, lambda_infinity, stable_truncation, type_counts, ConeStatus};
use atomforge::ball::delta::{delta_from_corner, estimate_delta, slimness};
use atomforge::ball::sweep::{DistanceSweeper, UNKNOWN};
use atomforge::ball::{CayleyBall, GraphFile, Source, TilingSpec};
use atomforge::rewriting::{complete, Presentation};
use proptest::prelude::*;

fn group(gens: &str, invs: &str, rels: &[&str]) -> Source {
    let p = Presentation::new(gens, invs, rels).unwrap();
    Source::Group(complete(&p, 20_000, 40).unwrap())
}

fn coxeter() -> Source {
    let rels: Vec<String> = ["ab", "ac", "ad", "bc", "bd", "cd"].iter().map(|p| p.repeat(6)).collect();
    let refs: Vec<&str> = rels.iter().map(|s| s.as_str()).collect();
    group("abcd", "abcd", &refs)
}

fn tiling() -> Source {
    Source::Tiling(TilingSpec { p: 4, q: 5 })
}

fn brute_bfs(ball: &CayleyBall, s: u32) -> Vec<u32> {
    let mut d = vec![u32::MAX; ball.len()];
    d[s as usize] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for w in ball.neighbors(v) {
            if d[w as usize] == u32::MAX {
                d[w as usize] = d[v as usize] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

fn sphere_sizes(ball: &CayleyBall) -> Vec<u32> {
    (0..=ball.radius()).map(|d| ball.sphere(d).len() as u32).collect()
}

/// Power-series coefficients of num/den.
fn series(num: &[i64], den: &[i64], terms: usize) -> Vec<i64> {
    let mut out = vec![0i64; terms];
    for n in 0..terms {
        let mut c = num.get(n).copied().unwrap_or(0);
        for k in 1..=n.min(den.len() - 1) {
            c -= den[k] * out[n - k];
        }
        out[n] = c / den[0];
    }
    out
}

#[test]
fn involution_ball_has_two_vertices() {
    let ball = CayleyBall::build(&group("a", "a", &["aa"]), 1).unwrap();
    assert_eq!(ball.len(), 2);
    assert_eq!(ball.edge_count(), 1);
    assert!(ball.is_complete());
    let ct = cone_types(&ball, 1).unwrap();
    assert_eq!(ct.len(), 2);
    let leaf = ct.type_of[1] as usize;
    assert_eq!(ct.status[leaf], ConeStatus::Finite);
    assert_eq!(cone(&ball, 1), vec![1]);
    assert_eq!(lambda_infinity(&ball, &ct).unwrap(), 1);
}

#[test]
fn tiling_spheres_follow_the_growth_recurrence() {
    let ball = CayleyBall::build(&tiling(), 9).unwrap();
    let s = sphere_sizes(&ball);
    assert_eq!(&s[..3], &[1, 5, 15]);
    for n in 3..s.len() {
        assert_eq!(s[n], 3 * s[n - 1] - s[n - 2], "sphere {n}");
    }
}

#[test]
fn coxeter_spheres_follow_the_growth_series() {
    let ball = CayleyBall::build(&coxeter(), 8).unwrap();
    let expect = series(&[1, 2, 2, 2, 2, 2, 1], &[1, -2, -2, -2, -2, -2, 3], 9);
    let got: Vec<i64> = sphere_sizes(&ball).into_iter().map(i64::from).collect();
    assert_eq!(got, expect);
    assert_eq!(got[1], 4);
}

#[test]
fn balls_are_graph_metric_balls() {
    for src in [tiling(), coxeter()] {
        let ball = CayleyBall::build(&src, 6).unwrap();
        let d = brute_bfs(&ball, 0);
        for v in 0..ball.len() as u32 {
            assert_eq!(d[v as usize], ball.depth(v));
            for w in ball.neighbors(v) {
                assert!(ball.neighbors(w).any(|u| u == v), "asymmetric edge");
                assert!(ball.depth(v).abs_diff(ball.depth(w)) <= 1);
            }
            if ball.depth(v) < ball.radius() {
                assert!(ball.neighbor_slots(v).iter().all(|&w| w != atomforge::ball::NONE));
            }
        }
        // Layers are sorted by name length, so ids follow depth.
        for v in 1..ball.len() as u32 {
            assert!(ball.depth(v - 1) <= ball.depth(v));
        }
    }
}

#[test]
fn coxeter_generators_are_two_apart() {
    let ball = CayleyBall::build(&coxeter(), 6).unwrap();
    let a = ball.find("a").unwrap();
    let b = ball.find("b").unwrap();
    assert_eq!(ball.dist(a, a).unwrap(), (0, true));
    assert_eq!(ball.dist(a, b).unwrap(), (2, true));
    let big = CayleyBall::build(&coxeter(), 10).unwrap();
    let d = brute_bfs(&big, big.find("a").unwrap());
    assert_eq!(d[big.find("b").unwrap() as usize], 2);
}

#[test]
fn frontier_distances_are_flagged_uncertain_for_graph_files() {
    let text = "basepoint 0\nv 0\nv 1\nv 2\nv 3\nv 4\nv 5\ne 0 1\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 0\n";
    let gf = GraphFile::parse(text).unwrap();
    let ball = CayleyBall::build(&Source::Graph(gf), 2).unwrap();
    assert!(!ball.is_complete());
    let ends: Vec<u32> = ball.sphere(2).collect();
    let (_, exact) = ball.dist(ends[0], ends[1]).unwrap();
    assert!(!exact);
}

#[test]
fn sweeps_agree_with_bfs_where_certified() {
    for (src, r, big_r) in [(tiling(), 6, 12), (coxeter(), 6, 10)] {
        let ball = CayleyBall::build(&src, r).unwrap();
        let big = CayleyBall::build(&src, big_r).unwrap();
        let g = ball.group().unwrap();
        let mut sw = DistanceSweeper::new(&ball);
        for q in ball.ball(3) {
            let row = sw.distances(&ball, q, r).to_vec();
            let qb = big.group().unwrap().locate(g.word(q)).unwrap().0;
            let truth = brute_bfs(&big, qb);
            for x in ball.ball(r) {
                let xb = big.group().unwrap().locate(g.word(x)).unwrap().0;
                let certified = ball.depth(q) + ball.depth(x) <= r;
                if row[x as usize] != UNKNOWN {
                    assert_eq!(row[x as usize] as u32, truth[xb as usize], "q={q} x={x}");
                } else {
                    assert!(!certified, "certified entry missing");
                }
            }
        }
    }
}

#[test]
fn cayley_sweeps_continue_past_the_ball_with_normal_forms() {
    let ball = CayleyBall::build(&coxeter(), 5).unwrap();
    let big = CayleyBall::build(&coxeter(), 10).unwrap();
    let mut sw = DistanceSweeper::new(&ball);
    let q = ball.sphere(3).start;
    let row = sw.distances(&ball, q, 5).to_vec();
    let qb = big.find(&ball.name(q)).unwrap();
    let truth = brute_bfs(&big, qb);
    for x in ball.ball(5) {
        assert_ne!(row[x as usize], UNKNOWN);
        assert_eq!(row[x as usize] as u32, truth[big.find(&ball.name(x)).unwrap() as usize]);
    }
}

#[test]
fn translations_are_isometries() {
    let ball = CayleyBall::build(&tiling(), 6).unwrap();
    let g = ball.group().unwrap();
    let t = g.word(ball.sphere(2).start).to_vec();
    let mut sw = DistanceSweeper::new(&ball);
    let img = sw.translate_all(&ball, &t, 3).to_vec();
    for x in ball.ball(3) {
        for y in ball.neighbors(x) {
            if ball.depth(y) <= 3 {
                let (a, b) = (img[x as usize], img[y as usize]);
                assert!(ball.neighbors(a).any(|w| w == b));
            }
        }
        assert_eq!(Some(img[x as usize]), g.translate(&t, x));
    }
}

#[test]
fn tiling_cones_of_first_sphere_grow() {
    let mut sizes = Vec::new();
    for r in 6..=10 {
        let ball = CayleyBall::build(&tiling(), r).unwrap();
        sizes.push(cone(&ball, 1).len());
    }
    assert!(sizes.windows(2).all(|w| w[1] > w[0]), "{sizes:?}");
    let ball = CayleyBall::build(&tiling(), 8).unwrap();
    assert_eq!(cone(&ball, 0).len(), ball.len());
}

#[test]
fn tiling_cone_type_count_stabilizes() {
    let ball = CayleyBall::build(&tiling(), 12).unwrap();
    let counts = type_counts(&ball, 6).unwrap();
    assert!((0..4).any(|i| counts[i] == counts[i + 1]), "{counts:?}");
    let n = stable_truncation(&ball, 6).unwrap();
    let ct = cone_types(&ball, n).unwrap();
    assert!(ct.status.iter().all(|&s| s == ConeStatus::Infinite));
    assert_eq!(lambda_infinity(&ball, &ct).unwrap(), 0);
}

#[test]
fn coxeter_first_sphere_cones_are_infinite() {
    let ball = CayleyBall::build(&coxeter(), 10).unwrap();
    let ct = cone_types(&ball, 4).unwrap();
    for v in ball.sphere(1) {
        assert_eq!(ct.is_infinite(v), Some(true));
    }
}

#[test]
fn infinite_dihedral_is_a_tree_line() {
    let ball = CayleyBall::build(&group("ab", "ab", &[]), 8).unwrap();
    assert_eq!(ball.len(), 17);
    let ct = cone_types(&ball, 2).unwrap();
    assert_eq!(lambda_infinity(&ball, &ct).unwrap(), 0);
    assert_eq!(estimate_delta(&ball, 200, 7, None).delta, 0);
}

#[test]
fn hexagon_delta_matches_exhaustive_oracle() {
    let text = "basepoint 0\nv 0\nv 1\nv 2\nv 3\nv 4\nv 5\ne 0 1\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 0\n";
    let ball = CayleyBall::build(&Source::Graph(GraphFile::parse(text).unwrap()), 3).unwrap();
    assert!(ball.is_complete());
    // Oracle: distances on the cycle, every geodesic choice.
    let cyc = |a: i32, b: i32| ((a - b).rem_euclid(6)).min((b - a).rem_euclid(6));
    let geodesics = |a: i32, b: i32| -> Vec<Vec<i32>> {
        let d = cyc(a, b);
        let mut out = Vec::new();
        for dir in [1, -1] {
            let path: Vec<i32> = (0..=d).map(|k| (a + dir * k).rem_euclid(6)).collect();
            if *path.last().unwrap() == b && !out.contains(&path) {
                out.push(path);
            }
        }
        out
    };
    let mut oracle = 0;
    for x in 0..6 {
        for y in 0..6 {
            for z in 0..6 {
                for s1 in geodesics(x, y) {
                    for s2 in geodesics(y, z) {
                        for s3 in geodesics(z, x) {
                            let sides = [&s1, &s2, &s3];
                            for i in 0..3 {
                                for &p in sides[i] {
                                    let near = (0..3).filter(|&j| j != i).flat_map(|j| sides[j].iter()).map(|&q| cyc(p, q)).min().unwrap();
                                    oracle = oracle.max(near);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut bfs = Bfs::new(ball.len());
    let mut ours = 0;
    for x in 0..6 {
        for y in 0..6 {
            for z in 0..6 {
                ours = ours.max(slimness(&ball, &mut bfs, x, y, z));
            }
        }
    }
    assert!(ours >= 1);
    assert!(ours <= oracle as u32);
    assert_eq!(delta_from_corner(&ball, 0, 3).delta, ours);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cones_nest_along_geodesics(seed in 0u32..10_000) {
        let ball = CayleyBall::build(&tiling(), 7).unwrap();
        let p = 1 + seed % (ball.ball(3).end - 1);
        // q on a geodesic [x₀, p]: walk up the parent chain.
        let q = ball.parent(p).unwrap();
        let cq = cone(&ball, q);
        for y in cone(&ball, p) {
            prop_assert!(cq.binary_search(&y).is_ok());
        }
    }

    #[test]
    fn spheres_partition_the_ball(r in 1u32..6) {
        let ball = CayleyBall::build(&coxeter(), r).unwrap();
        let total: usize = (0..=r).map(|d| ball.sphere(d).len()).sum();
        prop_assert_eq!(total, ball.len());
    }
}
