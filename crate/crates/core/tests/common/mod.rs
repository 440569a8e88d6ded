#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::OnceLock;

use atomforge::atoms::{build_tree, AtomTree, TreeParams};
use atomforge::ball::delta::estimate_delta;
use atomforge::ball::{CayleyBall, Source, TilingSpec};
use atomforge::rewriting::{complete, Presentation};

pub fn group(gens: &str, invs: &str, rels: &[&str]) -> Source {
    let p = Presentation::new(gens, invs, rels).unwrap();
    Source::Group(complete(&p, 20_000, 40).unwrap())
}

pub fn coxeter() -> Source {
    let rels: Vec<String> = ["ab", "ac", "ad", "bc", "bd", "cd"].iter().map(|p| p.repeat(6)).collect();
    let refs: Vec<&str> = rels.iter().map(|s| s.as_str()).collect();
    group("abcd", "abcd", &refs)
}

pub fn tiling() -> Source {
    Source::Tiling(TilingSpec { p: 4, q: 5 })
}

/// The 3-regular tree as the Cayley graph of Z/2 * Z/2 * Z/2.
pub fn tree3() -> Source {
    group("abc", "abc", &["aa", "bb", "cc"])
}

pub struct Fixture {
    pub ball: CayleyBall,
    pub tree: AtomTree,
    pub delta: u32,
}

impl Fixture {
    pub fn build(source: &Source, radius: u32, levels: u32) -> Fixture {
        let ball = CayleyBall::build(source, radius).unwrap();
        let delta = estimate_delta(&ball, 300, 1, Some(5)).delta;
        let tree = build_tree(&ball, TreeParams { levels, delta }).unwrap();
        Fixture { ball, tree, delta }
    }
}

/// (4,5) tiling, R = 10, K = 3.
pub fn small_tiling() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| Fixture::build(&tiling(), 10, 3))
}

/// Coxeter group with all m_ij = 6, R = 10, K = 3.
pub fn small_coxeter() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| Fixture::build(&coxeter(), 10, 3))
}

pub fn small_tree3() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| Fixture::build(&tree3(), 10, 3))
}

/// Plain BFS inside the ball.
pub fn bfs(ball: &CayleyBall, sources: &[u32]) -> Vec<u32> {
    let mut d = vec![u32::MAX; ball.len()];
    let mut q = VecDeque::new();
    for &s in sources {
        d[s as usize] = 0;
        q.push_back(s);
    }
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
