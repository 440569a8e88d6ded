//! Cones, N-types and the finite-cone bound λ_∞.

use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{BallKind, CayleyBall, NONE};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConeError {
    #[error("truncation N = {0} leaves no typed vertex in the ball")]
    TruncationTooDeep(u32),
    #[error("a finite cone type reaches the ball frontier (vertex {0})")]
    FrontierUncertain(u32),
}

/// The cone C(p): vertices reached from `p` by paths moving away from x₀ at
/// every step. Membership is exact inside the ball. Sorted by id.
pub fn cone(ball: &CayleyBall, p: u32) -> Vec<u32> {
    let mut seen = BTreeSet::from([p]);
    let mut frontier = vec![p];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for v in frontier {
            let dv = ball.depth(v);
            for w in ball.neighbors(v) {
                if ball.depth(w) == dv + 1 && seen.insert(w) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    seen.into_iter().collect()
}

/// Whether `v` has a neighbour farther from x₀ (a forward edge).
pub fn has_children(ball: &CayleyBall, v: u32) -> bool {
    let dv = ball.depth(v);
    ball.neighbors(v).any(|w| ball.depth(w) == dv + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeStatus {
    Infinite,
    Finite,
    /// No member has typed children; the ball is too small to decide.
    Unknown,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeTypeTable {
    pub n: u32,
    /// Type per vertex, `NONE` when the N-profile reaches past the ball.
    pub type_of: Vec<u32>,
    /// Least vertex of each type.
    pub representative: Vec<u32>,
    /// Child-type sets, sorted.
    pub transitions: Vec<Vec<u32>>,
    pub status: Vec<ConeStatus>,
}

impl ConeTypeTable {
    pub fn len(&self) -> usize {
        self.representative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representative.is_empty()
    }

    pub fn is_infinite(&self, v: u32) -> Option<bool> {
        match self.type_of[v as usize] {
            NONE => None,
            t => match self.status[t as usize] {
                ConeStatus::Infinite => Some(true),
                ConeStatus::Finite => Some(false),
                ConeStatus::Unknown => None,
            },
        }
    }
}

fn typed_limit(ball: &CayleyBall, n: u32) -> Option<u32> {
    if ball.is_complete() {
        Some(ball.radius())
    } else {
        ball.radius().checked_sub(n)
    }
}

/// Truncated cone shapes for vertices of depth ≤ `limit`. Group balls record
/// which `z ∈ B_N` satisfy `depth(x·z) = depth(x) + |z|`, minimised over frame
/// rotations; graph files use a hash of the depth-N forward unfolding.
fn profiles(ball: &CayleyBall, n: u32, limit: u32) -> Vec<Vec<i32>> {
    let end = ball.ball(limit).end as usize;
    match ball.kind() {
        BallKind::Group(g) => {
            let m = g.rotations() as usize;
            let bn = ball.ball(n).end as usize;
            let mut fv = vec![NONE; bn];
            let mut fr = vec![0u8; bn];
            (0..end as u32)
                .map(|x| {
                    let dx = ball.depth(x) as i32;
                    let mut best: Option<Vec<i32>> = None;
                    for rho in 0..m {
                        fv[0] = x;
                        fr[0] = rho as u8;
                        let mut prof = Vec::with_capacity(bn);
                        prof.push(1);
                        for z in 1..bn {
                            let p = ball.parent[z] as usize;
                            let i = g.parent_step(z as u32) as usize;
                            let u = fv[p];
                            if u == NONE {
                                fv[z] = NONE;
                                prof.push(-1);
                                continue;
                            }
                            let (w, r) = g.step(u, (fr[p] as usize + i) % g.degree());
                            let (_, rp) = g.step(p as u32, i);
                            fv[z] = w;
                            fr[z] = ((r as usize + m - rp as usize) % m) as u8;
                            prof.push(if w == NONE { -1 } else { (ball.depth(w) as i32 - dx == ball.depth(z as u32) as i32) as i32 });
                        }
                        if best.as_ref().is_none_or(|b| prof < *b) {
                            best = Some(prof);
                        }
                    }
                    best.unwrap()
                })
                .collect()
        }
        BallKind::Explicit(_) => {
            let len = ball.len();
            let mut h = vec![0u64; len];
            for _ in 0..n {
                let mut next = vec![0u64; len];
                for v in 0..len as u32 {
                    let dv = ball.depth(v);
                    let mut kids: Vec<u64> = ball.neighbors(v).filter(|&w| ball.depth(w) == dv + 1).map(|w| h[w as usize]).collect();
                    kids.sort_unstable();
                    next[v as usize] = fxhash_slice(&kids);
                }
                h = next;
            }
            (0..end).map(|v| vec![(h[v] >> 32) as i32, h[v] as i32]).collect()
        }
    }
}

fn fxhash_slice(xs: &[u64]) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut hasher = rustc_hash::FxHasher::default();
    xs.len().hash(&mut hasher);
    xs.hash(&mut hasher);
    hasher.finish()
}

/// N-types of all vertices whose truncated profile fits in the ball.
pub fn cone_types(ball: &CayleyBall, n: u32) -> Result<ConeTypeTable, ConeError> {
    let n = n.max(1);
    let limit = typed_limit(ball, n).ok_or(ConeError::TruncationTooDeep(n))?;
    let profs = profiles(ball, n, limit);
    let mut ids: FxHashMap<&[i32], u32> = FxHashMap::default();
    let mut type_of = vec![NONE; ball.len()];
    let mut representative = Vec::new();
    for (v, prof) in profs.iter().enumerate() {
        let next = representative.len() as u32;
        let t = *ids.entry(prof.as_slice()).or_insert(next);
        if t == next {
            representative.push(v as u32);
        }
        type_of[v] = t;
    }
    let k = representative.len();
    let mut trans: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); k];
    let mut resolved = vec![false; k];
    let mut childless = vec![true; k];
    for v in 0..ball.len() as u32 {
        let t = type_of[v as usize];
        if t == NONE {
            continue;
        }
        let dv = ball.depth(v);
        let kids: Vec<u32> = ball.neighbors(v).filter(|&w| ball.depth(w) == dv + 1).collect();
        let open = !ball.is_complete() && dv == ball.radius();
        if !kids.is_empty() || open {
            childless[t as usize] = false;
        }
        if open || kids.iter().any(|&w| type_of[w as usize] == NONE) {
            continue;
        }
        resolved[t as usize] = true;
        trans[t as usize].extend(kids.iter().map(|&w| type_of[w as usize]));
    }
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..k).map(|_| graph.add_node(())).collect();
    for (t, set) in trans.iter().enumerate() {
        for &u in set {
            graph.add_edge(nodes[t], nodes[u as usize], ());
        }
    }
    let mut cyclic = vec![false; k];
    for scc in tarjan_scc(&graph) {
        let on_cycle = scc.len() > 1 || trans[scc[0].index()].contains(&(scc[0].index() as u32));
        if on_cycle {
            for node in scc {
                cyclic[node.index()] = true;
            }
        }
    }
    // Status by fixpoint: infinite if some child type is infinite or the
    // type is on a cycle; finite if resolved and all children finite.
    let mut status = vec![ConeStatus::Unknown; k];
    for t in 0..k {
        if cyclic[t] {
            status[t] = ConeStatus::Infinite;
        } else if childless[t] {
            status[t] = ConeStatus::Finite;
        }
    }
    loop {
        let mut changed = false;
        for t in 0..k {
            if status[t] != ConeStatus::Unknown || !resolved[t] {
                continue;
            }
            let kids: Vec<ConeStatus> = trans[t].iter().map(|&u| status[u as usize]).collect();
            let new = if kids.contains(&ConeStatus::Infinite) {
                ConeStatus::Infinite
            } else if kids.iter().all(|&s| s == ConeStatus::Finite) {
                ConeStatus::Finite
            } else {
                continue;
            };
            status[t] = new;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Ok(ConeTypeTable { n, type_of, representative, transitions: trans.into_iter().map(|s| s.into_iter().collect()).collect(), status })
}

/// Number of cone types for each truncation `1..=n_max`, all counted on the
/// vertices typed at `n_max`.
pub fn type_counts(ball: &CayleyBall, n_max: u32) -> Result<Vec<usize>, ConeError> {
    let limit = typed_limit(ball, n_max).ok_or(ConeError::TruncationTooDeep(n_max))?;
    Ok((1..=n_max)
        .map(|n| {
            let profs = profiles(ball, n, limit);
            profs.iter().collect::<BTreeSet<_>>().len()
        })
        .collect())
}

/// Smallest N whose type count agrees with those of N+1 and N+2 (counts
/// taken up to `n_max`); `n_max` if the count never settles.
pub fn stable_truncation(ball: &CayleyBall, n_max: u32) -> Result<u32, ConeError> {
    let counts = type_counts(ball, n_max)?;
    for (i, w) in counts.windows(3).enumerate() {
        if w[0] == w[1] && w[1] == w[2] {
            return Ok(i as u32 + 1);
        }
    }
    Ok(n_max)
}

/// Largest finite cone over vertices other than x₀ (0 if every cone is infinite).
pub fn lambda_infinity(ball: &CayleyBall, ct: &ConeTypeTable) -> Result<u32, ConeError> {
    let mut best = 0;
    for t in 0..ct.len() {
        if ct.status[t] != ConeStatus::Finite {
            continue;
        }
        let Some(v) = (0..ball.len() as u32).find(|&v| v != ball.basepoint() && ct.type_of[v as usize] == t as u32) else {
            continue;
        };
        let c = cone(ball, v);
        if !ball.is_complete() && c.iter().any(|&w| ball.depth(w) == ball.radius()) {
            return Err(ConeError::FrontierUncertain(v));
        }
        best = best.max(c.len() as u32);
    }
    Ok(best)
}
