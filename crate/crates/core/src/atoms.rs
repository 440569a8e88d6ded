//! The tree of atoms.
//!
//! Level k groups vertices by the restriction of f_x = d(·,x) − d(x₀,x) to
//! B_k. For depth(x) ≥ k every geodesic from B_k to x crosses S_k, so
//! f_x|B_k is determined by its values on S_k: f(p) = min_q d(p,q) + f(q).
//! Vertices of B_{k−1} form singleton classes (every neighbour of such an x
//! is strictly farther from any other candidate member), so they are
//! recorded as finite classes without computing anything.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::ball::sweep::{DistanceSweeper, UNKNOWN};
use crate::ball::{BallKind, CayleyBall, NONE};

/// Members at each of the last `FRONTIER_MARGIN` depths before the horizon
/// mark a class as infinite.
pub const FRONTIER_MARGIN: u32 = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("level {level} needs a ball of radius at least {needed}, got {radius}")]
    BallTooSmall { level: u32, needed: u32, radius: u32 },
    #[error("distance from vertex {source_vertex} to vertex {target} at level {level} is not certified")]
    UncertifiedDistance { level: u32, source_vertex: u32, target: u32 },
    #[error(
        "level {level}: class of vertex {vertex} reaches the horizon {horizon} but not at every one of the last {FRONTIER_MARGIN} depths; use a larger radius"
    )]
    Inconclusive { level: u32, vertex: u32, horizon: u32 },
    #[error("level {level}: atom {atom} is not contained in a single atom of level {parent_level}")]
    RefinementBroken { level: u32, atom: u32, parent_level: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomId {
    pub level: u32,
    pub index: u32,
}

impl AtomId {
    pub fn new(level: u32, index: u32) -> Self {
        AtomId { level, index }
    }
}

impl std::fmt::Display for AtomId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Atom {
    pub id: AtomId,
    /// Stored members (all of them up to the level horizon), ascending ids.
    pub members: Vec<u32>,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    pub tip: Vec<u32>,
    pub tip_depth: u32,
    /// f on B_k, indexed by vertex id.
    pub signature: Vec<i32>,
    pub nearest: Vec<u32>,
    pub visible: Vec<u32>,
    pub proximal: Vec<u32>,
}

impl Atom {
    /// d(B_k, a).
    pub fn hooking(&self) -> u32 {
        self.tip_depth - self.id.level
    }

    pub fn least_tip(&self) -> u32 {
        self.tip[0]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Level {
    pub k: u32,
    /// Members are stored up to this depth.
    pub horizon: u32,
    pub atoms: Vec<Atom>,
    /// Finite classes, singletons of B_{k−1} first.
    pub finite: Vec<Vec<u32>>,
    /// Atom index per vertex id below the horizon, `NONE` otherwise.
    pub class_of: Vec<u32>,
    /// d(p, q) for p, q ∈ B_k, row-major over ids.
    pub bk_dist: Vec<u16>,
}

impl Level {
    pub fn atom_of(&self, v: u32) -> Option<u32> {
        match self.class_of.get(v as usize) {
            Some(&c) if c != NONE => Some(c),
            _ => None,
        }
    }

    pub fn bk_len(&self) -> usize {
        (self.bk_dist.len() as f64).sqrt() as usize
    }

    pub fn bk_distance(&self, p: u32, q: u32) -> u32 {
        self.bk_dist[p as usize * self.bk_len() + q as usize] as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub levels: u32,
    /// Integer δ used by the proximal-point threshold 4δ + 2.
    pub delta: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomTree {
    pub params: TreeParams,
    pub radius: u32,
    pub levels: Vec<Level>,
    /// max d(B_k, a) over stored atoms.
    pub lambda_a: u32,
    /// Level at which the running maximum last increased.
    pub lambda_a_level: u32,
}

impl AtomTree {
    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.levels[id.level as usize].atoms[id.index as usize]
    }

    pub fn level(&self, k: u32) -> &Level {
        &self.levels[k as usize]
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    /// Ancestor of `id` at level `k ≤ id.level`.
    pub fn ancestor(&self, id: AtomId, k: u32) -> AtomId {
        let mut cur = id;
        while cur.level > k {
            let p = self.atom(cur).parent.expect("non-root atom has a parent");
            cur = AtomId::new(cur.level - 1, p);
        }
        cur
    }

    pub fn children(&self, id: AtomId) -> impl Iterator<Item = AtomId> + '_ {
        self.atom(id).children.iter().map(move |&c| AtomId::new(id.level + 1, c))
    }

    /// Atom ids along the root path of `id`, from level 0.
    pub fn path(&self, id: AtomId) -> Vec<AtomId> {
        (0..=id.level).map(|k| self.ancestor(id, k)).collect()
    }
}

/// Member horizon for level k: every d(q, x) with q ∈ S_k and depth(x) up to
/// the horizon must be exact.
pub fn horizon(ball: &CayleyBall, k: u32) -> u32 {
    let r = ball.radius();
    match ball.kind() {
        BallKind::Group(g) if g.stabilizer.is_none() && g.rs.is_certified((k + r) as usize) => r,
        BallKind::Explicit(_) if ball.is_complete() => r,
        _ => r.saturating_sub(k),
    }
}

/// Per-level partition of the ball: atoms (with member sets and signature
/// on S_k) and finite classes.
pub struct Partition {
    pub horizon: u32,
    /// (members, signature on S_k) per infinite class, ordered by least member.
    pub infinite: Vec<(Vec<u32>, Vec<i32>)>,
    pub finite: Vec<Vec<u32>>,
    /// d(q, p) for q ∈ S_k (rows) and p ∈ B_k (columns).
    pub sk_rows: Vec<Vec<u16>>,
}

pub fn partition_level(ball: &CayleyBall, sweeper: &mut DistanceSweeper, k: u32) -> Result<Partition, TreeError> {
    let h = horizon(ball, k);
    if h < k + FRONTIER_MARGIN && !ball.is_complete() {
        return Err(TreeError::BallTooSmall { level: k, needed: 2 * k + FRONTIER_MARGIN, radius: ball.radius() });
    }
    let lo = ball.sphere(k).start;
    let hi = ball.ball(h).end;
    let bk_end = ball.ball(k).end as usize;
    let count = (hi - lo) as usize;
    let mut cls = vec![0u32; count];
    // links[j][c] = (class before source j, f + k at source j)
    let mut links: Vec<Vec<(u32, u16)>> = Vec::new();
    let mut sk_rows = Vec::new();
    let mut ids: FxHashMap<(u32, u16), u32> = FxHashMap::default();
    for q in ball.sphere(k) {
        let row = sweeper.distances(ball, q, h);
        sk_rows.push(row[..bk_end].to_vec());
        ids.clear();
        let mut link = Vec::new();
        for (i, c) in cls.iter_mut().enumerate() {
            let v = lo + i as u32;
            let d = row[v as usize];
            if d == UNKNOWN {
                return Err(TreeError::UncertifiedDistance { level: k, source_vertex: q, target: v });
            }
            // f(q) + k ≥ 0 since |f(q)| ≤ d(x₀, q) = k.
            let d = (d as u32 + k - ball.depth(v)) as u16;
            let next = ids.len() as u32;
            let id = *ids.entry((*c, d)).or_insert_with(|| {
                link.push((*c, d));
                next
            });
            *c = id;
        }
        links.push(link);
    }
    let nclasses = links.last().map_or(1, |l| l.len());
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); nclasses];
    for (i, &c) in cls.iter().enumerate() {
        members[c as usize].push(lo + i as u32);
    }
    let mut infinite = Vec::new();
    let mut finite: Vec<Vec<u32>> = ball.ball(k.saturating_sub(1)).filter(|_| k > 0).map(|v| vec![v]).collect();
    for (c, m) in members.into_iter().enumerate() {
        let at = |d: u32| m.iter().any(|&v| ball.depth(v) == d);
        let deepest = ball.depth(*m.last().unwrap());
        let is_inf = !ball.is_complete() && (0..FRONTIER_MARGIN).all(|i| at(h - i));
        if is_inf {
            let mut sig = vec![0i32; ball.sphere(k).len()];
            let mut cur = c as u32;
            for j in (0..links.len()).rev() {
                let (prev, d) = links[j][cur as usize];
                sig[j] = d as i32 - k as i32;
                cur = prev;
            }
            infinite.push((m, sig));
        } else if ball.is_complete() || deepest + FRONTIER_MARGIN <= h {
            finite.push(m);
        } else {
            return Err(TreeError::Inconclusive { level: k, vertex: m[0], horizon: h });
        }
    }
    infinite.sort_by_key(|(m, _)| m[0]);
    Ok(Partition { horizon: h, infinite, finite, sk_rows })
}

/// Extends a signature from S_k to B_k.
fn extend_signature(ball: &CayleyBall, k: u32, sk_rows: &[Vec<u16>], sk_sig: &[i32]) -> Vec<i32> {
    let bk_end = ball.ball(k).end as usize;
    (0..bk_end)
        .map(|p| sk_rows.iter().zip(sk_sig).map(|(row, &f)| row[p] as i32 + f).min().unwrap_or(0))
        .collect()
}

/// Nearest, visible and proximal points of an atom from its signature on B_k.
pub fn boundary_sets(ball: &CayleyBall, k: u32, sig: &[i32], bk_dist: &[u16], delta: u32) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let n = sig.len();
    let min = *sig.iter().min().unwrap();
    let nearest: Vec<u32> = (0..n as u32).filter(|&p| sig[p as usize] == min).collect();
    let visible: Vec<u32> = (0..n)
        .filter(|&p| (0..n).all(|q| q == p || bk_dist[p * n + q] as i32 + sig[q] != sig[p]))
        .map(|p| p as u32)
        .collect();
    // F_i: points of S_i reachable by a geodesic from x₀ whose j-th vertex
    // is within 4δ+2 of every j-th vertex of every geodesic [x₀, x].
    let c = 4 * delta as i32 + 2;
    let mut reach: Vec<u32> = vec![0];
    for i in 1..=k {
        let slice: Vec<usize> = ball.sphere(i).filter(|&w| sig[w as usize] == -(i as i32)).map(|w| w as usize).collect();
        let next: Vec<u32> = ball
            .sphere(i)
            .filter(|&z| ball.neighbors(z).any(|y| reach.binary_search(&y).is_ok()))
            .filter(|&z| slice.iter().all(|&w| bk_dist[z as usize * n + w] as i32 <= c))
            .collect();
        reach = next;
    }
    (nearest, visible, reach)
}

pub fn build_tree(ball: &CayleyBall, params: TreeParams) -> Result<AtomTree, TreeError> {
    let mut sweeper = DistanceSweeper::new(ball);
    let mut levels: Vec<Level> = Vec::new();
    let mut lambda_a = 0;
    let mut lambda_a_level = 0;
    for k in 0..=params.levels {
        let part = partition_level(ball, &mut sweeper, k)?;
        let bk_end = ball.ball(k).end as usize;
        let mut bk_dist = vec![0u16; bk_end * bk_end];
        for p in 0..bk_end as u32 {
            let row = sweeper.distances(ball, p, k);
            for q in 0..bk_end {
                if row[q] == UNKNOWN {
                    return Err(TreeError::UncertifiedDistance { level: k, source_vertex: p, target: q as u32 });
                }
                bk_dist[p as usize * bk_end + q] = row[q];
            }
        }
        let end = ball.ball(part.horizon).end as usize;
        let mut class_of = vec![NONE; end];
        let mut atoms = Vec::with_capacity(part.infinite.len());
        for (i, (members, sk_sig)) in part.infinite.into_iter().enumerate() {
            for &v in &members {
                class_of[v as usize] = i as u32;
            }
            let tip_depth = ball.depth(members[0]);
            let tip: Vec<u32> = members.iter().copied().take_while(|&v| ball.depth(v) == tip_depth).collect();
            let signature = extend_signature(ball, k, &part.sk_rows, &sk_sig);
            let (nearest, visible, proximal) = boundary_sets(ball, k, &signature, &bk_dist, params.delta);
            if tip_depth - k > lambda_a {
                lambda_a = tip_depth - k;
                lambda_a_level = k;
            }
            atoms.push(Atom {
                id: AtomId::new(k, i as u32),
                members,
                parent: None,
                children: Vec::new(),
                tip,
                tip_depth,
                signature,
                nearest,
                visible,
                proximal,
            });
        }
        if let Some(prev) = levels.last_mut() {
            for atom in atoms.iter_mut() {
                let parents: Vec<Option<u32>> = atom.members.iter().map(|&v| prev.atom_of(v)).collect();
                let p = parents[0];
                if p.is_none() || parents.iter().any(|&q| q != p) {
                    return Err(TreeError::RefinementBroken { level: k, atom: atom.id.index, parent_level: k - 1 });
                }
                let p = p.unwrap();
                atom.parent = Some(p);
                prev.atoms[p as usize].children.push(atom.id.index);
            }
        }
        levels.push(Level { k, horizon: part.horizon, atoms, finite: part.finite, class_of, bk_dist });
    }
    Ok(AtomTree { params, radius: ball.radius(), levels, lambda_a, lambda_a_level })
}
