//! Finite balls of Γ around the basepoint x₀.
//!
//! Group balls store, for every vertex, the shortlex normal form of its
//! canonical representative and a neighbour table with frame rotations:
//! `nbr[v][i] = (w, r)` means `rep(v)·step_i = rep(w)·s^r`, where `s` generates
//! the vertex stabiliser (trivial for Cayley graphs, `r = 0`). Left translation
//! by group elements is then available on whole sweeps through
//! [`sweep::DistanceSweeper`].

pub mod bfs;
pub mod cones;
pub mod delta;
pub mod source;
pub mod sweep;

use std::cmp::Ordering;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::rewriting::{self, RewritingError, RewritingSystem};
use crate::word::{shortlex_cmp, Alphabet, Symbol, Word, WordPacker};

pub use source::{GraphFile, SourceError, TilingSpec};

pub const NONE: u32 = u32::MAX;

/// Default cap on the number of stored vertices.
pub const DEFAULT_MAX_VERTICES: usize = 12_000_000;

#[derive(Debug, thiserror::Error)]
pub enum BallError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Rewriting(#[from] RewritingError),
    #[error("ball of radius {radius} needs more than {limit} vertices")]
    MemoryBudgetExceeded { radius: u32, limit: usize },
    #[error("radius must be between 1 and 1000")]
    BadRadius,
    #[error("vertex {0} is not in the ball")]
    VertexOutOfBall(u32),
    #[error("normal form of length {0} does not fit the vertex index")]
    WordTooLong(usize),
}

/// What the ball is built from.
#[derive(Clone, Debug)]
pub enum Source {
    /// Cayley graph of a completed presentation.
    Group(RewritingSystem),
    /// Vertex skeleton of a `{p,q}` tiling, realised as the coset graph of the
    /// rotation group by the vertex stabiliser ⟨g⟩.
    Tiling(TilingSpec),
    Graph(GraphFile),
}

impl Source {
    pub fn tiling(spec: TilingSpec) -> Self {
        Source::Tiling(spec)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupData {
    pub rs: RewritingSystem,
    /// `(s, m)`: vertices are cosets of ⟨s⟩ with `s` of order `m`.
    pub stabilizer: Option<(Symbol, u8)>,
    pub steps: Vec<Word>,
    /// Symbol permutations that are group automorphisms preserving the
    /// stabiliser; they act on the ball as graph automorphisms fixing x₀.
    pub symmetries: Vec<Vec<Symbol>>,
    packer: WordPacker,
    word_start: Vec<u32>,
    words: Vec<Symbol>,
    index: FxHashMap<u128, u32>,
    /// `nbr[v * deg + i]`, `NONE` outside the ball.
    nbr: Vec<u32>,
    rot: Vec<u8>,
    parent_step: Vec<u8>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplicitData {
    pub names: Vec<String>,
    pub labels: Vec<String>,
    adj_start: Vec<u32>,
    adj: Vec<u32>,
    adj_label: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BallKind {
    Group(GroupData),
    Explicit(ExplicitData),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CayleyBall {
    radius: u32,
    depth: Vec<u16>,
    layer_start: Vec<u32>,
    parent: Vec<u32>,
    /// True when no vertex of Γ lies outside the ball.
    complete: bool,
    kind: BallKind,
}

impl CayleyBall {
    pub fn build(source: &Source, radius: u32) -> Result<Self, BallError> {
        Self::build_with_limit(source, radius, DEFAULT_MAX_VERTICES)
    }

    pub fn build_with_limit(source: &Source, radius: u32, max_vertices: usize) -> Result<Self, BallError> {
        if radius == 0 || radius > 1000 {
            return Err(BallError::BadRadius);
        }
        match source {
            Source::Group(rs) => {
                let steps: Vec<Word> = (0..rs.alphabet().len() as Symbol).map(|s| vec![s]).collect();
                build_group(rs.clone(), None, steps, radius, max_vertices)
            }
            Source::Tiling(spec) => {
                let p = spec.presentation();
                let rs = rewriting::complete(&p, rewriting::DEFAULT_MAX_RULES, rewriting::DEFAULT_MAX_WORD_LEN)?;
                let g = rs.alphabet().symbol('g').expect("tiling alphabet has g");
                let h = rs.alphabet().symbol('h').expect("tiling alphabet has h");
                let q = spec.q as usize;
                let steps = (0..q)
                    .map(|i| {
                        let mut w = vec![g; i];
                        w.push(h);
                        rs.normal_form(&w)
                    })
                    .collect();
                build_group(rs, Some((g, q as u8)), steps, radius, max_vertices)
            }
            Source::Graph(gf) => build_explicit(gf, radius, max_vertices),
        }
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn basepoint(&self) -> u32 {
        0
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn kind(&self) -> &BallKind {
        &self.kind
    }

    pub fn group(&self) -> Option<&GroupData> {
        match &self.kind {
            BallKind::Group(g) => Some(g),
            BallKind::Explicit(_) => None,
        }
    }

    pub fn is_labeled(&self) -> bool {
        match &self.kind {
            BallKind::Group(_) => true,
            BallKind::Explicit(e) => !e.labels.is_empty(),
        }
    }

    #[inline]
    pub fn depth(&self, v: u32) -> u32 {
        self.depth[v as usize] as u32
    }

    pub fn depths(&self) -> &[u16] {
        &self.depth
    }

    /// Vertices at depth exactly `d`, as an id range.
    pub fn sphere(&self, d: u32) -> std::ops::Range<u32> {
        if d > self.radius {
            return 0..0;
        }
        self.layer_start[d as usize]..self.layer_start[d as usize + 1]
    }

    /// Vertices at depth ≤ `d`, as an id range.
    pub fn ball(&self, d: u32) -> std::ops::Range<u32> {
        0..self.layer_start[(d.min(self.radius) + 1) as usize]
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        match self.parent[v as usize] {
            NONE => None,
            p => Some(p),
        }
    }

    /// Neighbour slots of `v`; entries equal to [`NONE`] lie outside the ball.
    #[inline]
    pub fn neighbor_slots(&self, v: u32) -> &[u32] {
        match &self.kind {
            BallKind::Group(g) => {
                let deg = g.steps.len();
                &g.nbr[v as usize * deg..(v as usize + 1) * deg]
            }
            BallKind::Explicit(e) => &e.adj[e.adj_start[v as usize] as usize..e.adj_start[v as usize + 1] as usize],
        }
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.neighbor_slots(v).iter().copied().filter(|&w| w != NONE)
    }

    /// Neighbours with their edge labels (step index, or label id for graph files).
    pub fn labeled_neighbors(&self, v: u32) -> Vec<(u32, u32)> {
        match &self.kind {
            BallKind::Group(_) => self
                .neighbor_slots(v)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != NONE)
                .map(|(i, &w)| (w, i as u32))
                .collect(),
            BallKind::Explicit(e) => {
                let r = e.adj_start[v as usize] as usize..e.adj_start[v as usize + 1] as usize;
                e.adj[r.clone()].iter().zip(&e.adj_label[r]).map(|(&w, &l)| (w, l)).collect()
            }
        }
    }

    pub fn edge_count(&self) -> usize {
        (0..self.len() as u32).map(|v| self.neighbors(v).count()).sum::<usize>() / 2
    }

    pub fn name(&self, v: u32) -> String {
        match &self.kind {
            BallKind::Group(g) => g.rs.alphabet().display(g.word(v)).to_string(),
            BallKind::Explicit(e) => e.names[v as usize].clone(),
        }
    }

    pub fn find(&self, name: &str) -> Option<u32> {
        match &self.kind {
            BallKind::Group(g) => {
                let w = g.rs.alphabet().parse(if name == "ε" { "" } else { name }).ok()?;
                g.locate(&w).map(|(v, _)| v)
            }
            BallKind::Explicit(e) => e.names.iter().position(|n| n == name).map(|i| i as u32),
        }
    }

    /// Distance with a certainty flag. Group balls translate `y` by `x⁻¹`
    /// and read the depth, which is exact whenever the result is in the ball;
    /// otherwise (and for graph files) the distance is the BFS distance in
    /// the ball, exact when `depth(x) + depth(y) ≤ R`.
    pub fn dist(&self, x: u32, y: u32) -> Result<(u32, bool), BallError> {
        for v in [x, y] {
            if v as usize >= self.len() {
                return Err(BallError::VertexOutOfBall(v));
            }
        }
        if let BallKind::Group(g) = &self.kind {
            let t = g.rs.inverse(g.word(x));
            if let Some(z) = g.translate(&t, y) {
                return Ok((self.depth(z), true));
            }
        }
        let mut bfs = bfs::Bfs::new(self.len());
        let d = bfs.distance(self, x, y);
        let exact = self.complete || self.depth(x) + self.depth(y) <= self.radius;
        Ok((d.unwrap_or(u32::MAX), exact))
    }
}

impl GroupData {
    pub fn alphabet(&self) -> &Alphabet {
        self.rs.alphabet()
    }

    pub fn degree(&self) -> usize {
        self.steps.len()
    }

    /// Order of the frame rotation group (1 for Cayley graphs).
    pub fn rotations(&self) -> u8 {
        self.stabilizer.map_or(1, |(_, m)| m)
    }

    pub fn word(&self, v: u32) -> &[Symbol] {
        &self.words[self.word_start[v as usize] as usize..self.word_start[v as usize + 1] as usize]
    }

    #[inline]
    pub fn step(&self, v: u32, i: usize) -> (u32, u8) {
        let k = v as usize * self.steps.len() + i;
        (self.nbr[k], self.rot[k])
    }

    /// Step index used to reach `v` from its BFS parent.
    pub fn parent_step(&self, v: u32) -> u8 {
        self.parent_step[v as usize]
    }

    /// Canonical representative of the vertex containing the normal form `w`,
    /// with the rotation `r` such that `w = rep·s^r`.
    fn canonical(&self, w: Word) -> (Word, u8) {
        canonical(&self.rs, self.stabilizer, w)
    }

    /// Vertex and frame rotation of the group element with normal form `w`:
    /// `w = rep(v)·s^r`.
    pub fn locate(&self, w: &[Symbol]) -> Option<(u32, u8)> {
        let (c, r) = self.canonical(w.to_vec());
        let key = self.packer.pack(&c)?;
        self.index.get(&key).map(|&v| (v, r))
    }

    /// The vertex `t·v`, if it lies in the ball.
    pub fn translate(&self, t: &[Symbol], v: u32) -> Option<u32> {
        let w = self.rs.product(t, self.word(v));
        self.locate(&w).map(|(u, _)| u)
    }

    /// Applies a symbol permutation to a word and reduces it.
    pub fn apply_symmetry(&self, sigma: &[Symbol], w: &[Symbol]) -> Word {
        let img: Word = w.iter().map(|&s| sigma[s as usize]).collect();
        self.rs.normal_form(&img)
    }
}

fn canonical(rs: &RewritingSystem, stab: Option<(Symbol, u8)>, w: Word) -> (Word, u8) {
    let Some((s, m)) = stab else {
        return (w, 0);
    };
    let mut best = w.clone();
    let mut best_j = 0u8;
    let mut cur = w;
    let mut stack = Vec::new();
    for j in 1..m {
        rs.push_with(&mut cur, s, &mut stack);
        if shortlex_cmp(&cur, &best) == Ordering::Less {
            best.clone_from(&cur);
            best_j = j;
        }
    }
    (best, (m - best_j) % m)
}

fn build_group(
    rs: RewritingSystem,
    stabilizer: Option<(Symbol, u8)>,
    steps: Vec<Word>,
    radius: u32,
    max_vertices: usize,
) -> Result<CayleyBall, BallError> {
    let packer = WordPacker::new(rs.alphabet());
    let deg = steps.len();
    let symmetries = {
        let all = rs.symmetries();
        match stabilizer {
            None => all,
            Some((s, _)) => all.into_iter().filter(|p| p[s as usize] == s || p[s as usize] == rs.alphabet().inverse(s)).collect(),
        }
    };
    let mut g = GroupData {
        rs,
        stabilizer,
        steps,
        symmetries,
        packer,
        word_start: vec![0, 0],
        words: Vec::new(),
        index: FxHashMap::default(),
        nbr: Vec::new(),
        rot: Vec::new(),
        parent_step: vec![0],
    };
    let pack = |w: &[Symbol]| packer.pack(w).ok_or(BallError::WordTooLong(w.len()));
    g.index.insert(pack(&[])?, 0);
    let mut depth = vec![0u16];
    let mut parent = vec![NONE];
    let mut layer_start = vec![0u32, 1];
    let mut stack = Vec::new();
    let mut complete = true;
    for d in 0..=radius {
        let layer = layer_start[d as usize]..layer_start[d as usize + 1];
        // Neighbour words of this layer, resolved after the next layer is numbered.
        let mut pending: Vec<(u128, u8)> = Vec::with_capacity(layer.len() * deg);
        let mut fresh: FxHashMap<u128, (Word, u32, u8)> = FxHashMap::default();
        for v in layer.clone() {
            let base = g.word(v).to_vec();
            for (i, step) in g.steps.iter().enumerate() {
                let mut w = base.clone();
                for &s in step {
                    g.rs.push_with(&mut w, s, &mut stack);
                }
                let (c, r) = canonical(&g.rs, stabilizer, w);
                let key = pack(&c)?;
                if d < radius && !g.index.contains_key(&key) {
                    fresh.entry(key).or_insert((c, v, i as u8));
                }
                pending.push((key, r));
            }
        }
        if d < radius {
            let mut next: Vec<(u128, Word, u32, u8)> = fresh.into_iter().map(|(k, (w, p, i))| (k, w, p, i)).collect();
            next.sort_by(|a, b| shortlex_cmp(&a.1, &b.1));
            if depth.len() + next.len() > max_vertices {
                return Err(BallError::MemoryBudgetExceeded { radius, limit: max_vertices });
            }
            for (key, w, p, i) in next {
                let id = depth.len() as u32;
                g.index.insert(key, id);
                g.words.extend_from_slice(&w);
                g.word_start.push(g.words.len() as u32);
                depth.push(d as u16 + 1);
                parent.push(p);
                g.parent_step.push(i);
            }
            layer_start.push(depth.len() as u32);
        }
        for (key, r) in pending {
            match g.index.get(&key) {
                Some(&w) => {
                    g.nbr.push(w);
                    g.rot.push(r);
                }
                None => {
                    complete = false;
                    g.nbr.push(NONE);
                    g.rot.push(0);
                }
            }
        }
    }
    fix_parents(&mut g, &depth, &mut parent);
    Ok(CayleyBall { radius, depth, layer_start, parent, complete, kind: BallKind::Group(g) })
}

/// Parent of `v` := least-id neighbour one layer closer to x₀, with the least
/// step index reaching `v`.
fn fix_parents(g: &mut GroupData, depth: &[u16], parent: &mut [u32]) {
    let deg = g.steps.len();
    let n = depth.len() as u32;
    let mut best = vec![NONE; n as usize];
    let mut best_step = vec![0u8; n as usize];
    for u in 0..n {
        for i in 0..deg {
            let (w, _) = g.step(u, i);
            if w == NONE || depth[w as usize] != depth[u as usize] + 1 {
                continue;
            }
            if best[w as usize] == NONE {
                best[w as usize] = u;
                best_step[w as usize] = i as u8;
            }
        }
    }
    for v in 1..n as usize {
        parent[v] = best[v];
        g.parent_step[v] = best_step[v];
    }
}

fn build_explicit(gf: &GraphFile, radius: u32, max_vertices: usize) -> Result<CayleyBall, BallError> {
    let pos: FxHashMap<&str, usize> = gf.vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut labels: Vec<String> = gf.edges.iter().filter_map(|e| e.2.clone()).collect();
    labels.sort();
    labels.dedup();
    let mut raw: Vec<Vec<(usize, u32)>> = vec![Vec::new(); gf.vertices.len()];
    for (a, b, l) in &gf.edges {
        let lid = l.as_ref().map_or(NONE, |l| labels.binary_search(l).unwrap() as u32);
        raw[pos[a.as_str()]].push((pos[b.as_str()], lid));
        raw[pos[b.as_str()]].push((pos[a.as_str()], lid));
    }
    let name_cmp = |a: &str, b: &str| a.len().cmp(&b.len()).then_with(|| a.cmp(b));
    let base = pos[gf.basepoint.as_str()];
    let mut id = vec![NONE; gf.vertices.len()];
    id[base] = 0;
    let mut order = vec![base];
    let mut depth = vec![0u16];
    let mut layer_start = vec![0u32, 1];
    let mut complete = true;
    for d in 0..radius {
        let layer: Vec<usize> = order[layer_start[d as usize] as usize..].to_vec();
        let mut next: Vec<usize> = Vec::new();
        for &v in &layer {
            for &(w, _) in &raw[v] {
                if id[w] == NONE {
                    id[w] = NONE - 1;
                    next.push(w);
                }
            }
        }
        next.sort_by(|&a, &b| name_cmp(&gf.vertices[a], &gf.vertices[b]));
        if order.len() + next.len() > max_vertices {
            return Err(BallError::MemoryBudgetExceeded { radius, limit: max_vertices });
        }
        for w in next {
            id[w] = order.len() as u32;
            order.push(w);
            depth.push(d as u16 + 1);
        }
        layer_start.push(order.len() as u32);
    }
    let mut adj_start = vec![0u32];
    let mut adj = Vec::new();
    let mut adj_label = Vec::new();
    for &v in &order {
        let mut row: Vec<(u32, u32)> = raw[v].iter().filter(|(w, _)| id[*w] != NONE).map(|&(w, l)| (id[w], l)).collect();
        if row.len() < raw[v].len() {
            complete = false;
        }
        row.sort();
        for (w, l) in row {
            adj.push(w);
            adj_label.push(l);
        }
        adj_start.push(adj.len() as u32);
    }
    let mut parent = vec![NONE; order.len()];
    for v in 1..order.len() {
        let r = adj_start[v] as usize..adj_start[v + 1] as usize;
        parent[v] = adj[r].iter().copied().filter(|&w| depth[w as usize] + 1 == depth[v]).min().unwrap();
    }
    let names = order.iter().map(|&v| gf.vertices[v].clone()).collect();
    Ok(CayleyBall {
        radius,
        depth,
        layer_start,
        parent,
        complete,
        kind: BallKind::Explicit(ExplicitData { names, labels, adj_start, adj, adj_label }),
    })
}
