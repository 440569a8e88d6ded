//! Graphs of atoms and of tips, horizontal slices and distortion reports.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atoms::{AtomId, AtomTree};
use crate::ball::bfs::Bfs;
use crate::ball::sweep::{DistanceSweeper, UNKNOWN};
use crate::ball::CayleyBall;
use crate::metrics::{MetricError, Metrics, TipTable};

/// Pair count up to which distortion reports enumerate every pair.
pub const EXHAUSTIVE_PAIRS: usize = 10_000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("level {0} is not in the graph")]
    LevelOutOfRange(u32),
    #[error("automatic threshold needs λ_∞, δ and λ_a")]
    MissingConstants,
    #[error("no pairs to sample")]
    SampleInfeasible,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Threshold {
    Override(u32),
    /// 2(λ_∞ + ⌈4δ⌉ + λ_a) + 7 for atoms, 2λ_e + ⌈4δ⌉ + 2λ_a for tips.
    Formula(u32),
}

impl Threshold {
    pub fn value(&self) -> u32 {
        match *self {
            Threshold::Override(v) | Threshold::Formula(v) => v,
        }
    }
}

/// Constants entering the automatic thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphConstants {
    pub lambda_inf: u32,
    pub delta: f64,
    pub lambda_a: u32,
}

impl GraphConstants {
    pub fn four_delta(&self) -> u32 {
        (4.0 * self.delta).ceil() as u32
    }

    pub fn atom_threshold(&self) -> u32 {
        2 * (self.lambda_inf + self.four_delta() + self.lambda_a) + 7
    }

    pub fn tip_threshold(&self, lambda_e: u32) -> u32 {
        2 * lambda_e + self.four_delta() + 2 * self.lambda_a
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedGraph {
    pub threshold: Threshold,
    pub on_tips: bool,
    /// Atom count per level.
    pub sizes: Vec<usize>,
    /// Parent of every non-root atom, per level (level 0 has none).
    pub parent: Vec<Vec<u32>>,
    /// Horizontal edges (a < b) per level, sorted.
    pub horizontal: Vec<Vec<(u32, u32)>>,
}

fn collect_parents(tree: &AtomTree) -> Vec<Vec<u32>> {
    tree.levels.iter().map(|l| l.atoms.iter().map(|a| a.parent.unwrap_or(u32::MAX)).collect()).collect()
}

/// Horizontal edges where d_Γ ≤ λ_e.
pub fn graph_of_atoms(metrics: &mut Metrics, threshold: Threshold) -> AugmentedGraph {
    let tree = metrics.tree;
    let horizontal = (0..tree.levels.len() as u32)
        .map(|k| {
            metrics
                .neighborhoods(k, threshold.value())
                .into_iter()
                .enumerate()
                .flat_map(|(a, nb)| nb.into_iter().filter(move |&b| b > a as u32).map(move |b| (a as u32, b)))
                .collect()
        })
        .collect();
    AugmentedGraph {
        threshold,
        on_tips: false,
        sizes: tree.levels.iter().map(|l| l.atoms.len()).collect(),
        parent: collect_parents(tree),
        horizontal,
    }
}

/// Horizontal edges where 𝒯d_Γ ≤ threshold.
pub fn graph_of_tips(tree: &AtomTree, tips: &[TipTable], threshold: Threshold) -> AugmentedGraph {
    let t = threshold.value();
    let horizontal = tips
        .iter()
        .map(|tt| {
            let n = tt.n as u32;
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| tt.dist(a, b) <= t).collect()
        })
        .collect();
    AugmentedGraph {
        threshold,
        on_tips: true,
        sizes: tree.levels.iter().map(|l| l.atoms.len()).collect(),
        parent: collect_parents(tree),
        horizontal,
    }
}

/// One level of horizontal edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub level: u32,
    pub vertices: usize,
    pub edges: Vec<(u32, u32)>,
}

impl Slice {
    pub fn degree(&self, v: u32) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn to_dot(&self, label: impl Fn(u32) -> String) -> String {
        let mut out = format!("graph slice_{} {{\n", self.level);
        for v in 0..self.vertices as u32 {
            out.push_str(&format!("  {v} [label=\"{}\"];\n", label(v)));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("  {a} -- {b};\n"));
        }
        out.push_str("}\n");
        out
    }
}

impl AugmentedGraph {
    pub fn levels(&self) -> u32 {
        self.sizes.len() as u32
    }

    pub fn horizontal_slice(&self, k: u32) -> Result<Slice, GraphError> {
        let edges = self.horizontal.get(k as usize).ok_or(GraphError::LevelOutOfRange(k))?;
        Ok(Slice { level: k, vertices: self.sizes[k as usize], edges: edges.clone() })
    }

    fn offset(&self, k: u32) -> usize {
        self.sizes[..k as usize].iter().sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn edge_count(&self) -> usize {
        self.vertex_count() - 1 + self.horizontal.iter().map(Vec::len).sum::<usize>()
    }

    fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for k in 1..self.levels() {
            let (o, po) = (self.offset(k), self.offset(k - 1));
            for (i, &p) in self.parent[k as usize].iter().enumerate() {
                adj[o + i].push((po + p as usize) as u32);
                adj[po + p as usize].push((o + i) as u32);
            }
        }
        for k in 0..self.levels() {
            let o = self.offset(k);
            for &(a, b) in &self.horizontal[k as usize] {
                adj[o + a as usize].push((o + b as usize) as u32);
                adj[o + b as usize].push((o + a as usize) as u32);
            }
        }
        adj
    }

    /// Graph distances from `a` to every vertex, indexed by level then atom.
    pub fn distances_from(&self, a: AtomId) -> Vec<Vec<u32>> {
        let adj = self.adjacency();
        let mut dist = vec![u32::MAX; adj.len()];
        let s = self.offset(a.level) + a.index as usize;
        dist[s] = 0;
        let mut queue = VecDeque::from([s as u32]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        (0..self.levels()).map(|k| dist[self.offset(k)..self.offset(k) + self.sizes[k as usize]].to_vec()).collect()
    }

    /// Violations of the spanning-tree and augmented-tree conditions.
    pub fn check_structure(&self) -> Vec<String> {
        let mut bad = Vec::new();
        if self.sizes.first() != Some(&1) {
            bad.push("level 0 must hold exactly the root".into());
        }
        for k in 1..self.levels() as usize {
            for (i, &p) in self.parent[k].iter().enumerate() {
                if p as usize >= self.sizes[k - 1] {
                    bad.push(format!("atom {k}:{i} has no parent"));
                }
            }
        }
        for k in 1..self.levels() as usize {
            for &(a, b) in &self.horizontal[k] {
                let (pa, pb) = (self.parent[k][a as usize], self.parent[k][b as usize]);
                let (x, y) = (pa.min(pb), pa.max(pb));
                if x != y && self.horizontal[k - 1].binary_search(&(x, y)).is_err() {
                    bad.push(format!("edge {k}:{a} – {k}:{b} has parents {x}, {y} neither equal nor adjacent"));
                }
            }
        }
        bad
    }

    /// Largest horizontal degree on each level.
    pub fn max_degrees(&self) -> Vec<usize> {
        self.horizontal
            .iter()
            .zip(&self.sizes)
            .map(|(edges, &n)| {
                let mut deg = vec![0usize; n];
                for &(a, b) in edges {
                    deg[a as usize] += 1;
                    deg[b as usize] += 1;
                }
                deg.into_iter().max().unwrap_or(0)
            })
            .collect()
    }

    /// Whether every horizontal edge of `self` is one of `other`.
    pub fn is_subgraph_of(&self, other: &AugmentedGraph) -> bool {
        self.sizes == other.sizes
            && self.horizontal.iter().zip(&other.horizontal).all(|(mine, theirs)| mine.iter().all(|e| theirs.binary_search(e).is_ok()))
    }
}

/// Largest distance from a vertex to the union of all stored tips: over
/// B_{K−1}, where every vertex has an atom of the next level to lean on, and
/// over the whole ball for information.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiDensity {
    pub scanned_radius: u32,
    pub max_inner: u32,
    pub witness_inner: u32,
    pub max_ball: u32,
}

pub fn quasi_density(ball: &CayleyBall, tree: &AtomTree) -> QuasiDensity {
    let tips: Vec<u32> = tree.levels.iter().flat_map(|l| l.atoms.iter().flat_map(|a| a.tip.iter().copied())).collect();
    let mut bfs = Bfs::new(ball.len());
    let inner = tree.depth().saturating_sub(1);
    let (mut max_inner, mut witness_inner, mut max_ball) = (0, ball.basepoint(), 0);
    bfs.run(ball, tips, u32::MAX, |_| true, |v, d| {
        max_ball = max_ball.max(d);
        if ball.depth(v) <= inner && d > max_inner {
            max_inner = d;
            witness_inner = v;
        }
        false
    });
    QuasiDensity { scanned_radius: inner, max_inner, witness_inner, max_ball }
}

/// Empirical quasi-isometry constants between two distance functions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub pairs: usize,
    pub exhaustive: bool,
    /// max d_graph / d_Γ and max d_Γ / d_graph over pairs with both positive.
    pub max_ratio_up: f64,
    pub max_ratio_down: f64,
    /// max |d_graph − d_Γ|.
    pub max_gap: u32,
}

impl Distortion {
    fn add(&mut self, dg: u32, dx: u32) {
        self.pairs += 1;
        self.max_gap = self.max_gap.max(dg.abs_diff(dx));
        if dg > 0 && dx > 0 {
            self.max_ratio_up = self.max_ratio_up.max(dg as f64 / dx as f64);
            self.max_ratio_down = self.max_ratio_down.max(dx as f64 / dg as f64);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QiReport {
    pub seed: u64,
    /// Graph of atoms against d_Γ between least tips.
    pub atoms: Distortion,
    /// 𝒯Haus against d_Γ between least tips, same-level pairs.
    pub tips: Distortion,
    /// Largest distance from a vertex of B_{K−1} to a tip.
    pub density_radius: u32,
}

pub fn qi_distortion_report(
    g: &AugmentedGraph,
    ball: &CayleyBall,
    tree: &AtomTree,
    tips: &[TipTable],
    samples: usize,
    seed: u64,
) -> Result<QiReport, GraphError> {
    let all: Vec<AtomId> = tree.levels.iter().flat_map(|l| l.atoms.iter().map(|a| a.id)).collect();
    if all.is_empty() {
        return Err(GraphError::SampleInfeasible);
    }
    let exhaustive = all.len() * all.len() <= EXHAUSTIVE_PAIRS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources: Vec<AtomId> = if exhaustive {
        all.clone()
    } else {
        let n = (EXHAUSTIVE_PAIRS / all.len()).max(1).min(samples.max(1));
        all.choose_multiple(&mut rng, n).copied().collect()
    };
    let horizon = tree.levels.iter().flat_map(|l| l.atoms.iter().map(|a| a.tip_depth)).max().unwrap_or(0);
    let mut sweeper = DistanceSweeper::new(ball);
    let mut atoms = Distortion { exhaustive, ..Default::default() };
    for &a in &sources {
        let dg = g.distances_from(a);
        let row = sweeper.distances(ball, tree.atom(a).least_tip(), horizon);
        for &b in &all {
            let dx = row[tree.atom(b).least_tip() as usize];
            if dx == UNKNOWN {
                return Err(MetricError::UncertifiedDistance(a, b).into());
            }
            atoms.add(dg[b.level as usize][b.index as usize], dx as u32);
        }
    }
    let mut tip_report = Distortion { exhaustive: true, ..Default::default() };
    for tt in tips {
        let level = tree.level(tt.k);
        for a in 0..tt.n as u32 {
            let row = sweeper.distances(ball, level.atoms[a as usize].least_tip(), horizon);
            for b in 0..tt.n as u32 {
                let dx = row[level.atoms[b as usize].least_tip() as usize];
                tip_report.add(tt.hausdorff(a, b), dx as u32);
            }
        }
    }
    let density_radius = quasi_density(ball, tree).max_inner;
    Ok(QiReport { seed, atoms, tips: tip_report, density_radius })
}

/// Per level k, the spread of (u_deep | v_deep) − (u_k | v_k) over sampled
/// pairs of level-`deep` atoms (the exponent of ⋎_k / β^{−(u|v)}).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhRow {
    pub k: u32,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

pub fn gh_distortion_report(tree: &AtomTree, tips: &[TipTable], deep: u32, samples: usize, seed: u64) -> Result<Vec<GhRow>, GraphError> {
    let top = tips.get(deep as usize).ok_or(GraphError::LevelOutOfRange(deep))?;
    let n = top.n as u32;
    if n == 0 {
        return Err(GraphError::SampleInfeasible);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(u32, u32)> = if (n as usize).pow(2) <= samples {
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect()
    } else {
        use rand::Rng;
        (0..samples).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect()
    };
    let mut rows = Vec::new();
    for k in 1..deep {
        let mut diffs: Vec<f64> = pairs
            .iter()
            .map(|&(a, b)| {
                let (ua, vb) = (tree.ancestor(AtomId::new(deep, a), k), tree.ancestor(AtomId::new(deep, b), k));
                top.product(a, b) - tips[k as usize].product(ua.index, vb.index)
            })
            .collect();
        diffs.sort_by(f64::total_cmp);
        rows.push(GhRow { k, min: diffs[0], median: diffs[diffs.len() / 2], max: *diffs.last().unwrap() });
    }
    Ok(rows)
}
