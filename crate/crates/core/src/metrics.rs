//! Distances between atoms of one level.
//!
//! Member-set distances are BFS distances in the ball. A value `d` reached at
//! a target `y` is certified when `depth(y) + d ≤ R`: any shorter path would
//! stay inside the ball and BFS would have found it.

use serde::{Deserialize, Serialize};

use crate::atoms::{AtomId, AtomTree};
use crate::ball::bfs::Bfs;
use crate::ball::sweep::{DistanceSweeper, UNKNOWN};
use crate::ball::CayleyBall;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("distance between atoms {0} and {1} is not certified by the ball")]
    UncertifiedDistance(AtomId, AtomId),
    #[error("atoms {0} and {1} are on different levels")]
    LevelMismatch(AtomId, AtomId),
    #[error("invalid coding prefix: {0}")]
    PrefixInvalid(String),
}

/// A distance that may be infinite. Infinity is structural when the source
/// component is enclosed in the ball, and a truncation artifact otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtDist {
    Finite { value: u32, certified: bool },
    Structural,
    Truncated,
}

impl ExtDist {
    pub fn value(self) -> Option<u32> {
        match self {
            ExtDist::Finite { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_certified(self) -> bool {
        matches!(self, ExtDist::Finite { certified: true, .. } | ExtDist::Structural)
    }
}

/// Which vertices a row BFS runs through and which count as members.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    /// d_Γ between member sets.
    Gamma,
    /// d_B: paths restricted to Γ − B_{k−1}.
    Horofunction,
    /// d_F: d_Γ between tails of the member sets far from B_k.
    Fine,
}

pub struct Metrics<'a> {
    pub ball: &'a CayleyBall,
    pub tree: &'a AtomTree,
    bfs: Bfs,
    sweeper: DistanceSweeper,
}

impl<'a> Metrics<'a> {
    pub fn new(ball: &'a CayleyBall, tree: &'a AtomTree) -> Self {
        Metrics { ball, tree, bfs: Bfs::new(ball.len()), sweeper: DistanceSweeper::new(ball) }
    }

    fn same_level(a: AtomId, b: AtomId) -> Result<(), MetricError> {
        if a.level != b.level {
            return Err(MetricError::LevelMismatch(a, b));
        }
        Ok(())
    }

    /// Atoms of level `k` within d_Γ ≤ `lambda` of each atom (itself included),
    /// sorted.
    pub fn neighborhoods(&mut self, k: u32, lambda: u32) -> Vec<Vec<u32>> {
        let level = self.tree.level(k);
        let ball = self.ball;
        (0..level.atoms.len())
            .map(|a| {
                let mut found = vec![a as u32];
                self.bfs.run(ball, level.atoms[a].members.iter().copied(), lambda, |_| true, |v, _| {
                    if let Some(b) = level.atom_of(v) {
                        found.push(b);
                    }
                    false
                });
                found.sort_unstable();
                found.dedup();
                found
            })
            .collect()
    }

    /// Δ_k: ordered pairs with d_Γ ≤ λ, diagonal included, sorted.
    pub fn gluing_pairs(&mut self, k: u32, lambda: u32) -> Vec<(u32, u32)> {
        let mut pairs: Vec<(u32, u32)> = self
            .neighborhoods(k, lambda)
            .into_iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.into_iter().map(move |b| (a as u32, b)))
            .collect();
        pairs.sort_unstable();
        pairs
    }

    /// Distances from atom `a` to every atom of its level.
    pub fn row(&mut self, a: AtomId, kind: RowKind, on_tips: bool) -> Result<Vec<ExtDist>, MetricError> {
        let k = a.level;
        let level = self.tree.level(k);
        let atom = &level.atoms[a.index as usize];
        Ok(match kind {
            RowKind::Fine => self.fine_row(a),
            _ if on_tips => {
                let target = |v: u32| level.atom_of(v).filter(|&b| level.atoms[b as usize].tip.binary_search(&v).is_ok());
                self.set_row(k, atom.tip.iter().copied(), target, if kind == RowKind::Horofunction { k } else { 0 })
            }
            _ => {
                let target = |v: u32| level.atom_of(v);
                self.set_row(k, atom.members.iter().copied(), target, if kind == RowKind::Horofunction { k } else { 0 })
            }
        })
    }

    /// One BFS from `sources` through vertices of depth ≥ `min_depth`; the
    /// first hit of each target atom gives its entry.
    fn set_row(
        &mut self,
        k: u32,
        sources: impl IntoIterator<Item = u32>,
        target: impl Fn(u32) -> Option<u32>,
        min_depth: u32,
    ) -> Vec<ExtDist> {
        let ball = self.ball;
        let r = ball.radius();
        let mut out = vec![None::<(u32, bool)>; self.tree.level(k).atoms.len()];
        let mut touched_frontier = false;
        self.bfs.run(ball, sources, u32::MAX, |w| ball.depth(w) >= min_depth, |v, d| {
            let dv = ball.depth(v);
            if dv == r && !ball.is_complete() {
                touched_frontier = true;
            }
            if let Some(b) = target(v) {
                let slot = &mut out[b as usize];
                if slot.is_none() {
                    *slot = Some((d, ball.is_complete() || dv + d <= r));
                }
            }
            false
        });
        out.into_iter()
            .map(|e| match e {
                Some((value, certified)) => ExtDist::Finite { value, certified },
                None if touched_frontier => ExtDist::Truncated,
                None => ExtDist::Structural,
            })
            .collect()
    }

    /// d_F as the distance between the tails a − B_n and b − B_n, taken at
    /// the first n with 2(n − k + 1) > m_n. A geodesic of length m_n between
    /// the tails then cannot enter B_{k−1}, so d_B ≤ m_n; larger n only
    /// increase the value. Entries whose tails run past the stored members
    /// are `Truncated`.
    fn fine_row(&mut self, a: AtomId) -> Vec<ExtDist> {
        let k = a.level;
        let level = self.tree.level(k);
        let ball = self.ball;
        let mut out: Vec<Option<ExtDist>> = vec![None; level.atoms.len()];
        for n in k..=level.horizon {
            let sources: Vec<u32> = level.atoms[a.index as usize].members.iter().copied().filter(|&v| ball.depth(v) >= n).collect();
            if sources.is_empty() || out.iter().all(Option::is_some) {
                break;
            }
            let target = |v: u32| level.atom_of(v).filter(|_| ball.depth(v) >= n);
            for (slot, e) in out.iter_mut().zip(self.set_row(k, sources, target, 0)) {
                if slot.is_some() {
                    continue;
                }
                match e {
                    ExtDist::Finite { value, .. } if 2 * (n - k + 1) > value => *slot = Some(e),
                    ExtDist::Structural => *slot = Some(e),
                    _ => {}
                }
            }
        }
        out.into_iter().map(|e| e.unwrap_or(ExtDist::Truncated)).collect()
    }

    fn pair(&mut self, a: AtomId, b: AtomId, kind: RowKind, on_tips: bool) -> Result<ExtDist, MetricError> {
        Self::same_level(a, b)?;
        Ok(self.row(a, kind, on_tips)?[b.index as usize])
    }

    /// d_Γ(a, b), or 𝒯d_Γ when `on_tips`.
    pub fn d_gamma(&mut self, a: AtomId, b: AtomId, on_tips: bool) -> Result<u32, MetricError> {
        match self.pair(a, b, RowKind::Gamma, on_tips)? {
            ExtDist::Finite { value, certified: true } => Ok(value),
            _ => Err(MetricError::UncertifiedDistance(a, b)),
        }
    }

    pub fn d_b(&mut self, a: AtomId, b: AtomId, on_tips: bool) -> Result<ExtDist, MetricError> {
        self.pair(a, b, RowKind::Horofunction, on_tips)
    }

    pub fn d_f(&mut self, a: AtomId, b: AtomId) -> Result<ExtDist, MetricError> {
        self.pair(a, b, RowKind::Fine, false)
    }

    /// Sup-norm of the signature difference on B_k.
    pub fn d_h(&self, a: AtomId, b: AtomId) -> Result<u32, MetricError> {
        Self::same_level(a, b)?;
        let (sa, sb) = (&self.tree.atom(a).signature, &self.tree.atom(b).signature);
        Ok(sa.iter().zip(sb).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0))
    }

    /// Tip distances for every pair of atoms of level `k`.
    pub fn tip_table(&mut self, k: u32) -> Result<TipTable, MetricError> {
        let level = self.tree.level(k);
        let n = level.atoms.len();
        let horizon = level.atoms.iter().map(|a| a.tip_depth).max().unwrap_or(0);
        let mut table = TipTable { k, n, dist: vec![u16::MAX; n * n], hausdorff: vec![0; n * n], product2: vec![0; n * n] };
        // far[b] = max over tips t of a of d(t, T(b)).
        for (a, atom) in level.atoms.iter().enumerate() {
            let mut far = vec![0u16; n];
            for &t in &atom.tip {
                let row = self.sweeper.distances(self.ball, t, horizon);
                for (b, other) in level.atoms.iter().enumerate() {
                    let mut best = u16::MAX;
                    let mut prod = 0u16;
                    for &s in &other.tip {
                        let d = row[s as usize];
                        if d == UNKNOWN {
                            return Err(MetricError::UncertifiedDistance(atom.id, other.id));
                        }
                        best = best.min(d);
                        let p = (self.ball.depth(t) + self.ball.depth(s)).saturating_sub(d as u32) as u16;
                        prod = prod.max(p);
                    }
                    let i = a * n + b;
                    table.dist[i] = table.dist[i].min(best);
                    table.product2[i] = table.product2[i].max(prod);
                    far[b] = far[b].max(best);
                }
            }
            for b in 0..n {
                table.hausdorff[a * n + b] = far[b];
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let h = table.hausdorff[a * n + b].max(table.hausdorff[b * n + a]);
                table.hausdorff[a * n + b] = h;
                table.hausdorff[b * n + a] = h;
            }
        }
        Ok(table)
    }

    /// Per-level traces along two coding paths ending at `u` and `v`.
    pub fn divergence_profile(&mut self, u: AtomId, v: AtomId, lambda: u32) -> Result<DivergenceProfile, MetricError> {
        Self::same_level(u, v)?;
        let (pu, pv) = (self.tree.path(u), self.tree.path(v));
        let mut levels = Vec::new();
        for (&a, &b) in pu.iter().zip(&pv) {
            let gamma = self.pair(a, b, RowKind::Gamma, false)?;
            let tips = self.pair(a, b, RowKind::Gamma, true)?;
            let tips_b = self.pair(a, b, RowKind::Horofunction, true)?;
            let product2 = tip_product2(self.ball, &mut self.sweeper, self.tree, a, b)?;
            levels.push(ProfileLevel { level: a.level, d_gamma: gamma, t_gamma: tips, t_b: tips_b, product2 });
        }
        let onset = levels.iter().find(|l| l.t_gamma.value().is_none_or(|d| d > lambda)).map(|l| l.level);
        let slope = onset.and_then(|j| {
            let pts: Vec<(f64, f64)> = levels
                .iter()
                .filter(|l| l.level > j)
                .filter_map(|l| l.t_b.value().filter(|&d| d > 0).map(|d| (l.level as f64, (d as f64).ln())))
                .collect();
            least_squares_slope(&pts).map(|s| (s, pts.len()))
        });
        Ok(DivergenceProfile { levels, onset, log_tb_slope: slope.map(|s| s.0), fitted_levels: slope.map_or(0, |s| s.1) })
    }
}

fn tip_product2(ball: &CayleyBall, sweeper: &mut DistanceSweeper, tree: &AtomTree, a: AtomId, b: AtomId) -> Result<u32, MetricError> {
    let (ta, tb) = (tree.atom(a), tree.atom(b));
    let horizon = ta.tip_depth.max(tb.tip_depth);
    let mut best = 0;
    for &x in &ta.tip {
        let row = sweeper.distances(ball, x, horizon);
        for &y in &tb.tip {
            let d = row[y as usize];
            if d == UNKNOWN {
                return Err(MetricError::UncertifiedDistance(a, b));
            }
            best = best.max(ball.depth(x) + ball.depth(y) - d as u32);
        }
    }
    Ok(best)
}

/// Slope of the least-squares line through `pts`; `None` with fewer than two
/// distinct abscissae.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Tip-based distances for all pairs of one level, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TipTable {
    pub k: u32,
    pub n: usize,
    /// 𝒯d_Γ.
    pub dist: Vec<u16>,
    /// 𝒯Haus.
    pub hausdorff: Vec<u16>,
    /// Twice the Gromov product (a|b), maximised over tip pairs.
    pub product2: Vec<u16>,
}

impl TipTable {
    pub fn dist(&self, a: u32, b: u32) -> u32 {
        self.dist[a as usize * self.n + b as usize] as u32
    }

    pub fn hausdorff(&self, a: u32, b: u32) -> u32 {
        self.hausdorff[a as usize * self.n + b as usize] as u32
    }

    pub fn product(&self, a: u32, b: u32) -> f64 {
        self.product2[a as usize * self.n + b as usize] as f64 / 2.0
    }

    /// β^{−(a|b)}.
    pub fn visual(&self, a: u32, b: u32, beta: f64) -> f64 {
        beta.powf(-self.product(a, b))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileLevel {
    pub level: u32,
    pub d_gamma: ExtDist,
    pub t_gamma: ExtDist,
    pub t_b: ExtDist,
    /// Twice the atom Gromov product.
    pub product2: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceProfile {
    pub levels: Vec<ProfileLevel>,
    /// First level with 𝒯d_Γ > λ.
    pub onset: Option<u32>,
    /// Least-squares slope of ln 𝒯d_B over the levels after the onset.
    pub log_tb_slope: Option<f64>,
    pub fitted_levels: usize,
}
