//! Estimating the slim-triangle constant δ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bfs::Bfs;
use super::CayleyBall;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    /// Largest slimness seen; a lower bound for δ.
    pub delta: u32,
    pub triangles: usize,
    /// Triangle corners were drawn from B_{max_depth}.
    pub max_depth: u32,
    pub seed: u64,
}

/// The geodesic from `x` to `y` obtained by stepping back from `y` through
/// least-id predecessors of a BFS from `x`. Listed from `x` to `y`.
pub fn geodesic(ball: &CayleyBall, bfs: &mut Bfs, x: u32, y: u32) -> Vec<u32> {
    let Some(d) = bfs.distance(ball, x, y) else {
        return Vec::new();
    };
    let mut path = vec![y];
    let mut cur = y;
    for k in (0..d).rev() {
        cur = ball.neighbors(cur).filter(|&w| bfs.get(w) == Some(k)).min().expect("BFS predecessor exists");
        path.push(cur);
    }
    path.reverse();
    path
}

/// Largest distance from a point of one side to the union of the other two.
pub fn slimness(ball: &CayleyBall, bfs: &mut Bfs, x: u32, y: u32, z: u32) -> u32 {
    let sides = [geodesic(ball, bfs, x, y), geodesic(ball, bfs, y, z), geodesic(ball, bfs, z, x)];
    let mut worst = 0;
    for i in 0..3 {
        let others: Vec<u32> = sides.iter().enumerate().filter(|&(j, _)| j != i).flat_map(|(_, s)| s.iter().copied()).collect();
        let mut pending: Vec<u32> = sides[i].clone();
        pending.sort_unstable();
        pending.dedup();
        let mut left = pending.len();
        let mut far = 0;
        bfs.run(ball, others, u32::MAX, |_| true, |v, d| {
            if pending.binary_search(&v).is_ok() {
                far = far.max(d);
                left -= 1;
            }
            left == 0
        });
        worst = worst.max(far);
    }
    worst
}

/// Samples `samples` triangles with corners in B_{max_depth} (default ⌊R/2⌋,
/// so every side length is exact).
pub fn estimate_delta(ball: &CayleyBall, samples: usize, seed: u64, max_depth: Option<u32>) -> DeltaEstimate {
    let max_depth = max_depth.unwrap_or(ball.radius() / 2).min(ball.radius() / 2);
    let pool = ball.ball(max_depth).end;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bfs = Bfs::new(ball.len());
    let mut delta = 0;
    for _ in 0..samples {
        let x = rng.gen_range(0..pool);
        let y = rng.gen_range(0..pool);
        let z = rng.gen_range(0..pool);
        delta = delta.max(slimness(ball, &mut bfs, x, y, z));
    }
    DeltaEstimate { delta, triangles: samples, max_depth, seed }
}

/// Every triangle with one corner at `corner` and the other two in
/// B_{max_depth}.
pub fn delta_from_corner(ball: &CayleyBall, corner: u32, max_depth: u32) -> DeltaEstimate {
    let pool = ball.ball(max_depth).end;
    let mut bfs = Bfs::new(ball.len());
    let mut delta = 0;
    let mut triangles = 0;
    for y in 0..pool {
        for z in y..pool {
            delta = delta.max(slimness(ball, &mut bfs, corner, y, z));
            triangles += 1;
        }
    }
    DeltaEstimate { delta, triangles, max_depth, seed: 0 }
}
