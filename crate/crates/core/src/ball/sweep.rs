//! Whole-ball distance rows from a single source.
//!
//! For group balls `d(q, x) = depth(q⁻¹·x)`. Walking the frame of `q⁻¹`
//! along the BFS tree gives `q⁻¹·x` for every `x` in id order, one table
//! lookup per vertex. Where the walk leaves the ball, Cayley graphs continue
//! with normal forms (`E(x) = E(parent)·label`), exact while the input word
//! stays within the certified length of the rewriting system.

use super::bfs::Bfs;
use super::{BallKind, CayleyBall, GroupData, NONE};
use crate::word::Symbol;

pub const UNKNOWN: u16 = u16::MAX;

pub struct DistanceSweeper {
    frame_v: Vec<u32>,
    frame_r: Vec<u8>,
    word_start: Vec<u32>,
    word_len: Vec<u8>,
    arena: Vec<Symbol>,
    out: Vec<u16>,
    stack: Vec<Symbol>,
    bfs: Bfs,
}

impl DistanceSweeper {
    pub fn new(ball: &CayleyBall) -> Self {
        let n = ball.len();
        DistanceSweeper {
            frame_v: vec![NONE; n],
            frame_r: vec![0; n],
            word_start: Vec::new(),
            word_len: Vec::new(),
            arena: Vec::new(),
            out: vec![UNKNOWN; n],
            stack: Vec::new(),
            bfs: Bfs::new(n),
        }
    }

    /// `d(q, x)` for every `x` with `depth(x) ≤ horizon` (indexed by vertex id;
    /// entries past the horizon are unspecified). Uncertified entries are
    /// [`UNKNOWN`].
    pub fn distances(&mut self, ball: &CayleyBall, q: u32, horizon: u32) -> &[u16] {
        let end = ball.ball(horizon).end as usize;
        match ball.kind() {
            BallKind::Group(g) => {
                let e = g.rs.inverse(g.word(q));
                self.walk(ball, g, &e, end, true, ball.depth(q));
            }
            BallKind::Explicit(_) => {
                self.out[..end].iter_mut().for_each(|d| *d = UNKNOWN);
                let dq = ball.depth(q);
                let complete = ball.is_complete();
                let r = ball.radius();
                let out = &mut self.out;
                self.bfs.run(ball, [q], u32::MAX, |_| true, |v, d| {
                    if (v as usize) < end && (complete || dq + ball.depth(v) <= r) {
                        out[v as usize] = d.min(UNKNOWN as u32 - 1) as u16;
                    }
                    false
                });
            }
        }
        &self.out[..end]
    }

    /// Vertex ids of `t·x` for every `x` with `depth(x) ≤ horizon`, `NONE`
    /// where the image leaves the ball. Group balls only.
    pub fn translate_all(&mut self, ball: &CayleyBall, t: &[Symbol], horizon: u32) -> &[u32] {
        let end = ball.ball(horizon).end as usize;
        let g = ball.group().expect("translation needs a group ball");
        let t = g.rs.normal_form(t);
        self.walk(ball, g, &t, end, false, 0);
        &self.frame_v[..end]
    }

    /// Frames of `e·rep(x)` for `x < end`; with `want_dist` also fills `out`
    /// with depths, using normal forms past the ball edge (Cayley graphs).
    fn walk(&mut self, ball: &CayleyBall, g: &GroupData, e: &[Symbol], end: usize, want_dist: bool, src_depth: u32) {
        let m = g.rotations() as usize;
        let cayley = g.stabilizer.is_none();
        let certified = |len: u32| g.rs.is_certified(len as usize);
        self.arena.clear();
        if want_dist && cayley {
            self.word_start.resize(ball.len(), 0);
            self.word_len.resize(ball.len(), 0);
        }
        let (v0, r0) = g.locate(e).unwrap_or((NONE, 0));
        self.frame_v[0] = v0;
        self.frame_r[0] = r0;
        if want_dist {
            self.out[0] = if v0 != NONE {
                ball.depth(v0) as u16
            } else if cayley && certified(src_depth) {
                self.word_start[0] = 0;
                self.word_len[0] = e.len() as u8;
                self.arena.extend_from_slice(e);
                e.len() as u16
            } else {
                UNKNOWN
            };
        }
        for x in 1..end {
            let p = ball.parent[x] as usize;
            let i = g.parent_step(x as u32) as usize;
            let u = self.frame_v[p];
            let (nv, nr) = if u != NONE {
                let (w, r) = g.step(u, (self.frame_r[p] as usize + i) % g.degree());
                let (_, rp) = g.step(p as u32, i);
                (w, ((r as usize + m - rp as usize) % m) as u8)
            } else {
                (NONE, 0)
            };
            self.frame_v[x] = nv;
            self.frame_r[x] = nr;
            if !want_dist {
                continue;
            }
            if nv != NONE {
                self.out[x] = ball.depth(nv) as u16;
                continue;
            }
            let input_len = src_depth + ball.depth(x as u32);
            if !cayley || !certified(input_len) || (u == NONE && self.out[p] == UNKNOWN) {
                self.out[x] = UNKNOWN;
                continue;
            }
            // Normal form of e·rep(x) from that of e·rep(parent).
            let mut w: Vec<Symbol> = if u != NONE {
                g.word(u).to_vec()
            } else {
                let s = self.word_start[p] as usize;
                self.arena[s..s + self.word_len[p] as usize].to_vec()
            };
            for &s in &g.steps[i] {
                g.rs.push_with(&mut w, s, &mut self.stack);
            }
            if w.len() > u8::MAX as usize {
                self.out[x] = UNKNOWN;
                continue;
            }
            self.out[x] = w.len() as u16;
            self.word_start[x] = self.arena.len() as u32;
            self.word_len[x] = w.len() as u8;
            self.arena.extend_from_slice(&w);
        }
    }
}
