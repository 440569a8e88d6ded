//! Reusable breadth-first search over a ball.

use super::CayleyBall;

/// BFS scratch space; stamps make restarting O(visited) instead of O(n).
pub struct Bfs {
    dist: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<u32>,
}

impl Bfs {
    pub fn new(n: usize) -> Self {
        Bfs { dist: vec![0; n], stamp: vec![0; n], epoch: 0, queue: Vec::new() }
    }

    fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.queue.clear();
    }

    #[inline]
    pub fn get(&self, v: u32) -> Option<u32> {
        (self.stamp[v as usize] == self.epoch).then(|| self.dist[v as usize])
    }

    #[inline]
    fn visit(&mut self, v: u32, d: u32) -> bool {
        if self.stamp[v as usize] == self.epoch {
            return false;
        }
        self.stamp[v as usize] = self.epoch;
        self.dist[v as usize] = d;
        self.queue.push(v);
        true
    }

    /// Multi-source BFS through vertices accepted by `allowed`, up to distance
    /// `max_dist`. `visit` sees each reached vertex once in BFS order and may
    /// return `true` to stop early. Returns the vertices reached, in order.
    pub fn run(
        &mut self,
        ball: &CayleyBall,
        sources: impl IntoIterator<Item = u32>,
        max_dist: u32,
        allowed: impl Fn(u32) -> bool,
        mut visit: impl FnMut(u32, u32) -> bool,
    ) -> &[u32] {
        self.reset();
        for s in sources {
            if allowed(s) {
                self.visit(s, 0);
            }
        }
        let mut head = 0;
        let mut stop = false;
        for i in 0..self.queue.len() {
            let v = self.queue[i];
            if visit(v, 0) {
                stop = true;
                break;
            }
        }
        while !stop && head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            let d = self.dist[v as usize];
            if d >= max_dist {
                continue;
            }
            for &w in ball.neighbor_slots(v) {
                if w == super::NONE || !allowed(w) {
                    continue;
                }
                if self.visit(w, d + 1) && visit(w, d + 1) {
                    stop = true;
                    break;
                }
            }
        }
        &self.queue
    }

    /// Distances from `sources` to every vertex in the ball.
    pub fn full(&mut self, ball: &CayleyBall, sources: impl IntoIterator<Item = u32>) -> &[u32] {
        self.run(ball, sources, u32::MAX, |_| true, |_, _| false)
    }

    pub fn distance(&mut self, ball: &CayleyBall, x: u32, y: u32) -> Option<u32> {
        let mut found = None;
        self.run(ball, [x], u32::MAX, |_| true, |v, d| {
            if v == y {
                found = Some(d);
                true
            } else {
                false
            }
        });
        found
    }

    /// Distance between two vertex sets (through `allowed` vertices only).
    pub fn set_distance(
        &mut self,
        ball: &CayleyBall,
        from: &[u32],
        allowed: impl Fn(u32) -> bool,
        is_target: impl Fn(u32) -> bool,
    ) -> Option<u32> {
        let mut found = None;
        self.run(ball, from.iter().copied(), u32::MAX, allowed, |v, d| {
            if is_target(v) {
                found = Some(d);
                true
            } else {
                false
            }
        });
        found
    }
}
