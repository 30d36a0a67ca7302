//! Dinic's maximum flow on integer capacities.

use std::collections::VecDeque;

const NONE: u32 = u32::MAX;

/// Flow network in adjacency-array form. Edges are stored in pairs; edge
/// `e ^ 1` is the reverse of `e`.
#[derive(Clone, Debug, Default)]
pub struct MaxFlow {
    head: Vec<u32>,
    next: Vec<u32>,
    to: Vec<u32>,
    cap: Vec<u64>,
}

impl MaxFlow {
    pub const INFINITE: u64 = u64::MAX / 4;

    pub fn new(nodes: usize) -> Self {
        Self {
            head: vec![NONE; nodes],
            ..Self::default()
        }
    }

    pub fn with_edge_capacity(nodes: usize, edges: usize) -> Self {
        let mut f = Self::new(nodes);
        f.next.reserve(2 * edges);
        f.to.reserve(2 * edges);
        f.cap.reserve(2 * edges);
        f
    }

    pub fn nodes(&self) -> usize {
        self.head.len()
    }

    pub fn edges(&self) -> usize {
        self.to.len() / 2
    }

    /// Adds `u → v` with capacity `c`; returns the edge id.
    pub fn add_edge(&mut self, u: usize, v: usize, c: u64) -> usize {
        let id = self.to.len();
        for (from, target, capacity) in [(u, v, c), (v, u, 0)] {
            self.to.push(target as u32);
            self.cap.push(capacity);
            self.next.push(self.head[from]);
            self.head[from] = self.to.len() as u32 - 1;
        }
        id
    }

    /// Flow currently carried by edge `id`.
    pub fn flow_on(&self, id: usize) -> u64 {
        self.cap[id ^ 1]
    }

    /// Residual capacity of edge `id`.
    pub fn residual(&self, id: usize) -> u64 {
        self.cap[id]
    }

    fn levels(&self, s: usize, t: usize, level: &mut [u32]) -> bool {
        level.fill(NONE);
        level[s] = 0;
        let mut queue = VecDeque::from([s as u32]);
        while let Some(u) = queue.pop_front() {
            let mut e = self.head[u as usize];
            while e != NONE {
                let v = self.to[e as usize];
                if self.cap[e as usize] > 0 && level[v as usize] == NONE {
                    level[v as usize] = level[u as usize] + 1;
                    queue.push_back(v);
                }
                e = self.next[e as usize];
            }
        }
        level[t] != NONE
    }

    /// Maximum `s → t` flow. Augments the stored residual network, so a
    /// second call returns only additional flow (zero).
    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        assert!(s != t, "source equals sink");
        let n = self.nodes();
        let mut level = vec![NONE; n];
        let mut iter = vec![NONE; n];
        let mut total = 0u64;
        // stack of (node, edge used to reach it)
        let mut path: Vec<u32> = Vec::new();
        while self.levels(s, t, &mut level) {
            iter.copy_from_slice(&self.head);
            loop {
                // iterative DFS for one blocking-flow augmenting path
                path.clear();
                let mut u = s;
                let found = loop {
                    if u == t {
                        break true;
                    }
                    let mut advanced = false;
                    while iter[u] != NONE {
                        let e = iter[u] as usize;
                        let v = self.to[e] as usize;
                        if self.cap[e] > 0 && level[v] == level[u] + 1 {
                            path.push(e as u32);
                            u = v;
                            advanced = true;
                            break;
                        }
                        iter[u] = self.next[e];
                    }
                    if advanced {
                        continue;
                    }
                    // dead end: retreat and prune
                    level[u] = NONE;
                    match path.pop() {
                        None => break false,
                        Some(e) => {
                            u = self.to[e as usize ^ 1] as usize;
                            iter[u] = self.next[e as usize];
                        }
                    }
                };
                if !found {
                    break;
                }
                let push = path.iter().map(|&e| self.cap[e as usize]).min().unwrap_or(0);
                for &e in &path {
                    self.cap[e as usize] -= push;
                    self.cap[e as usize ^ 1] += push;
                }
                total += push;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn textbook_network() {
        // CLRS figure 26.1: max flow 23
        let mut f = MaxFlow::new(6);
        for (u, v, c) in [
            (0, 1, 16),
            (0, 2, 13),
            (1, 3, 12),
            (2, 1, 4),
            (2, 4, 14),
            (3, 2, 9),
            (3, 5, 20),
            (4, 3, 7),
            (4, 5, 4),
        ] {
            f.add_edge(u, v, c);
        }
        assert_eq!(f.max_flow(0, 5), 23);
        assert_eq!(f.max_flow(0, 5), 0);
    }

    /// Min cut by enumerating all source-side sets.
    fn brute_min_cut(n: usize, edges: &[(usize, usize, u64)]) -> u64 {
        let mut best = u64::MAX;
        for mask in 0..(1u32 << n) {
            if mask & 1 == 0 || mask & (1 << (n - 1)) != 0 {
                continue;
            }
            let cut = edges
                .iter()
                .filter(|(u, v, _)| mask & (1 << u) != 0 && mask & (1 << v) == 0)
                .map(|e| e.2)
                .sum();
            best = best.min(cut);
        }
        best
    }

    #[test]
    fn matches_min_cut_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.random_range(2..=8);
            let m = rng.random_range(0..=20);
            let edges: Vec<(usize, usize, u64)> = (0..m)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..50)))
                .filter(|(u, v, _)| u != v)
                .collect();
            let mut f = MaxFlow::new(n);
            for &(u, v, c) in &edges {
                f.add_edge(u, v, c);
            }
            assert_eq!(f.max_flow(0, n - 1), brute_min_cut(n, &edges));
        }
    }
}
