//! Hop-count metrics. Distances are precomputed by breadth-first search and
//! stored as a flat matrix; disconnected pairs read [`INFINITE`].

use std::collections::VecDeque;

/// Distance between vertices in different components.
pub const INFINITE: u32 = u32::MAX;

/// Anything with a distinguished finite point set and an integer metric.
pub trait MetricSpace {
    fn points(&self) -> usize;

    fn dist(&self, x: usize, y: usize) -> u32;

    /// Closed ball of radius `r` around `x`, ascending vertex order.
    fn ball(&self, x: usize, r: u32) -> Vec<usize> {
        (0..self.points()).filter(|&y| self.dist(x, y) <= r).collect()
    }

    /// Size of the largest closed ball of radius `r`.
    fn max_ball_size(&self, r: u32) -> usize {
        (0..self.points())
            .map(|x| self.ball(x, r).len())
            .max()
            .unwrap_or(0)
    }
}

/// Precomputed all-pairs hop distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metric {
    n: usize,
    dist: Vec<u32>,
}

impl Metric {
    pub fn from_adjacency(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let mut dist = vec![INFINITE; n * n];
        let mut queue = VecDeque::new();
        for start in 0..n {
            let row = &mut dist[start * n..(start + 1) * n];
            row[start] = 0;
            queue.clear();
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                let next = row[v] + 1;
                for &w in &adjacency[v] {
                    if row[w] == INFINITE {
                        row[w] = next;
                        queue.push_back(w);
                    }
                }
            }
        }
        Metric { n, dist }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self, x: usize, y: usize) -> u32 {
        self.dist[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[u32] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }
}

impl MetricSpace for Metric {
    fn points(&self) -> usize {
        self.n
    }

    fn dist(&self, x: usize, y: usize) -> u32 {
        Metric::dist(self, x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_adjacency(n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|v| {
                let mut adj = Vec::new();
                if v > 0 {
                    adj.push(v - 1);
                }
                if v + 1 < n {
                    adj.push(v + 1);
                }
                adj
            })
            .collect()
    }

    #[test]
    fn path_distances() {
        let m = Metric::from_adjacency(&path_adjacency(5));
        assert_eq!(m.dist(0, 4), 4);
        assert_eq!(m.dist(2, 2), 0);
        assert_eq!(m.dist(3, 1), 2);
    }

    #[test]
    fn symmetry_and_triangle() {
        let m = Metric::from_adjacency(&path_adjacency(7));
        for x in 0..7 {
            for y in 0..7 {
                assert_eq!(m.dist(x, y), m.dist(y, x));
                for z in 0..7 {
                    assert!(m.dist(x, z) <= m.dist(x, y) + m.dist(y, z));
                }
            }
        }
    }

    #[test]
    fn disconnected_is_infinite() {
        let adjacency = vec![vec![1], vec![0], vec![]];
        let m = Metric::from_adjacency(&adjacency);
        assert_eq!(m.dist(0, 2), INFINITE);
        assert_eq!(m.ball(0, 10), vec![0, 1]);
    }

    #[test]
    fn max_ball_size_on_path() {
        let m = Metric::from_adjacency(&path_adjacency(6));
        assert_eq!(m.max_ball_size(0), 1);
        assert_eq!(m.max_ball_size(1), 3);
        assert_eq!(m.max_ball_size(2), 5);
    }
}
