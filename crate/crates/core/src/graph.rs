//! Finite graphs with the directed-edge convention: an edge connecting `x`
//! to `y` is always paired with the reverse edge connecting `y` to `x`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Metric, MetricSpace, INFINITE};

/// A finite simple graph on vertices `0..n`, stored as directed edge pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    directed_edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    degree: Vec<usize>,
    k_max: usize,
    metric: Metric,
}

/// Wire format for graph files: undirected pairs, loader applies the
/// loop/duplicate rules of [`Graph::build`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from undirected pairs. Each surviving pair is emitted
    /// as two directed edges; loops and duplicates are dropped.
    pub fn build(n: usize, undirected_edges: &[(usize, usize)]) -> Result<Self> {
        let mut pairs = BTreeSet::new();
        for &(u, v) in undirected_edges {
            if u >= n {
                return Err(Error::VertexOutOfRange { index: u, n });
            }
            if v >= n {
                return Err(Error::VertexOutOfRange { index: v, n });
            }
            if u == v {
                continue;
            }
            pairs.insert((u.min(v), u.max(v)));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &pairs {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for neighbors in &mut adjacency {
            neighbors.sort_unstable();
        }
        let mut directed_edges = Vec::with_capacity(2 * pairs.len());
        for (u, neighbors) in adjacency.iter().enumerate() {
            for &v in neighbors {
                directed_edges.push((u, v));
            }
        }
        let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
        let k_max = degree.iter().copied().max().unwrap_or(0);
        let metric = Metric::from_adjacency(&adjacency);
        Ok(Graph {
            n,
            directed_edges,
            adjacency,
            degree,
            k_max,
            metric,
        })
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        Self::build(spec.n, &spec.edges)
    }

    pub fn to_spec(&self) -> GraphSpec {
        let edges = self
            .directed_edges
            .iter()
            .filter(|&&(u, v)| u < v)
            .copied()
            .collect();
        GraphSpec { n: self.n, edges }
    }

    /// Cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::SizeBelowMinimum { n, min: 3 });
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::build(n, &edges)
    }

    /// Path on `n >= 1` vertices.
    pub fn path(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::SizeBelowMinimum { n, min: 1 });
        }
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::build(n, &edges)
    }

    /// Complete graph on `n >= 1` vertices.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::SizeBelowMinimum { n, min: 1 });
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Self::build(n, &edges)
    }

    /// Hypercube graph on `2^d` vertices, `d >= 1`.
    pub fn hypercube(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::SizeBelowMinimum { n: d, min: 1 });
        }
        let n = 1usize << d;
        let mut edges = Vec::new();
        for u in 0..n {
            for bit in 0..d {
                let v = u ^ (1 << bit);
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        Self::build(n, &edges)
    }

    /// Gabber–Galil-style graph on the torus `Z_n x Z_n`: each vertex
    /// `(x, y)` is joined to the images of the four affine generators and
    /// their inverses, collapsed to a simple graph. Valency is at most 8.
    pub fn margulis(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::SizeBelowMinimum { n, min: 2 });
        }
        let idx = |x: usize, y: usize| x * n + y;
        let add = |a: usize, b: usize| (a + b) % n;
        let sub = |a: usize, b: usize| (a + n - b % n) % n;
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                let images = [
                    (add(x, 2 * y % n), y),
                    (sub(x, 2 * y % n), y),
                    (add(x, (2 * y + 1) % n), y),
                    (sub(x, (2 * y + 1) % n), y),
                    (x, add(y, 2 * x % n)),
                    (x, sub(y, 2 * x % n)),
                    (x, add(y, (2 * x + 1) % n)),
                    (x, sub(y, (2 * x + 1) % n)),
                ];
                for (ix, iy) in images {
                    edges.push((idx(x, y), idx(ix, iy)));
                }
            }
        }
        Self::build(n * n, &edges)
    }

    /// Random `k`-regular simple graph via the configuration model with
    /// rejection resampling. Deterministic for a fixed seed.
    pub fn random_regular(n: usize, k: usize, seed: u64) -> Result<Self> {
        if !(n * k).is_multiple_of(2) {
            return Err(Error::DegreeParity { n, k });
        }
        if k >= n {
            return Err(Error::VertexOutOfRange { index: k, n });
        }
        const MAX_ATTEMPTS: usize = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
        let half = stubs.len() / 2;
        for _ in 0..MAX_ATTEMPTS {
            stubs.shuffle(&mut rng);
            let mut seen = BTreeSet::new();
            let mut simple = true;
            for i in 0..half {
                let (u, v) = (stubs[i], stubs[i + half]);
                if u == v || !seen.insert((u.min(v), u.max(v))) {
                    simple = false;
                    break;
                }
            }
            if simple {
                let edges: Vec<_> = (0..half).map(|i| (stubs[i], stubs[i + half])).collect();
                return Self::build(n, &edges);
            }
        }
        Err(Error::ResamplingBudget {
            attempts: MAX_ATTEMPTS,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Directed edges, lexicographically sorted. `EdgeFunction` values align
    /// with this order.
    pub fn directed_edges(&self) -> &[(usize, usize)] {
        &self.directed_edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degree[v]
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.metric.row(0).iter().all(|&d| d != INFINITE)
    }

    /// Largest finite hop distance.
    pub fn diameter(&self) -> u32 {
        (0..self.n)
            .flat_map(|x| self.metric.row(x).iter().copied())
            .filter(|&d| d != INFINITE)
            .max()
            .unwrap_or(0)
    }

    /// Vertices of the smallest connected component, as a canonical
    /// zero-boundary cut for disconnected graphs.
    pub fn smallest_component(&self) -> Vec<usize> {
        let mut best: Option<Vec<usize>> = None;
        let mut assigned = vec![false; self.n];
        for start in 0..self.n {
            if assigned[start] {
                continue;
            }
            let component: Vec<usize> = (0..self.n)
                .filter(|&v| self.metric.dist(start, v) != INFINITE)
                .collect();
            for &v in &component {
                assigned[v] = true;
            }
            if best.as_ref().is_none_or(|b| component.len() < b.len()) {
                best = Some(component);
            }
        }
        best.unwrap_or_default()
    }
}

impl MetricSpace for Graph {
    fn points(&self) -> usize {
        self.n
    }

    fn dist(&self, x: usize, y: usize) -> u32 {
        self.metric.dist(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_smallest_edge() {
        let g = Graph::build(2, &[(0, 1)]).unwrap();
        assert_eq!(g.directed_edges(), &[(0, 1), (1, 0)]);
        assert_eq!(g.k_max(), 1);
    }

    #[test]
    fn build_drops_loops_and_duplicates() {
        let g = Graph::build(3, &[(0, 1), (0, 1), (2, 2)]).unwrap();
        assert_eq!(g.directed_edges().len(), 2);
        assert_eq!(g.degree(2), 0);
    }

    #[test]
    fn build_rejects_out_of_range() {
        assert_eq!(
            Graph::build(2, &[(0, 5)]),
            Err(Error::VertexOutOfRange { index: 5, n: 2 })
        );
    }

    #[test]
    fn directed_symmetry_everywhere() {
        for g in [
            Graph::cycle(7).unwrap(),
            Graph::complete(5).unwrap(),
            Graph::hypercube(3).unwrap(),
            Graph::margulis(4).unwrap(),
            Graph::random_regular(8, 3, 11).unwrap(),
        ] {
            for &(u, v) in g.directed_edges() {
                assert_ne!(u, v);
                assert!(g.directed_edges().contains(&(v, u)));
            }
            assert_eq!(
                g.directed_edges().len(),
                (0..g.n()).map(|v| g.degree(v)).sum::<usize>()
            );
        }
    }

    #[test]
    fn cycle_counts() {
        let g = Graph::cycle(4).unwrap();
        assert_eq!(g.directed_edges().len(), 8);
        assert_eq!(g.k_max(), 2);
        assert!(Graph::cycle(2).is_err());
    }

    #[test]
    fn complete_counts() {
        let g = Graph::complete(4).unwrap();
        assert_eq!(g.k_max(), 3);
        assert_eq!(g.directed_edges().len(), 12);
    }

    #[test]
    fn hypercube_counts() {
        let g = Graph::hypercube(3).unwrap();
        assert_eq!(g.n(), 8);
        assert_eq!(g.k_max(), 3);
    }

    #[test]
    fn margulis_small() {
        let g = Graph::margulis(2).unwrap();
        assert_eq!(g.n(), 4);
        assert!(g.k_max() <= 8);
        for n in 2..=6 {
            let g = Graph::margulis(n).unwrap();
            assert!(g.is_connected(), "margulis({n}) disconnected");
            assert!(g.k_max() <= 8);
        }
    }

    #[test]
    fn random_regular_forced_cycle() {
        // The only simple 2-regular graph on 4 vertices is the 4-cycle.
        let g = Graph::random_regular(4, 2, 3).unwrap();
        assert_eq!(g.directed_edges().len(), 8);
        assert!((0..4).all(|v| g.degree(v) == 2));
        assert!(g.is_connected());
    }

    #[test]
    fn random_regular_deterministic() {
        let a = Graph::random_regular(6, 3, 1).unwrap();
        let b = Graph::random_regular(6, 3, 1).unwrap();
        assert_eq!(a.directed_edges(), b.directed_edges());
        assert!((0..6).all(|v| a.degree(v) == 3));
    }

    #[test]
    fn random_regular_parity_error() {
        assert_eq!(
            Graph::random_regular(5, 3, 0),
            Err(Error::DegreeParity { n: 5, k: 3 })
        );
    }

    #[test]
    fn balls() {
        let g = Graph::complete(5).unwrap();
        assert_eq!(g.ball(2, 0), vec![2]);
        assert_eq!(g.ball(2, 1).len(), 5);
        let c = Graph::cycle(8).unwrap();
        assert_eq!(c.ball(0, 2).len(), 5);
    }

    #[test]
    fn growth_bound_on_corpus() {
        // |B(x,r)| <= 1 + k((k-1)^r - 1)/(k-2) for k >= 3.
        for g in [
            Graph::complete(6).unwrap(),
            Graph::hypercube(4).unwrap(),
            Graph::margulis(4).unwrap(),
            Graph::random_regular(10, 3, 5).unwrap(),
        ] {
            let k = g.k_max() as u64;
            assert!(k >= 3);
            for r in 0..=3u32 {
                let bound = 1 + k * ((k - 1).pow(r) - 1) / (k - 2);
                for x in 0..g.n() {
                    assert!(g.ball(x, r).len() as u64 <= bound);
                }
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let g = Graph::margulis(3).unwrap();
        let spec = g.to_spec();
        let h = Graph::from_spec(&spec).unwrap();
        assert_eq!(g.directed_edges(), h.directed_edges());
    }

    #[test]
    fn smallest_component_of_disconnected() {
        let g = Graph::build(5, &[(0, 1), (2, 3), (3, 4)]).unwrap();
        assert_eq!(g.smallest_component(), vec![0, 1]);
        assert!(!g.is_connected());
    }
}
