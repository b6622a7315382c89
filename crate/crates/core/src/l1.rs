//! 0- and 1-cochains in the l1 norm: the quotient norm modulo constants,
//! the coboundary operator, mean-centering, and the layer-cake
//! decomposition of positive functions into nested level cuts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Real-valued function on the vertices of a graph, indexed `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexFunction(Vec<f64>);

/// Real-valued function on directed edges, aligned with
/// [`Graph::directed_edges`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(VertexFunction(values))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        VertexFunction(vec![c; n])
    }

    /// Characteristic function of a vertex subset.
    pub fn indicator(n: usize, subset: &[usize]) -> Result<Self> {
        let mut values = vec![0.0; n];
        for &x in subset {
            if x >= n {
                return Err(Error::VertexOutOfRange { index: x, n });
            }
            values[x] = 1.0;
        }
        Ok(VertexFunction(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl EdgeFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(EdgeFunction(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Strict membership in the zero-sum subspace.
    pub fn is_zero_sum(&self) -> bool {
        self.sum() == 0.0
    }

    /// Tolerant membership test for numerically produced cochains.
    pub fn is_zero_sum_within(&self, tol: f64) -> bool {
        self.sum().abs() <= tol
    }
}

/// Distance of `f` to the constants: `min_c sum |f(x) + c|`, together with
/// the minimizing shift. The minimum sits at minus a median of the values;
/// when the median is an interval the smallest minimizer is returned.
pub fn quotient_norm(f: &VertexFunction) -> (f64, f64) {
    let n = f.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mut sorted = f.0.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let c = -sorted[n / 2];
    let value = f.0.iter().map(|v| (v + c).abs()).sum();
    (value, c)
}

/// Coboundary: per directed edge `(u, v)` the difference `f(v) - f(u)`.
/// Reversed edge pairs carry opposite values, so the output is zero-sum.
pub fn coboundary(graph: &Graph, f: &VertexFunction) -> Result<EdgeFunction> {
    if f.len() != graph.n() {
        return Err(Error::VertexLengthMismatch {
            got: f.len(),
            expected: graph.n(),
        });
    }
    let values = graph
        .directed_edges()
        .iter()
        .map(|&(u, v)| f.0[v] - f.0[u])
        .collect();
    Ok(EdgeFunction(values))
}

/// Subtracts the mean. The image represents the same class modulo
/// constants and its l1 norm is at most twice the quotient norm.
pub fn mean_center(f: &VertexFunction) -> VertexFunction {
    let n = f.len();
    if n == 0 {
        return f.clone();
    }
    let mean = f.sum() / n as f64;
    VertexFunction(f.0.iter().map(|v| v - mean).collect())
}

/// Writes a positive function as a positive combination of nested cuts:
/// `f = sum a_j * chi_{F_j}` with `F_1 ⊂ F_2 ⊂ ...` and all `a_j > 0`.
/// Cut `F_j` collects the vertices at or above the j-th level from the top.
pub fn coarea_decompose(f: &VertexFunction) -> Result<Vec<(f64, Vec<usize>)>> {
    for (index, &v) in f.0.iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::NonPositiveEntry { index, value: v });
        }
    }
    let mut levels = f.0.clone();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let mut terms = Vec::with_capacity(levels.len());
    for (j, &level) in levels.iter().enumerate().rev() {
        let below = if j == 0 { 0.0 } else { levels[j - 1] };
        let cut: Vec<usize> = (0..f.len()).filter(|&x| f.0[x] >= level).collect();
        terms.push((level - below, cut));
    }
    Ok(terms)
}

/// Per-index sums of a family of vertex functions. A 0-cochain has all
/// sums equal to zero.
pub fn sigma0(per_index: &[VertexFunction]) -> Vec<f64> {
    per_index.iter().map(VertexFunction::sum).collect()
}

/// Per-index sums of a family of edge functions. A 1-cochain has all sums
/// equal to zero; coboundary images land here by paired cancellation.
pub fn sigma1(per_index: &[EdgeFunction]) -> Vec<f64> {
    per_index.iter().map(EdgeFunction::sum).collect()
}

/// Sup over indices of the per-index l1 norms (finite-horizon sup norm).
pub fn sup_l1_vertex(per_index: &[VertexFunction]) -> f64 {
    per_index.iter().map(VertexFunction::l1).fold(0.0, f64::max)
}

pub fn sup_l1_edge(per_index: &[EdgeFunction]) -> f64 {
    per_index.iter().map(EdgeFunction::l1).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Piecewise-linear scan: the minimum of c -> sum |f + c| is attained
    /// where f(x) + c vanishes for some x, so trying every -f(x) suffices.
    fn quotient_norm_scan(values: &[f64]) -> f64 {
        values
            .iter()
            .map(|&candidate| values.iter().map(|v| (v - candidate).abs()).sum())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn quotient_norm_examples() {
        let f = VertexFunction::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(quotient_norm(&f), (1.0, 0.0));

        let g = VertexFunction::constant(5, 3.25);
        assert_eq!(quotient_norm(&g).0, 0.0);

        let h = VertexFunction::new(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let (value, c) = quotient_norm(&h);
        assert_eq!(value, 2.0);
        assert!((-1.0..=0.0).contains(&c));
    }

    #[test]
    fn quotient_norm_indicator_is_cut_size() {
        // For |F| <= n/2 the nearest constant is 0, so the norm is |F|.
        for n in 2..=9usize {
            for size in 1..=n / 2 {
                let subset: Vec<usize> = (0..size).collect();
                let chi = VertexFunction::indicator(n, &subset).unwrap();
                assert_eq!(quotient_norm(&chi).0, size as f64);
            }
        }
    }

    #[test]
    fn coboundary_examples() {
        let g = Graph::cycle(8).unwrap();
        let constant = VertexFunction::constant(8, 2.0);
        assert_eq!(coboundary(&g, &constant).unwrap().l1(), 0.0);

        let arc = VertexFunction::indicator(8, &[0, 1, 2, 3]).unwrap();
        assert_eq!(coboundary(&g, &arc).unwrap().l1(), 4.0);

        let p = Graph::path(3).unwrap();
        let f = VertexFunction::new(vec![0.0, 1.0, 2.0]).unwrap();
        let df = coboundary(&p, &f).unwrap();
        assert_eq!(df.l1(), 4.0);
        assert!(df.is_zero_sum());
    }

    #[test]
    fn coboundary_length_mismatch() {
        let g = Graph::cycle(4).unwrap();
        let f = VertexFunction::constant(3, 0.0);
        assert!(coboundary(&g, &f).is_err());
    }

    #[test]
    fn mean_center_example() {
        let f = VertexFunction::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let g = mean_center(&f);
        assert_eq!(g.values(), &[0.75, -0.25, -0.25, -0.25]);
        assert_eq!(g.l1(), 1.5);
    }

    #[test]
    fn coarea_examples() {
        let f = VertexFunction::constant(3, 2.0);
        let terms = coarea_decompose(&f).unwrap();
        assert_eq!(terms, vec![(2.0, vec![0, 1, 2])]);

        let g = VertexFunction::new(vec![1.0, 2.0]).unwrap();
        let terms = coarea_decompose(&g).unwrap();
        assert_eq!(terms, vec![(1.0, vec![1]), (1.0, vec![0, 1])]);

        let bad = VertexFunction::new(vec![1.0, 0.0]).unwrap();
        assert!(coarea_decompose(&bad).is_err());
    }

    #[test]
    fn coarea_cuts_are_nested() {
        let f = VertexFunction::new(vec![3.0, 1.0, 2.0, 1.0, 3.0]).unwrap();
        let terms = coarea_decompose(&f).unwrap();
        for window in terms.windows(2) {
            let (_, ref small) = window[0];
            let (_, ref large) = window[1];
            assert!(small.iter().all(|x| large.contains(x)));
        }
    }

    #[test]
    fn sigma_maps() {
        let fs = vec![
            mean_center(&VertexFunction::new(vec![1.0, 2.0, 3.0]).unwrap()),
            mean_center(&VertexFunction::new(vec![-4.0, 4.0]).unwrap()),
        ];
        for s in sigma0(&fs) {
            assert!(s.abs() <= 1e-12);
        }

        let ones = vec![VertexFunction::constant(3, 1.0), VertexFunction::constant(5, 1.0)];
        assert_eq!(sigma0(&ones), vec![3.0, 5.0]);

        let g = Graph::cycle(5).unwrap();
        let df = coboundary(&g, &VertexFunction::new(vec![0.0, 3.0, 1.0, 4.0, 1.0]).unwrap()).unwrap();
        assert_eq!(sigma1(std::slice::from_ref(&df)), vec![0.0]);
        // Each undirected difference is counted once per direction.
        assert_eq!(sup_l1_edge(&[df]), 24.0);
    }

    fn finite_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 1..=n)
    }

    proptest! {
        #[test]
        fn quotient_norm_matches_scan(values in finite_values(12)) {
            let f = VertexFunction::new(values.clone()).unwrap();
            let (norm, c) = quotient_norm(&f);
            let oracle = quotient_norm_scan(&values);
            prop_assert!((norm - oracle).abs() <= 1e-9 * (1.0 + oracle));
            let at_c: f64 = values.iter().map(|v| (v + c).abs()).sum();
            prop_assert!((at_c - norm).abs() <= 1e-12);
        }

        #[test]
        fn quotient_norm_shift_invariant(values in finite_values(10), shift in -50.0f64..50.0) {
            let f = VertexFunction::new(values.clone()).unwrap();
            let shifted = VertexFunction::new(values.iter().map(|v| v + shift).collect()).unwrap();
            let a = quotient_norm(&f).0;
            let b = quotient_norm(&shifted).0;
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            prop_assert!(a <= f.l1() + 1e-12);
        }

        #[test]
        fn coboundary_kills_constants(values in finite_values(8), shift in -50.0f64..50.0) {
            let n = values.len().max(3);
            let mut padded = values;
            padded.resize(n, 0.0);
            let g = Graph::cycle(n).unwrap();
            let f = VertexFunction::new(padded.clone()).unwrap();
            let fs = VertexFunction::new(padded.iter().map(|v| v + shift).collect()).unwrap();
            let df = coboundary(&g, &f).unwrap();
            let dfs = coboundary(&g, &fs).unwrap();
            for (a, b) in df.values().iter().zip(dfs.values()) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
            prop_assert!(df.is_zero_sum_within(1e-9));
        }

        #[test]
        fn mean_center_properties(values in finite_values(10)) {
            let f = VertexFunction::new(values).unwrap();
            let g = mean_center(&f);
            let scale = 1.0 + f.l1();
            prop_assert!(g.sum().abs() <= 1e-12 * scale);
            let gg = mean_center(&g);
            for (a, b) in g.values().iter().zip(gg.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
            let q = quotient_norm(&f).0;
            prop_assert!(g.l1() <= 2.0 * q + 1e-9 * scale);
            prop_assert!(q <= g.l1() + 1e-9 * scale);
            prop_assert!((quotient_norm(&g).0 - q).abs() <= 1e-9 * scale);
        }

        #[test]
        fn coarea_identity(values in prop::collection::vec(0.001f64..10.0, 3..=10)) {
            let n = values.len();
            let g = Graph::cycle(n).unwrap();
            let f = VertexFunction::new(values.clone()).unwrap();
            let df_norm = coboundary(&g, &f).unwrap().l1();

            let terms = coarea_decompose(&f).unwrap();
            // Reconstruction: the coefficients over each vertex telescope
            // back to its value.
            for x in 0..n {
                let rebuilt: f64 = terms
                    .iter()
                    .filter(|(_, cut)| cut.contains(&x))
                    .map(|(a, _)| a)
                    .sum();
                prop_assert!((rebuilt - values[x]).abs() <= 1e-12 * (1.0 + values[x]));
            }
            // Co-area identity: the coboundary norm splits over level cuts.
            let mut split = 0.0;
            for (a, cut) in &terms {
                prop_assert!(*a > 0.0);
                let chi = VertexFunction::indicator(n, cut).unwrap();
                split += a * coboundary(&g, &chi).unwrap().l1();
            }
            prop_assert!((split - df_norm).abs() <= 1e-9 * (1.0 + df_norm));
        }
    }
}
