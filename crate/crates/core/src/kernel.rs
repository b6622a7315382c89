//! Probability-like kernels on a finite metric space: sparse nonnegative
//! rows with recorded support radius, row-sum deviation, and symmetry.
//! Variation of a kernel at radius R is the largest l1 distance between
//! rows at points within distance R.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metric::{MetricSpace, INFINITE};

/// Sparse nonnegative kernel over the points of a metric space. Stats are
/// computed on construction, never trusted from input.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: Vec<BTreeMap<usize, f64>>,
    support_radius: u32,
    rowsum_dev: f64,
    symmetric: bool,
}

/// Wire format: {"S": radius, "rows": {"x": {"z": value}}}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(rename = "S")]
    pub s: u32,
    pub rows: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Kernel {
    pub fn new(space: &impl MetricSpace, rows: Vec<BTreeMap<usize, f64>>) -> Result<Self> {
        let n = space.points();
        if rows.len() != n {
            return Err(Error::VertexLengthMismatch {
                got: rows.len(),
                expected: n,
            });
        }
        let mut cleaned: Vec<BTreeMap<usize, f64>> = Vec::with_capacity(n);
        for (x, row) in rows.into_iter().enumerate() {
            let mut out = BTreeMap::new();
            for (z, v) in row {
                if z >= n {
                    return Err(Error::VertexOutOfRange { index: z, n });
                }
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { index: z });
                }
                if v < 0.0 {
                    return Err(Error::NonPositiveEntry { index: x, value: v });
                }
                if v > 0.0 {
                    out.insert(z, v);
                }
            }
            cleaned.push(out);
        }
        let mut support_radius = 0u32;
        for (x, row) in cleaned.iter().enumerate() {
            for &z in row.keys() {
                let d = space.dist(x, z);
                if d == INFINITE {
                    return Err(Error::MalformedSpec(format!(
                        "kernel row {x} reaches point {z} in another component"
                    )));
                }
                support_radius = support_radius.max(d);
            }
        }
        let rowsum_dev = cleaned
            .iter()
            .map(|row| (row.values().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let symmetric = cleaned.iter().enumerate().all(|(x, row)| {
            row.iter()
                .all(|(&z, &v)| cleaned[z].get(&x).copied().unwrap_or(0.0) == v)
        });
        Ok(Kernel {
            rows: cleaned,
            support_radius,
            rowsum_dev,
            symmetric,
        })
    }

    /// The identity kernel x -> delta_x.
    pub fn delta(space: &impl MetricSpace) -> Self {
        let rows = (0..space.points())
            .map(|x| BTreeMap::from([(x, 1.0)]))
            .collect();
        Kernel {
            rows,
            support_radius: 0,
            rowsum_dev: 0.0,
            symmetric: true,
        }
    }

    pub fn points(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> &BTreeMap<usize, f64> {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[BTreeMap<usize, f64>] {
        &self.rows
    }

    pub fn value(&self, x: usize, z: usize) -> f64 {
        self.rows[x].get(&z).copied().unwrap_or(0.0)
    }

    pub fn support_radius(&self) -> u32 {
        self.support_radius
    }

    pub fn rowsum_dev(&self) -> f64 {
        self.rowsum_dev
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Largest deviation of φ(x)(z) from φ(z)(x) and where it happens.
    pub fn symmetry_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0f64, 0, 0);
        for (x, row) in self.rows.iter().enumerate() {
            for (&z, &v) in row {
                let d = (v - self.value(z, x)).abs();
                if d > worst.0 {
                    worst = (d, x.min(z), x.max(z));
                }
            }
        }
        worst
    }

    /// l1 distance between two rows over the union of their supports.
    pub fn row_distance(&self, x: usize, y: usize) -> f64 {
        let a = &self.rows[x];
        let b = &self.rows[y];
        let mut total = 0.0;
        for (&z, &v) in a {
            total += (v - b.get(&z).copied().unwrap_or(0.0)).abs();
        }
        for (&z, &v) in b {
            if !a.contains_key(&z) {
                total += v;
            }
        }
        total
    }

    /// Entrywise sum; supports combine by union.
    pub fn add(&self, other: &Kernel, space: &impl MetricSpace) -> Result<Kernel> {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut out = a.clone();
                for (&z, &v) in b {
                    *out.entry(z).or_insert(0.0) += v;
                }
                out
            })
            .collect();
        Kernel::new(space, rows)
    }

    /// Scale by a nonnegative factor.
    pub fn scale(&self, factor: f64, space: &impl MetricSpace) -> Result<Kernel> {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|(&z, &v)| (z, v * factor)).collect())
            .collect();
        Kernel::new(space, rows)
    }

    pub fn to_spec(&self) -> KernelSpec {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, row)| !row.is_empty())
            .map(|(x, row)| {
                (
                    x.to_string(),
                    row.iter().map(|(&z, &v)| (z.to_string(), v)).collect(),
                )
            })
            .collect();
        KernelSpec {
            s: self.support_radius,
            rows,
        }
    }

    pub fn from_spec(space: &impl MetricSpace, spec: &KernelSpec) -> Result<Self> {
        let n = space.points();
        let mut rows = vec![BTreeMap::new(); n];
        for (xs, row) in &spec.rows {
            let x: usize = xs
                .parse()
                .map_err(|_| Error::MalformedSpec(format!("bad row key `{xs}`")))?;
            if x >= n {
                return Err(Error::VertexOutOfRange { index: x, n });
            }
            for (zs, &v) in row {
                let z: usize = zs
                    .parse()
                    .map_err(|_| Error::MalformedSpec(format!("bad column key `{zs}`")))?;
                rows[x].insert(z, v);
            }
        }
        let kernel = Kernel::new(space, rows)?;
        if kernel.support_radius > spec.s {
            return Err(Error::MalformedSpec(format!(
                "declared radius {} but support reaches distance {}",
                spec.s, kernel.support_radius
            )));
        }
        Ok(kernel)
    }
}

/// Uniform distribution on the closed ball of radius `S` around each
/// point. Row sums are exactly 1 and supports respect component
/// boundaries, since balls never cross them.
pub fn kernel_ball_average(space: &impl MetricSpace, s: u32) -> Kernel {
    let rows: Vec<BTreeMap<usize, f64>> = (0..space.points())
        .map(|x| {
            let ball = space.ball(x, s);
            let weight = 1.0 / ball.len() as f64;
            ball.into_iter().map(|z| (z, weight)).collect()
        })
        .collect();
    Kernel::new(space, rows).expect("uniform ball rows are valid")
}

/// Distributions of a lazy random walk after `t` steps from each vertex:
/// stay with probability `a`, otherwise move to a uniform neighbor.
pub fn kernel_lazy_walk(graph: &Graph, t: u32, a: f64) -> Result<Kernel> {
    if !(0.0 < a && a < 1.0) {
        return Err(Error::MalformedSpec(format!(
            "laziness must lie strictly between 0 and 1, got {a}"
        )));
    }
    let n = graph.n();
    let rows: Vec<BTreeMap<usize, f64>> = (0..n)
        .map(|x| {
            let mut p = BTreeMap::from([(x, 1.0)]);
            for _ in 0..t {
                let mut next: BTreeMap<usize, f64> = BTreeMap::new();
                for (&z, &mass) in &p {
                    let degree = graph.degree(z);
                    if degree == 0 {
                        *next.entry(z).or_insert(0.0) += mass;
                        continue;
                    }
                    *next.entry(z).or_insert(0.0) += a * mass;
                    let share = (1.0 - a) * mass / degree as f64;
                    for &w in graph.neighbors(z) {
                        *next.entry(w).or_insert(0.0) += share;
                    }
                }
                p = next;
            }
            p
        })
        .collect();
    Kernel::new(graph, rows)
}

/// Largest l1 row distance over ordered pairs within distance `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationProfile {
    pub r: u32,
    pub value: f64,
    pub argmax: Option<(usize, usize)>,
}

pub fn variation(space: &impl MetricSpace, kernel: &Kernel, r: u32) -> VariationProfile {
    let n = space.points();
    let mut value = 0.0;
    let mut argmax = None;
    for x in 0..n {
        for y in (x + 1)..n {
            if space.dist(x, y) > r {
                continue;
            }
            let d = kernel.row_distance(x, y);
            if d > value {
                value = d;
                argmax = Some((x, y));
            }
        }
    }
    VariationProfile { r, value, argmax }
}

/// Per-point row sums with the maximum deviation from 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowSumReport {
    pub sums: Vec<f64>,
    pub max_dev: f64,
}

pub fn rowsum_check(kernel: &Kernel) -> RowSumReport {
    let sums: Vec<f64> = kernel.rows.iter().map(|row| row.values().sum()).collect();
    let max_dev = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    RowSumReport { sums, max_dev }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{coarse_union, GraphFamily};

    #[test]
    fn delta_kernel_stats() {
        let g = Graph::cycle(5).unwrap();
        let k = Kernel::delta(&g);
        assert_eq!(k.support_radius(), 0);
        assert_eq!(k.rowsum_dev(), 0.0);
        assert!(k.is_symmetric());
        assert_eq!(variation(&g, &k, 1).value, 2.0);
    }

    #[test]
    fn ball_average_uniform_rows() {
        let g = Graph::path(7).unwrap();
        let k = kernel_ball_average(&g, 1);
        assert_eq!(k.rowsum_dev(), 0.0);
        assert_eq!(k.support_radius(), 1);
        assert_eq!(k.value(3, 2), 1.0 / 3.0);
        assert_eq!(k.value(3, 3), 1.0 / 3.0);
        assert_eq!(k.value(3, 5), 0.0);
        // Interior neighbors differ in exactly two window endpoints.
        assert_eq!(k.row_distance(2, 3), 2.0 / 3.0);
        assert_eq!(k.row_distance(3, 4), 2.0 / 3.0);
    }

    #[test]
    fn ball_average_saturates_to_constant() {
        let g = Graph::cycle(6).unwrap();
        let k = kernel_ball_average(&g, 3);
        for r in 0..=3 {
            assert_eq!(variation(&g, &k, r).value, 0.0);
        }
    }

    #[test]
    fn ball_average_cycle_variation() {
        let g = Graph::cycle(8).unwrap();
        let k = kernel_ball_average(&g, 1);
        let v = variation(&g, &k, 1);
        assert_eq!(v.value, 2.0 / 3.0);
        assert!(v.argmax.is_some());
    }

    #[test]
    fn lazy_walk_small_cases() {
        let g = Graph::cycle(8).unwrap();
        let t0 = kernel_lazy_walk(&g, 0, 0.5).unwrap();
        assert_eq!(t0, Kernel::delta(&g));

        let t2 = kernel_lazy_walk(&g, 2, 0.5).unwrap();
        assert!(t2.support_radius() <= 2);
        assert!(t2.rowsum_dev() <= 1e-12);

        let k4 = Graph::complete(4).unwrap();
        let k = kernel_lazy_walk(&k4, 1, 0.5).unwrap();
        assert_eq!(k.value(0, 0), 0.5);
        assert_eq!(k.value(0, 1), 1.0 / 6.0);
        let v = variation(&k4, &k, 1);
        assert!((v.value - 2.0 / 3.0).abs() <= 1e-15);
        assert!(k.is_symmetric());

        assert!(kernel_lazy_walk(&g, 1, 0.0).is_err());
        assert!(kernel_lazy_walk(&g, 1, 1.0).is_err());
    }

    #[test]
    fn rowsum_report() {
        let g = Graph::complete(4).unwrap();
        let k = kernel_ball_average(&g, 1);
        let report = rowsum_check(&k);
        assert_eq!(report.max_dev, 0.0);
        assert_eq!(report.sums.len(), 4);

        let scaled = k.scale(0.9, &g).unwrap();
        let report = rowsum_check(&scaled);
        assert!((report.max_dev - 0.1).abs() <= 1e-12);
        assert!((scaled.rowsum_dev() - 0.1).abs() <= 1e-12);
    }

    #[test]
    fn variation_seminorm_properties() {
        let g = Graph::margulis(3).unwrap();
        let a = kernel_ball_average(&g, 1);
        let b = kernel_lazy_walk(&g, 2, 0.25).unwrap();
        let sum = a.add(&b, &g).unwrap();
        let va = variation(&g, &a, 1).value;
        let vb = variation(&g, &b, 1).value;
        let vsum = variation(&g, &sum, 1).value;
        assert!(vsum <= va + vb + 1e-12);

        let scaled = a.scale(2.5, &g).unwrap();
        assert!((variation(&g, &scaled, 1).value - 2.5 * va).abs() <= 1e-12);

        // Support rule: supp(a+b) inside supp(a) union supp(b).
        for x in 0..sum.points() {
            for z in sum.row(x).keys() {
                assert!(a.row(x).contains_key(z) || b.row(x).contains_key(z));
            }
        }
    }

    #[test]
    fn symmetry_detection() {
        let g = Graph::path(3).unwrap();
        let asym = Kernel::new(
            &g,
            vec![
                BTreeMap::from([(0, 0.5), (1, 0.5)]),
                BTreeMap::from([(1, 1.0)]),
                BTreeMap::from([(2, 1.0)]),
            ],
        )
        .unwrap();
        assert!(!asym.is_symmetric());

        let sym = kernel_ball_average(&Graph::cycle(5).unwrap(), 1);
        assert!(sym.is_symmetric());
    }

    #[test]
    fn rejects_bad_rows() {
        let g = Graph::path(2).unwrap();
        assert!(Kernel::new(&g, vec![BTreeMap::from([(0, -0.5)]), BTreeMap::new()]).is_err());
        assert!(Kernel::new(&g, vec![BTreeMap::from([(5, 0.5)]), BTreeMap::new()]).is_err());
        assert!(Kernel::new(&g, vec![BTreeMap::new()]).is_err());

        let disconnected = Graph::build(3, &[(0, 1)]).unwrap();
        let straddling = Kernel::new(
            &disconnected,
            vec![
                BTreeMap::from([(0, 0.5), (2, 0.5)]),
                BTreeMap::from([(1, 1.0)]),
                BTreeMap::from([(2, 1.0)]),
            ],
        );
        assert!(straddling.is_err());
    }

    #[test]
    fn spec_round_trip() {
        let g = Graph::cycle(6).unwrap();
        let k = kernel_ball_average(&g, 2);
        let spec = k.to_spec();
        assert_eq!(spec.s, 2);
        let back = Kernel::from_spec(&g, &spec).unwrap();
        assert_eq!(k, back);

        let mut tight = k.to_spec();
        tight.s = 1;
        assert!(Kernel::from_spec(&g, &tight).is_err());
    }

    #[test]
    fn union_space_kernels_stay_per_component() {
        let t = Graph::complete(3).unwrap();
        let fam = GraphFamily::from_graphs(vec![t.clone(), t]).unwrap();
        let u = coarse_union(&fam).unwrap();
        let k = kernel_ball_average(&u, 1);
        for x in 0..3 {
            for z in k.row(x).keys() {
                assert!(*z < 3);
            }
        }
        for x in 3..6 {
            for z in k.row(x).keys() {
                assert!(*z >= 3);
            }
        }
    }
}
