//! Graph families, the coarse union metric that isolates components at
//! growing separations, and finite-horizon expansion diagnostics.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cheeger::{self, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec};
use crate::metric::{Metric, MetricSpace, INFINITE};

/// Margin threshold below which a family stops looking expander-consistent
/// at the computed horizon. Calibrated so that the slow 1/n decay of cycle
/// margins falls under it within a couple dozen members while the affine
/// torus families stay a factor of several above it.
pub const DEFAULT_MARGIN_THRESHOLD: f64 = 0.5;

/// One graph in a family: 1-based contiguous index and the generator
/// argument that produced it.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub index: usize,
    pub param: usize,
    pub graph: Graph,
}

/// An ordered, finite-horizon stand-in for a sequence of graphs.
#[derive(Debug, Clone)]
pub struct GraphFamily {
    members: Vec<FamilyMember>,
    k_bound: usize,
}

/// Wire format for family files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub generator: String,
    #[serde(default)]
    pub range: Option<(usize, usize)>,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
}

impl GraphFamily {
    pub fn from_graphs(graphs: Vec<Graph>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let members = graphs
            .into_iter()
            .enumerate()
            .map(|(i, graph)| FamilyMember {
                index: i + 1,
                param: graph.n(),
                graph,
            })
            .collect();
        Ok(Self::assemble(members))
    }

    fn assemble(members: Vec<FamilyMember>) -> Self {
        let k_bound = members.iter().map(|m| m.graph.k_max()).max().unwrap_or(0);
        GraphFamily { members, k_bound }
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Sup of member max degrees.
    pub fn k_bound(&self) -> usize {
        self.k_bound
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.graph.n()).collect()
    }
}

fn param_usize(params: &BTreeMap<String, serde_json::Value>, key: &'static str) -> Result<usize> {
    params
        .get(key)
        .and_then(|v| v.as_u64())
        .map(|v| v as usize)
        .ok_or(Error::MissingParam(key))
}

/// Builds a family from a parsed spec. Relative paths in `from_files`
/// resolve against `base_dir`.
pub fn make_family(spec: &FamilySpec, base_dir: &Path) -> Result<GraphFamily> {
    let generative_range = || -> Result<(usize, usize)> {
        let (a, b) = spec.range.ok_or(Error::MissingParam("range"))?;
        if a > b {
            return Err(Error::EmptyRange);
        }
        Ok((a, b))
    };
    let members = match spec.generator.as_str() {
        "cycle" => {
            let (a, b) = generative_range()?;
            (a..=b).map(Graph::cycle).collect::<Result<Vec<_>>>()?
        }
        "margulis" => {
            let (a, b) = generative_range()?;
            (a..=b).map(Graph::margulis).collect::<Result<Vec<_>>>()?
        }
        "random_regular" => {
            let (a, b) = generative_range()?;
            let k = param_usize(&spec.params, "k")?;
            (a..=b)
                .enumerate()
                .map(|(i, n)| Graph::random_regular(n, k, spec.seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<_>>>()?
        }
        "from_files" => {
            let paths = spec
                .params
                .get("paths")
                .and_then(|v| v.as_array())
                .ok_or(Error::MissingParam("paths"))?;
            let mut graphs = Vec::with_capacity(paths.len());
            for p in paths {
                let rel = p
                    .as_str()
                    .ok_or_else(|| Error::MalformedSpec("paths entries must be strings".into()))?;
                let full = base_dir.join(rel);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::MalformedSpec(format!("{}: {e}", full.display())))?;
                let gspec: GraphSpec = serde_json::from_str(&text)
                    .map_err(|e| Error::MalformedSpec(format!("{}: {e}", full.display())))?;
                graphs.push(Graph::from_spec(&gspec)?);
            }
            graphs
        }
        other => return Err(Error::UnknownGenerator(other.to_string())),
    };
    if members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let params: Vec<usize> = match spec.generator.as_str() {
        "from_files" => members.iter().map(Graph::n).collect(),
        _ => {
            let (a, b) = spec.range.ok_or(Error::MissingParam("range"))?;
            (a..=b).collect()
        }
    };
    let members = members
        .into_iter()
        .zip(params)
        .enumerate()
        .map(|(i, (graph, param))| FamilyMember {
            index: i + 1,
            param,
            graph,
        })
        .collect();
    Ok(GraphFamily::assemble(members))
}

/// Disjoint union of the family members with any two components held
/// apart by the sum of their isolation radii. Radii strictly increase
/// with the index, so balls of radius below `separation(i)` never leave
/// component `i`, and the distance from a component to its complement
/// grows without bound along the family.
#[derive(Debug, Clone)]
pub struct UnionSpace {
    offsets: Vec<usize>,
    sizes: Vec<usize>,
    separations: Vec<u64>,
    metrics: Vec<Metric>,
}

/// Builds the union with the default spacing rule: component `i` gets
/// isolation radius `max(diam_i, diam_{i+1}) + i + 1`, pushed up where
/// needed to keep the radii strictly increasing.
pub fn coarse_union(family: &GraphFamily) -> Result<UnionSpace> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let members = family.members();
    let diameters: Vec<u64> = members.iter().map(|m| m.graph.diameter() as u64).collect();
    let mut separations = Vec::with_capacity(members.len());
    let mut previous = 0u64;
    for (pos, member) in members.iter().enumerate() {
        let next_diam = diameters.get(pos + 1).copied().unwrap_or(0);
        let rule = diameters[pos].max(next_diam) + member.index as u64 + 1;
        let r = rule.max(previous + 1);
        separations.push(r);
        previous = r;
    }
    let mut offsets = Vec::with_capacity(members.len());
    let mut total = 0;
    for member in members {
        offsets.push(total);
        total += member.graph.n();
    }
    Ok(UnionSpace {
        offsets,
        sizes: members.iter().map(|m| m.graph.n()).collect(),
        separations,
        metrics: members.iter().map(|m| m.graph.metric().clone()).collect(),
    })
}

impl UnionSpace {
    /// Isolation radius of component `index` (1-based).
    pub fn separation(&self, index: usize) -> u64 {
        self.separations[index - 1]
    }

    /// Component (1-based) and local vertex for a global point.
    pub fn locate(&self, point: usize) -> (usize, usize) {
        let pos = match self.offsets.binary_search(&point) {
            Ok(p) => p,
            Err(p) => p - 1,
        };
        (pos + 1, point - self.offsets[pos])
    }

    pub fn global(&self, index: usize, local: usize) -> usize {
        self.offsets[index - 1] + local
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }
}

impl MetricSpace for UnionSpace {
    fn points(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn dist(&self, x: usize, y: usize) -> u32 {
        let (ci, lx) = self.locate(x);
        let (cj, ly) = self.locate(y);
        if ci == cj {
            return self.metrics[ci - 1].dist(lx, ly);
        }
        let crossing = self.separations[ci - 1] + self.separations[cj - 1];
        crossing.min((INFINITE - 1) as u64) as u32
    }
}

/// Per-index expansion margins with a finite-horizon verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyDiagnostic {
    pub horizon: usize,
    pub sizes: Vec<usize>,
    /// Coboundary gaps 2*h_i, per member.
    pub margins: Vec<f64>,
    pub inf_margin: f64,
    /// Least-squares slope of log margin against log size; strongly
    /// negative means the margins decay polynomially in size.
    pub trend_slope: f64,
    pub threshold: f64,
    pub sizes_strictly_increasing: bool,
    /// True when any margin rests on a sweep upper bound instead of exact
    /// enumeration.
    pub heuristic: bool,
    pub expander_consistent: bool,
}

/// Margins and verdict over the first `horizon` members, default
/// threshold and enumeration cap.
pub fn expander_verdict(family: &GraphFamily, horizon: usize) -> Result<FamilyDiagnostic> {
    expander_verdict_configured(family, horizon, DEFAULT_MARGIN_THRESHOLD, DEFAULT_EXACT_CAP)
}

pub fn expander_verdict_configured(
    family: &GraphFamily,
    horizon: usize,
    threshold: f64,
    cap: usize,
) -> Result<FamilyDiagnostic> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let horizon = horizon.min(family.len());
    if horizon == 0 {
        return Err(Error::EmptyFamily);
    }
    let mut margins = Vec::with_capacity(horizon);
    let mut sizes = Vec::with_capacity(horizon);
    let mut heuristic = false;
    for member in &family.members()[..horizon] {
        let margin = match cheeger::cheeger_exact_capped(&member.graph, cap) {
            Ok(cut) => 2.0 * cut.h,
            Err(Error::ExactCapExceeded { .. }) => {
                heuristic = true;
                2.0 * cheeger::cheeger_sweep(&member.graph)?.h
            }
            Err(e) => return Err(e),
        };
        margins.push(margin);
        sizes.push(member.graph.n());
    }
    let inf_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let sizes_strictly_increasing = sizes.windows(2).all(|w| w[0] < w[1]);
    let trend_slope = log_log_slope(&sizes, &margins);
    let expander_consistent = inf_margin >= threshold && sizes_strictly_increasing;
    Ok(FamilyDiagnostic {
        horizon,
        sizes,
        margins,
        inf_margin,
        trend_slope,
        threshold,
        sizes_strictly_increasing,
        heuristic,
        expander_consistent,
    })
}

/// Least-squares slope of log(margin) on log(size), over members with a
/// positive margin. Fewer than two usable points give slope 0.
fn log_log_slope(sizes: &[usize], margins: &[f64]) -> f64 {
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .zip(margins)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&n, &m)| ((n as f64).ln(), m.ln()))
        .collect();
    if points.len() < 2 {
        return 0.0;
    }
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    if var == 0.0 {
        return 0.0;
    }
    cov / var
}

/// Finite-horizon surrogate for the coboundary being bounded below: all
/// computed margins clear the tolerance.
pub fn bounded_below_margin(margins: &[f64], tol: f64) -> Result<bool> {
    if margins.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(margins.iter().all(|&m| m >= tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(generator: &str, range: (usize, usize)) -> FamilySpec {
        FamilySpec {
            generator: generator.to_string(),
            range: Some(range),
            params: BTreeMap::new(),
            seed: 0,
        }
    }

    #[test]
    fn cycle_family() {
        let fam = make_family(&spec("cycle", (4, 12)), Path::new(".")).unwrap();
        assert_eq!(fam.len(), 9);
        assert_eq!(fam.k_bound(), 2);
        assert_eq!(fam.sizes(), (4..=12).collect::<Vec<_>>());
        assert_eq!(fam.members()[0].index, 1);
        assert_eq!(fam.members()[8].index, 9);
    }

    #[test]
    fn margulis_family() {
        let fam = make_family(&spec("margulis", (2, 6)), Path::new(".")).unwrap();
        assert_eq!(fam.sizes(), vec![4, 9, 16, 25, 36]);
        assert!(fam.k_bound() <= 8);
    }

    #[test]
    fn bad_specs() {
        assert_eq!(
            make_family(&spec("cycle", (9, 4)), Path::new(".")).unwrap_err(),
            Error::EmptyRange
        );
        assert!(matches!(
            make_family(&spec("moebius", (3, 5)), Path::new(".")),
            Err(Error::UnknownGenerator(_))
        ));
        assert_eq!(
            make_family(&spec("random_regular", (4, 6)), Path::new(".")).unwrap_err(),
            Error::MissingParam("k")
        );
    }

    #[test]
    fn random_regular_family_deterministic() {
        let mut s = spec("random_regular", (6, 10));
        s.params
            .insert("k".to_string(), serde_json::Value::from(2u64));
        s.seed = 42;
        let a = make_family(&s, Path::new(".")).unwrap();
        let b = make_family(&s, Path::new(".")).unwrap();
        for (ma, mb) in a.members().iter().zip(b.members()) {
            assert_eq!(ma.graph.directed_edges(), mb.graph.directed_edges());
        }
    }

    #[test]
    fn union_of_single_graph_is_its_metric() {
        let g = Graph::cycle(6).unwrap();
        let fam = GraphFamily::from_graphs(vec![g.clone()]).unwrap();
        let u = coarse_union(&fam).unwrap();
        assert_eq!(u.points(), 6);
        for x in 0..6 {
            for y in 0..6 {
                assert_eq!(u.dist(x, y), g.dist(x, y));
            }
        }
    }

    #[test]
    fn union_of_two_triangles() {
        let t = Graph::complete(3).unwrap();
        let fam = GraphFamily::from_graphs(vec![t.clone(), t]).unwrap();
        let u = coarse_union(&fam).unwrap();
        assert_eq!(u.points(), 6);
        let cross = u.dist(0, 3);
        assert!(cross >= 2);
        assert!(cross > 1);
        assert_eq!(u.dist(0, 1), 1);
        assert_eq!(u.dist(3, 5), 1);
        assert_eq!(u.dist(0, 3), u.dist(3, 0));
    }

    #[test]
    fn separations_strictly_increase_and_localize() {
        let fam = make_family(&spec("cycle", (3, 9)), Path::new(".")).unwrap();
        let u = coarse_union(&fam).unwrap();
        for i in 1..u.component_count() {
            assert!(u.separation(i) < u.separation(i + 1));
        }
        // A ball of radius below separation(i) stays inside component i.
        for (index, member) in fam.members().iter().enumerate().map(|(p, m)| (p + 1, m)) {
            let radius = (u.separation(index) - 1) as u32;
            for local in 0..member.graph.n() {
                let x = u.global(index, local);
                for y in u.ball(x, radius) {
                    assert_eq!(u.locate(y).0, index);
                }
            }
        }
    }

    #[test]
    fn union_triangle_inequality() {
        let fam = make_family(&spec("cycle", (3, 5)), Path::new(".")).unwrap();
        let u = coarse_union(&fam).unwrap();
        let n = u.points();
        for x in 0..n {
            for y in 0..n {
                assert_eq!(u.dist(x, y), u.dist(y, x));
                for z in 0..n {
                    assert!(u.dist(x, y) <= u.dist(x, z) + u.dist(z, y));
                }
            }
        }
    }

    #[test]
    fn cycle_margins_match_closed_form() {
        let fam = make_family(&spec("cycle", (4, 24)), Path::new(".")).unwrap();
        let d = expander_verdict(&fam, fam.len()).unwrap();
        for (n, margin) in d.sizes.iter().zip(&d.margins) {
            assert!((margin - 4.0 / (n / 2) as f64).abs() < 1e-12);
        }
        assert!(!d.expander_consistent);
        assert!(!d.heuristic);
        assert!(d.trend_slope < -0.5, "slope {}", d.trend_slope);
    }

    #[test]
    fn complete_family_is_consistent() {
        let graphs: Vec<Graph> = (4..=10).map(|n| Graph::complete(n).unwrap()).collect();
        let fam = GraphFamily::from_graphs(graphs).unwrap();
        let d = expander_verdict(&fam, fam.len()).unwrap();
        assert!(d.expander_consistent);
        assert!(d.sizes_strictly_increasing);
        assert!(d.trend_slope > 0.5);
        for (n, margin) in d.sizes.iter().zip(&d.margins) {
            assert!((margin - 2.0 * n.div_ceil(2) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn margulis_prefix_is_consistent() {
        let fam = make_family(&spec("margulis", (2, 4)), Path::new(".")).unwrap();
        let d = expander_verdict(&fam, fam.len()).unwrap();
        assert!(d.expander_consistent, "margins {:?}", d.margins);
        assert!(!d.heuristic);
        assert!(d.inf_margin >= DEFAULT_MARGIN_THRESHOLD);
    }

    #[test]
    fn verdict_false_is_monotone_in_horizon() {
        let fam = make_family(&spec("cycle", (4, 30)), Path::new(".")).unwrap();
        let mut seen_false = false;
        for horizon in 1..=fam.len() {
            let d = expander_verdict(&fam, horizon).unwrap();
            if seen_false {
                assert!(!d.expander_consistent, "horizon {horizon}");
            }
            seen_false = seen_false || !d.expander_consistent;
        }
        assert!(seen_false);
    }

    #[test]
    fn margin_threshold_checks() {
        assert_eq!(bounded_below_margin(&[1.0, 1.0, 1.0], 0.5), Ok(true));
        assert_eq!(
            bounded_below_margin(&(1..=100).map(|n| 1.0 / n as f64).collect::<Vec<_>>(), 0.05),
            Ok(false)
        );
        assert_eq!(bounded_below_margin(&[], 0.1), Err(Error::EmptyFamily));
    }

    #[test]
    fn from_files_family() {
        let dir = std::env::temp_dir().join("expa_family_test");
        std::fs::create_dir_all(&dir).unwrap();
        let g = Graph::cycle(5).unwrap();
        std::fs::write(
            dir.join("g0.json"),
            serde_json::to_string(&g.to_spec()).unwrap(),
        )
        .unwrap();
        let mut s = FamilySpec {
            generator: "from_files".to_string(),
            range: None,
            params: BTreeMap::new(),
            seed: 0,
        };
        s.params.insert(
            "paths".to_string(),
            serde_json::Value::from(vec!["g0.json"]),
        );
        let fam = make_family(&s, &dir).unwrap();
        assert_eq!(fam.sizes(), vec![5]);
        assert_eq!(fam.members()[0].graph.directed_edges(), g.directed_edges());
    }
}
