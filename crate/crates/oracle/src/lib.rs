//! Exact reference optimizer for the kernel-variation problem, in
//! arbitrary-precision rational arithmetic. Used by test suites as an
//! independent check on the float optimizer; deliberately naive: textbook
//! two-phase simplex with Bland's rule and a straightforward constraint
//! layout, no shared code with the production formulation.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

use expa_core::graph::Graph;
use expa_core::metric::MetricSpace;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Minimizes c'x subject to Ax = b, x >= 0, by two-phase simplex with
/// Bland's rule. Rows must have b >= 0. Panics on malformed input since
/// this is test support.
pub struct ExactLp {
    pub rows: Vec<Vec<BigRational>>,
    pub b: Vec<BigRational>,
    pub c: Vec<BigRational>,
}

pub struct ExactSolution {
    pub objective: BigRational,
    pub x: Vec<BigRational>,
}

pub fn solve_exact(lp: &ExactLp) -> ExactSolution {
    let m = lp.rows.len();
    let n = lp.c.len();
    for row in &lp.rows {
        assert_eq!(row.len(), n, "row length mismatch");
    }
    assert!(lp.b.iter().all(|v| !v.is_negative()), "b must be >= 0");

    // Tableau columns: n originals, m artificials, then rhs.
    let total = n + m;
    let mut a = vec![vec![BigRational::zero(); total + 1]; m];
    for i in 0..m {
        for j in 0..n {
            a[i][j] = lp.rows[i][j].clone();
        }
        a[i][n + i] = BigRational::one();
        a[i][total] = lp.b[i].clone();
    }
    let mut basis: Vec<usize> = (n..total).collect();

    // Phase 1: minimize the sum of artificials.
    let mut cost = vec![BigRational::zero(); total];
    for j in n..total {
        cost[j] = BigRational::one();
    }
    run_phase(&mut a, &mut basis, &cost, n, false);
    let phase1: BigRational = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n)
        .map(|(i, _)| a[i][total].clone())
        .sum();
    assert!(phase1.is_zero(), "infeasible program");

    // Drive leftover artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !a[i][j].is_zero()) {
                pivot(&mut a, &mut basis, i, j);
            }
        }
    }

    // Phase 2 on the original costs, artificials barred from entering.
    let mut cost = vec![BigRational::zero(); total];
    cost[..n].clone_from_slice(&lp.c);
    run_phase(&mut a, &mut basis, &cost, n, true);

    let mut x = vec![BigRational::zero(); n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = a[i][total].clone();
        }
    }
    let objective = lp.c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    ExactSolution { objective, x }
}

fn run_phase(
    a: &mut [Vec<BigRational>],
    basis: &mut [usize],
    cost: &[BigRational],
    n: usize,
    bar_artificials: bool,
) {
    let total = cost.len();
    // Reduced-cost row, kept current through pivots.
    let mut z = cost.to_vec();
    for (i, &bj) in basis.iter().enumerate() {
        if cost[bj].is_zero() {
            continue;
        }
        for j in 0..total {
            let delta = &cost[bj] * &a[i][j];
            z[j] -= delta;
        }
    }
    loop {
        // Bland: smallest eligible column index.
        let entering = (0..total)
            .filter(|&j| !(bar_artificials && j >= n))
            .find(|&j| z[j].is_negative());
        let Some(j) = entering else {
            return;
        };
        // Ratio test, ties by smallest basis index (Bland).
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..a.len() {
            if a[i][j].is_positive() {
                let ratio = &a[i][total] / &a[i][j];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (i, _) = leave.expect("bounded program");
        pivot(a, basis, i, j);
        let zcol = std::mem::replace(&mut z[j], BigRational::zero());
        for (jj, zj) in z.iter_mut().enumerate() {
            if jj == j || a[i][jj].is_zero() {
                continue;
            }
            let delta = &zcol * &a[i][jj];
            *zj -= delta;
        }
    }
}

fn pivot(a: &mut [Vec<BigRational>], basis: &mut [usize], row: usize, col: usize) {
    let total = a[0].len() - 1;
    let p = a[row][col].clone();
    for v in &mut a[row] {
        if !v.is_zero() {
            *v /= &p;
        }
    }
    let (before, rest) = a.split_at_mut(row);
    let (pivot_row, after) = rest.split_first_mut().expect("row exists");
    for other in before.iter_mut().chain(after.iter_mut()) {
        if other[col].is_zero() {
            continue;
        }
        let factor = std::mem::replace(&mut other[col], BigRational::zero());
        for j in 0..=total {
            if j == col || pivot_row[j].is_zero() {
                continue;
            }
            let delta = &factor * &pivot_row[j];
            other[j] -= delta;
        }
    }
    basis[row] = col;
}

/// Exact optimum of the variation minimization: kernels with row sums 1,
/// nonnegative entries, support in B_S(x), optional symmetry, minimizing
/// the max l1 row distance over pairs within distance R.
pub fn exact_propa(graph: &Graph, r: u32, s: u32, symmetric: bool) -> BigRational {
    let n = graph.n();
    let balls: Vec<Vec<usize>> = (0..n).map(|x| graph.ball(x, s)).collect();

    // Kernel variables: (x, z) with z in B_S(x); symmetric mode shares the
    // unordered pair.
    let mut var_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut next = 0usize;
    for (x, ball) in balls.iter().enumerate() {
        for &z in ball {
            let key = if symmetric {
                (x.min(z), x.max(z))
            } else {
                (x, z)
            };
            var_of.entry(key).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
        }
    }
    let phi = |x: usize, z: usize| -> Option<usize> {
        if graph.dist(x, z) > s {
            return None;
        }
        let key = if symmetric {
            (x.min(z), x.max(z))
        } else {
            (x, z)
        };
        var_of.get(&key).copied()
    };

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| ((x + 1)..n).map(move |y| (x, y)))
        .filter(|&(x, y)| graph.dist(x, y) <= r)
        .collect();

    // Aux variables: t per (pair, z in the union of supports), the value V,
    // one surplus per inequality.
    let mut t_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut cols = next;
    let mut union_sets: Vec<Vec<usize>> = Vec::with_capacity(pairs.len());
    for (p, &(x, y)) in pairs.iter().enumerate() {
        let mut zs: Vec<usize> = balls[x].iter().chain(&balls[y]).copied().collect();
        zs.sort_unstable();
        zs.dedup();
        for &z in &zs {
            t_of.insert((p, z), cols);
            cols += 1;
        }
        union_sets.push(zs);
    }
    let v_col = cols;
    cols += 1;
    let ineq_count: usize = union_sets.iter().map(|u| 2 * u.len()).sum::<usize>() + pairs.len();
    let surplus_start = cols;
    cols += ineq_count;

    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut b = Vec::new();

    // Row sums: sum of phi over the ball equals 1.
    for (x, ball) in balls.iter().enumerate() {
        let mut row = vec![BigRational::zero(); cols];
        for &z in ball {
            let var = phi(x, z).expect("ball member within radius");
            row[var] += BigRational::one();
        }
        rows.push(row);
        b.push(BigRational::one());
    }

    // t >= +/- (phi_x - phi_y) and V >= sum of t, as equalities with
    // surplus columns.
    let mut surplus = surplus_start;
    for (p, &(x, y)) in pairs.iter().enumerate() {
        for &z in &union_sets[p] {
            for sign in [1i64, -1] {
                let mut row = vec![BigRational::zero(); cols];
                row[t_of[&(p, z)]] = BigRational::one();
                if let Some(vx) = phi(x, z) {
                    row[vx] -= rat(sign, 1);
                }
                if let Some(vy) = phi(y, z) {
                    row[vy] += rat(sign, 1);
                }
                row[surplus] = -BigRational::one();
                surplus += 1;
                rows.push(row);
                b.push(BigRational::zero());
            }
        }
        let mut row = vec![BigRational::zero(); cols];
        row[v_col] = BigRational::one();
        for &z in &union_sets[p] {
            row[t_of[&(p, z)]] = -BigRational::one();
        }
        row[surplus] = -BigRational::one();
        surplus += 1;
        rows.push(row);
        b.push(BigRational::zero());
    }

    let mut c = vec![BigRational::zero(); cols];
    c[v_col] = BigRational::one();

    solve_exact(&ExactLp { rows, b, c }).objective
}

/// All graphs on at most `max_n` vertices, one representative per
/// isomorphism class (the variation optimum is isomorphism-invariant).
pub fn graphs_up_to_iso(max_n: usize) -> Vec<Graph> {
    assert!(max_n <= 6, "permutation canonicalization only at toy sizes");
    let mut out = Vec::new();
    for n in 1..=max_n {
        let edge_list: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        let perms = permutations(n);
        for mask in 0..(1u64 << edge_list.len()) {
            if canonical_mask(mask, &edge_list, &perms) != mask {
                continue;
            }
            let edges: Vec<(usize, usize)> = edge_list
                .iter()
                .enumerate()
                .filter(|(e, _)| mask & (1 << e) != 0)
                .map(|(_, &uv)| uv)
                .collect();
            out.push(Graph::build(n, &edges).expect("valid edge list"));
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in out {
            for v in 0..n {
                if !p.contains(&v) {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

fn canonical_mask(mask: u64, edge_list: &[(usize, usize)], perms: &[Vec<usize>]) -> u64 {
    let index_of: BTreeMap<(usize, usize), usize> = edge_list
        .iter()
        .enumerate()
        .map(|(e, &uv)| (uv, e))
        .collect();
    perms
        .iter()
        .map(|p| {
            let mut image = 0u64;
            for (e, &(u, v)) in edge_list.iter().enumerate() {
                if mask & (1 << e) != 0 {
                    let (pu, pv) = (p[u], p[v]);
                    image |= 1 << index_of[&(pu.min(pv), pu.max(pv))];
                }
            }
            image
        })
        .min()
        .unwrap_or(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_solves_tiny_program() {
        // min -x1 - 2 x2 s.t. x1 + x2 + s = 4, x1 + 3 x2 + s2 = 6.
        let lp = ExactLp {
            rows: vec![
                vec![rat(1, 1), rat(1, 1), rat(1, 1), rat(0, 1)],
                vec![rat(1, 1), rat(3, 1), rat(0, 1), rat(1, 1)],
            ],
            b: vec![rat(4, 1), rat(6, 1)],
            c: vec![rat(-1, 1), rat(-2, 1), rat(0, 1), rat(0, 1)],
        };
        let sol = solve_exact(&lp);
        // Optimum at x = (3, 1): objective -5.
        assert_eq!(sol.objective, rat(-5, 1));
    }

    #[test]
    fn graph_counts_by_iso_class() {
        let all = graphs_up_to_iso(5);
        let per_n: Vec<usize> = (1..=5)
            .map(|n| all.iter().filter(|g| g.n() == n).count())
            .collect();
        // Known counts of graphs up to isomorphism on 1..5 vertices.
        assert_eq!(per_n, vec![1, 2, 4, 11, 34]);
        assert_eq!(all.len(), 52);
    }

    #[test]
    fn delta_forced_when_s_is_zero() {
        let g = Graph::path(2).unwrap();
        assert_eq!(exact_propa(&g, 1, 0, false), rat(2, 1));
        assert_eq!(exact_propa(&g, 1, 0, true), rat(2, 1));
    }

    #[test]
    fn large_s_gives_zero() {
        let g = Graph::complete(4).unwrap();
        assert_eq!(exact_propa(&g, 1, 1, false), rat(0, 1));
        let p = Graph::path(3).unwrap();
        assert_eq!(exact_propa(&p, 1, 2, false), rat(0, 1));
    }

    #[test]
    fn path3_frozen_values() {
        let p = Graph::path(3).unwrap();
        // Unrestricted: every row may sit on the middle vertex.
        assert_eq!(exact_propa(&p, 1, 1, false), rat(0, 1));
        // Symmetry forbids that: optimum 2/3.
        assert_eq!(exact_propa(&p, 1, 1, true), rat(2, 3));
    }

    #[test]
    fn symmetric_dominates_unrestricted() {
        for g in [
            Graph::path(4).unwrap(),
            Graph::cycle(5).unwrap(),
            Graph::build(4, &[(0, 1), (1, 2), (1, 3)]).unwrap(),
        ] {
            for s in 0..=2 {
                let free = exact_propa(&g, 1, s, false);
                let sym = exact_propa(&g, 1, s, true);
                assert!(sym >= free, "n={} s={s}", g.n());
            }
        }
    }
}
