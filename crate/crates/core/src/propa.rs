//! Exact optimization of the kernel variation at a fixed scale pair.
//!
//! For a metric space, pair radius `R`, and support radius `S`, the optimizer
//! minimizes `V = max { ||phi(x) - phi(y)||_1 : d(x, y) <= R }` over kernels
//! with exact unit row sums, nonnegative entries, and `supp(phi(x))` inside
//! `B_S(x)`, optionally restricted to symmetric kernels.  The answer comes
//! with a two-sided certificate: the returned kernel evaluates to the upper
//! bound, and a dual multiplier vector proves the lower bound, so callers
//! never have to trust the solver's arithmetic blindly.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{variation, Kernel};
use crate::metric::MetricSpace;
use crate::simplex::{solve, Lp};

/// Default cap on `n * max_ball_size(S)`, the variable budget of the program.
pub const DEFAULT_LP_CAP: usize = 2000;

/// Certificate accuracy the optimizer is expected to reach.
pub const CERTIFICATE_TOL: f64 = 1e-7;

const MAX_PIVOTS: usize = 50_000;

/// Two-sided optimality certificate for a variation optimum.
#[derive(Debug, Clone, Serialize)]
pub struct PropaCertificate {
    /// Variation of the returned kernel, evaluated from scratch.
    pub upper: f64,
    /// Dual bound: no admissible kernel has variation below this.
    pub lower: f64,
    /// `upper - lower`, clamped at zero.
    pub gap: f64,
    /// Simplex pivots spent across both phases.
    pub pivots: usize,
}

/// Optimal kernel variation at scales `(R, S)` together with its witness.
#[derive(Debug, Clone)]
pub struct PropaOptimum {
    /// Certified optimum; equals `certificate.upper`, the achieved side.
    pub value: f64,
    /// Kernel achieving `value`.
    pub kernel: Kernel,
    pub certificate: PropaCertificate,
    pub r: u32,
    pub s: u32,
    pub symmetric: bool,
}

/// Intersection and differences of two sorted vertex lists.
fn split_balls(bx: &[usize], by: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut shared = Vec::new();
    let mut only_x = Vec::new();
    let mut only_y = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < bx.len() && j < by.len() {
        match bx[i].cmp(&by[j]) {
            std::cmp::Ordering::Less => {
                only_x.push(bx[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                only_y.push(by[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                shared.push(bx[i]);
                i += 1;
                j += 1;
            }
        }
    }
    only_x.extend_from_slice(&bx[i..]);
    only_y.extend_from_slice(&by[j..]);
    (shared, only_x, only_y)
}

/// Minimizes the variation at `(r, s)` under the default variable cap.
pub fn propa_optimum(
    space: &impl MetricSpace,
    r: u32,
    s: u32,
    symmetric: bool,
) -> Result<PropaOptimum> {
    propa_optimum_capped(space, r, s, symmetric, DEFAULT_LP_CAP)
}

/// Minimizes the variation at `(r, s)` with an explicit variable cap.
pub fn propa_optimum_capped(
    space: &impl MetricSpace,
    r: u32,
    s: u32,
    symmetric: bool,
    cap: usize,
) -> Result<PropaOptimum> {
    let n = space.points();
    let size = n * space.max_ball_size(s);
    if size > cap {
        return Err(Error::LpCapExceeded { size, cap });
    }

    let balls: Vec<Vec<usize>> = (0..n).map(|x| space.ball(x, s)).collect();

    // Kernel entry variables come first so the primal solution is easy to
    // read back.  Symmetric mode shares one variable per unordered pair.
    let key = |x: usize, z: usize| if symmetric { (x.min(z), x.max(z)) } else { (x, z) };
    let mut phi_col: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (x, ball) in balls.iter().enumerate() {
        for &z in ball {
            let next = phi_col.len();
            phi_col.entry(key(x, z)).or_insert(next);
        }
    }
    let n_phi = phi_col.len();
    let v_col = n_phi;
    let mut next_col = n_phi + 1;

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut c_rows = 0usize;
    let mut basis_hint: Vec<Option<usize>> = Vec::new();

    for (x, ball) in balls.iter().enumerate() {
        for &z in ball {
            entries.push((c_rows, phi_col[&key(x, z)], 1.0));
        }
        b.push(1.0);
        basis_hint.push(None);
        c_rows += 1;
    }

    let mut pair_count = 0usize;
    for x in 0..n {
        for y in (x + 1)..n {
            if space.dist(x, y) > r {
                continue;
            }
            pair_count += 1;
            let (shared, only_x, only_y) = split_balls(&balls[x], &balls[y]);
            let mut t_cols = Vec::with_capacity(shared.len());
            for &z in &shared {
                let t = next_col;
                next_col += 1;
                t_cols.push(t);
                let cx = phi_col[&key(x, z)];
                let cy = phi_col[&key(y, z)];
                // t >= phi(x)(z) - phi(y)(z) and t >= the reverse difference,
                // each written as an equality with its own basic slack.
                for sign in [1.0, -1.0] {
                    let slack = next_col;
                    next_col += 1;
                    entries.push((c_rows, t, -1.0));
                    entries.push((c_rows, cx, sign));
                    entries.push((c_rows, cy, -sign));
                    entries.push((c_rows, slack, 1.0));
                    b.push(0.0);
                    basis_hint.push(Some(slack));
                    c_rows += 1;
                }
            }
            // V dominates the pair's l1 distance: entries outside the shared
            // support contribute their full (nonnegative) value directly.
            let slack = next_col;
            next_col += 1;
            entries.push((c_rows, v_col, -1.0));
            for &z in &only_x {
                entries.push((c_rows, phi_col[&key(x, z)], 1.0));
            }
            for &z in &only_y {
                entries.push((c_rows, phi_col[&key(y, z)], 1.0));
            }
            for &t in &t_cols {
                entries.push((c_rows, t, 1.0));
            }
            entries.push((c_rows, slack, 1.0));
            b.push(0.0);
            basis_hint.push(Some(slack));
            c_rows += 1;
        }
    }

    let mut c = vec![0.0; next_col];
    c[v_col] = 1.0;
    let lp = Lp {
        cols: next_col,
        entries,
        b,
        c,
        basis_hint,
    };
    let sol = solve(&lp, MAX_PIVOTS)?;

    // Read back the kernel.  Entries below the noise floor are dropped; the
    // unrestricted rows are then rescaled to unit sum, while symmetric rows
    // keep the shared pair values verbatim so the symmetry stays exact.
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (x, ball) in balls.iter().enumerate() {
        for &z in ball {
            let v = sol.x[phi_col[&key(x, z)]];
            if v > 1e-12 {
                rows[x].insert(z, v);
            }
        }
    }
    if !symmetric {
        for row in &mut rows {
            let sum: f64 = row.values().sum();
            if sum > 0.0 {
                for v in row.values_mut() {
                    *v /= sum;
                }
            }
        }
    }
    let kernel = Kernel::new(space, rows)?;
    let upper = variation(space, &kernel, r).value;

    // Lower bound from the duals: recompute reduced costs from the original
    // sparse data, then discount the worst violation against an a-priori
    // bound on the l1 mass of an optimal point (row sums account for n, each
    // pair for at most 8 across t and slack variables, V itself for 2).
    let mut reduced = lp.c.clone();
    for &(row, col, v) in &lp.entries {
        reduced[col] -= sol.duals[row] * v;
    }
    let worst = reduced.iter().fold(0.0f64, |acc, r| acc.max(-r));
    let mass_bound = (n + 8 * pair_count + 4) as f64;
    let yb: f64 = sol
        .duals
        .iter()
        .zip(lp.b.iter())
        .map(|(y, bi)| y * bi)
        .sum();
    let lower = (yb - worst * mass_bound).min(upper).max(0.0);

    Ok(PropaOptimum {
        value: upper,
        kernel,
        certificate: PropaCertificate {
            upper,
            lower,
            gap: (upper - lower).max(0.0),
            pivots: sol.pivots,
        },
        r,
        s,
        symmetric,
    })
}
