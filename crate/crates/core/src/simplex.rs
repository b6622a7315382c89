//! Dense two-phase simplex solver for the kernel-variation linear programs.
//!
//! The solver works on equality-form programs `min c.x  s.t.  A x = b, x >= 0`
//! with `b >= 0`.  Callers provide a starting-basis hint per row: a column that
//! already forms that row's identity vector (typically a slack introduced while
//! building the program).  Rows without a hint receive a phase-1 artificial.
//! Dual multipliers are read off the final tableau through those initial
//! identity columns, which is what makes the certified lower bounds in the
//! variation optimizer possible.

use crate::error::{Error, Result};

/// Sparse equality-form linear program.
pub struct Lp {
    /// Number of structural (original) columns.
    pub cols: usize,
    /// Constraint matrix entries as `(row, col, coefficient)`.
    pub entries: Vec<(usize, usize, f64)>,
    /// Right-hand side, one entry per row; must be nonnegative.
    pub b: Vec<f64>,
    /// Objective coefficients, one per structural column.
    pub c: Vec<f64>,
    /// Per-row starting basis hint: a structural column whose tableau column
    /// is exactly that row's identity vector.  `None` requests an artificial.
    pub basis_hint: Vec<Option<usize>>,
}

/// Primal and dual output of a solved program.
#[derive(Debug)]
pub struct LpSolution {
    /// Objective value `c.x` at the returned point.
    pub objective: f64,
    /// Values of the structural columns.
    pub x: Vec<f64>,
    /// Dual multipliers, one per row, read from the final tableau.
    pub duals: Vec<f64>,
    /// Total pivot count across both phases.
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

struct Tableau {
    width: usize,
    rows: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Objective row tracked incrementally; entry `width - 1` is `-z`.
    zrow: Vec<f64>,
    /// Initial identity column of each row, in row order.  These columns
    /// carry the inverse of the current basis, which is what the
    /// lexicographic ratio test orders rows by.
    lex_cols: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    /// Rebuilds the objective row for costs `cost` priced out over the basis.
    fn load_costs(&mut self, cost: &[f64]) {
        self.zrow.clear();
        self.zrow.extend_from_slice(cost);
        self.zrow.push(0.0);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * self.width..(r + 1) * self.width];
                for (z, &a) in self.zrow.iter_mut().zip(row.iter()) {
                    *z -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let start = row * self.width;
        let piv = self.data[start + col];
        if (piv - 1.0).abs() > f64::EPSILON {
            let inv = 1.0 / piv;
            for v in &mut self.data[start..start + self.width] {
                if *v != 0.0 {
                    *v *= inv;
                }
            }
        }
        self.data[start + col] = 1.0;
        let (before, rest) = self.data.split_at_mut(start);
        let (prow, after) = rest.split_at_mut(self.width);
        for chunk in before
            .chunks_mut(self.width)
            .chain(after.chunks_mut(self.width))
        {
            let factor = std::mem::replace(&mut chunk[col], 0.0);
            if factor != 0.0 {
                for (v, &p) in chunk.iter_mut().zip(prow.iter()) {
                    if p != 0.0 {
                        *v -= factor * p;
                    }
                }
                chunk[col] = 0.0;
            }
        }
        let zfac = std::mem::replace(&mut self.zrow[col], 0.0);
        if zfac != 0.0 {
            for (z, &p) in self.zrow.iter_mut().zip(prow.iter()) {
                if p != 0.0 {
                    *z -= zfac * p;
                }
            }
            self.zrow[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Runs the simplex loop until optimality over the allowed columns.
    ///
    /// Entering columns follow Dantzig pricing; the leaving row follows the
    /// lexicographic ratio test.  The programs built here start at a vertex
    /// where every slack-backed row is zero, so plain minimum-ratio pivoting
    /// wanders degenerate plateaus; the lexicographic rule strictly
    /// decreases the extended objective on every pivot and cannot cycle.
    fn run<F: Fn(usize) -> bool>(
        &mut self,
        allowed: F,
        max_pivots: usize,
        pivots: &mut usize,
    ) -> Result<()> {
        let ncols = self.width - 1;
        loop {
            let mut entering = None;
            let mut most = -COST_TOL;
            for j in 0..ncols {
                let z = self.zrow[j];
                if z < most && allowed(j) {
                    most = z;
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };

            let mut tied: Vec<usize> = Vec::new();
            let mut best = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, col);
                if a > PIVOT_TOL {
                    let ratio = (self.at(r, ncols)).max(0.0) / a;
                    if ratio < best - 1e-12 {
                        best = ratio;
                        tied.clear();
                        tied.push(r);
                    } else if ratio <= best + 1e-12 {
                        tied.push(r);
                    }
                }
            }
            if tied.is_empty() {
                // Unbounded column; the programs built here are bounded, so
                // treat it as numerical breakdown rather than a real ray.
                return Err(Error::LpStalled { pivots: *pivots });
            }
            let row = if tied.len() == 1 {
                tied[0]
            } else {
                self.lex_leaving(col, &tied)
            };

            self.pivot(row, col);
            *pivots += 1;
            if *pivots > max_pivots {
                return Err(Error::LpStalled { pivots: *pivots });
            }
        }
    }

    /// Breaks ratio-test ties by comparing rows lexicographically over the
    /// initial identity columns, each scaled by its pivot entry.  Rows with
    /// pivot entries far below the largest tied entry are dropped first:
    /// the scaled comparisons would let their noise dominate the order, and
    /// pivoting on a small element degrades the tableau.
    fn lex_leaving(&self, col: usize, tied: &[usize]) -> usize {
        let largest = tied
            .iter()
            .map(|&r| self.at(r, col))
            .fold(0.0f64, f64::max);
        let mut alive: Vec<usize> = tied
            .iter()
            .copied()
            .filter(|&r| self.at(r, col) >= 0.1 * largest)
            .collect();
        for &c in &self.lex_cols {
            if alive.len() == 1 {
                break;
            }
            let mut best = f64::INFINITY;
            for &r in &alive {
                best = best.min(self.at(r, c) / self.at(r, col));
            }
            alive.retain(|&r| self.at(r, c) / self.at(r, col) <= best + 1e-12);
        }
        // Identical lexicographic rows only appear through numerical fuzz;
        // fall back to the smallest basis index.
        alive
            .into_iter()
            .min_by_key(|&r| self.basis[r])
            .expect("at least one tied row")
    }
}

/// Solves the program, returning primal values, duals, and pivot count.
///
/// Fails with [`Error::LpStalled`] if either phase exceeds `max_pivots`
/// pivots in total, and with [`Error::MalformedSpec`] on inconsistent input
/// (negative right-hand side, out-of-range indices, or an infeasible system).
/// Minimizes `cost` over the tableau, reloading the objective row until a
/// freshly priced row confirms optimality.  The incremental updates in
/// `run` drift over long degenerate stretches, and a drifted row can both
/// stop early and misreport duals; repricing from scratch costs one pass
/// and removes the accumulated error.
fn optimize<F: Fn(usize) -> bool + Copy>(
    tab: &mut Tableau,
    cost: &[f64],
    allowed: F,
    max_pivots: usize,
    pivots: &mut usize,
) -> Result<()> {
    loop {
        tab.load_costs(cost);
        let before = *pivots;
        tab.run(allowed, max_pivots, pivots)?;
        if *pivots == before {
            return Ok(());
        }
    }
}

pub fn solve(lp: &Lp, max_pivots: usize) -> Result<LpSolution> {
    let m = lp.b.len();
    if lp.basis_hint.len() != m || lp.c.len() != lp.cols {
        return Err(Error::MalformedSpec(
            "linear program dimensions disagree".into(),
        ));
    }
    for (i, &bi) in lp.b.iter().enumerate() {
        if !bi.is_finite() || bi < 0.0 {
            return Err(Error::MalformedSpec(format!(
                "right-hand side {bi} at row {i} must be finite and nonnegative"
            )));
        }
    }
    for &(r, c, v) in &lp.entries {
        if r >= m || c >= lp.cols || !v.is_finite() {
            return Err(Error::MalformedSpec(format!(
                "matrix entry ({r}, {c}, {v}) out of range"
            )));
        }
    }

    let artificial_rows: Vec<usize> = (0..m).filter(|&i| lp.basis_hint[i].is_none()).collect();
    let n_art = artificial_rows.len();
    let total = lp.cols + n_art;
    let width = total + 1;

    let mut tab = Tableau {
        width,
        rows: m,
        data: vec![0.0; m * width],
        basis: vec![0; m],
        zrow: Vec::new(),
        lex_cols: Vec::with_capacity(m),
    };
    for &(r, c, v) in &lp.entries {
        tab.data[r * width + c] += v;
    }
    for (i, &bi) in lp.b.iter().enumerate() {
        tab.data[i * width + total] = bi;
    }
    // Identity column per row: the hinted slack, or a fresh artificial.
    let mut art_col = vec![usize::MAX; m];
    for (k, &r) in artificial_rows.iter().enumerate() {
        let col = lp.cols + k;
        art_col[r] = col;
        tab.data[r * width + col] = 1.0;
    }
    for (r, hint) in lp.basis_hint.iter().enumerate() {
        tab.basis[r] = match hint {
            Some(col) => *col,
            None => art_col[r],
        };
    }
    tab.lex_cols = tab.basis.clone();

    let mut pivots = 0usize;

    if n_art > 0 {
        let mut phase1 = vec![0.0; total];
        for &r in &artificial_rows {
            phase1[art_col[r]] = 1.0;
        }
        optimize(&mut tab, &phase1, |_| true, max_pivots, &mut pivots)?;
        let infeas = -tab.zrow[total];
        if infeas > 1e-7 {
            return Err(Error::MalformedSpec(format!(
                "linear program infeasible: phase-1 residual {infeas}"
            )));
        }
        // Drive leftover artificials out of the basis where possible; rows
        // that admit no structural pivot are dependent and stay harmless.
        for r in 0..m {
            if tab.basis[r] >= lp.cols {
                for j in 0..lp.cols {
                    if tab.at(r, j).abs() > 1e-7 {
                        tab.pivot(r, j);
                        pivots += 1;
                        break;
                    }
                }
            }
        }
    }

    let mut phase2 = vec![0.0; total];
    phase2[..lp.cols].copy_from_slice(&lp.c);
    optimize(&mut tab, &phase2, |j| j < lp.cols, max_pivots, &mut pivots)?;

    let mut x = vec![0.0; lp.cols];
    for r in 0..m {
        let col = tab.basis[r];
        if col < lp.cols {
            x[col] = tab.at(r, total).max(0.0);
        }
    }
    // Recompute the objective from the primal point rather than trusting the
    // incrementally updated tableau value.
    let objective: f64 = lp.c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();

    // The dual of row i is minus the final reduced cost of the column that
    // started as row i's identity vector, corrected for that column's own
    // structural cost when it is a hinted slack.
    let mut duals = vec![0.0; m];
    for r in 0..m {
        let (col, base_cost) = match lp.basis_hint[r] {
            Some(col) => (col, lp.c[col]),
            None => (art_col[r], 0.0),
        };
        duals[r] = base_cost - tab.zrow[col];
    }

    Ok(LpSolution {
        objective,
        x,
        duals,
        pivots,
    })
}
