//! Dense two-phase simplex for the small max-min programs behind chain
//! coherence.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 32;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

/// Entering-variable selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest-index improving column throughout.
    Bland,
    /// Largest reduced cost, falling back to Bland's rule for the rest of
    /// the phase after a streak of degenerate pivots.
    #[default]
    DantzigThenBland,
}

/// `maximize c·x  s.t.  A x (≤|=) b,  x ≥ 0` with `b ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Optimal dual price of each row, in row order.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        debug_assert!(rhs >= 0.0);
        self.rows.push((coeffs, rel, rhs));
    }

    pub fn solve(&self, rule: PivotRule) -> Result<LpSolution> {
        Tableau::build(self).run(rule)
    }
}

struct Tableau {
    m: usize,
    /// Structural + slack + artificial columns; the last column is the RHS.
    width: usize,
    n_vars: usize,
    first_artificial: usize,
    cells: Vec<f64>,
    basis: Vec<usize>,
    /// Slack or artificial column that starts as row `i`'s unit vector.
    row_unit: Vec<usize>,
    objective: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.1 == Relation::Le).count();
        let n_art = m - n_slack;
        let first_artificial = lp.n_vars + n_slack;
        let width = first_artificial + n_art + 1;
        let mut cells = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (lp.n_vars, first_artificial);
        for (i, (coeffs, rel, rhs)) in lp.rows.iter().enumerate() {
            let row = &mut cells[i * width..(i + 1) * width];
            for &(j, a) in coeffs {
                row[j] += a;
            }
            row[width - 1] = *rhs;
            let b = match rel {
                Relation::Le => {
                    next_slack += 1;
                    next_slack - 1
                }
                Relation::Eq => {
                    next_art += 1;
                    next_art - 1
                }
            };
            row[b] = 1.0;
            basis.push(b);
        }
        Tableau {
            m,
            width,
            n_vars: lp.n_vars,
            first_artificial,
            cells,
            row_unit: basis.clone(),
            basis,
            objective: lp.objective.clone(),
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    /// Reduced-cost row for column costs `cost`.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z = cost.to_vec();
        z.resize(self.width, 0.0);
        for i in 0..self.m {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                let row = &self.cells[i * self.width..(i + 1) * self.width];
                for (zj, a) in z.iter_mut().zip(row) {
                    *zj -= cb * a;
                }
            }
        }
        z
    }

    fn pivot(&mut self, r: usize, c: usize, z: &mut [f64]) {
        let w = self.width;
        let p = self.at(r, c);
        for v in &mut self.cells[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.cells.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = z[c];
        if f != 0.0 {
            for (v, pv) in z.iter_mut().zip(pivot_row.iter()) {
                *v -= f * pv;
            }
            z[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Run the simplex on reduced costs `z` over columns `< col_limit`.
    fn optimize(&mut self, z: &mut [f64], col_limit: usize, rule: PivotRule, pivots: &mut usize) -> Result<()> {
        let mut bland = rule == PivotRule::Bland;
        let mut streak = 0;
        loop {
            let entering = if bland {
                (0..col_limit).find(|&j| z[j] > EPS)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..col_limit {
                    if z[j] > EPS && best.is_none_or(|b| z[j] > z[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Numeric {
                    iteration: *pivots,
                    message: "linear program is unbounded".into(),
                });
            };
            if ratio <= EPS {
                streak += 1;
                if streak >= DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            self.pivot(r, c, z);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::Numeric {
                    iteration: *pivots,
                    message: "simplex pivot limit reached".into(),
                });
            }
        }
    }

    fn run(mut self, rule: PivotRule) -> Result<LpSolution> {
        let mut pivots = 0;
        let n_art = self.width - 1 - self.first_artificial;
        if n_art > 0 {
            let mut cost = vec![0.0; self.width - 1];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            let mut z = self.reduced_costs(&cost);
            self.optimize(&mut z, self.width - 1, rule, &mut pivots)?;
            let infeasibility: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.rhs(i))
                .sum();
            if infeasibility > 1e-9 {
                return Err(Error::Numeric {
                    iteration: pivots,
                    message: format!("linear program is infeasible ({infeasibility:e})"),
                });
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            for i in 0..self.m {
                if self.basis[i] >= self.first_artificial {
                    if let Some(c) = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > EPS) {
                        self.pivot(i, c, &mut z);
                        pivots += 1;
                    }
                }
            }
        }
        let mut z = self.reduced_costs(&self.objective.clone());
        self.optimize(&mut z, self.first_artificial, rule, &mut pivots)?;
        let mut x = vec![0.0; self.n_vars];
        for i in 0..self.m {
            if self.basis[i] < self.n_vars {
                x[self.basis[i]] = self.rhs(i);
            }
        }
        let value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let duals = self.row_unit.iter().map(|&u| -z[u]).collect();
        Ok(LpSolution {
            value,
            x,
            duals,
            pivots,
        })
    }
}
