//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Sized for the small equilibrium LPs in this crate (tens of variables).

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

/// `minimize cᵀx` subject to linear rows; variables are non-negative unless
/// marked free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    cost: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            cost: vec![0.0; num_vars],
            free: vec![false; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn set_cost(&mut self, var: usize, c: f64) {
        self.cost[var] = c;
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(v, _)| v < self.num_vars));
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self, tol: f64) -> Result<LpSolution> {
        // Column layout: split structural columns, then one slack/surplus per
        // inequality, then one artificial per row that needs it.
        let mut col_of = Vec::with_capacity(self.num_vars);
        let mut ncols = 0;
        for v in 0..self.num_vars {
            col_of.push(ncols);
            ncols += if self.free[v] { 2 } else { 1 };
        }
        let nstruct = ncols;
        let m = self.rows.len();

        let mut rows: Vec<Row> = self.rows.clone();
        for r in rows.iter_mut() {
            if r.rhs < 0.0 {
                r.rhs = -r.rhs;
                for c in r.coeffs.iter_mut() {
                    c.1 = -c.1;
                }
                r.relation = match r.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let nslack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
        let nart = rows.iter().filter(|r| r.relation != Relation::Le).count();
        let total = nstruct + nslack + nart;
        let rhs = total;
        let width = total + 1;

        let mut t = vec![0.0; m * width];
        let mut basis = vec![0usize; m];
        let mut is_art = vec![false; total];
        let mut next_slack = nstruct;
        let mut next_art = nstruct + nslack;
        for (i, r) in rows.iter().enumerate() {
            let row = &mut t[i * width..(i + 1) * width];
            for &(v, a) in &r.coeffs {
                row[col_of[v]] += a;
                if self.free[v] {
                    row[col_of[v] + 1] -= a;
                }
            }
            row[rhs] = r.rhs;
            match r.relation {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    is_art[next_art] = true;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    is_art[next_art] = true;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }

        let mut tab = Tableau {
            t,
            m,
            width,
            basis,
            pivots: 0,
        };

        if nart > 0 {
            let mut obj = vec![0.0; width];
            for j in 0..total {
                if is_art[j] {
                    obj[j] = 1.0;
                }
            }
            for i in 0..m {
                if is_art[tab.basis[i]] {
                    for j in 0..width {
                        obj[j] -= tab.t[i * width + j];
                    }
                }
            }
            let allowed = vec![true; total];
            tab.run(&mut obj, &allowed, tol)?;
            let infeas = -obj[rhs];
            let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if infeas > tol.max(1e-9) * scale {
                return Err(Error::Solver(format!(
                    "infeasible program (phase-one residual {infeas:.3e})"
                )));
            }
            // Drive remaining artificials out of the basis where possible.
            for i in 0..m {
                if is_art[tab.basis[i]] {
                    if let Some(j) =
                        (0..total).find(|&j| !is_art[j] && tab.t[i * width + j].abs() > 1e-9)
                    {
                        tab.pivot(i, j, &mut obj);
                    }
                }
            }
        }

        let mut cost = vec![0.0; total];
        for v in 0..self.num_vars {
            cost[col_of[v]] = self.cost[v];
            if self.free[v] {
                cost[col_of[v] + 1] = -self.cost[v];
            }
        }
        let mut obj = vec![0.0; width];
        obj[..total].copy_from_slice(&cost);
        for i in 0..m {
            let cb = cost[tab.basis[i]];
            if cb != 0.0 {
                for j in 0..width {
                    obj[j] -= cb * tab.t[i * width + j];
                }
            }
        }
        let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
        tab.run(&mut obj, &allowed, tol)?;

        let mut colval = vec![0.0; total];
        for i in 0..m {
            colval[tab.basis[i]] = tab.t[i * width + rhs];
        }
        let x: Vec<f64> = (0..self.num_vars)
            .map(|v| {
                if self.free[v] {
                    colval[col_of[v]] - colval[col_of[v] + 1]
                } else {
                    colval[col_of[v]]
                }
            })
            .collect();
        let objective = x.iter().zip(&self.cost).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: tab.pivots,
        })
    }
}

struct Tableau {
    t: Vec<f64>,
    m: usize,
    width: usize,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn run(&mut self, obj: &mut [f64], allowed: &[bool], tol: f64) -> Result<()> {
        let rhs = self.width - 1;
        loop {
            // Bland: lowest-index improving column.
            let Some(enter) = (0..rhs).find(|&j| allowed[j] && obj[j] < -tol) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[i * self.width + enter];
                if a > PIVOT_EPS {
                    let ratio = self.t[i * self.width + rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Solver("unbounded program".into()));
            };
            self.pivot(row, enter, obj);
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Solver("pivot limit exceeded".into()));
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize, obj: &mut [f64]) {
        let w = self.width;
        let p = self.t[row * w + col];
        for j in 0..w {
            self.t[row * w + j] /= p;
        }
        self.t[row * w + col] = 1.0;
        let prow: Vec<f64> = self.t[row * w..(row + 1) * w].to_vec();
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = self.t[i * w + col];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * prow[j];
                }
                self.t[i * w + col] = 0.0;
            }
        }
        let f = obj[col];
        if f != 0.0 {
            for j in 0..w {
                obj[j] -= f * prow[j];
            }
            obj[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }
}
