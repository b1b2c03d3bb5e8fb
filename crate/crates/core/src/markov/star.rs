//! Star-shaped games: the center's maxmin operator and the contracting value
//! iteration it induces when the center alone controls the transitions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game_model::{EnsembleDynamics, Horizon, MarkovPolicy, NetworkedMarkovGame, Profile};
use crate::lp::{LinearProgram, Relation};
use crate::matrix::Matrix;

pub const LP_TOL: f64 = 1e-10;

/// Value of a maxmin stage problem and the two sides' optimal strategies.
#[derive(Clone, Debug, PartialEq)]
pub struct ValSolution {
    pub value: f64,
    /// Center strategy.
    pub center: Vec<f64>,
    /// Strategy of each non-center player, in block order.
    pub others: Vec<Vec<f64>>,
}

fn clip_simplex(x: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = x.iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = v.iter().sum();
    v.into_iter().map(|p| p / total).collect()
}

fn offsets(sizes: impl Iterator<Item = usize>, start: usize) -> (Vec<usize>, usize) {
    let mut out = Vec::new();
    let mut next = start;
    for k in sizes {
        out.push(next);
        next += k;
    }
    (out, next)
}

fn check_blocks(blocks: &[Matrix], center_rows: bool) -> Result<usize> {
    let m = blocks
        .first()
        .map(|b| if center_rows { b.rows() } else { b.cols() })
        .ok_or_else(|| Error::Dimension("star stage needs at least one block".into()))?;
    if blocks
        .iter()
        .any(|b| (if center_rows { b.rows() } else { b.cols() }) != m)
    {
        return Err(Error::Dimension(
            "blocks disagree on the center's action count".into(),
        ));
    }
    Ok(m)
}

/// `max_{μ_c} Σ_j min_{μ_j} μ_cᵀ Q_{c,j} μ_j` for blocks `Q_{c,j}` (rows are
/// the center's actions). The center's strategy comes from the primal LP;
/// the others' from the minimising side `min_{μ_{-c}} max_{a_c} Σ_j [Q_{c,j} μ_j]_{a_c}`,
/// which has the same value.
pub fn val_center(blocks: &[Matrix]) -> Result<ValSolution> {
    let m = check_blocks(blocks, true)?;
    let k = blocks.len();
    // max Σ u_j s.t. u_j ≤ [μᵀQ_j]_b
    let mut lp = LinearProgram::new(m + k);
    for j in 0..k {
        lp.set_free(m + j);
        lp.set_cost(m + j, -1.0);
        for b in 0..blocks[j].cols() {
            let mut row = vec![(m + j, 1.0)];
            row.extend((0..m).map(|a| (a, -blocks[j].get(a, b))));
            lp.add_row(row, Relation::Le, 0.0);
        }
    }
    lp.add_row((0..m).map(|a| (a, 1.0)).collect(), Relation::Eq, 1.0);
    let primal = lp.solve(LP_TOL)?;

    let (off, w) = offsets(blocks.iter().map(Matrix::cols), 0);
    let mut lp = LinearProgram::new(w + 1);
    lp.set_free(w);
    lp.set_cost(w, 1.0);
    for a in 0..m {
        let mut row = vec![(w, -1.0)];
        for (j, b) in blocks.iter().enumerate() {
            row.extend((0..b.cols()).map(|c| (off[j] + c, b.get(a, c))));
        }
        lp.add_row(row, Relation::Le, 0.0);
    }
    for (j, b) in blocks.iter().enumerate() {
        lp.add_row(
            (0..b.cols()).map(|c| (off[j] + c, 1.0)).collect(),
            Relation::Eq,
            1.0,
        );
    }
    let dual = lp.solve(LP_TOL)?;
    Ok(ValSolution {
        value: -primal.objective,
        center: clip_simplex(&primal.x[..m]),
        others: blocks
            .iter()
            .enumerate()
            .map(|(j, b)| clip_simplex(&dual.x[off[j]..off[j] + b.cols()]))
            .collect(),
    })
}

/// `max_{μ_{-c}} min_{a_c} Σ_j [Q_{j,c}ᵀ μ_j]_{a_c}` for blocks `Q_{j,c}`
/// (rows are player `j`'s actions, columns the center's): the non-center
/// players' joint maxmin. With `Q_{j,c} = −Q_{c,j}ᵀ` it equals `−val_center`.
pub fn val_others(blocks: &[Matrix]) -> Result<ValSolution> {
    let m = check_blocks(blocks, false)?;
    let (off, w) = offsets(blocks.iter().map(Matrix::rows), 0);
    let mut lp = LinearProgram::new(w + 1);
    lp.set_free(w);
    lp.set_cost(w, -1.0);
    for a in 0..m {
        let mut row = vec![(w, 1.0)];
        for (j, b) in blocks.iter().enumerate() {
            row.extend((0..b.rows()).map(|r| (off[j] + r, -b.get(r, a))));
        }
        lp.add_row(row, Relation::Le, 0.0);
    }
    for (j, b) in blocks.iter().enumerate() {
        lp.add_row(
            (0..b.rows()).map(|r| (off[j] + r, 1.0)).collect(),
            Relation::Eq,
            1.0,
        );
    }
    let primal = lp.solve(LP_TOL)?;

    // center: min_μ Σ_j max_r [Q_{j,c} μ]_r
    let k = blocks.len();
    let mut lp = LinearProgram::new(m + k);
    for (j, b) in blocks.iter().enumerate() {
        lp.set_free(m + j);
        lp.set_cost(m + j, 1.0);
        for r in 0..b.rows() {
            let mut row = vec![(m + j, -1.0)];
            row.extend((0..m).map(|a| (a, b.get(r, a))));
            lp.add_row(row, Relation::Le, 0.0);
        }
    }
    lp.add_row((0..m).map(|a| (a, 1.0)).collect(), Relation::Eq, 1.0);
    let dual = lp.solve(LP_TOL)?;
    Ok(ValSolution {
        value: -primal.objective,
        center: clip_simplex(&dual.x[..m]),
        others: blocks
            .iter()
            .enumerate()
            .map(|(j, b)| clip_simplex(&primal.x[off[j]..off[j] + b.rows()]))
            .collect(),
    })
}

/// `max_s Σ_j ‖A_j(s) − B_j(s)‖_max`.
pub fn star_distance(a: &[Vec<Matrix>], b: &[Vec<Matrix>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.max_abs_diff(q)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Star game data needed by the center's value iteration.
#[derive(Clone, Debug)]
pub struct StarModel {
    pub center: usize,
    /// Non-center players in increasing order.
    pub others: Vec<usize>,
    pub gamma: f64,
    /// `rewards[s][k] = r_{c, others[k]}(s)`.
    pub rewards: Vec<Vec<Matrix>>,
    /// `transitions[s][a_c]`: the center-controlled next-state distribution.
    pub transitions: Vec<Vec<Vec<f64>>>,
}

impl StarModel {
    pub fn from_game(game: &NetworkedMarkovGame) -> Result<Self> {
        let gamma = match game.horizon() {
            Horizon::Discounted(g) => g,
            Horizon::Finite(_) => {
                return Err(Error::InvalidParameter(
                    "star value iteration needs a discounted game".into(),
                ))
            }
        };
        let center = game.require_star_single_controller()?;
        let others: Vec<usize> = (0..game.num_players()).filter(|&j| j != center).collect();
        let ns = game.num_states();
        let dynamics = &game.stage(0).dynamics;
        let rewards = (0..ns)
            .map(|s| {
                others
                    .iter()
                    .map(|&j| game.reward_blocks(0, s)[&(center, j)].clone())
                    .collect()
            })
            .collect();
        let transitions = (0..ns)
            .map(|s| {
                (0..game.action_counts()[center])
                    .map(|a| match dynamics {
                        EnsembleDynamics::Constant { kernel } => kernel[s].clone(),
                        EnsembleDynamics::Ensemble { .. } => {
                            let mut row = vec![0.0; ns];
                            if let Some(slot) = dynamics.controller_slot(center) {
                                dynamics.add_controller_part(slot, s, a, 1.0, &mut row);
                            }
                            row
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(StarModel {
            center,
            others,
            gamma,
            rewards,
            transitions,
        })
    }

    pub fn num_states(&self) -> usize {
        self.rewards.len()
    }

    /// One application of `Q_{c,j}(s) ← r_{c,j}(s) + γ/(n−1) Σ_s' P(s'|s,a_c) Val(Q(s'))`,
    /// with the per-state values of the input tables.
    pub fn sweep(&self, q: &[Vec<Matrix>]) -> Result<(Vec<Vec<Matrix>>, Vec<ValSolution>)> {
        let vals: Vec<ValSolution> = q
            .par_iter()
            .map(|blocks| val_center(blocks))
            .collect::<Result<_>>()?;
        let v: Vec<f64> = vals.iter().map(|x| x.value).collect();
        let share = self.gamma / self.others.len() as f64;
        let next = self
            .rewards
            .iter()
            .zip(&self.transitions)
            .map(|(blocks, trans)| {
                let cont: Vec<f64> = trans
                    .iter()
                    .map(|row| row.iter().zip(&v).map(|(p, x)| p * x).sum())
                    .collect();
                blocks
                    .iter()
                    .map(|r| {
                        Matrix::from_fn(r.rows(), r.cols(), |a, b| r.get(a, b) + share * cont[a])
                    })
                    .collect()
            })
            .collect();
        Ok((next, vals))
    }

    pub fn zero_q(&self) -> Vec<Vec<Matrix>> {
        self.rewards
            .iter()
            .map(|b| {
                b.iter()
                    .map(|r| Matrix::zeros(r.rows(), r.cols()))
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarViOutput {
    pub center: usize,
    pub others: Vec<usize>,
    /// Converged `Q_{c,j}(s)`, `[s][k]` for non-center `others[k]`.
    pub q: Vec<Vec<Matrix>>,
    pub policy: MarkovPolicy,
    /// Center's value at every state.
    pub center_values: Vec<f64>,
    /// Successive-iterate distances, starting from `Q = 0`.
    pub distances: Vec<f64>,
    pub sweeps: usize,
}

/// Value iteration on the center's maxmin operator from `Q = 0` until the
/// successive-iterate distance is at most `tol`.
pub fn star_value_iteration(
    game: &NetworkedMarkovGame,
    tol: f64,
    max_sweeps: usize,
) -> Result<StarViOutput> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let model = StarModel::from_game(game)?;
    let mut q = model.zero_q();
    let mut distances = Vec::new();
    loop {
        if distances.len() >= max_sweeps {
            return Err(Error::Solver(format!(
                "no convergence in {max_sweeps} sweeps (last distance {:.3e})",
                distances.last().copied().unwrap_or(f64::NAN)
            )));
        }
        let (next, _) = model.sweep(&q)?;
        let d = star_distance(&next, &q);
        distances.push(d);
        q = next;
        if d <= tol {
            break;
        }
    }
    let vals: Vec<ValSolution> = q
        .par_iter()
        .map(|blocks| val_center(blocks))
        .collect::<Result<_>>()?;
    let per_state: Vec<Profile> = vals
        .iter()
        .map(|v| {
            let mut p = vec![Vec::new(); game.num_players()];
            p[model.center] = v.center.clone();
            for (k, &j) in model.others.iter().enumerate() {
                p[j] = v.others[k].clone();
            }
            p
        })
        .collect();
    Ok(StarViOutput {
        center: model.center,
        others: model.others,
        q,
        policy: MarkovPolicy::stationary(per_state),
        center_values: vals.iter().map(|v| v.value).collect(),
        sweeps: distances.len(),
        distances,
    })
}

/// Sweeps guaranteed by contraction: `⌈log(d_0/tol)/log(1/γ)⌉ + 2`.
pub fn sweep_budget(d0: f64, tol: f64, gamma: f64) -> usize {
    if d0 <= tol {
        return 2;
    }
    ((d0 / tol).ln() / (1.0 / gamma).ln()).ceil() as usize + 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pennies_and_zero_block() {
        let p = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let v = val_center(&[p.clone(), Matrix::zeros(2, 2)]).unwrap();
        assert!(v.value.abs() < 1e-12);
        assert!((v.center[0] - 0.5).abs() < 1e-9);
        assert!((v.others[0][0] - 0.5).abs() < 1e-9);
        let w = val_others(&[p.transpose().scale(-1.0), Matrix::zeros(2, 2)]).unwrap();
        assert!(w.value.abs() < 1e-12);
    }

    #[test]
    fn dominant_row() {
        let a = Matrix::from_rows(&[vec![3.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        // row 0: min 1 + 1 = 2; row 1: 0 + 2 = 2; mixing doesn't beat 2
        let v = val_center(&[a.clone(), b.clone()]).unwrap();
        assert!((v.value - 2.0).abs() < 1e-9);
        let w = val_others(&[a.transpose().scale(-1.0), b.transpose().scale(-1.0)]).unwrap();
        assert!((v.value + w.value).abs() < 1e-9);
    }
}
