//! Two-timescale fictitious play on star-shaped discounted games.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::NetworkedMarkovGame;
use crate::matrix::Matrix;
use crate::polymatrix::gaps::argmax;
use crate::rng;
use crate::schedule::{two_timescale_warnings, StepSchedule};

use super::star::StarModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpConfig {
    /// Policy-belief steps, indexed by the visit count of the current state.
    pub alpha: StepSchedule,
    /// Q-belief steps, indexed the same way.
    pub beta: StepSchedule,
    pub iters: usize,
    pub seed: u64,
    /// Snapshot every `stride` iterations (0: final snapshot only).
    pub stride: usize,
    /// Probability of a uniform restart instead of the controlled transition.
    pub explore: f64,
    pub initial_state: usize,
}

impl FpConfig {
    pub fn new(iters: usize, seed: u64) -> Self {
        FpConfig {
            alpha: StepSchedule::Power(0.55),
            beta: StepSchedule::Power(0.75),
            iters,
            seed,
            stride: 0,
            explore: 0.0,
            initial_state: 0,
        }
    }
}

/// Beliefs and Q-beliefs of all players.
#[derive(Clone, Debug, PartialEq)]
pub struct FpState {
    /// `beliefs[s][j]`: empirical play of player `j` at state `s`, shared by
    /// every observer.
    pub beliefs: Vec<Vec<Vec<f64>>>,
    /// `q_center[s][k]`: center's belief of `Q_{c, others[k]}(s)`.
    pub q_center: Vec<Vec<Matrix>>,
    /// `q_other[s][k]`: belief of `others[k]` about `Q_{others[k], c}(s)`.
    pub q_other: Vec<Vec<Matrix>>,
    pub visits: Vec<u64>,
    pub current: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpSnapshot {
    pub iter: usize,
    /// `values[i][s]`.
    pub values: Vec<Vec<f64>>,
    /// `Σ_i values[i][s]`.
    pub value_sums: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FpTrajectory {
    pub snapshots: Vec<FpSnapshot>,
    /// `dyadic_max[w][s]`: largest `|Σ_i V̂_i(s)|` over iterations in
    /// `(2^{w−1}, 2^w]` (window 0 holds iterations 0 and 1).
    pub dyadic_max: Vec<Vec<f64>>,
    pub state: FpState,
    /// Step-size conditions the configuration violates.
    pub warnings: Vec<String>,
}

impl FpTrajectory {
    pub fn last(&self) -> &FpSnapshot {
        self.snapshots.last().expect("at least one snapshot")
    }
}

fn window(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

struct Runner<'a> {
    model: &'a StarModel,
    /// `back[s][k] = r_{others[k], c}(s)`.
    back: Vec<Vec<Matrix>>,
    n: usize,
}

impl Runner<'_> {
    fn center_payoffs(&self, st: &FpState, s: usize) -> Vec<f64> {
        let m = self.model;
        let mut q = vec![0.0; m.transitions[s].len()];
        for (k, &j) in m.others.iter().enumerate() {
            st.q_center[s][k].add_mul_vec(&st.beliefs[s][j], &mut q);
        }
        q
    }

    fn other_payoffs(&self, st: &FpState, s: usize, k: usize) -> Vec<f64> {
        st.q_other[s][k].mul_vec(&st.beliefs[s][self.model.center])
    }

    /// `V̂_i(s) = max_a Q̂_i(s, e_a, π̂_{-i}(s))` at every state.
    fn values(&self, st: &FpState, out: &mut [Vec<f64>]) {
        let m = self.model;
        for s in 0..m.num_states() {
            out[m.center][s] = self
                .center_payoffs(st, s)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            for (k, &j) in m.others.iter().enumerate() {
                out[j][s] = self
                    .other_payoffs(st, s, k)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        }
    }

    fn snapshot(&self, iter: usize, values: &[Vec<f64>]) -> FpSnapshot {
        let ns = self.model.num_states();
        FpSnapshot {
            iter,
            values: values.to_vec(),
            value_sums: (0..ns)
                .map(|s| (0..self.n).map(|i| values[i][s]).sum())
                .collect(),
        }
    }
}

/// Runs fictitious play with Q-beliefs on a discounted star game whose
/// transitions are controlled by the center. Deterministic given the seed.
pub fn fp_markov(game: &NetworkedMarkovGame, cfg: &FpConfig) -> Result<FpTrajectory> {
    let model = StarModel::from_game(game)?;
    let ns = model.num_states();
    if cfg.initial_state >= ns {
        return Err(Error::InvalidParameter(format!(
            "initial state {} out of range",
            cfg.initial_state
        )));
    }
    if !(0.0..=1.0).contains(&cfg.explore) {
        return Err(Error::InvalidParameter(format!(
            "exploration probability {} outside [0,1]",
            cfg.explore
        )));
    }
    let mut warnings = two_timescale_warnings(&cfg.alpha, &cfg.beta);
    if cfg.explore > 0.0 {
        warnings.push(format!(
            "uniform restarts with probability {} alter the dynamics",
            cfg.explore
        ));
    }
    let n = game.num_players();
    let counts = game.action_counts();
    let c = model.center;
    let runner = Runner {
        model: &model,
        back: (0..ns)
            .map(|s| {
                model
                    .others
                    .iter()
                    .map(|&j| game.reward_blocks(0, s)[&(j, c)].clone())
                    .collect()
            })
            .collect(),
        n,
    };
    let samplers: Vec<Vec<WeightedIndex<f64>>> = model
        .transitions
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|r| {
                    WeightedIndex::new(r)
                        .map_err(|e| Error::Structural(format!("transition row: {e}")))
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let mut r = rng::stream(cfg.seed, 0xf1c7);
    let mut st = FpState {
        beliefs: vec![counts.iter().map(|&k| vec![1.0 / k as f64; k]).collect(); ns],
        q_center: model.zero_q(),
        q_other: (0..ns)
            .map(|_| {
                model
                    .others
                    .iter()
                    .map(|&j| Matrix::zeros(counts[j], counts[c]))
                    .collect()
            })
            .collect(),
        visits: vec![0; ns],
        current: cfg.initial_state,
    };
    let share = model.gamma / model.others.len() as f64;
    let mut values = vec![vec![0.0; ns]; n];
    let mut snapshots = Vec::new();
    let mut dyadic_max: Vec<Vec<f64>> = Vec::new();
    let mut track = |k: usize, values: &[Vec<f64>]| {
        let w = window(k);
        if dyadic_max.len() <= w {
            dyadic_max.resize(w + 1, vec![0.0; ns]);
        }
        for s in 0..ns {
            let total: f64 = (0..n).map(|i| values[i][s]).sum();
            dyadic_max[w][s] = dyadic_max[w][s].max(total.abs());
        }
    };
    let mut actions = vec![0usize; n];
    for k in 0..cfg.iters {
        let s = st.current;
        st.visits[s] += 1;
        let visits = st.visits[s] as usize;
        actions[c] = argmax(&runner.center_payoffs(&st, s));
        for (idx, &j) in model.others.iter().enumerate() {
            actions[j] = argmax(&runner.other_payoffs(&st, s, idx));
        }
        runner.values(&st, &mut values);
        track(k, &values);
        if cfg.stride > 0 && k % cfg.stride == 0 {
            snapshots.push(runner.snapshot(k, &values));
        }

        let alpha = cfg.alpha.at(visits);
        for (b, &a) in st.beliefs[s].iter_mut().zip(&actions) {
            b.iter_mut().for_each(|x| *x *= 1.0 - alpha);
            b[a] += alpha;
        }
        let beta = cfg.beta.at(visits);
        let trans = &model.transitions[s];
        let cont =
            |v: &[f64], a: usize| -> f64 { trans[a].iter().zip(v).map(|(p, x)| p * x).sum() };
        for (idx, &j) in model.others.iter().enumerate() {
            let reward = &model.rewards[s][idx];
            let qc = &mut st.q_center[s][idx];
            for a in 0..counts[c] {
                let target_cont = share * cont(&values[c], a);
                for b in 0..counts[j] {
                    let old = qc.get(a, b);
                    qc.set(a, b, old + beta * (reward.get(a, b) + target_cont - old));
                }
            }
            let reward = &runner.back[s][idx];
            let qo = &mut st.q_other[s][idx];
            for a in 0..counts[c] {
                let target_cont = model.gamma * cont(&values[j], a);
                for b in 0..counts[j] {
                    let old = qo.get(b, a);
                    qo.set(b, a, old + beta * (reward.get(b, a) + target_cont - old));
                }
            }
        }
        st.current = if cfg.explore > 0.0 && r.gen::<f64>() < cfg.explore {
            r.gen_range(0..ns)
        } else {
            samplers[s][actions[c]].sample(&mut r)
        };
    }
    runner.values(&st, &mut values);
    track(cfg.iters, &values);
    snapshots.push(runner.snapshot(cfg.iters, &values));
    Ok(FpTrajectory {
        snapshots,
        dyadic_max,
        state: st,
        warnings,
    })
}
