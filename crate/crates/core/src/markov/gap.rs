use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_model::policy::check_profile;
use crate::game_model::{Horizon, JointMarkovPolicy, MarkovPolicy, NetworkedMarkovGame, Profile};
use crate::polymatrix::marginal::joint_payoffs;

/// Bellman residual at which discounted evaluations stop.
pub const DISCOUNTED_RESIDUAL: f64 = 1e-10;
const MAX_SWEEPS: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovGapReport {
    pub ne_gap: f64,
    /// Largest gap of each player over states.
    pub per_player: Vec<f64>,
    /// `[i][s]`: best-response value minus policy value.
    pub per_state: Vec<Vec<f64>>,
    pub policy_values: Vec<Vec<f64>>,
    pub best_response_values: Vec<Vec<f64>>,
    /// Bound on `|reported − exact|` (zero for finite horizon).
    pub error_bound: f64,
    /// Bellman sweeps used by the discounted evaluation.
    pub sweeps: usize,
}

impl MarkovGapReport {
    /// `[gap − err, gap + err]`.
    pub fn interval(&self) -> (f64, f64) {
        (
            (self.ne_gap - self.error_bound).max(0.0),
            self.ne_gap + self.error_bound,
        )
    }
}

/// One `(h, s)` slice: on-policy payoffs and kernel, and the payoff and
/// kernel of every pure unilateral deviation.
struct Slice {
    reward: Vec<f64>,
    kernel: Vec<f64>,
    dev_reward: Vec<Vec<f64>>,
    dev_kernel: Vec<Vec<Vec<f64>>>,
}

fn slice(
    game: &NetworkedMarkovGame,
    h: usize,
    s: usize,
    marg: &Profile,
    reward: Vec<f64>,
) -> Slice {
    let stage_game = game.stage_game(h, s);
    let dynamics = &game.stage(h).dynamics;
    let n = game.num_players();
    Slice {
        reward,
        kernel: dynamics.product_row(s, marg, None),
        dev_reward: (0..n).map(|i| stage_game.payoff_vector(i, marg)).collect(),
        dev_kernel: (0..n)
            .map(|i| {
                (0..game.action_counts()[i])
                    .map(|a| dynamics.product_row(s, marg, Some((i, a))))
                    .collect()
            })
            .collect(),
    }
}

fn expect(p: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(v).map(|(x, y)| x * y).sum()
}

/// `(policy value, best-response value)` of player `i` at `s` given
/// next-stage values.
fn backup(sl: &Slice, i: usize, next_pi: &[f64], next_br: &[f64], disc: f64) -> (f64, f64) {
    let v = sl.reward[i] + disc * expect(&sl.kernel, next_pi);
    let br = sl.dev_reward[i]
        .iter()
        .zip(&sl.dev_kernel[i])
        .map(|(r, k)| r + disc * expect(k, next_br))
        .fold(f64::NEG_INFINITY, f64::max);
    (v, br)
}

fn evaluate(
    game: &NetworkedMarkovGame,
    slices: &[Vec<Slice>],
    h0: usize,
) -> Result<MarkovGapReport> {
    let n = game.num_players();
    let ns = game.num_states();
    let (pi, br, error_bound, sweeps) = match game.horizon() {
        Horizon::Finite(horizon) => {
            let mut pi = vec![vec![0.0; ns]; n];
            let mut br = vec![vec![0.0; ns]; n];
            for h in (h0..horizon).rev() {
                let mut npi = vec![vec![0.0; ns]; n];
                let mut nbr = vec![vec![0.0; ns]; n];
                for i in 0..n {
                    for s in 0..ns {
                        (npi[i][s], nbr[i][s]) = backup(&slices[h][s], i, &pi[i], &br[i], 1.0);
                    }
                }
                pi = npi;
                br = nbr;
            }
            (pi, br, 0.0, 0)
        }
        Horizon::Discounted(gamma) => {
            let mut pi = vec![vec![0.0; ns]; n];
            let mut br = vec![vec![0.0; ns]; n];
            let mut sweeps = 0;
            loop {
                let mut residual: f64 = 0.0;
                let mut npi = vec![vec![0.0; ns]; n];
                let mut nbr = vec![vec![0.0; ns]; n];
                for i in 0..n {
                    for s in 0..ns {
                        (npi[i][s], nbr[i][s]) = backup(&slices[0][s], i, &pi[i], &br[i], gamma);
                        residual = residual
                            .max((npi[i][s] - pi[i][s]).abs())
                            .max((nbr[i][s] - br[i][s]).abs());
                    }
                }
                pi = npi;
                br = nbr;
                sweeps += 1;
                if residual <= DISCOUNTED_RESIDUAL {
                    // each value is within γ·residual/(1−γ) of its fixed point
                    break (pi, br, 2.0 * gamma * residual / (1.0 - gamma), sweeps);
                }
                if sweeps >= MAX_SWEEPS {
                    return Err(Error::Solver(format!(
                        "Bellman evaluation stalled at residual {residual:.3e}"
                    )));
                }
            }
        }
    };
    let per_state: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..ns).map(|s| (br[i][s] - pi[i][s]).max(0.0)).collect())
        .collect();
    let per_player: Vec<f64> = per_state
        .iter()
        .map(|g| g.iter().copied().fold(0.0, f64::max))
        .collect();
    Ok(MarkovGapReport {
        ne_gap: per_player.iter().copied().fold(0.0, f64::max),
        per_player,
        per_state,
        policy_values: pi,
        best_response_values: br,
        error_bound,
        sweeps,
    })
}

fn stages_for(game: &NetworkedMarkovGame, policy_stages: usize, h0: usize) -> Result<usize> {
    let stages = game.num_stages();
    match game.horizon() {
        Horizon::Finite(horizon) => {
            if policy_stages != horizon && policy_stages != 1 {
                return Err(Error::Dimension(format!(
                    "policy has {policy_stages} stages, horizon is {horizon}"
                )));
            }
            if h0 >= horizon {
                return Err(Error::Dimension(format!(
                    "start stage {h0} beyond horizon {horizon}"
                )));
            }
        }
        Horizon::Discounted(_) => {
            if policy_stages != 1 {
                return Err(Error::Dimension(
                    "discounted games need a stationary policy".into(),
                ));
            }
        }
    }
    Ok(stages)
}

/// Largest gain any player obtains at any state from switching to a best
/// response (a deterministic Markov policy, by backward induction) from
/// stage `h0` on. Discounted games use value iteration to residual
/// [`DISCOUNTED_RESIDUAL`] and report the certified error.
pub fn markov_ne_gap(
    game: &NetworkedMarkovGame,
    policy: &MarkovPolicy,
    h0: usize,
) -> Result<MarkovGapReport> {
    let stages = stages_for(game, policy.stages.len(), h0)?;
    let ns = game.num_states();
    let mut slices = Vec::with_capacity(stages);
    for h in 0..stages {
        let mut row = Vec::with_capacity(ns);
        for s in 0..ns {
            let p = policy
                .stages
                .get(if policy.is_stationary() { 0 } else { h })
                .and_then(|st| st.get(s))
                .ok_or_else(|| {
                    Error::Dimension(format!("policy has no entry for stage {h}, state {s}"))
                })?;
            check_profile(game.action_counts(), p, 1e-6)?;
            let reward = game.stage_game(h, s).expected_payoffs(p)?;
            row.push(slice(game, h, s, p, reward));
        }
        slices.push(row);
    }
    evaluate(game, &slices, h0)
}

/// Markov CCE gap of a correlated policy: each player's best fixed Markov
/// deviation against the others' (correlated) play, compared with the
/// value of following the recommendations.
pub fn markov_cce_gap(
    game: &NetworkedMarkovGame,
    joint: &JointMarkovPolicy,
    h0: usize,
) -> Result<MarkovGapReport> {
    let stages = stages_for(game, joint.stages.len(), h0)?;
    let ns = game.num_states();
    let mut slices = Vec::with_capacity(stages);
    for h in 0..stages {
        let mut row = Vec::with_capacity(ns);
        for s in 0..ns {
            let mix = joint.at(h, s);
            mix.check(game.action_counts(), 1e-6)?;
            let marg = mix.marginals();
            let reward = joint_payoffs(&game.stage_game(h, s), mix);
            let mut sl = slice(game, h, s, &marg, reward);
            // On-policy kernel under correlation: mixture of product kernels.
            let dynamics = &game.stage(h).dynamics;
            let mut k = vec![0.0; ns];
            for (w, p) in &mix.components {
                for (o, x) in k.iter_mut().zip(dynamics.product_row(s, p, None)) {
                    *o += w * x;
                }
            }
            sl.kernel = k;
            row.push(sl);
        }
        slices.push(row);
    }
    evaluate(game, &slices, h0)
}
