use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_model::joint::{for_each_joint, joint_count};
use crate::game_model::{
    EnsembleDynamics, Horizon, JointMarkovPolicy, JointMixture, MarkovPolicy, NetworkedMarkovGame,
};

use super::gap::{markov_cce_gap, markov_ne_gap};

/// Tolerance for the kernel identity check.
pub const IDENTITY_TOL: f64 = 1e-12;
const ENUMERATION_CAP: usize = 1 << 20;

/// `ℙ(·|s)` under a correlated mixture, by summing over joint actions.
/// Above 2^20 joint actions each component's product kernel is used instead.
pub fn joint_kernel(
    dynamics: &EnsembleDynamics,
    s: usize,
    counts: &[usize],
    mix: &JointMixture,
) -> Vec<f64> {
    let ns = dynamics.num_states();
    let mut out = vec![0.0; ns];
    let enumerable = joint_count(counts).is_some_and(|c| c <= ENUMERATION_CAP);
    for (w, p) in &mix.components {
        if !enumerable {
            for (o, x) in out.iter_mut().zip(dynamics.product_row(s, p, None)) {
                *o += w * x;
            }
            continue;
        }
        for_each_joint(counts, |a| {
            let prob: f64 = a.iter().enumerate().map(|(i, &ai)| p[i][ai]).product();
            if prob != 0.0 {
                for (o, x) in out.iter_mut().zip(dynamics.joint_row(s, a)) {
                    *o += w * prob * x;
                }
            }
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkovMarginalCertificate {
    /// Markov CCE gap of the correlated policy.
    pub eps_cce: f64,
    /// `(n+1)Hε` (finite horizon) or `(n+1)ε/(1−γ)` (discounted).
    pub ne_bound: f64,
    /// Measured Markov NE gap of the marginal policy.
    pub ne_gap: f64,
    /// Largest difference between the correlated and the marginal state kernels.
    pub kernel_max_diff: f64,
    pub identity_holds: bool,
}

/// Per-(stage, state) product of marginals, with the bound certificate and
/// the check that both policies induce the same state transitions.
pub fn marginalize_markov(
    game: &NetworkedMarkovGame,
    joint: &JointMarkovPolicy,
) -> Result<(MarkovPolicy, MarkovMarginalCertificate)> {
    let ns = game.num_states();
    let stages: Vec<Vec<_>> = joint
        .stages
        .iter()
        .map(|row| {
            if row.len() != ns {
                return Err(Error::Dimension(format!(
                    "joint policy covers {} states, game has {ns}",
                    row.len()
                )));
            }
            row.iter()
                .map(|m| m.check(game.action_counts(), 1e-6).map(|_| m.marginals()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let policy = MarkovPolicy { stages };
    let mut kernel_max_diff: f64 = 0.0;
    for (h, row) in joint.stages.iter().enumerate() {
        let dynamics = &game.stage(h).dynamics;
        for (s, mix) in row.iter().enumerate() {
            let correlated = joint_kernel(dynamics, s, game.action_counts(), mix);
            let product = dynamics.product_row(s, policy.at(h, s), None);
            for (a, b) in correlated.iter().zip(&product) {
                kernel_max_diff = kernel_max_diff.max((a - b).abs());
            }
        }
    }
    let eps = markov_cce_gap(game, joint, 0)?.ne_gap;
    let scale = (game.num_players() + 1) as f64
        * match game.horizon() {
            Horizon::Finite(h) => h as f64,
            Horizon::Discounted(g) => 1.0 / (1.0 - g),
        };
    let ne_gap = markov_ne_gap(game, &policy, 0)?.ne_gap;
    Ok((
        policy,
        MarkovMarginalCertificate {
            eps_cce: eps,
            ne_bound: scale * eps,
            ne_gap,
            kernel_max_diff,
            identity_holds: kernel_max_diff <= IDENTITY_TOL,
        },
    ))
}
