use serde::Serialize;

use crate::error::Result;
use crate::game_model::{JointMixture, PolymatrixGame, Profile};

use super::dynamics::mwu_self_play;
use super::gaps::matrix_ne_gap;

/// Expected payoffs under a correlated mixture.
pub fn joint_payoffs(game: &PolymatrixGame, joint: &JointMixture) -> Vec<f64> {
    let mut out = vec![0.0; game.num_players()];
    for (w, p) in &joint.components {
        for (o, r) in out.iter_mut().zip(game.expected_payoffs_unchecked(p)) {
            *o += w * r;
        }
    }
    out
}

/// Largest gain from committing to a fixed action while others follow the
/// correlated mixture. Only the opponents' marginals matter for pairwise payoffs.
pub fn cce_gap(game: &PolymatrixGame, joint: &JointMixture) -> f64 {
    let marg = joint.marginals();
    let payoffs = joint_payoffs(game, joint);
    (0..game.num_players())
        .map(|i| {
            let dev = game
                .payoff_vector(i, &marg)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            (dev - payoffs[i]).max(0.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalCertificate {
    /// Measured CCE gap of the mixture.
    pub eps_cce: f64,
    /// `n · eps_cce`.
    pub ne_bound: f64,
    /// Measured NE gap of the marginal product.
    pub ne_gap: f64,
    pub joint_payoffs: Vec<f64>,
    pub marginal_payoffs: Vec<f64>,
    /// `r_i(joint) − (n−1)ε ≤ r_i(π̂) ≤ r_i(joint) + ε` for every player.
    pub sandwich_holds: bool,
}

/// Product of the mixture's marginals together with its bound certificate.
pub fn marginalize(
    game: &PolymatrixGame,
    joint: &JointMixture,
) -> Result<(Profile, MarginalCertificate)> {
    joint.check(game.action_counts(), 1e-9)?;
    let marg = joint.marginals();
    let n = game.num_players() as f64;
    let eps = cce_gap(game, joint);
    let jp = joint_payoffs(game, joint);
    let mp = game.expected_payoffs_unchecked(&marg);
    let slack = 1e-9;
    let sandwich_holds = jp
        .iter()
        .zip(&mp)
        .all(|(&j, &m)| m <= j + eps + slack && m >= j - (n - 1.0) * eps - slack);
    let ne_gap = matrix_ne_gap(game, &marg).ne_gap;
    Ok((
        marg,
        MarginalCertificate {
            eps_cce: eps,
            ne_bound: n * eps,
            ne_gap,
            joint_payoffs: jp,
            marginal_payoffs: mp,
            sandwich_holds,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoRegretResult {
    pub mixture: JointMixture,
    pub marginal: Profile,
    pub certificate: MarginalCertificate,
}

/// Empirical mixture of `T` rounds of unregularised MWU self-play, and its
/// marginalisation.
pub fn no_regret_avg(game: &PolymatrixGame, iters: usize) -> Result<NoRegretResult> {
    let mixture = JointMixture::empirical(mwu_self_play(game, iters.max(1)));
    let (marginal, certificate) = marginalize(game, &mixture)?;
    Ok(NoRegretResult {
        mixture,
        marginal,
        certificate,
    })
}
