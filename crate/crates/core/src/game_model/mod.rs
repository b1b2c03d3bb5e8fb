//! Data model for networked games: interaction graphs, polymatrix stage
//! games, ensemble dynamics, policies and validation.

pub mod dynamics;
pub mod graph;
pub mod joint;
pub mod markov_game;
pub mod policy;
pub mod polymatrix;
pub mod validation;

pub use dynamics::{ActionKernel, EnsembleDynamics};
pub use graph::InteractionGraph;
pub use markov_game::{Horizon, NetworkedMarkovGame, Stage};
pub use policy::{JointMarkovPolicy, JointMixture, MarkovPolicy, Profile};
pub use polymatrix::{EdgeBlocks, PolymatrixGame};
pub use validation::{
    check_zero_sum, validate_nmg, validate_polymatrix, Invariant, ValidationOptions,
    ValidationReport, Violation, ZeroSumMethod,
};

use crate::error::Result;

/// Per-state polymatrix games whose pairwise payoffs are the canonical
/// decomposition of `Q_i^V` at stage `h`, with `V[i][s']` the next-stage values.
pub fn auxiliary_game(
    game: &NetworkedMarkovGame,
    h: usize,
    values: &[Vec<f64>],
) -> Result<Vec<PolymatrixGame>> {
    let q = crate::decomposition::canonical_q(game, h, values)?;
    Ok(q.into_iter()
        .map(|blocks| {
            PolymatrixGame::new(game.graph().clone(), game.action_counts().to_vec(), blocks)
                .expect("shapes follow the game")
                .with_zero_sum(game.is_zero_sum())
        })
        .collect())
}
