use crate::error::{Error, Result};
use crate::game_model::policy::uniform_profile;
use crate::game_model::{PolymatrixGame, Profile};

use super::gaps::softmax;

/// Damped softmax fixed-point iteration `π ← (1−d)π + d·softmax(q(π)/τ)`,
/// stopped when the sup-norm residual drops below `tol`.
pub fn qre_fixed_point(
    game: &PolymatrixGame,
    tau: f64,
    damping: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Profile> {
    if !(tau > 0.0) || !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need τ > 0 and damping in (0,1], got {tau}, {damping}"
        )));
    }
    let mut p = uniform_profile(game.action_counts());
    for _ in 0..max_iters {
        let target: Profile = (0..game.num_players())
            .map(|i| softmax(&game.payoff_vector(i, &p), tau))
            .collect();
        let residual = p
            .iter()
            .zip(&target)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok(p);
        }
        for (pi, ti) in p.iter_mut().zip(&target) {
            for (x, y) in pi.iter_mut().zip(ti) {
                *x = (1.0 - damping) * *x + damping * y;
            }
        }
    }
    Err(Error::Solver(format!(
        "softmax fixed point did not reach residual {tol} in {max_iters} iterations"
    )))
}
