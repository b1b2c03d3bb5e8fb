use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_model::policy::entropy;
use crate::game_model::polymatrix::dot;
use crate::game_model::PolymatrixGame;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub ne_gap: f64,
    pub per_player: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qre_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

/// Largest gain any player gets from a unilateral (pure) deviation.
pub fn matrix_ne_gap(game: &PolymatrixGame, profile: &[Vec<f64>]) -> GapReport {
    let per_player: Vec<f64> = (0..game.num_players())
        .map(|i| {
            let q = game.payoff_vector(i, profile);
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (best - dot(&profile[i], &q)).max(0.0)
        })
        .collect();
    let ne_gap = per_player.iter().copied().fold(0.0, f64::max);
    GapReport {
        ne_gap,
        per_player,
        qre_gap: None,
        iterations: None,
    }
}

pub fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `softmax(q / τ)`.
pub fn softmax(q: &[f64], tau: f64) -> Vec<f64> {
    let scaled: Vec<f64> = q.iter().map(|x| x / tau).collect();
    let z = logsumexp(&scaled);
    scaled.iter().map(|x| (x - z).exp()).collect()
}

/// Per-player entropy-regularized gaps at temperature `τ`.
pub fn qre_gaps(game: &PolymatrixGame, profile: &[Vec<f64>], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    Ok((0..game.num_players())
        .map(|i| {
            let q = game.payoff_vector(i, profile);
            let scaled: Vec<f64> = q.iter().map(|x| x / tau).collect();
            let best = tau * logsumexp(&scaled);
            (best - (dot(&profile[i], &q) + tau * entropy(&profile[i]))).max(0.0)
        })
        .collect())
}

pub fn matrix_qre_gap(game: &PolymatrixGame, profile: &[Vec<f64>], tau: f64) -> Result<f64> {
    Ok(qre_gaps(game, profile, tau)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Lyapunov value `Σ_i (max_a r_i(a, π_{-i}) − r_i(π))`.
pub fn best_response_sum(game: &PolymatrixGame, profile: &[Vec<f64>]) -> f64 {
    matrix_ne_gap(game, profile).per_player.iter().sum()
}

/// Lowest-index maximiser.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn pennies() -> PolymatrixGame {
        PolymatrixGame::two_player_zero_sum(
            Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap(),
        )
    }

    #[test]
    fn pennies_gaps() {
        let g = pennies();
        assert_eq!(
            matrix_ne_gap(&g, &[vec![0.5, 0.5], vec![0.5, 0.5]]).ne_gap,
            0.0
        );
        let r = matrix_ne_gap(&g, &[vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(r.per_player, vec![0.0, 1.0]);
        assert_eq!(r.ne_gap, 1.0);
        assert!(
            matrix_qre_gap(&g, &[vec![0.5, 0.5], vec![0.5, 0.5]], 1.0)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!(matrix_qre_gap(&g, &[vec![0.5, 0.5], vec![0.5, 0.5]], 0.0).is_err());
    }

    #[test]
    fn stable_softmax() {
        let p = softmax(&[1000.0, 0.0], 0.01);
        assert_eq!(p, vec![1.0, 0.0]);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
