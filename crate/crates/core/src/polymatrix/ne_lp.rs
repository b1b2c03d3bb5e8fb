use crate::error::{Error, Result};
use crate::game_model::validation::{check_zero_sum, ValidationOptions};
use crate::game_model::{PolymatrixGame, Profile};
use crate::lp::{LinearProgram, Relation};

#[derive(Clone, Debug, PartialEq)]
pub struct NeLpSolution {
    pub profile: Profile,
    /// Optimal `v_i`: each player's best pure-deviation payoff at the optimum.
    pub values: Vec<f64>,
    /// `Σ_i v_i`; zero at an exact optimum.
    pub objective: f64,
}

/// Tolerance on `|Σ_i r_i|` above which a game is refused as not zero-sum.
pub const ZERO_SUM_TOL: f64 = 1e-6;

/// Nash equilibrium of a zero-sum polymatrix game by linear programming:
/// minimise `Σ v_i` subject to `v_i ≥ [Σ_j r_ij π_j]_{a_i}` for every pure
/// action, with each `π_i` a distribution.
pub fn ne_lp(game: &PolymatrixGame, solver_tol: f64) -> Result<NeLpSolution> {
    let z = check_zero_sum(game, &ValidationOptions::default());
    if z.max_violation > ZERO_SUM_TOL {
        return Err(Error::InvalidParameter(format!(
            "game is not zero-sum (payoff sum {:.3e})",
            z.max_violation
        )));
    }
    let n = game.num_players();
    let counts = game.action_counts();
    let mut offset = Vec::with_capacity(n);
    let mut next = n;
    for &k in counts {
        offset.push(next);
        next += k;
    }
    let mut lp = LinearProgram::new(next);
    for i in 0..n {
        lp.set_free(i);
        lp.set_cost(i, 1.0);
    }
    for i in 0..n {
        for ai in 0..counts[i] {
            let mut row = vec![(i, -1.0)];
            for &j in game.graph().neighbors(i) {
                let m = game.block(i, j);
                for aj in 0..counts[j] {
                    let c = m.get(ai, aj);
                    if c != 0.0 {
                        row.push((offset[j] + aj, c));
                    }
                }
            }
            lp.add_row(row, Relation::Le, 0.0);
        }
        lp.add_row(
            (0..counts[i]).map(|a| (offset[i] + a, 1.0)).collect(),
            Relation::Eq,
            1.0,
        );
    }
    let sol = lp.solve(solver_tol)?;
    let profile: Profile = (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..counts[i])
                .map(|a| sol.x[offset[i] + a].max(0.0))
                .collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    let values = sol.x[..n].to_vec();
    Ok(NeLpSolution {
        profile,
        objective: values.iter().sum(),
        values,
    })
}
