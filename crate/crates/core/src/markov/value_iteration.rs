use rayon::prelude::*;
use serde::Serialize;

use crate::decomposition::StageQ;
use crate::error::{Error, Result};
use crate::game_model::{
    auxiliary_game, Horizon, JointMarkovPolicy, JointMixture, MarkovPolicy, NetworkedMarkovGame,
    Profile,
};
use crate::polymatrix::oracle::{solve_stage, OracleConfig, OracleOutput};
use crate::rng::derive_path;

/// Backward-induction output.
#[derive(Clone, Debug, PartialEq)]
pub struct ViOutput {
    pub policy: MarkovPolicy,
    /// Pairwise `Q` tables used at each stage, `[h][s]`.
    pub q: Vec<StageQ>,
    /// `[h][i][s]` for `h = 0..=H` (the last entry is the zero terminal value).
    pub values: Vec<Vec<Vec<f64>>>,
    /// Measured NE gap of the oracle output on each stage game, `[h][s]`.
    pub oracle_gaps: Vec<Vec<f64>>,
    pub oracle_iterations: Vec<Vec<usize>>,
    /// Correlated stage solutions when the oracle averages play.
    pub mixtures: Option<JointMarkovPolicy>,
    /// Stage-game CCE gaps of `mixtures`, `[h][s]`.
    pub cce_gaps: Option<Vec<Vec<f64>>>,
    /// `max |Σ_i V_{h,i}(s)|`; zero up to round-off for zero-sum games.
    pub max_value_sum: f64,
}

impl ViOutput {
    /// `Σ_h max_s ε_{h,s}`, which bounds the Markov NE gap of `policy`.
    pub fn aggregate_bound(&self) -> f64 {
        self.oracle_gaps
            .iter()
            .map(|g| g.iter().copied().fold(0.0, f64::max))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageSolve {
    pub stage: usize,
    pub state: usize,
    pub oracle_gap: f64,
    pub iterations: usize,
}

impl ViOutput {
    pub fn stage_solves(&self) -> Vec<StageSolve> {
        let mut out = Vec::new();
        for (h, row) in self.oracle_gaps.iter().enumerate() {
            for (s, &g) in row.iter().enumerate() {
                out.push(StageSolve {
                    stage: h,
                    state: s,
                    oracle_gap: g,
                    iterations: self.oracle_iterations[h][s],
                });
            }
        }
        out
    }
}

/// Backward induction on a finite-horizon game: at each stage build the
/// canonical pairwise `Q` tables from the next-stage values, solve every
/// state's stage game with the oracle (states in parallel, each with its own
/// derived seed) and set `V_{h,i}(s) = r^Q_i(π_h(s))`.
pub fn value_iteration_ne(game: &NetworkedMarkovGame, oracle: &OracleConfig) -> Result<ViOutput> {
    let horizon = match game.horizon() {
        Horizon::Finite(h) => h,
        Horizon::Discounted(g) => return Err(Error::InvalidParameter(format!(
            "backward induction needs a finite horizon (discount {g}); truncate the horizon first"
        ))),
    };
    oracle.validate()?;
    let n = game.num_players();
    let ns = game.num_states();
    let mut values = vec![vec![vec![0.0; ns]; n]; horizon + 1];
    let mut stages: Vec<Vec<Profile>> = vec![Vec::new(); horizon];
    let mut q: Vec<StageQ> = vec![Vec::new(); horizon];
    let mut oracle_gaps = vec![vec![0.0; ns]; horizon];
    let mut oracle_iterations = vec![vec![0; ns]; horizon];
    let mut mixtures: Vec<Vec<Option<JointMixture>>> = vec![Vec::new(); horizon];
    let mut cce = vec![vec![0.0; ns]; horizon];
    let mut max_value_sum: f64 = 0.0;
    for h in (0..horizon).rev() {
        let aux = auxiliary_game(game, h, &values[h + 1])?;
        let solved: Vec<OracleOutput> = aux
            .par_iter()
            .enumerate()
            .map(|(s, g)| {
                solve_stage(g, oracle, derive_path(oracle.seed, &[h as u64, s as u64]))
                    .map_err(|e| Error::Solver(format!("stage {h}, state {s}: {e}")))
            })
            .collect::<Result<_>>()?;
        for (s, (g, out)) in aux.iter().zip(solved).enumerate() {
            let v = g.expected_payoffs(&out.profile)?;
            max_value_sum = max_value_sum.max(v.iter().sum::<f64>().abs());
            for i in 0..n {
                values[h][i][s] = v[i];
            }
            oracle_gaps[h][s] = out.gap;
            oracle_iterations[h][s] = out.iterations;
            cce[h][s] = out.eps_cce.unwrap_or(0.0);
            mixtures[h].push(out.mixture);
            stages[h].push(out.profile);
        }
        q[h] = aux.into_iter().map(|g| g.payoffs().clone()).collect();
    }
    let averaged = mixtures.iter().all(|row| row.iter().all(Option::is_some));
    let (mixtures, cce_gaps) = if averaged {
        let m = mixtures
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.expect("checked")).collect())
            .collect();
        (Some(JointMarkovPolicy { stages: m }), Some(cce))
    } else {
        (None, None)
    };
    Ok(ViOutput {
        policy: MarkovPolicy { stages },
        q,
        values,
        oracle_gaps,
        oracle_iterations,
        mixtures,
        cce_gaps,
        max_value_sum,
    })
}
