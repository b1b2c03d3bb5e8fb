use crate::error::{Error, Result};
use crate::game_model::{EdgeBlocks, EnsembleDynamics, NetworkedMarkovGame};
use crate::matrix::Matrix;

/// Pairwise tables of one stage, indexed by state.
pub type StageQ = Vec<EdgeBlocks>;

fn expect(row: &[f64], values: &[f64]) -> f64 {
    row.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Canonical pairwise split of `Q_i^V(s, a) = r_i(s, a) + γ̃ Σ_s' ℙ(s'|s,a) V_i(s')`
/// at stage `h`, where `values[i][s']` are the continuation values.
///
/// A controller's own influence is spread evenly over its edges; an
/// opponent controller's influence lands on the edge to that opponent.
/// Without controllers the constant kernel is spread evenly as well.
pub fn canonical_q(game: &NetworkedMarkovGame, h: usize, values: &[Vec<f64>]) -> Result<StageQ> {
    let n = game.num_players();
    let num_states = game.num_states();
    if values.len() != n || values.iter().any(|v| v.len() != num_states) {
        return Err(Error::Dimension(format!(
            "value table must be {n} x {num_states}"
        )));
    }
    if h >= game.num_stages() && matches!(game.horizon(), crate::game_model::Horizon::Finite(_)) {
        return Err(Error::Dimension(format!("stage {h} beyond horizon")));
    }
    let stage = game.stage(h);
    let graph = game.graph();
    let disc = game.continuation_factor();
    let dynamics = &stage.dynamics;
    if let EnsembleDynamics::Ensemble {
        controllers,
        weights,
        ..
    } = dynamics
    {
        for (k, &c) in controllers.iter().enumerate() {
            if !graph.is_core(c) && weights.iter().any(|w| w[k] != 0.0) {
                return Err(Error::Structural(format!(
                    "controller {c} is not adjacent to every player; Q does not decompose"
                )));
            }
        }
    }
    let zero = values.iter().all(|v| v.iter().all(|&x| x == 0.0));

    let mut out = Vec::with_capacity(num_states);
    for s in 0..num_states {
        if zero {
            out.push(stage.rewards[s].clone());
            continue;
        }
        // cont[c][i][a_c] = ⟨F_c(·|s,a_c), V_i⟩ for controller c.
        let counts = game.action_counts();
        let controller_term = |c: usize, i: usize| -> Option<Vec<f64>> {
            let slot = dynamics.controller_slot(c)?;
            Some(
                (0..counts[c])
                    .map(|a| {
                        let mut f = vec![0.0; num_states];
                        dynamics.add_controller_part(slot, s, a, 1.0, &mut f);
                        expect(&f, &values[i])
                    })
                    .collect(),
            )
        };
        let mut blocks = EdgeBlocks::new();
        for i in 0..n {
            let share = 1.0 / graph.degree(i) as f64;
            let own = controller_term(i, i);
            let constant = match dynamics {
                EnsembleDynamics::Constant { kernel } => share * expect(&kernel[s], &values[i]),
                EnsembleDynamics::Ensemble { .. } => 0.0,
            };
            for &j in graph.neighbors(i) {
                let other = controller_term(j, i);
                let r = &stage.rewards[s][&(i, j)];
                let q = Matrix::from_fn(r.rows(), r.cols(), |ai, aj| {
                    let mut c = constant;
                    if let Some(o) = &other {
                        c += o[aj];
                    }
                    if let Some(o) = &own {
                        c += share * o[ai];
                    }
                    r.get(ai, aj) + disc * c
                });
                blocks.insert((i, j), q);
            }
        }
        out.push(blocks);
    }
    Ok(out)
}
