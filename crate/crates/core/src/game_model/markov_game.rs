use crate::error::{Error, Result};

use super::dynamics::EnsembleDynamics;
use super::graph::InteractionGraph;
use super::polymatrix::{check_blocks, payoff_spread, EdgeBlocks, PolymatrixGame};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite(usize),
    Discounted(f64),
}

/// Rewards and dynamics used at one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    /// Pairwise reward tables per state.
    pub rewards: Vec<EdgeBlocks>,
    pub dynamics: EnsembleDynamics,
}

/// Markov game with networked separable interactions.
///
/// Finite-horizon games carry one [`Stage`] per step; discounted games carry
/// a single stationary stage.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkedMarkovGame {
    graph: InteractionGraph,
    num_states: usize,
    action_counts: Vec<usize>,
    horizon: Horizon,
    stages: Vec<Stage>,
    declared_bound: Option<f64>,
    zero_sum: bool,
}

impl NetworkedMarkovGame {
    pub fn new(
        graph: InteractionGraph,
        num_states: usize,
        action_counts: Vec<usize>,
        horizon: Horizon,
        stages: Vec<Stage>,
    ) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::Structural("game has no states".into()));
        }
        let expected = match horizon {
            Horizon::Finite(h) => {
                if h == 0 {
                    return Err(Error::Structural("finite horizon must be positive".into()));
                }
                h
            }
            Horizon::Discounted(g) => {
                if !(g > 0.0 && g < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "discount {g} outside (0,1)"
                    )));
                }
                1
            }
        };
        if stages.len() != expected {
            return Err(Error::Structural(format!(
                "expected {expected} stages, found {}",
                stages.len()
            )));
        }
        for (h, st) in stages.iter().enumerate() {
            if st.rewards.len() != num_states {
                return Err(Error::Dimension(format!(
                    "stage {h}: rewards for {} states, game has {num_states}",
                    st.rewards.len()
                )));
            }
            for (s, blocks) in st.rewards.iter().enumerate() {
                check_blocks(&graph, &action_counts, blocks)
                    .map_err(|e| Error::Structural(format!("stage {h}, state {s}: {e}")))?;
            }
            check_dynamics_shape(&st.dynamics, num_states, &action_counts)
                .map_err(|e| Error::Structural(format!("stage {h}: {e}")))?;
        }
        Ok(NetworkedMarkovGame {
            graph,
            num_states,
            action_counts,
            horizon,
            stages,
            declared_bound: None,
            zero_sum: false,
        })
    }

    pub fn with_zero_sum(mut self, flag: bool) -> Self {
        self.zero_sum = flag;
        self
    }

    pub fn with_declared_bound(mut self, bound: Option<f64>) -> Self {
        self.declared_bound = bound;
        self
    }

    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    pub fn num_players(&self) -> usize {
        self.graph.num_players()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn declared_bound(&self) -> Option<f64> {
        self.declared_bound
    }

    /// Number of decision steps (1 for discounted games' stationary stage).
    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Stage `h`; discounted games return their single stage for any `h`.
    pub fn stage(&self, h: usize) -> &Stage {
        match self.horizon {
            Horizon::Finite(_) => &self.stages[h],
            Horizon::Discounted(_) => &self.stages[0],
        }
    }

    /// Continuation factor: `γ` when discounted, `1` for finite horizon.
    pub fn continuation_factor(&self) -> f64 {
        match self.horizon {
            Horizon::Finite(_) => 1.0,
            Horizon::Discounted(g) => g,
        }
    }

    pub fn reward_blocks(&self, h: usize, s: usize) -> &EdgeBlocks {
        &self.stage(h).rewards[s]
    }

    /// The reward stage game at `(h, s)`.
    pub fn stage_game(&self, h: usize, s: usize) -> PolymatrixGame {
        PolymatrixGame::new(
            self.graph.clone(),
            self.action_counts.clone(),
            self.reward_blocks(h, s).clone(),
        )
        .expect("validated at construction")
        .with_zero_sum(self.zero_sum)
    }

    /// Reward bound `R`: declared, else the largest per-player payoff spread
    /// over all stages and states.
    pub fn reward_bound(&self) -> f64 {
        self.declared_bound.unwrap_or_else(|| {
            self.stages
                .iter()
                .flat_map(|st| st.rewards.iter())
                .map(|b| payoff_spread(&self.graph, b))
                .fold(0.0, f64::max)
        })
    }

    /// `max_i Σ_j max|r_ij|` over stages and states; bounds `|r_i|` and every entry.
    pub fn absolute_bound(&self) -> f64 {
        let mut best: f64 = 0.0;
        for st in &self.stages {
            for b in &st.rewards {
                for i in 0..self.num_players() {
                    let v: f64 = self
                        .graph
                        .neighbors(i)
                        .iter()
                        .map(|&j| b[&(i, j)].max_abs())
                        .sum();
                    best = best.max(v);
                }
            }
        }
        best
    }

    /// Center of the star when the graph is a star (ties for `n = 2` go to
    /// the single dynamics controller, if any).
    pub fn star_center(&self) -> Option<usize> {
        if self.num_players() == 2 {
            if let [c] = self.stage(0).dynamics.controllers() {
                return Some(*c);
            }
        }
        self.graph.star_center()
    }

    /// Center of a star game whose dynamics are controlled by the center
    /// alone at every stage; errors explain which condition fails.
    pub fn require_star_single_controller(&self) -> Result<usize> {
        let center = self
            .star_center()
            .ok_or_else(|| Error::Topology("interaction graph is not a star".into()))?;
        for st in &self.stages {
            match &st.dynamics {
                EnsembleDynamics::Ensemble {
                    controllers,
                    weights,
                    ..
                } => {
                    let ok = controllers
                        .iter()
                        .enumerate()
                        .all(|(k, &c)| c == center || weights.iter().all(|w| w[k] == 0.0));
                    if !ok || !controllers.contains(&center) {
                        return Err(Error::Topology(format!(
                            "dynamics must be controlled by the star center {center} alone"
                        )));
                    }
                }
                EnsembleDynamics::Constant { .. } => {}
            }
        }
        Ok(center)
    }
}

fn check_dynamics_shape(
    d: &EnsembleDynamics,
    num_states: usize,
    action_counts: &[usize],
) -> Result<()> {
    match d {
        EnsembleDynamics::Constant { kernel } => {
            if kernel.len() != num_states || kernel.iter().any(|r| r.len() != num_states) {
                return Err(Error::Dimension("constant kernel must be S x S".into()));
            }
        }
        EnsembleDynamics::Ensemble {
            controllers,
            weights,
            kernels,
        } => {
            if controllers.len() != kernels.len() {
                return Err(Error::Dimension(
                    "one kernel per controller required".into(),
                ));
            }
            let mut sorted = controllers.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != controllers.len() {
                return Err(Error::Structural("duplicate controller".into()));
            }
            if weights.len() != num_states || weights.iter().any(|w| w.len() != controllers.len()) {
                return Err(Error::Dimension("weights must be S x |controllers|".into()));
            }
            for (&c, k) in controllers.iter().zip(kernels) {
                if c >= action_counts.len() {
                    return Err(Error::Structural(format!("controller {c} is not a player")));
                }
                if k.num_states() != num_states || k.num_actions() != action_counts[c] {
                    return Err(Error::Dimension(format!(
                        "kernel of controller {c} has wrong shape"
                    )));
                }
            }
        }
    }
    Ok(())
}
