use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::graph::InteractionGraph;
use super::joint::for_each_joint;
use super::policy::{check_profile, Profile};

/// Pairwise payoff tables keyed by directed edge `(i, j)`; table `(i, j)`
/// has shape `|A_i| x |A_j|` and pays player `i`.
pub type EdgeBlocks = BTreeMap<(usize, usize), Matrix>;

/// Normal-form networked (polymatrix) game.
#[derive(Clone, Debug, PartialEq)]
pub struct PolymatrixGame {
    graph: InteractionGraph,
    action_counts: Vec<usize>,
    payoffs: EdgeBlocks,
    declared_bound: Option<f64>,
    zero_sum: bool,
}

pub(crate) fn check_blocks(
    graph: &InteractionGraph,
    action_counts: &[usize],
    blocks: &EdgeBlocks,
) -> Result<()> {
    if action_counts.len() != graph.num_players() {
        return Err(Error::Dimension(format!(
            "{} action counts for {} players",
            action_counts.len(),
            graph.num_players()
        )));
    }
    if let Some(i) = action_counts.iter().position(|&k| k == 0) {
        return Err(Error::Structural(format!("player {i} has no actions")));
    }
    for (i, j) in graph.directed_edges() {
        let m = blocks
            .get(&(i, j))
            .ok_or_else(|| Error::Structural(format!("missing payoff table for edge ({i},{j})")))?;
        if m.rows() != action_counts[i] || m.cols() != action_counts[j] {
            return Err(Error::Dimension(format!(
                "table ({i},{j}) is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                action_counts[i],
                action_counts[j]
            )));
        }
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Structural(format!(
                "non-finite entry in table ({i},{j})"
            )));
        }
    }
    if let Some(&(i, j)) = blocks.keys().find(|(i, j)| !graph.has_edge(*i, *j)) {
        return Err(Error::Structural(format!(
            "payoff table ({i},{j}) is not on a graph edge"
        )));
    }
    Ok(())
}

/// Largest spread `Σ_j (max r_ij − min r_ij)` of any player's payoff; every
/// `r_i` lies in an interval of this length.
pub(crate) fn payoff_spread(graph: &InteractionGraph, blocks: &EdgeBlocks) -> f64 {
    (0..graph.num_players())
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .map(|&j| blocks[&(i, j)].max() - blocks[&(i, j)].min())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

impl PolymatrixGame {
    pub fn new(
        graph: InteractionGraph,
        action_counts: Vec<usize>,
        payoffs: EdgeBlocks,
    ) -> Result<Self> {
        check_blocks(&graph, &action_counts, &payoffs)?;
        Ok(PolymatrixGame {
            graph,
            action_counts,
            payoffs,
            declared_bound: None,
            zero_sum: false,
        })
    }

    /// Two-player game with `r_{0,1} = m` and `r_{1,0} = -mᵀ`.
    pub fn two_player_zero_sum(m: Matrix) -> Self {
        let graph = InteractionGraph::complete(2).expect("two players");
        let counts = vec![m.rows(), m.cols()];
        let mut blocks = EdgeBlocks::new();
        blocks.insert((1, 0), m.transpose().scale(-1.0));
        blocks.insert((0, 1), m);
        PolymatrixGame::new(graph, counts, blocks)
            .expect("consistent shapes")
            .with_zero_sum(true)
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

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn payoffs(&self) -> &EdgeBlocks {
        &self.payoffs
    }

    pub fn block(&self, i: usize, j: usize) -> &Matrix {
        &self.payoffs[&(i, j)]
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn declared_bound(&self) -> Option<f64> {
        self.declared_bound
    }

    /// Reward bound `R`: the declared value, else the largest payoff spread.
    pub fn reward_bound(&self) -> f64 {
        self.declared_bound
            .unwrap_or_else(|| payoff_spread(&self.graph, &self.payoffs))
    }

    /// Largest absolute entry over all pairwise tables.
    pub fn max_abs_entry(&self) -> f64 {
        self.payoffs
            .values()
            .map(Matrix::max_abs)
            .fold(0.0, f64::max)
    }

    pub fn max_log_actions(&self) -> f64 {
        self.action_counts
            .iter()
            .map(|&k| (k as f64).ln())
            .fold(0.0, f64::max)
    }

    /// `q_i = Σ_j r_ij π_j`, the payoff of each pure action of `i`.
    pub fn payoff_vector(&self, i: usize, profile: &[Vec<f64>]) -> Vec<f64> {
        let mut q = vec![0.0; self.action_counts[i]];
        for &j in self.graph.neighbors(i) {
            self.payoffs[&(i, j)].add_mul_vec(&profile[j], &mut q);
        }
        q
    }

    /// `r_i(π)` for every player.
    pub fn expected_payoffs(&self, profile: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_profile(&self.action_counts, profile, 1e-6)?;
        Ok(self.expected_payoffs_unchecked(profile))
    }

    pub(crate) fn expected_payoffs_unchecked(&self, profile: &[Vec<f64>]) -> Vec<f64> {
        (0..self.num_players())
            .map(|i| dot(&profile[i], &self.payoff_vector(i, profile)))
            .collect()
    }

    /// Payoffs at a pure joint action.
    pub fn pure_payoffs(&self, actions: &[usize]) -> Vec<f64> {
        (0..self.num_players())
            .map(|i| {
                self.graph
                    .neighbors(i)
                    .iter()
                    .map(|&j| self.payoffs[&(i, j)].get(actions[i], actions[j]))
                    .sum()
            })
            .collect()
    }

    /// `Σ_i r_i(a)` at a pure joint action.
    pub fn payoff_sum(&self, actions: &[usize]) -> f64 {
        self.payoffs
            .iter()
            .map(|(&(i, j), m)| m.get(actions[i], actions[j]))
            .sum()
    }

    /// Brute-force expected payoffs by enumerating joint actions.
    pub fn expected_payoffs_enumerated(&self, profile: &Profile) -> Vec<f64> {
        let mut out = vec![0.0; self.num_players()];
        for_each_joint(&self.action_counts, |a| {
            let p: f64 = a
                .iter()
                .enumerate()
                .map(|(i, &ai)| profile[i][ai])
                .product();
            if p != 0.0 {
                for (o, r) in out.iter_mut().zip(self.pure_payoffs(a)) {
                    *o += p * r;
                }
            }
        });
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn experiment_stage() -> PolymatrixGame {
        let r01 = Matrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]).unwrap();
        let r02 = Matrix::from_rows(&[vec![4.0, 3.0], vec![2.0, 1.0]]).unwrap();
        let mut b = EdgeBlocks::new();
        b.insert((1, 0), r01.transpose().scale(-1.0));
        b.insert((2, 0), r02.transpose().scale(-1.0));
        b.insert((0, 1), r01);
        b.insert((0, 2), r02);
        PolymatrixGame::new(InteractionGraph::star(3, 0).unwrap(), vec![2, 2, 2], b).unwrap()
    }

    #[test]
    fn pure_profile_payoffs() {
        let g = experiment_stage();
        assert_eq!(g.pure_payoffs(&[0, 1, 0]), vec![6.0, -2.0, -4.0]);
        let p = super::super::policy::pure_profile(&[2, 2, 2], &[0, 1, 0]);
        assert_eq!(g.expected_payoffs(&p).unwrap(), vec![6.0, -2.0, -4.0]);
    }

    #[test]
    fn missing_table_is_structural() {
        let mut b = EdgeBlocks::new();
        b.insert((0, 1), Matrix::zeros(2, 2));
        let err =
            PolymatrixGame::new(InteractionGraph::complete(2).unwrap(), vec![2, 2], b).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }

    #[test]
    fn spread_bound() {
        // player 0: spreads 3 + 3
        assert_eq!(experiment_stage().reward_bound(), 6.0);
    }
}
