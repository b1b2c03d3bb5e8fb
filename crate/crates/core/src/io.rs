//! JSON formats for games and policies.
//!
//! Pairwise tables are keyed `"i,j"` (row player `i`). Normal-form games
//! omit `horizon` and `dynamics` and carry a single stage and state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::decomposition::DenseMarkovGame;
use crate::error::{Error, Result};
use crate::game_model::{
    ActionKernel, EdgeBlocks, EnsembleDynamics, Horizon, InteractionGraph, MarkovPolicy,
    NetworkedMarkovGame, PolymatrixGame, Profile, Stage,
};
use crate::matrix::Matrix;

type BlockMap = BTreeMap<String, Vec<Vec<f64>>>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HorizonSpec {
    Finite(usize),
    Discounted(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsSpec {
    Ensemble {
        controllers: Vec<usize>,
        /// State → weight of each controller, in `controllers` order.
        weights: BTreeMap<String, Vec<f64>>,
        /// Controller → `[s][a][s']`.
        kernels: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
    },
    Constant {
        kernel: Vec<Vec<f64>>,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub players: usize,
    pub actions: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default = "one")]
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<HorizonSpec>,
    #[serde(default)]
    pub zero_sum: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_bound: Option<f64>,
    /// `rewards[h][s]["i,j"]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rewards: Vec<Vec<BlockMap>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dynamics: Vec<DynamicsSpec>,
    /// Unstructured stationary rewards `[i][s][joint]` (joint actions row-major).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_rewards: Option<Vec<Vec<Vec<f64>>>>,
    /// Unstructured kernel `[s][joint][s']`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_dynamics: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LoadedGame {
    Matrix(PolymatrixGame),
    Markov(NetworkedMarkovGame),
    /// Unstructured game to be checked against `graph`.
    Dense {
        game: DenseMarkovGame,
        graph: InteractionGraph,
    },
}

fn parse_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("block key '{key}' is not of the form \"i,j\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn to_blocks(map: &BlockMap) -> Result<EdgeBlocks> {
    map.iter()
        .map(|(k, rows)| {
            Ok((
                parse_key(k)?,
                Matrix::from_rows(rows).map_err(|e| Error::Parse(format!("block {k}: {e}")))?,
            ))
        })
        .collect()
}

fn from_blocks(blocks: &EdgeBlocks) -> BlockMap {
    blocks
        .iter()
        .map(|(&(i, j), m)| (format!("{i},{j}"), m.to_rows()))
        .collect()
}

fn to_dynamics(spec: &DynamicsSpec, num_states: usize) -> Result<EnsembleDynamics> {
    Ok(match spec {
        DynamicsSpec::Constant { kernel } => EnsembleDynamics::Constant {
            kernel: kernel.clone(),
        },
        DynamicsSpec::Ensemble {
            controllers,
            weights,
            kernels,
        } => {
            let weights = dense_keys(weights, "weight state")?;
            if weights.len() != num_states {
                return Err(Error::Parse(format!(
                    "weights given for {} states, game has {num_states}",
                    weights.len()
                )));
            }
            let kernels = controllers
                .iter()
                .map(|c| {
                    let k = kernels
                        .get(&c.to_string())
                        .ok_or_else(|| Error::Parse(format!("no kernel for controller {c}")))?;
                    ActionKernel::from_nested(k)
                })
                .collect::<Result<_>>()?;
            EnsembleDynamics::Ensemble {
                controllers: controllers.clone(),
                weights: weights.into_iter().map(|(_, w)| w).collect(),
                kernels,
            }
        }
    })
}

fn from_dynamics(d: &EnsembleDynamics) -> DynamicsSpec {
    match d {
        EnsembleDynamics::Constant { kernel } => DynamicsSpec::Constant {
            kernel: kernel.clone(),
        },
        EnsembleDynamics::Ensemble {
            controllers,
            weights,
            kernels,
        } => DynamicsSpec::Ensemble {
            controllers: controllers.clone(),
            weights: weights
                .iter()
                .enumerate()
                .map(|(s, w)| (s.to_string(), w.clone()))
                .collect(),
            kernels: controllers
                .iter()
                .zip(kernels)
                .map(|(c, k)| (c.to_string(), k.to_nested()))
                .collect(),
        },
    }
}

impl GameFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game files serialise") + "\n"
    }

    fn graph(&self) -> Result<InteractionGraph> {
        if self.actions.len() != self.players {
            return Err(Error::Parse(format!(
                "{} players but {} action counts",
                self.players,
                self.actions.len()
            )));
        }
        InteractionGraph::new(self.players, self.edges.iter().map(|e| (e[0], e[1])))
    }

    pub fn build(&self) -> Result<LoadedGame> {
        let graph = self.graph()?;
        if self.dense_rewards.is_some() || self.dense_dynamics.is_some() {
            let (Some(rewards), Some(kernel)) = (&self.dense_rewards, &self.dense_dynamics) else {
                return Err(Error::Parse(
                    "dense games need both dense_rewards and dense_dynamics".into(),
                ));
            };
            if !self.rewards.is_empty() || !self.dynamics.is_empty() {
                return Err(Error::Parse(
                    "a dense game cannot also carry pairwise rewards or dynamics".into(),
                ));
            }
            let game = DenseMarkovGame {
                num_states: self.states,
                action_counts: self.actions.clone(),
                rewards: rewards.clone(),
                kernel: kernel.clone(),
            };
            game.check_shape()?;
            return Ok(LoadedGame::Dense { game, graph });
        }
        let Some(h) = self.horizon else {
            if self.states != 1
                || self.rewards.len() != 1
                || self.rewards[0].len() != 1
                || !self.dynamics.is_empty()
            {
                return Err(Error::Parse(
                    "a game without a horizon must have one state, one reward stage and no dynamics".into(),
                ));
            }
            let game =
                PolymatrixGame::new(graph, self.actions.clone(), to_blocks(&self.rewards[0][0])?)?
                    .with_zero_sum(self.zero_sum)
                    .with_declared_bound(self.reward_bound);
            return Ok(LoadedGame::Matrix(game));
        };
        if self.rewards.len() != self.dynamics.len() {
            return Err(Error::Parse(format!(
                "{} reward stages but {} dynamics stages",
                self.rewards.len(),
                self.dynamics.len()
            )));
        }
        let stages = self
            .rewards
            .iter()
            .zip(&self.dynamics)
            .map(|(r, d)| {
                Ok(Stage {
                    rewards: r.iter().map(to_blocks).collect::<Result<_>>()?,
                    dynamics: to_dynamics(d, self.states)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let horizon = match h {
            HorizonSpec::Finite(h) => Horizon::Finite(h),
            HorizonSpec::Discounted(g) => Horizon::Discounted(g),
        };
        let game =
            NetworkedMarkovGame::new(graph, self.states, self.actions.clone(), horizon, stages)?
                .with_zero_sum(self.zero_sum)
                .with_declared_bound(self.reward_bound);
        Ok(LoadedGame::Markov(game))
    }

    fn header(graph: &InteractionGraph, actions: &[usize], states: usize) -> Self {
        GameFile {
            players: graph.num_players(),
            actions: actions.to_vec(),
            edges: graph.edges().map(|(i, j)| [i, j]).collect(),
            states,
            horizon: None,
            zero_sum: false,
            reward_bound: None,
            rewards: Vec::new(),
            dynamics: Vec::new(),
            dense_rewards: None,
            dense_dynamics: None,
        }
    }

    pub fn from_polymatrix(game: &PolymatrixGame) -> Self {
        let mut f = GameFile::header(game.graph(), game.action_counts(), 1);
        f.zero_sum = game.is_zero_sum();
        f.reward_bound = game.declared_bound();
        f.rewards = vec![vec![from_blocks(game.payoffs())]];
        f
    }

    pub fn from_markov(game: &NetworkedMarkovGame) -> Self {
        let mut f = GameFile::header(game.graph(), game.action_counts(), game.num_states());
        f.horizon = Some(match game.horizon() {
            Horizon::Finite(h) => HorizonSpec::Finite(h),
            Horizon::Discounted(g) => HorizonSpec::Discounted(g),
        });
        f.zero_sum = game.is_zero_sum();
        f.reward_bound = game.declared_bound();
        f.rewards = game
            .stages()
            .iter()
            .map(|st| st.rewards.iter().map(from_blocks).collect())
            .collect();
        f.dynamics = game
            .stages()
            .iter()
            .map(|st| from_dynamics(&st.dynamics))
            .collect();
        f
    }

    pub fn from_dense(game: &DenseMarkovGame, graph: &InteractionGraph) -> Self {
        let mut f = GameFile::header(graph, &game.action_counts, game.num_states);
        f.dense_rewards = Some(game.rewards.clone());
        f.dense_dynamics = Some(game.kernel.clone());
        f
    }
}

pub fn load_game(text: &str) -> Result<LoadedGame> {
    GameFile::parse(text)?.build()
}

/// `{h: {s: {player: [p, ...]}}}` with decimal string keys.
pub type PolicyFile = BTreeMap<String, BTreeMap<String, BTreeMap<String, Vec<f64>>>>;

pub fn policy_to_file(policy: &MarkovPolicy) -> PolicyFile {
    policy
        .stages
        .iter()
        .enumerate()
        .map(|(h, row)| {
            let states = row
                .iter()
                .enumerate()
                .map(|(s, prof)| {
                    (
                        s.to_string(),
                        prof.iter()
                            .enumerate()
                            .map(|(i, p)| (i.to_string(), p.clone()))
                            .collect(),
                    )
                })
                .collect();
            (h.to_string(), states)
        })
        .collect()
}

pub fn policy_to_json(policy: &MarkovPolicy) -> String {
    serde_json::to_string_pretty(&policy_to_file(policy)).expect("policies serialise") + "\n"
}

fn dense_keys<T>(map: &BTreeMap<String, T>, what: &str) -> Result<Vec<(usize, T)>>
where
    T: Clone,
{
    let mut out: Vec<(usize, T)> = map
        .iter()
        .map(|(k, v)| {
            k.parse::<usize>()
                .map(|i| (i, v.clone()))
                .map_err(|_| Error::Parse(format!("{what} key '{k}' is not an index")))
        })
        .collect::<Result<_>>()?;
    out.sort_by_key(|(i, _)| *i);
    if out.iter().enumerate().any(|(pos, (i, _))| pos != *i) {
        return Err(Error::Parse(format!(
            "{what} indices must be 0..{}",
            out.len()
        )));
    }
    Ok(out)
}

pub fn policy_from_json(text: &str) -> Result<MarkovPolicy> {
    let file: PolicyFile = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let stages = dense_keys(&file, "stage")?
        .into_iter()
        .map(|(_, states)| {
            dense_keys(&states, "state")?
                .into_iter()
                .map(|(_, players)| {
                    Ok(dense_keys(&players, "player")?
                        .into_iter()
                        .map(|(_, p)| p)
                        .collect::<Profile>())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if stages.is_empty() {
        return Err(Error::Parse("policy has no stages".into()));
    }
    Ok(MarkovPolicy { stages })
}
