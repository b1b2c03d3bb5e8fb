//! Game generators: random zero-sum instances, fashion games, the fixed
//! experiment instances and a non-decomposable counterexample.

use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::decomposition::DenseMarkovGame;
use crate::error::{Error, Result};
use crate::game_model::joint::{for_each_joint, joint_count};
use crate::game_model::{
    ActionKernel, EdgeBlocks, EnsembleDynamics, Horizon, InteractionGraph, NetworkedMarkovGame,
    PolymatrixGame, Stage,
};
use crate::matrix::Matrix;
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Complete,
    Triangle,
    Ring,
    /// Star centred on player 0.
    Star,
}

impl Topology {
    pub fn graph(self, n: usize) -> Result<InteractionGraph> {
        match self {
            Topology::Complete => InteractionGraph::complete(n),
            Topology::Triangle if n == 3 => Ok(InteractionGraph::triangle()),
            Topology::Triangle => Err(Error::InvalidParameter(format!(
                "a triangle has 3 players, not {n}"
            ))),
            Topology::Ring if n < 3 => Err(Error::InvalidParameter(format!(
                "a ring needs at least 3 players, got {n}"
            ))),
            Topology::Ring => InteractionGraph::ring(n),
            Topology::Star => InteractionGraph::star(n, 0),
        }
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "complete" => Ok(Topology::Complete),
            "triangle" => Ok(Topology::Triangle),
            "ring" => Ok(Topology::Ring),
            "star" => Ok(Topology::Star),
            other => Err(Error::InvalidParameter(format!(
                "unknown topology '{other}'"
            ))),
        }
    }
}

/// Antisymmetric pairwise blocks: `r_ij` has i.i.d. Uniform[0,1] entries
/// and `r_ji = −r_ijᵀ`, so every joint action sums to zero.
pub fn random_zero_sum_blocks(
    graph: &InteractionGraph,
    counts: &[usize],
    rng: &mut Rng,
) -> EdgeBlocks {
    let mut blocks = EdgeBlocks::new();
    for (i, j) in graph.edges() {
        let m = Matrix::from_fn(counts[i], counts[j], |_, _| rng.gen::<f64>());
        blocks.insert((j, i), m.transpose().scale(-1.0));
        blocks.insert((i, j), m);
    }
    blocks
}

pub fn random_zero_sum_polymatrix(
    graph: InteractionGraph,
    counts: Vec<usize>,
    seed: u64,
) -> Result<PolymatrixGame> {
    let mut r = rng::stream(seed, 0x9a3e);
    let blocks = random_zero_sum_blocks(&graph, &counts, &mut r);
    Ok(PolymatrixGame::new(graph, counts, blocks)?.with_zero_sum(true))
}

fn random_simplex(k: usize, rng: &mut Rng) -> Vec<f64> {
    // Exponential spacings give a uniform point on the simplex.
    let x: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = x.iter().sum();
    x.into_iter().map(|v| v / total).collect()
}

fn random_kernel(ns: usize, na: usize, rng: &mut Rng) -> ActionKernel {
    let rows: Vec<Vec<Vec<f64>>> = (0..ns)
        .map(|_| (0..na).map(|_| random_simplex(ns, rng)).collect())
        .collect();
    ActionKernel::from_nested(&rows).expect("random rows are stochastic")
}

/// Random ensemble over `controllers`; an empty list gives an
/// action-independent kernel.
pub fn random_ensemble(
    controllers: &[usize],
    counts: &[usize],
    ns: usize,
    rng: &mut Rng,
) -> EnsembleDynamics {
    if controllers.is_empty() {
        return EnsembleDynamics::Constant {
            kernel: (0..ns).map(|_| random_simplex(ns, rng)).collect(),
        };
    }
    EnsembleDynamics::Ensemble {
        controllers: controllers.to_vec(),
        weights: (0..ns)
            .map(|_| random_simplex(controllers.len(), rng))
            .collect(),
        kernels: controllers
            .iter()
            .map(|&c| random_kernel(ns, counts[c], rng))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomNmgParams {
    pub topology: Topology,
    pub players: usize,
    pub actions: usize,
    pub states: usize,
    pub horizon: Horizon,
    /// Defaults to every player adjacent to all others.
    pub controllers: Option<Vec<usize>>,
}

/// Random zero-sum networked Markov game: fresh antisymmetric blocks and a
/// fresh ensemble at every stage.
pub fn random_zs_nmg(params: &RandomNmgParams, seed: u64) -> Result<NetworkedMarkovGame> {
    let graph = params.topology.graph(params.players)?;
    if params.actions == 0 || params.states == 0 {
        return Err(Error::InvalidParameter(
            "actions and states must be positive".into(),
        ));
    }
    let controllers = match &params.controllers {
        Some(c) => {
            if let Some(&bad) = c.iter().find(|&&i| !graph.is_core(i)) {
                return Err(Error::Topology(format!(
                    "controller {bad} is not adjacent to every other player"
                )));
            }
            c.clone()
        }
        None => graph.core_players(),
    };
    let counts = vec![params.actions; params.players];
    let num_stages = match params.horizon {
        Horizon::Finite(h) => h,
        Horizon::Discounted(_) => 1,
    };
    let mut r = rng::stream(seed, 0x2a11);
    let stages = (0..num_stages)
        .map(|_| Stage {
            rewards: (0..params.states)
                .map(|_| random_zero_sum_blocks(&graph, &counts, &mut r))
                .collect(),
            dynamics: random_ensemble(&controllers, &counts, params.states, &mut r),
        })
        .collect();
    Ok(
        NetworkedMarkovGame::new(graph, params.states, counts, params.horizon, stages)?
            .with_zero_sum(true),
    )
}

/// Random discounted star game whose transitions are controlled by the
/// center (player 0).
pub fn star_random(
    players: usize,
    actions: usize,
    states: usize,
    gamma: f64,
    seed: u64,
) -> Result<NetworkedMarkovGame> {
    random_zs_nmg(
        &RandomNmgParams {
            topology: Topology::Star,
            players,
            actions,
            states,
            horizon: Horizon::Discounted(gamma),
            controllers: Some(vec![0]),
        },
        seed,
    )
}

fn block(rows: [[f64; 2]; 2]) -> Matrix {
    Matrix::from_fn(2, 2, |a, b| rows[a][b])
}

/// Two-state star game used for the fictitious-play experiment: center 0,
/// discount 0.99, center-controlled transitions.
pub fn fp_experiment() -> NetworkedMarkovGame {
    let graph = InteractionGraph::star(3, 0).expect("star");
    let a = block([[1.0, 2.0], [4.0, 3.0]]);
    let b = block([[4.0, 3.0], [2.0, 1.0]]);
    let rewards = [(a.clone(), b.clone()), (b, a)]
        .into_iter()
        .map(|(r01, r02)| {
            let mut m = EdgeBlocks::new();
            m.insert((1, 0), r01.transpose().scale(-1.0));
            m.insert((2, 0), r02.transpose().scale(-1.0));
            m.insert((0, 1), r01);
            m.insert((0, 2), r02);
            m
        })
        .collect();
    // P(0 | s, a0).
    let to_zero = [[0.2, 0.8], [0.8, 0.2]];
    let rows: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|s| {
            (0..2)
                .map(|a| vec![to_zero[s][a], 1.0 - to_zero[s][a]])
                .collect()
        })
        .collect();
    let dynamics = EnsembleDynamics::single_controller(
        0,
        ActionKernel::from_nested(&rows).expect("stochastic"),
    );
    NetworkedMarkovGame::new(
        graph,
        2,
        vec![2, 2, 2],
        Horizon::Discounted(0.99),
        vec![Stage { rewards, dynamics }],
    )
    .expect("valid instance")
    .with_zero_sum(true)
}

/// Triangle game used for the value-iteration experiment: 2 states, 2
/// actions, controllers 1 and 2 with weights 1/3 and 2/3 sharing one
/// random kernel, and random antisymmetric rewards per stage and state.
pub fn vi_experiment(seed: u64, horizon: usize) -> Result<NetworkedMarkovGame> {
    let graph = InteractionGraph::triangle();
    let counts = vec![2; 3];
    let mut r = rng::stream(seed, 0x7e2);
    let (p, q): (f64, f64) = (r.gen(), r.gen());
    // P(0 | s, a) is p when s != a and q when s == a.
    let rows: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|s| {
            (0..2)
                .map(|a| {
                    let to_zero = if s == a { q } else { p };
                    vec![to_zero, 1.0 - to_zero]
                })
                .collect()
        })
        .collect();
    let kernel = ActionKernel::from_nested(&rows)?;
    let dynamics = EnsembleDynamics::Ensemble {
        controllers: vec![0, 1, 2],
        weights: vec![vec![0.0, 1.0 / 3.0, 2.0 / 3.0]; 2],
        kernels: vec![kernel.clone(), kernel.clone(), kernel],
    };
    let stages = (0..horizon)
        .map(|_| Stage {
            rewards: (0..2)
                .map(|_| random_zero_sum_blocks(&graph, &counts, &mut r))
                .collect(),
            dynamics: dynamics.clone(),
        })
        .collect();
    Ok(
        NetworkedMarkovGame::new(graph, 2, counts, Horizon::Finite(horizon), stages)?
            .with_zero_sum(true),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct FashionParams {
    pub conformists: usize,
    pub rebels: usize,
    /// States are the trend levels `−s_max..=s_max`.
    pub s_max: usize,
    /// Players `0..conformists` are conformists, the rest rebels.
    /// Defaults to every conformist–rebel pair.
    pub edges: Option<Vec<(usize, usize)>>,
    /// Players who move the trend; they are linked to every player.
    pub influencers: Vec<usize>,
    pub horizon: Horizon,
    pub zero_sum: bool,
}

impl FashionParams {
    pub fn new(conformists: usize, rebels: usize, s_max: usize, horizon: Horizon) -> Self {
        FashionParams {
            conformists,
            rebels,
            s_max,
            edges: None,
            influencers: vec![0],
            horizon,
            zero_sum: true,
        }
    }
}

/// Fashion game: actions are light (index 0) and dark (index 1); the trend
/// favours dark when the level is nonnegative. Each step the level moves by
/// the colour of a uniformly chosen influencer, clamped to `±s_max`.
///
/// Raw payoffs on edge `(i, j)` are `1(trend agrees with a_i)/deg(i)` plus
/// the matching (conformist) or mismatching (rebel) indicator. The zero-sum
/// version keeps the interaction as `±(indicator − 1/2)` and turns the trend
/// bonus into a transfer `t_i/deg(i) − t_j/deg(j)`, where `t` uses the
/// player's own preference (rebels like going against the trend); this needs
/// every link to join a conformist and a rebel. Influencer links added only
/// for the dynamics carry no interaction term.
pub fn fashion(params: &FashionParams) -> Result<NetworkedMarkovGame> {
    let n = params.conformists + params.rebels;
    let conformist = |i: usize| i < params.conformists;
    let base: Vec<(usize, usize)> = match &params.edges {
        Some(e) => e.clone(),
        None => (0..params.conformists)
            .flat_map(|c| (params.conformists..n).map(move |r| (c, r)))
            .collect(),
    };
    if params.zero_sum {
        if let Some(&(i, j)) = base.iter().find(|&&(i, j)| conformist(i) == conformist(j)) {
            return Err(Error::Topology(format!(
                "link ({i},{j}) joins two players of the same type; the zero-sum version needs every link between a conformist and a rebel"
            )));
        }
    }
    if params.influencers.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one influencer is needed".into(),
        ));
    }
    if let Some(&bad) = params.influencers.iter().find(|&&c| c >= n) {
        return Err(Error::InvalidParameter(format!(
            "influencer {bad} is not a player"
        )));
    }
    let mut all = base.clone();
    for &c in &params.influencers {
        all.extend((0..n).filter(|&j| j != c).map(|j| (c, j)));
    }
    let graph = InteractionGraph::new(n, all)?;
    let interacts = |i: usize, j: usize| {
        base.iter()
            .any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i))
    };
    let ns = 2 * params.s_max + 1;
    let level = |s: usize| s as i64 - params.s_max as i64;
    // Index of the colour the trend favours, and the bonus player i gets for action a.
    let favoured = |s: usize| usize::from(level(s) >= 0);
    let bonus = |i: usize, s: usize, a: usize| -> f64 {
        let agrees = a == favoured(s);
        f64::from(u8::from(agrees == conformist(i)))
    };
    let indicator = |i: usize, a: usize, b: usize| f64::from(u8::from((a == b) == conformist(i)));
    let rewards: Vec<EdgeBlocks> = (0..ns)
        .map(|s| {
            let mut m = EdgeBlocks::new();
            for (i, j) in graph.directed_edges() {
                let (di, dj) = (graph.degree(i) as f64, graph.degree(j) as f64);
                let linked = interacts(i, j);
                let block = Matrix::from_fn(2, 2, |a, b| {
                    let inter = if linked { indicator(i, a, b) } else { 0.0 };
                    if params.zero_sum {
                        let centred = if linked { inter - 0.5 } else { 0.0 };
                        bonus(i, s, a) / di - bonus(j, s, b) / dj + centred
                    } else {
                        bonus(i, s, a) / di + inter
                    }
                });
                m.insert((i, j), block);
            }
            m
        })
        .collect();
    let step = |s: usize, a: usize| -> usize {
        if a == 1 {
            (s + 1).min(ns - 1)
        } else {
            s.saturating_sub(1)
        }
    };
    let rows: Vec<Vec<Vec<f64>>> = (0..ns)
        .map(|s| {
            (0..2)
                .map(|a| {
                    let mut row = vec![0.0; ns];
                    row[step(s, a)] = 1.0;
                    row
                })
                .collect()
        })
        .collect();
    let kernel = ActionKernel::from_nested(&rows)?;
    let k = params.influencers.len();
    let dynamics = EnsembleDynamics::Ensemble {
        controllers: params.influencers.clone(),
        weights: vec![vec![1.0 / k as f64; k]; ns],
        kernels: vec![kernel; k],
    };
    let num_stages = match params.horizon {
        Horizon::Finite(h) => h,
        Horizon::Discounted(_) => 1,
    };
    let stages = vec![Stage { rewards, dynamics }; num_stages];
    Ok(
        NetworkedMarkovGame::new(graph, ns, vec![2; n], params.horizon, stages)?
            .with_zero_sum(params.zero_sum),
    )
}

/// Three-player triangle game whose transitions are not an ensemble of
/// single-controller kernels: from state 0 the game moves to the absorbing
/// state 2 when everyone plays action 1 and to the absorbing state 1
/// otherwise. Player 0 earns 1 in state 0 exactly when everyone plays 1,
/// 2 in state 1 and 1 in state 2; the others each pay half of it.
pub fn counterexample() -> (DenseMarkovGame, InteractionGraph) {
    let counts = vec![2usize; 3];
    let joints = joint_count(&counts).expect("small");
    let mut r0 = vec![vec![0.0; joints]; 3];
    let mut kernel = vec![vec![vec![0.0; 3]; joints]; 3];
    let mut idx = 0;
    for_each_joint(&counts, |a| {
        let all_one = a.iter().all(|&x| x == 1);
        r0[0][idx] = f64::from(u8::from(all_one));
        kernel[0][idx][if all_one { 2 } else { 1 }] = 1.0;
        idx += 1;
    });
    r0[1] = vec![2.0; joints];
    r0[2] = vec![1.0; joints];
    for (s, next) in [(1, 1), (2, 2)] {
        for row in kernel[s].iter_mut() {
            row[next] = 1.0;
        }
    }
    let half: Vec<Vec<f64>> = r0
        .iter()
        .map(|row| row.iter().map(|x| -x / 2.0).collect())
        .collect();
    let game = DenseMarkovGame {
        num_states: 3,
        action_counts: counts,
        rewards: vec![r0, half.clone(), half],
        kernel,
    };
    (game, InteractionGraph::triangle())
}
