use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_model::joint::{for_each_joint, joint_count, joint_index};
use crate::game_model::{ActionKernel, EdgeBlocks, EnsembleDynamics, InteractionGraph};
use crate::matrix::Matrix;

use super::additive::{check_additive, DecompositionReport, DenseTensor, Witness};
use super::repair::{repair_nonnegative, SignedKernel};

/// Markov game with unstructured rewards `r_i(s, a)` and kernel `P(s'|s, a)`,
/// joint actions indexed row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMarkovGame {
    pub num_states: usize,
    pub action_counts: Vec<usize>,
    /// `rewards[i][s][joint]`.
    pub rewards: Vec<Vec<Vec<f64>>>,
    /// `kernel[s][joint][s']`.
    pub kernel: Vec<Vec<Vec<f64>>>,
}

impl DenseMarkovGame {
    pub fn check_shape(&self) -> Result<usize> {
        let joints = joint_count(&self.action_counts)
            .ok_or_else(|| Error::Dimension("joint space too large".into()))?;
        let n = self.action_counts.len();
        let s = self.num_states;
        if self.rewards.len() != n
            || self
                .rewards
                .iter()
                .any(|r| r.len() != s || r.iter().any(|x| x.len() != joints))
        {
            return Err(Error::Dimension(format!(
                "dense rewards must be {n} x {s} x {joints}"
            )));
        }
        if self.kernel.len() != s
            || self
                .kernel
                .iter()
                .any(|k| k.len() != joints || k.iter().any(|r| r.len() != s))
        {
            return Err(Error::Dimension(format!(
                "dense kernel must be {s} x {joints} x {s}"
            )));
        }
        Ok(joints)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RewardFailure {
    pub player: usize,
    pub state: usize,
    pub own_action: usize,
    pub witness: Option<Witness>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardStructure {
    pub failures: Vec<RewardFailure>,
    /// Pairwise tables per state when every slice decomposes.
    pub tables: Option<Vec<EdgeBlocks>>,
    pub max_residual: f64,
}

impl RewardStructure {
    pub fn decomposable(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks that every `r_i(s, a_i, ·)` splits over the neighbours of `i` and
/// assembles the pairwise tables `r_ij(s, a_i, a_j)` when it does.
pub fn check_reward_structure(
    rewards: &[Vec<Vec<f64>>],
    action_counts: &[usize],
    graph: &InteractionGraph,
    tol: f64,
) -> Result<RewardStructure> {
    let n = action_counts.len();
    if graph.num_players() != n || rewards.len() != n {
        return Err(Error::Dimension(
            "graph, action counts and rewards disagree on the player count".into(),
        ));
    }
    let num_states = rewards[0].len();
    let joints = joint_count(action_counts)
        .ok_or_else(|| Error::Dimension("joint space too large".into()))?;
    let mut failures = Vec::new();
    let mut tables: Vec<EdgeBlocks> = (0..num_states)
        .map(|_| {
            graph
                .directed_edges()
                .map(|(i, j)| ((i, j), Matrix::zeros(action_counts[i], action_counts[j])))
                .collect()
        })
        .collect();
    let mut max_residual: f64 = 0.0;
    for i in 0..n {
        if rewards[i].len() != num_states || rewards[i].iter().any(|r| r.len() != joints) {
            return Err(Error::Dimension(format!(
                "rewards of player {i} have the wrong shape"
            )));
        }
        let coords = graph.neighbors(i);
        for s in 0..num_states {
            for ai in 0..action_counts[i] {
                let mut dims = action_counts.to_vec();
                dims[i] = 1;
                let slice = DenseTensor::from_fn(dims, |x| {
                    let mut a = x.to_vec();
                    a[i] = ai;
                    rewards[i][s][joint_index(action_counts, &a)]
                })?;
                let rep: DecompositionReport = check_additive(&slice, coords, tol)?;
                max_residual = max_residual.max(rep.max_residual);
                if !rep.decomposable {
                    failures.push(RewardFailure {
                        player: i,
                        state: s,
                        own_action: ai,
                        witness: rep.witness,
                        max_residual: rep.max_residual,
                    });
                    continue;
                }
                for (&j, comp) in rep.coordinates.iter().zip(&rep.components) {
                    let m = tables[s].get_mut(&(i, j)).expect("edge table");
                    for (aj, &v) in comp.iter().enumerate() {
                        m.set(ai, aj, v);
                    }
                }
            }
        }
    }
    let tables = failures.is_empty().then_some(tables);
    Ok(RewardStructure {
        failures,
        tables,
        max_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionFailure {
    pub state: usize,
    pub next_state: usize,
    pub witness: Option<Witness>,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransitionStructure {
    Decomposed {
        dynamics: EnsembleDynamics,
        max_residual: f64,
    },
    NotDecomposable(TransitionFailure),
}

/// Recovers ensemble (or constant) dynamics from a dense kernel
/// `kernel[s][joint][s']`.
///
/// Components are anchored at action 0, repaired to be non-negative, then
/// put in a canonical form: each component's minimum over its own action is
/// pooled and shared equally by the controllers that actually influence
/// state `s`. Controllers with zero weight at every state are dropped.
pub fn check_transition_structure(
    kernel: &[Vec<Vec<f64>>],
    action_counts: &[usize],
    graph: &InteractionGraph,
    tol: f64,
) -> Result<TransitionStructure> {
    let num_states = kernel.len();
    let joints = joint_count(action_counts)
        .ok_or_else(|| Error::Dimension("joint space too large".into()))?;
    if num_states == 0
        || kernel
            .iter()
            .any(|k| k.len() != joints || k.iter().any(|r| r.len() != num_states))
    {
        return Err(Error::Dimension(format!(
            "dense kernel must be S x {joints} x S"
        )));
    }
    let core = graph.core_players();

    let mut signed: Vec<SignedKernel> = core
        .iter()
        .map(|&c| vec![vec![vec![0.0; num_states]; action_counts[c]]; num_states])
        .collect();
    let mut constant = vec![vec![0.0; num_states]; num_states];
    for s in 0..num_states {
        for sp in 0..num_states {
            let f = DenseTensor::new(
                action_counts.to_vec(),
                kernel[s].iter().map(|row| row[sp]).collect(),
            )?;
            let rep = check_additive(&f, &core, tol)?;
            if !rep.decomposable {
                return Ok(TransitionStructure::NotDecomposable(TransitionFailure {
                    state: s,
                    next_state: sp,
                    witness: rep.witness,
                    max_residual: rep.max_residual,
                }));
            }
            match rep.constant {
                Some(c) => constant[s][sp] = c,
                None => {
                    for (k, comp) in rep.components.iter().enumerate() {
                        for (a, &v) in comp.iter().enumerate() {
                            signed[k][s][a][sp] = v;
                        }
                    }
                }
            }
        }
    }

    let dynamics = if core.is_empty() {
        EnsembleDynamics::Constant { kernel: constant }
    } else {
        repair_nonnegative(&mut signed)?;
        canonicalize(&mut signed, tol);
        extract_ensemble(&core, signed, tol)?
    };

    let mut max_residual: f64 = 0.0;
    for (s, rows) in kernel.iter().enumerate() {
        let mut idx = 0;
        for_each_joint(action_counts, |a| {
            let induced = dynamics.joint_row(s, a);
            for (x, y) in induced.iter().zip(&rows[idx]) {
                max_residual = max_residual.max((x - y).abs());
            }
            idx += 1;
        });
    }
    Ok(TransitionStructure::Decomposed {
        dynamics,
        max_residual,
    })
}

fn canonicalize(signed: &mut [SignedKernel], tol: f64) {
    let num_states = signed[0].len();
    for s in 0..num_states {
        let active: Vec<usize> = (0..signed.len())
            .filter(|&k| {
                (0..num_states).any(|sp| {
                    let col = signed[k][s].iter().map(|row| row[sp]);
                    let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                        (l.min(v), h.max(v))
                    });
                    hi - lo > tol
                })
            })
            .collect();
        let receivers: Vec<usize> = if active.is_empty() { vec![0] } else { active };
        for sp in 0..num_states {
            let mut pooled = 0.0;
            for comp in signed.iter_mut() {
                let lo = comp[s]
                    .iter()
                    .map(|row| row[sp])
                    .fold(f64::INFINITY, f64::min);
                pooled += lo;
                comp[s].iter_mut().for_each(|row| row[sp] -= lo);
            }
            let share = pooled / receivers.len() as f64;
            for &k in &receivers {
                signed[k][s].iter_mut().for_each(|row| row[sp] += share);
            }
        }
    }
}

fn extract_ensemble(
    core: &[usize],
    signed: Vec<SignedKernel>,
    tol: f64,
) -> Result<EnsembleDynamics> {
    let num_states = signed[0].len();
    let mut weights = vec![vec![0.0; core.len()]; num_states];
    let mut kernels = Vec::with_capacity(core.len());
    for (k, comp) in signed.into_iter().enumerate() {
        let num_actions = comp[0].len();
        let mut rows = vec![vec![vec![0.0; num_states]; num_actions]; num_states];
        for s in 0..num_states {
            let masses: Vec<f64> = comp[s].iter().map(|row| row.iter().sum()).collect();
            let (lo, hi) = masses
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                    (l.min(v), h.max(v))
                });
            if hi - lo > tol {
                return Err(Error::Decomposition(format!(
                    "weight of controller {} at state {s} depends on its action (spread {:.3e})",
                    core[k],
                    hi - lo
                )));
            }
            let w = masses.iter().sum::<f64>() / masses.len() as f64;
            weights[s][k] = w;
            for a in 0..num_actions {
                rows[s][a] = if w > tol {
                    comp[s][a].iter().map(|v| v / masses[a]).collect()
                } else {
                    vec![1.0 / num_states as f64; num_states]
                };
            }
        }
        kernels.push(ActionKernel::from_nested(&rows)?);
    }
    // Drop controllers that never carry weight.
    let keep: Vec<usize> = (0..core.len())
        .filter(|&k| weights.iter().any(|w| w[k] > tol))
        .collect();
    let keep = if keep.is_empty() { vec![0] } else { keep };
    Ok(EnsembleDynamics::Ensemble {
        controllers: keep.iter().map(|&k| core[k]).collect(),
        weights: weights
            .iter()
            .map(|w| keep.iter().map(|&k| w[k]).collect())
            .collect(),
        kernels: keep.iter().map(|&k| kernels[k].clone()).collect(),
    })
}

/// Structural verdict for a dense game against an interaction graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseValidation {
    pub rewards: RewardStructure,
    pub transitions: TransitionStructure,
}

impl DenseValidation {
    pub fn is_networked(&self) -> bool {
        self.rewards.decomposable()
            && matches!(self.transitions, TransitionStructure::Decomposed { .. })
    }
}

pub fn validate_dense(
    game: &DenseMarkovGame,
    graph: &InteractionGraph,
    tol: f64,
) -> Result<DenseValidation> {
    game.check_shape()?;
    Ok(DenseValidation {
        rewards: check_reward_structure(&game.rewards, &game.action_counts, graph, tol)?,
        transitions: check_transition_structure(&game.kernel, &game.action_counts, graph, tol)?,
    })
}
