use crate::error::{Error, Result};

/// Per-controller transition table `P(s'|s,a)` stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionKernel {
    num_states: usize,
    num_actions: usize,
    data: Vec<f64>,
}

impl ActionKernel {
    /// `rows[s][a][s']`.
    pub fn from_nested(rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Dimension("empty transition kernel".into()));
        }
        let mut data = Vec::with_capacity(num_states * num_actions * num_states);
        for (s, per_action) in rows.iter().enumerate() {
            if per_action.len() != num_actions {
                return Err(Error::Dimension(format!(
                    "kernel state {s}: expected {num_actions} action rows"
                )));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != num_states {
                    return Err(Error::Dimension(format!(
                        "kernel row ({s},{a}) has {} entries",
                        row.len()
                    )));
                }
                data.extend_from_slice(row);
            }
        }
        Ok(ActionKernel {
            num_states,
            num_actions,
            data,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        ActionKernel {
            num_states,
            num_actions,
            data: vec![1.0 / num_states as f64; num_states * num_actions * num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.data[start..start + self.num_states]
    }

    pub fn row_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &mut self.data[start..start + self.num_states]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| self.row(s, a).to_vec())
                    .collect()
            })
            .collect()
    }
}

/// Transition model: a state-dependent mixture of single-controller kernels,
/// or an action-independent kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleDynamics {
    Ensemble {
        controllers: Vec<usize>,
        /// `weights[s][k]` for controller `controllers[k]`.
        weights: Vec<Vec<f64>>,
        kernels: Vec<ActionKernel>,
    },
    Constant {
        /// `kernel[s][s']`.
        kernel: Vec<Vec<f64>>,
    },
}

impl EnsembleDynamics {
    pub fn single_controller(controller: usize, kernel: ActionKernel) -> Self {
        let s = kernel.num_states();
        EnsembleDynamics::Ensemble {
            controllers: vec![controller],
            weights: vec![vec![1.0]; s],
            kernels: vec![kernel],
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            EnsembleDynamics::Ensemble { weights, .. } => weights.len(),
            EnsembleDynamics::Constant { kernel } => kernel.len(),
        }
    }

    pub fn controllers(&self) -> &[usize] {
        match self {
            EnsembleDynamics::Ensemble { controllers, .. } => controllers,
            EnsembleDynamics::Constant { .. } => &[],
        }
    }

    /// Position of `player` in the controller list.
    pub fn controller_slot(&self, player: usize) -> Option<usize> {
        self.controllers().iter().position(|&c| c == player)
    }

    /// `F_i(·|s,a_i) = w_i(s) P_i(·|s,a_i)` added into `out` with factor `scale`.
    pub fn add_controller_part(
        &self,
        slot: usize,
        s: usize,
        a: usize,
        scale: f64,
        out: &mut [f64],
    ) {
        if let EnsembleDynamics::Ensemble {
            weights, kernels, ..
        } = self
        {
            let w = weights[s][slot] * scale;
            if w != 0.0 {
                for (o, p) in out.iter_mut().zip(kernels[slot].row(s, a)) {
                    *o += w * p;
                }
            }
        }
    }

    /// Induced `ℙ(·|s,a)` for a pure joint action.
    pub fn joint_row(&self, s: usize, actions: &[usize]) -> Vec<f64> {
        let n = self.num_states();
        match self {
            EnsembleDynamics::Constant { kernel } => kernel[s].clone(),
            EnsembleDynamics::Ensemble { controllers, .. } => {
                let mut out = vec![0.0; n];
                for (k, &c) in controllers.iter().enumerate() {
                    self.add_controller_part(k, s, actions[c], 1.0, &mut out);
                }
                out
            }
        }
    }

    /// `ℙ(·|s)` when each player mixes independently with `profile`;
    /// `deviation = Some((i, a))` replaces player `i`'s strategy by action `a`.
    pub fn product_row(
        &self,
        s: usize,
        profile: &[Vec<f64>],
        deviation: Option<(usize, usize)>,
    ) -> Vec<f64> {
        let n = self.num_states();
        match self {
            EnsembleDynamics::Constant { kernel } => kernel[s].clone(),
            EnsembleDynamics::Ensemble { controllers, .. } => {
                let mut out = vec![0.0; n];
                for (k, &c) in controllers.iter().enumerate() {
                    match deviation {
                        Some((i, a)) if i == c => self.add_controller_part(k, s, a, 1.0, &mut out),
                        _ => {
                            for (a, &p) in profile[c].iter().enumerate() {
                                if p != 0.0 {
                                    self.add_controller_part(k, s, a, p, &mut out);
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }
}
