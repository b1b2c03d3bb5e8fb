use rand::Rng as _;
use serde::Serialize;

use crate::rng;

use super::dynamics::EnsembleDynamics;
use super::joint::{for_each_joint, joint_count};
use super::markov_game::NetworkedMarkovGame;
use super::polymatrix::{payoff_spread, PolymatrixGame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    RewardBound,
    ZeroSum,
    ControllerMembership,
    WeightSum,
    NegativeWeight,
    KernelRowSum,
    NegativeProbability,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: Invariant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_action: Option<Vec<usize>>,
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroSumMethod {
    Enumeration,
    PairwiseSufficient,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub zero_sum_methods: Vec<ZeroSumMethod>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>, mut methods: Vec<ZeroSumMethod>) -> Self {
        methods.sort_by_key(|m| *m as u8);
        methods.dedup();
        ValidationReport {
            valid: violations.is_empty(),
            violations,
            zero_sum_methods: methods,
        }
    }

    pub fn has(&self, inv: Invariant) -> bool {
        self.violations.iter().any(|v| v.invariant == inv)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidationOptions {
    pub tol: f64,
    /// Joint-action count up to which zero-sum is checked exhaustively.
    pub enumeration_cap: usize,
    /// Random probes used when the pairwise test is inconclusive.
    pub probes: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            tol: 1e-9,
            enumeration_cap: 1_000_000,
            probes: 10_000,
        }
    }
}

/// Result of a zero-sum check on one stage game.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumCheck {
    pub method: ZeroSumMethod,
    pub max_violation: f64,
    pub witness: Option<Vec<usize>>,
}

/// Largest `|Σ_i r_i(a)|` over joint actions (exact below the cap).
pub fn check_zero_sum(game: &PolymatrixGame, opts: &ValidationOptions) -> ZeroSumCheck {
    let counts = game.action_counts();
    let enumerable = joint_count(counts).is_some_and(|c| c <= opts.enumeration_cap);
    let mut worst = 0.0;
    let mut witness = None;
    let mut consider = |a: &[usize]| {
        let v = game.payoff_sum(a).abs();
        if v > worst {
            worst = v;
            witness = Some(a.to_vec());
        }
    };
    if enumerable {
        for_each_joint(counts, &mut consider);
        return ZeroSumCheck {
            method: ZeroSumMethod::Enumeration,
            max_violation: worst,
            witness,
        };
    }
    // Sufficient: every r_ij + r_jiᵀ is a constant c_ij and the constants cancel.
    let mut pairwise_ok = true;
    let mut offset = 0.0;
    for (i, j) in game.graph().edges() {
        let c = game.block(i, j).add(&game.block(j, i).transpose());
        if c.max() - c.min() > opts.tol {
            pairwise_ok = false;
            break;
        }
        offset += c.get(0, 0);
    }
    if pairwise_ok && offset.abs() <= opts.tol {
        return ZeroSumCheck {
            method: ZeroSumMethod::PairwiseSufficient,
            max_violation: offset.abs(),
            witness: None,
        };
    }
    let mut r = rng::stream(0, 0x2e50);
    let mut a = vec![0; counts.len()];
    for _ in 0..opts.probes {
        for (x, &k) in a.iter_mut().zip(counts) {
            *x = r.gen_range(0..k);
        }
        consider(&a);
    }
    ZeroSumCheck {
        method: ZeroSumMethod::Sampled,
        max_violation: worst,
        witness,
    }
}

pub fn validate_polymatrix(game: &PolymatrixGame, opts: &ValidationOptions) -> ValidationReport {
    let mut violations = Vec::new();
    let mut methods = Vec::new();
    if let Some(bound) = game.declared_bound() {
        let spread = payoff_spread(game.graph(), game.payoffs());
        if spread > bound + opts.tol {
            violations.push(Violation {
                invariant: Invariant::RewardBound,
                stage: None,
                state: None,
                joint_action: None,
                magnitude: spread - bound,
                detail: format!("payoff spread {spread} exceeds declared bound {bound}"),
            });
        }
    }
    if game.is_zero_sum() {
        let z = check_zero_sum(game, opts);
        methods.push(z.method);
        if z.max_violation > opts.tol {
            violations.push(Violation {
                invariant: Invariant::ZeroSum,
                stage: None,
                state: None,
                joint_action: z.witness.clone(),
                magnitude: z.max_violation,
                detail: format!("payoffs sum to {:.3e} in absolute value", z.max_violation),
            });
        }
    }
    ValidationReport::from_violations(violations, methods)
}

/// Checks controller membership, stochasticity and (when flagged)
/// per-(stage, state) zero-sum.
pub fn validate_nmg(game: &NetworkedMarkovGame, opts: &ValidationOptions) -> ValidationReport {
    let mut violations = Vec::new();
    let mut methods = Vec::new();
    let tol = opts.tol;
    let mut push =
        |invariant, stage: usize, state: Option<usize>, joint_action, magnitude, detail: String| {
            violations.push(Violation {
                invariant,
                stage: Some(stage),
                state,
                joint_action,
                magnitude,
                detail,
            });
        };
    for (h, st) in game.stages().iter().enumerate() {
        match &st.dynamics {
            EnsembleDynamics::Constant { kernel } => {
                for (s, row) in kernel.iter().enumerate() {
                    check_row(row, tol, &mut |inv, mag, what| {
                        push(
                            inv,
                            h,
                            Some(s),
                            None,
                            mag,
                            format!("constant kernel row {s} {what}"),
                        )
                    });
                }
            }
            EnsembleDynamics::Ensemble {
                controllers,
                weights,
                kernels,
            } => {
                for &c in controllers {
                    if !game.graph().is_core(c) {
                        push(
                            Invariant::ControllerMembership,
                            h,
                            None,
                            None,
                            1.0,
                            format!("controller {c} is not adjacent to every other player"),
                        );
                    }
                }
                for (s, w) in weights.iter().enumerate() {
                    for (k, &wk) in w.iter().enumerate() {
                        if wk < -tol {
                            push(
                                Invariant::NegativeWeight,
                                h,
                                Some(s),
                                None,
                                -wk,
                                format!(
                                    "weight of controller {} at state {s} is {wk}",
                                    controllers[k]
                                ),
                            );
                        }
                    }
                    let total: f64 = w.iter().sum();
                    if (total - 1.0).abs() > tol {
                        push(
                            Invariant::WeightSum,
                            h,
                            Some(s),
                            None,
                            (total - 1.0).abs(),
                            format!("controller weights at state {s} sum to {total}"),
                        );
                    }
                }
                for (k, ker) in kernels.iter().enumerate() {
                    let c = controllers[k];
                    for s in 0..ker.num_states() {
                        for a in 0..ker.num_actions() {
                            check_row(ker.row(s, a), tol, &mut |inv, mag, what| {
                                push(
                                    inv,
                                    h,
                                    Some(s),
                                    None,
                                    mag,
                                    format!("kernel of controller {c}, row (s={s}, a={a}) {what}"),
                                )
                            });
                        }
                    }
                }
            }
        }
        if game.is_zero_sum() {
            for s in 0..game.num_states() {
                let z = check_zero_sum(&game.stage_game(h, s), opts);
                methods.push(z.method);
                if z.max_violation > tol {
                    push(
                        Invariant::ZeroSum,
                        h,
                        Some(s),
                        z.witness.clone(),
                        z.max_violation,
                        format!(
                            "stage game payoffs sum to {:.3e} in absolute value",
                            z.max_violation
                        ),
                    );
                }
            }
        }
    }
    if let Some(bound) = game.declared_bound() {
        let spread = game.with_declared_bound_cleared().reward_bound();
        if spread > bound + tol {
            violations.push(Violation {
                invariant: Invariant::RewardBound,
                stage: None,
                state: None,
                joint_action: None,
                magnitude: spread - bound,
                detail: format!("payoff spread {spread} exceeds declared bound {bound}"),
            });
        }
    }
    ValidationReport::from_violations(violations, methods)
}

fn check_row(row: &[f64], tol: f64, report: &mut dyn FnMut(Invariant, f64, String)) {
    if let Some(&m) = row.iter().min_by(|a, b| a.total_cmp(b)) {
        if m < -tol {
            report(Invariant::NegativeProbability, -m, format!("has entry {m}"));
        }
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > tol {
        report(
            Invariant::KernelRowSum,
            (total - 1.0).abs(),
            format!("sums to {total}"),
        );
    }
}

impl NetworkedMarkovGame {
    fn with_declared_bound_cleared(&self) -> NetworkedMarkovGame {
        self.clone().with_declared_bound(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::{graph::InteractionGraph, polymatrix::EdgeBlocks};
    use crate::matrix::Matrix;

    fn pennies() -> PolymatrixGame {
        PolymatrixGame::two_player_zero_sum(
            Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap(),
        )
    }

    #[test]
    fn matching_pennies_is_zero_sum() {
        let r = validate_polymatrix(&pennies(), &ValidationOptions::default());
        assert!(r.valid);
        assert_eq!(r.zero_sum_methods, vec![ZeroSumMethod::Enumeration]);
    }

    #[test]
    fn perturbed_triangle_reports_witness() {
        let g = InteractionGraph::triangle();
        let mut b = EdgeBlocks::new();
        let base = Matrix::from_rows(&[vec![0.3, -0.2], vec![0.5, 0.1]]).unwrap();
        for (i, j) in g.edges() {
            b.insert((i, j), base.clone());
            b.insert((j, i), base.transpose().scale(-1.0));
        }
        let mut m = b[&(1, 2)].clone();
        m.set(0, 0, m.get(0, 0) + 0.1);
        b.insert((1, 2), m);
        let game = PolymatrixGame::new(g, vec![2, 2, 2], b)
            .unwrap()
            .with_zero_sum(true);
        let r = validate_polymatrix(&game, &ValidationOptions::default());
        assert!(!r.valid);
        let v = &r.violations[0];
        assert_eq!(v.invariant, Invariant::ZeroSum);
        assert!((v.magnitude - 0.1).abs() < 1e-12);
        let w = v.joint_action.as_ref().unwrap();
        assert_eq!((w[1], w[2]), (0, 0));
    }

    #[test]
    fn pairwise_test_above_cap() {
        let opts = ValidationOptions {
            enumeration_cap: 1,
            ..Default::default()
        };
        let z = check_zero_sum(&pennies(), &opts);
        assert_eq!(z.method, ZeroSumMethod::PairwiseSufficient);
        assert!(z.max_violation <= 1e-12);
    }
}
