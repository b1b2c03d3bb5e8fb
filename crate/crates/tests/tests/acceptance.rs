//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints one `criterion N: PASS|FAIL` line; exits non-zero if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use rand::Rng;

use nmg::decomposition::{
    check_reward_structure, check_transition_structure, TransitionStructure, Witness,
};
use nmg::game_model::joint::{for_each_joint, joint_count, joint_index};
use nmg::game_model::{Horizon, InteractionGraph, JointMixture, PolymatrixGame};
use nmg::generate::{
    counterexample, fp_experiment, random_ensemble, random_zero_sum_blocks, random_zs_nmg,
    star_random, vi_experiment, RandomNmgParams, Topology,
};
use nmg::markov::{
    fp_markov, joint_kernel, markov_ne_gap, star_value_iteration, sweep_budget, val_center,
    value_iteration_ne, FpConfig,
};
use nmg::polymatrix::{
    cce_gap, matrix_ne_gap, mwu_fixed, ne_lp, no_regret_avg, OracleConfig, OracleKind, RunOptions,
};
use nmg::rng::rng_from;

use common::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, elapsed: Duration, limit: Duration, detail: String) -> Verdict {
    let in_time = elapsed <= limit;
    Verdict {
        pass: pass && in_time,
        detail: format!(
            "{detail}; {:.2}s of {:.0}s",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ),
    }
}

fn main() {
    let criteria: [(u32, fn() -> Verdict); 10] = [
        (1, criterion_01_lp_exactness),
        (2, criterion_02_marginalization),
        (3, criterion_03_visitation_identity),
        (4, criterion_04_fictitious_play),
        (5, criterion_05_value_iteration_oracles),
        (6, criterion_06_gap_aggregation),
        (7, criterion_07_contraction),
        (8, criterion_08_mwu_interiority),
        (9, criterion_09_oracle_equivalence),
        (10, criterion_10_structure_detection),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let v = std::panic::catch_unwind(check).unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(e.downcast_ref::<&str>().copied())
                    .unwrap_or("?")
            ),
        });
        println!(
            "criterion {n}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn criterion_01_lp_exactness() -> Verdict {
    let start = Instant::now();
    let (mut worst_obj, mut worst_gap): (f64, f64) = (0.0, 0.0);
    for seed in 0..100 {
        let g = random_matrix_game(seed);
        let sol = ne_lp(&g, 1e-9).unwrap();
        worst_obj = worst_obj.max(sol.objective.abs());
        worst_gap = worst_gap.max(matrix_ne_gap(&g, &sol.profile).ne_gap);
    }
    verdict(
        worst_obj <= 1e-6 && worst_gap <= 1e-6,
        start.elapsed(),
        Duration::from_secs(5),
        format!("max |sum v| {worst_obj:.2e}, max gap {worst_gap:.2e} over 100 games"),
    )
}

fn criterion_02_marginalization() -> Verdict {
    let start = Instant::now();
    let mut violations = 0;
    let mut worst_slack = f64::INFINITY;
    for seed in 0..50 {
        let g = random_matrix_game(1000 + seed);
        let n = g.num_players() as f64;
        let res = no_regret_avg(&g, 10_000).unwrap();
        // independent re-measurement of both sides
        let eps = cce_gap(&g, &res.mixture);
        let gap = brute_matrix_gap(&g, &res.marginal);
        assert!((eps - res.certificate.eps_cce).abs() <= 1e-9);
        assert!((gap - res.certificate.ne_gap).abs() <= 1e-9);
        let slack = n * eps + 1e-9 - gap;
        worst_slack = worst_slack.min(slack);
        if slack < 0.0 {
            violations += 1;
        }
    }
    verdict(
        violations == 0,
        start.elapsed(),
        Duration::from_secs(30),
        format!("{violations} violations of ne_gap <= n eps over 50 runs, smallest slack {worst_slack:.2e}"),
    )
}

fn criterion_03_visitation_identity() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut r = rng_from(3000 + seed);
        let n = r.gen_range(2..=4);
        let graph = InteractionGraph::complete(n).unwrap();
        let counts: Vec<usize> = (0..n).map(|_| r.gen_range(1..=3)).collect();
        let ns = r.gen_range(1..=4);
        let k = r.gen_range(1..=n);
        let controllers: Vec<usize> = graph.core_players().into_iter().take(k).collect();
        let dynamics = random_ensemble(&controllers, &counts, ns, &mut r);
        for s in 0..ns {
            // arbitrary correlated distribution over joint actions
            let mut components = Vec::new();
            for_each_joint(&counts, |a| {
                let w: f64 = r.gen();
                let p = a
                    .iter()
                    .zip(&counts)
                    .map(|(&ai, &c)| nmg::game_model::policy::pure(c, ai))
                    .collect();
                components.push((w, p));
            });
            let total: f64 = components.iter().map(|c| c.0).sum();
            components.iter_mut().for_each(|c| c.0 /= total);
            let mix = JointMixture { components };
            let correlated = joint_kernel(&dynamics, s, &counts, &mix);
            let product = dynamics.product_row(s, &mix.marginals(), None);
            for (a, b) in correlated.iter().zip(&product) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    verdict(
        worst <= 1e-12,
        start.elapsed(),
        Duration::from_secs(5),
        format!("max kernel difference {worst:.2e} over 50 games"),
    )
}

fn criterion_04_fictitious_play() -> Verdict {
    let start = Instant::now();
    let g = fp_experiment();
    let out = fp_markov(&g, &FpConfig::new(1 << 22, 0)).unwrap();
    let last = out.last();
    let finals: Vec<f64> = last.value_sums.iter().map(|x| x.abs()).collect();
    let w = out.dyadic_max.len();
    let tail = &out.dyadic_max[w - 3..];
    let monotone = (0..2).all(|s| tail[1][s] <= tail[0][s] && tail[2][s] <= tail[1][s]);
    let small = finals.iter().all(|&x| x < 0.1);
    verdict(
        small && monotone,
        start.elapsed(),
        Duration::from_secs(120),
        format!(
            "final |sum V| {:?} (need < 0.1: {small}), last three window maxima {:?} (non-increasing: {monotone})",
            finals, tail
        ),
    )
}

fn criterion_05_value_iteration_oracles() -> Verdict {
    let start = Instant::now();
    let h = 5;
    let eta = 1.0 / (36.0 * h as f64);
    let mut omwu_gaps = Vec::new();
    let mut mwu_gaps = Vec::new();
    let mut omd_ok = true;
    for seed in 0..20 {
        let g = vi_experiment(seed, h).unwrap();
        let run = |cfg: OracleConfig| {
            let vi = value_iteration_ne(&g, &cfg.iters(5000).seed(seed)).unwrap();
            markov_ne_gap(&g, &vi.policy, 0).unwrap().ne_gap
        };
        omwu_gaps.push(run(OracleConfig::new(OracleKind::Omwu).tau(0.05).eta(eta)));
        mwu_gaps.push(run(OracleConfig::new(OracleKind::MwuFixed).tau(0.05)));
        omd_ok &= run(OracleConfig::new(OracleKind::Omd).eta(eta)).is_finite();
    }
    let below = omwu_gaps.iter().filter(|&&x| x < 0.05).count();
    let wins = omwu_gaps
        .iter()
        .zip(&mwu_gaps)
        .filter(|(a, b)| a <= b)
        .count();
    let worst = omwu_gaps.iter().copied().fold(0.0, f64::max);
    verdict(
        below == 20 && wins >= 15 && omd_ok,
        start.elapsed(),
        Duration::from_secs(180),
        format!(
            "OMWU gap < 0.05 on {below}/20 (worst {worst:.4}), OMWU <= MWU on {wins}/20, OMD completed: {omd_ok}"
        ),
    )
}

fn criterion_06_gap_aggregation() -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..30u64 {
        let mut r = rng_from(6000 + seed);
        let players = r.gen_range(3..=4);
        let topology = [Topology::Complete, Topology::Ring, Topology::Star][seed as usize % 3];
        let horizon = r.gen_range(1..=4);
        let params = RandomNmgParams {
            topology: if players == 3 && topology == Topology::Ring {
                Topology::Triangle
            } else {
                topology
            },
            players,
            actions: r.gen_range(2..=3),
            states: r.gen_range(1..=3),
            horizon: Horizon::Finite(horizon),
            controllers: None,
        };
        let g = random_zs_nmg(&params, seed).unwrap();
        let vi = value_iteration_ne(&g, &OracleConfig::lp()).unwrap();
        let gap = markov_ne_gap(&g, &vi.policy, 0).unwrap().ne_gap;
        let exact = brute_markov_gap_finite(&g, &vi.policy);
        worst = worst.max(exact);
        if (gap - exact).abs() > 1e-9
            || exact > horizon as f64 * 1e-6
            || gap > vi.aggregate_bound() + 1e-9
        {
            failures.push((seed, gap, exact, vi.aggregate_bound()));
        }
    }
    verdict(
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(30),
        format!("worst exact gap {worst:.2e} over 30 games, failures {failures:?}"),
    )
}

fn criterion_07_contraction() -> Verdict {
    let start = Instant::now();
    let gamma = 0.9;
    let mut worst_ratio: f64 = 0.0;
    let mut over_budget = Vec::new();
    for seed in 0..20u64 {
        let mut r = rng_from(7000 + seed);
        let g = star_random(
            r.gen_range(2..=4),
            r.gen_range(2..=3),
            r.gen_range(1..=3),
            gamma,
            seed,
        )
        .unwrap();
        let out = star_value_iteration(&g, 1e-8, 10_000).unwrap();
        let d = &out.distances;
        for k in 0..d.len() - 1 {
            if d[k] > 0.0 {
                worst_ratio = worst_ratio.max(d[k + 1] / d[k]);
            }
        }
        let budget = sweep_budget(d[0], 1e-8, gamma);
        if out.sweeps > budget {
            over_budget.push((seed, out.sweeps, budget));
        }
    }
    verdict(
        worst_ratio <= gamma + 1e-6 && over_budget.is_empty(),
        start.elapsed(),
        Duration::from_secs(30),
        format!("max d(k+1)/d(k) {worst_ratio:.6}, runs over the sweep budget {over_budget:?}"),
    )
}

fn criterion_08_mwu_interiority() -> Verdict {
    let start = Instant::now();
    let mut worst_margin = f64::INFINITY;
    for seed in 0..10 {
        let g = random_matrix_game(8000 + seed);
        let big_r = g.reward_bound();
        for tau in [0.05, 0.5] {
            let tr = mwu_fixed(&g, tau, RunOptions::new(10_000).record_every(1)).unwrap();
            assert!(tr.points.len() >= 10_000);
            for p in tr.points.iter().map(|pt| &pt.profile).chain([&tr.last]) {
                for (i, pi) in p.iter().enumerate() {
                    let floor = (-big_r / tau).exp() / g.action_counts()[i] as f64;
                    for &x in pi {
                        worst_margin = worst_margin.min(x - floor);
                    }
                }
            }
        }
    }
    verdict(
        worst_margin >= -1e-12,
        start.elapsed(),
        Duration::from_secs(20),
        format!("smallest coordinate minus floor {worst_margin:.3e}"),
    )
}

fn criterion_09_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut worst = [0.0f64; 5];
    let mut count = 0;
    for seed in 0..60u64 {
        let mut r = rng_from(9000 + seed);
        // matrix gap and expected payoffs
        let g = random_matrix_game(9000 + seed);
        let p = random_profile(g.action_counts(), &mut r);
        let lib = g.expected_payoffs(&p).unwrap();
        for (a, b) in lib.iter().zip(brute_payoffs(&g, &p)) {
            worst[0] = worst[0].max((a - b).abs());
        }
        worst[1] = worst[1].max((matrix_ne_gap(&g, &p).ne_gap - brute_matrix_gap(&g, &p)).abs());

        // finite-horizon Markov gap against every deterministic deviation
        let params = RandomNmgParams {
            topology: Topology::Triangle,
            players: 3,
            actions: 2,
            states: r.gen_range(1..=2),
            horizon: Horizon::Finite(r.gen_range(1..=2)),
            controllers: None,
        };
        let mg = random_zs_nmg(&params, seed).unwrap();
        let pol = random_policy(&mg, &mut r);
        let lib = markov_ne_gap(&mg, &pol, 0).unwrap().ne_gap;
        worst[2] = worst[2].max((lib - enumerated_markov_gap_finite(&mg, &pol)).abs());

        // discounted star game: gap against stationary deviations, and the center's maxmin on a grid
        let sg = star_random(3, 2, 2, 0.8, seed).unwrap();
        let pol = random_policy(&sg, &mut r);
        let rep = markov_ne_gap(&sg, &pol, 0).unwrap();
        let diff =
            (rep.ne_gap - enumerated_markov_gap_discounted(&sg, &pol)).abs() - rep.error_bound;
        worst[3] = worst[3].max(diff.max(0.0));

        let blocks: Vec<_> = (1..3)
            .map(|j| sg.reward_blocks(0, 0)[&(0, j)].clone())
            .collect();
        let val = val_center(&blocks).unwrap().value;
        let steps = 2000;
        let grid = grid_val_center(&blocks, steps);
        // the grid is feasible, so it never beats the optimum; its loss is at most one step per block
        let resolution: f64 = blocks
            .iter()
            .map(|b| 2.0 * b.max_abs() / steps as f64)
            .sum();
        if grid > val + 1e-9 || val - grid > resolution {
            worst[4] = f64::INFINITY;
        }
        count += 1;
    }
    let pass = worst[0] <= 1e-12
        && worst[1] <= 1e-12
        && worst[2] <= 1e-9
        && worst[3] <= 1e-8
        && worst[4] == 0.0;
    verdict(
        pass && count >= 50,
        start.elapsed(),
        Duration::from_secs(60),
        format!(
            "{count} micro-instances; payoffs {:.1e}, matrix gap {:.1e}, finite Markov gap {:.1e}, discounted gap beyond bound {:.1e}, Val grid within resolution: {}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            worst[4] == 0.0
        ),
    )
}

/// `f(x) − f(x_p→0) − f(x_q→0) + f(x_p,x_q→0)` for a function on joint actions.
fn mixed_difference(f: impl Fn(&[usize]) -> f64, point: &[usize], p: usize, q: usize) -> f64 {
    let with = |zero: &[usize]| {
        let mut x = point.to_vec();
        for &z in zero {
            x[z] = 0;
        }
        f(&x)
    };
    with(&[]) - with(&[p]) - with(&[q]) + with(&[p, q])
}

fn criterion_10_structure_detection() -> Verdict {
    let start = Instant::now();
    let mut problems = Vec::new();

    // planted ensembles are recovered
    let mut worst_residual: f64 = 0.0;
    for seed in 0..20u64 {
        let mut r = rng_from(10_000 + seed);
        let n = r.gen_range(2..=4);
        let graph = InteractionGraph::complete(n).unwrap();
        let counts: Vec<usize> = (0..n).map(|_| r.gen_range(2..=3)).collect();
        let ns = r.gen_range(2..=3);
        let k = r.gen_range(1..=n);
        let dynamics = random_ensemble(&(0..k).collect::<Vec<_>>(), &counts, ns, &mut r);
        let kernel: Vec<Vec<Vec<f64>>> = (0..ns)
            .map(|s| {
                let mut rows = Vec::new();
                for_each_joint(&counts, |a| rows.push(dynamics.joint_row(s, a)));
                rows
            })
            .collect();
        match check_transition_structure(&kernel, &counts, &graph, 1e-9).unwrap() {
            TransitionStructure::Decomposed {
                dynamics: found,
                max_residual,
            } => {
                worst_residual = worst_residual.max(max_residual);
                for (s, rows) in kernel.iter().enumerate() {
                    for_each_joint(&counts, |a| {
                        let row = found.joint_row(s, a);
                        let target = &rows[joint_index(&counts, a)];
                        let d = row
                            .iter()
                            .zip(target)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max);
                        worst_residual = worst_residual.max(d);
                    });
                }
            }
            TransitionStructure::NotDecomposable(f) => {
                problems.push(format!("planted ensemble {seed} rejected: {f:?}"))
            }
        }
    }
    if worst_residual > 1e-9 {
        problems.push(format!("planted residual {worst_residual:.2e}"));
    }

    // the non-separable three-player counterexample is rejected on both counts
    let (cx, graph) = counterexample();
    match check_transition_structure(&cx.kernel, &cx.action_counts, &graph, 1e-9).unwrap() {
        TransitionStructure::NotDecomposable(f) => match &f.witness {
            Some(Witness::MixedDifference {
                coordinates: (p, q),
                point,
                value,
            }) => {
                let recomputed = mixed_difference(
                    |x| cx.kernel[f.state][joint_index(&cx.action_counts, x)][f.next_state],
                    point,
                    *p,
                    *q,
                );
                if (recomputed - value).abs() > 1e-12 || value.abs() <= 1e-9 {
                    problems.push(format!(
                        "transition witness {value} does not recompute ({recomputed})"
                    ));
                }
            }
            other => problems.push(format!(
                "transition witness is not a mixed difference: {other:?}"
            )),
        },
        TransitionStructure::Decomposed { .. } => {
            problems.push("counterexample transitions accepted".into())
        }
    }
    let rs = check_reward_structure(&cx.rewards, &cx.action_counts, &graph, 1e-9).unwrap();
    if rs.decomposable() {
        problems.push("counterexample rewards accepted".into());
    }
    for f in &rs.failures {
        match &f.witness {
            Some(Witness::MixedDifference {
                coordinates: (p, q),
                point,
                value,
            }) => {
                let recomputed = mixed_difference(
                    |x| {
                        let mut a = x.to_vec();
                        a[f.player] = f.own_action;
                        cx.rewards[f.player][f.state][joint_index(&cx.action_counts, &a)]
                    },
                    point,
                    *p,
                    *q,
                );
                if (recomputed - value).abs() > 1e-12 || value.abs() <= 1e-9 {
                    problems.push(format!(
                        "reward witness {value} does not recompute ({recomputed})"
                    ));
                }
            }
            other => problems.push(format!(
                "reward witness is not a mixed difference: {other:?}"
            )),
        }
    }

    // planted three-way reward couplings are caught for the coupled player only
    for seed in 0..20u64 {
        let mut r = rng_from(11_000 + seed);
        let graph = InteractionGraph::triangle();
        let counts: Vec<usize> = (0..3).map(|_| r.gen_range(2..=3)).collect();
        let blocks = random_zero_sum_blocks(&graph, &counts, &mut r);
        let game = PolymatrixGame::new(graph.clone(), counts.clone(), blocks).unwrap();
        let joints = joint_count(&counts).unwrap();
        let victim = r.gen_range(0..3);
        let strength = 0.5 + r.gen::<f64>();
        let mut rewards = vec![vec![vec![0.0; joints]]; 3];
        for_each_joint(&counts, |a| {
            let idx = joint_index(&counts, a);
            for (i, row) in rewards.iter_mut().enumerate() {
                row[0][idx] = pure_payoff(&game, i, a);
            }
            if a.iter().all(|&x| x == 1) {
                rewards[victim][0][idx] += strength;
            }
        });
        let rs = check_reward_structure(&rewards, &counts, &graph, 1e-9).unwrap();
        let flagged: Vec<usize> = rs.failures.iter().map(|f| f.player).collect();
        if flagged.is_empty() || flagged.iter().any(|&p| p != victim) {
            problems.push(format!(
                "coupling {seed}: victim {victim}, flagged {flagged:?}"
            ));
        }
        for f in &rs.failures {
            let Some(Witness::MixedDifference {
                coordinates: (p, q),
                point,
                value,
            }) = &f.witness
            else {
                problems.push(format!("coupling {seed}: witness {:?}", f.witness));
                continue;
            };
            let recomputed = mixed_difference(
                |x| {
                    let mut a = x.to_vec();
                    a[f.player] = f.own_action;
                    rewards[f.player][0][joint_index(&counts, &a)]
                },
                point,
                *p,
                *q,
            );
            if (recomputed - value).abs() > 1e-12 || (value.abs() - strength).abs() > 1e-9 {
                problems.push(format!("coupling {seed}: witness {value} vs recomputed {recomputed}, strength {strength}"));
            }
        }
    }

    verdict(
        problems.is_empty(),
        start.elapsed(),
        Duration::from_secs(10),
        format!("planted residual {worst_residual:.2e}, problems {problems:?}"),
    )
}
