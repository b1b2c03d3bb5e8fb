//! Brute-force reference computations shared by the integration tests.
//! Everything here enumerates joint actions or deviations directly and
//! avoids the library's own evaluation paths.

#![allow(dead_code)]

use nmg::game_model::{
    Horizon, InteractionGraph, MarkovPolicy, NetworkedMarkovGame, PolymatrixGame, Profile,
};
use nmg::generate::random_zero_sum_polymatrix;
use nmg::Matrix;

/// Calls `f(actions)` for every joint action.
pub fn joints(counts: &[usize], mut f: impl FnMut(&[usize])) {
    let mut a = vec![0usize; counts.len()];
    loop {
        f(&a);
        let mut i = 0;
        loop {
            if i == counts.len() {
                return;
            }
            a[i] += 1;
            if a[i] < counts[i] {
                break;
            }
            a[i] = 0;
            i += 1;
        }
    }
}

fn prob(profile: &[Vec<f64>], a: &[usize], skip: Option<usize>) -> f64 {
    a.iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, &ai)| profile[i][ai])
        .product()
}

/// `r_i(a)` summed over the edges of `i`.
pub fn pure_payoff(game: &PolymatrixGame, i: usize, a: &[usize]) -> f64 {
    game.graph()
        .neighbors(i)
        .iter()
        .map(|&j| game.block(i, j).get(a[i], a[j]))
        .sum()
}

pub fn brute_payoffs(game: &PolymatrixGame, profile: &[Vec<f64>]) -> Vec<f64> {
    let n = game.num_players();
    let mut out = vec![0.0; n];
    joints(game.action_counts(), |a| {
        let p = prob(profile, a, None);
        for (i, o) in out.iter_mut().enumerate() {
            *o += p * pure_payoff(game, i, a);
        }
    });
    out
}

/// Payoff of player `i` for each of its pure actions against `profile`.
pub fn brute_deviation_payoffs(game: &PolymatrixGame, profile: &[Vec<f64>], i: usize) -> Vec<f64> {
    let mut out = vec![0.0; game.action_counts()[i]];
    joints(game.action_counts(), |a| {
        out[a[i]] += prob(profile, a, Some(i)) * pure_payoff(game, i, a);
    });
    out
}

pub fn brute_matrix_gap(game: &PolymatrixGame, profile: &[Vec<f64>]) -> f64 {
    let base = brute_payoffs(game, profile);
    (0..game.num_players())
        .map(|i| {
            let best = brute_deviation_payoffs(game, profile, i)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            best - base[i]
        })
        .fold(0.0, f64::max)
}

fn stage_payoff(game: &NetworkedMarkovGame, h: usize, s: usize, i: usize, a: &[usize]) -> f64 {
    let blocks = game.reward_blocks(h, s);
    game.graph()
        .neighbors(i)
        .iter()
        .map(|&j| blocks[&(i, j)].get(a[i], a[j]))
        .sum()
}

fn stage_index(game: &NetworkedMarkovGame, h: usize) -> usize {
    match game.horizon() {
        Horizon::Finite(_) => h,
        Horizon::Discounted(_) => 0,
    }
}

/// Value of player `i` when it plays `own[h][s]` (deterministic, or the
/// policy's own strategy when `None`) and the others follow `policy`.
/// Finite horizon only; evaluated by backward recursion over joint actions.
fn finite_value(
    game: &NetworkedMarkovGame,
    policy: &MarkovPolicy,
    i: usize,
    own: Option<&[Vec<usize>]>,
) -> Vec<f64> {
    let Horizon::Finite(hz) = game.horizon() else {
        panic!("finite horizon expected")
    };
    let ns = game.num_states();
    let mut v = vec![0.0; ns];
    for h in (0..hz).rev() {
        let mut next = vec![0.0; ns];
        for (s, slot) in next.iter_mut().enumerate() {
            let mut profile = policy.at(h, s).clone();
            if let Some(own) = own {
                profile[i] = vec![0.0; game.action_counts()[i]];
                profile[i][own[h][s]] = 1.0;
            }
            let dyn_ = &game.stage(h).dynamics;
            joints(game.action_counts(), |a| {
                let p = prob(&profile, a, None);
                if p == 0.0 {
                    return;
                }
                let row = dyn_.joint_row(s, a);
                let cont: f64 = row.iter().zip(&v).map(|(x, y)| x * y).sum();
                *slot += p * (stage_payoff(game, h, s, i, a) + cont);
            });
        }
        v = next;
    }
    v
}

/// Best-response value of player `i` by backward induction over pure
/// actions (finite horizon).
pub fn brute_best_response_finite(
    game: &NetworkedMarkovGame,
    policy: &MarkovPolicy,
    i: usize,
) -> Vec<f64> {
    let Horizon::Finite(hz) = game.horizon() else {
        panic!("finite horizon expected")
    };
    let ns = game.num_states();
    let ki = game.action_counts()[i];
    let mut v = vec![0.0; ns];
    for h in (0..hz).rev() {
        let mut next = vec![0.0; ns];
        for (s, slot) in next.iter_mut().enumerate() {
            let profile = policy.at(h, s);
            let mut per_action = vec![0.0; ki];
            joints(game.action_counts(), |a| {
                let p = prob(profile, a, Some(i));
                if p == 0.0 {
                    return;
                }
                let row = game.stage(h).dynamics.joint_row(s, a);
                let cont: f64 = row.iter().zip(&v).map(|(x, y)| x * y).sum();
                per_action[a[i]] += p * (stage_payoff(game, h, s, i, a) + cont);
            });
            *slot = per_action.into_iter().fold(f64::NEG_INFINITY, f64::max);
        }
        v = next;
    }
    v
}

/// Markov NE gap at the first stage by backward-induction best responses.
pub fn brute_markov_gap_finite(game: &NetworkedMarkovGame, policy: &MarkovPolicy) -> f64 {
    let mut gap: f64 = 0.0;
    for i in 0..game.num_players() {
        let own = finite_value(game, policy, i, None);
        let br = brute_best_response_finite(game, policy, i);
        for s in 0..game.num_states() {
            gap = gap.max(br[s] - own[s]);
        }
    }
    gap
}

/// Markov NE gap by enumerating every deterministic Markov deviation
/// (`|A_i|^{H·S}` policies per player). Finite horizon only.
pub fn enumerated_markov_gap_finite(game: &NetworkedMarkovGame, policy: &MarkovPolicy) -> f64 {
    let Horizon::Finite(hz) = game.horizon() else {
        panic!("finite horizon expected")
    };
    let ns = game.num_states();
    let mut gap: f64 = 0.0;
    for i in 0..game.num_players() {
        let own = finite_value(game, policy, i, None);
        let slots = vec![game.action_counts()[i]; hz * ns];
        joints(&slots, |choice| {
            let dev: Vec<Vec<usize>> = (0..hz)
                .map(|h| choice[h * ns..(h + 1) * ns].to_vec())
                .collect();
            let v = finite_value(game, policy, i, Some(&dev));
            for s in 0..ns {
                gap = gap.max(v[s] - own[s]);
            }
        });
    }
    gap
}

/// Solves `(I − γP) v = r` by Gaussian elimination with partial pivoting.
pub fn solve_discounted(p: &[Vec<f64>], r: &[f64], gamma: f64) -> Vec<f64> {
    let n = r.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| f64::from(u8::from(i == j)) - gamma * p[i][j])
                .chain([r[i]])
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Discounted value of player `i` under a stationary policy where `i`
/// optionally plays the deterministic `own[s]`.
fn discounted_value(
    game: &NetworkedMarkovGame,
    policy: &MarkovPolicy,
    i: usize,
    own: Option<&[usize]>,
) -> Vec<f64> {
    let Horizon::Discounted(gamma) = game.horizon() else {
        panic!("discounted game expected")
    };
    let ns = game.num_states();
    let mut p = vec![vec![0.0; ns]; ns];
    let mut r = vec![0.0; ns];
    for s in 0..ns {
        let mut profile = policy.at(0, s).clone();
        if let Some(own) = own {
            profile[i] = vec![0.0; game.action_counts()[i]];
            profile[i][own[s]] = 1.0;
        }
        joints(game.action_counts(), |a| {
            let q = prob(&profile, a, None);
            if q == 0.0 {
                return;
            }
            r[s] += q * stage_payoff(game, stage_index(game, 0), s, i, a);
            for (x, y) in p[s].iter_mut().zip(game.stage(0).dynamics.joint_row(s, a)) {
                *x += q * y;
            }
        });
    }
    solve_discounted(&p, &r, gamma)
}

/// Discounted Markov NE gap by enumerating stationary deterministic deviations.
pub fn enumerated_markov_gap_discounted(game: &NetworkedMarkovGame, policy: &MarkovPolicy) -> f64 {
    let ns = game.num_states();
    let mut gap: f64 = 0.0;
    for i in 0..game.num_players() {
        let own = discounted_value(game, policy, i, None);
        joints(&vec![game.action_counts()[i]; ns], |dev| {
            let v = discounted_value(game, policy, i, Some(dev));
            for s in 0..ns {
                gap = gap.max(v[s] - own[s]);
            }
        });
    }
    gap
}

/// `max_x Σ_j min_b (xᵀ Q_j)_b` over a grid on the simplex with `steps`
/// divisions per coordinate.
pub fn grid_val_center(blocks: &[Matrix], steps: usize) -> f64 {
    let m = blocks[0].rows();
    let mut best = f64::NEG_INFINITY;
    let mut x = vec![0usize; m];
    fn rec(
        k: usize,
        left: usize,
        x: &mut Vec<usize>,
        steps: usize,
        blocks: &[Matrix],
        best: &mut f64,
    ) {
        let m = x.len();
        if k == m - 1 {
            x[k] = left;
            let w: Vec<f64> = x.iter().map(|&c| c as f64 / steps as f64).collect();
            let v: f64 = blocks
                .iter()
                .map(|q| q.vec_mul(&w).into_iter().fold(f64::INFINITY, f64::min))
                .sum();
            *best = best.max(v);
            return;
        }
        for c in 0..=left {
            x[k] = c;
            rec(k + 1, left - c, x, steps, blocks, best);
        }
    }
    rec(0, steps, &mut x, steps, blocks, &mut best);
    best
}

pub fn random_profile(counts: &[usize], rng: &mut impl rand::Rng) -> Profile {
    counts
        .iter()
        .map(|&k| {
            let x: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let t: f64 = x.iter().sum();
            x.into_iter().map(|v| v / t).collect()
        })
        .collect()
}

pub fn random_policy(game: &NetworkedMarkovGame, rng: &mut impl rand::Rng) -> MarkovPolicy {
    let stages = match game.horizon() {
        Horizon::Finite(h) => h,
        Horizon::Discounted(_) => 1,
    };
    MarkovPolicy {
        stages: (0..stages)
            .map(|_| {
                (0..game.num_states())
                    .map(|_| random_profile(game.action_counts(), rng))
                    .collect()
            })
            .collect(),
    }
}

/// Random zero-sum polymatrix game on a triangle, ring or star with up to
/// four players and four actions each.
pub fn random_matrix_game(seed: u64) -> PolymatrixGame {
    use rand::Rng;
    let mut r = nmg::rng::rng_from(seed);
    let (graph, n) = match seed % 3 {
        0 => (InteractionGraph::triangle(), 3),
        1 => (InteractionGraph::ring(4).unwrap(), 4),
        _ => {
            let n = r.gen_range(2..=4);
            (InteractionGraph::star(n, r.gen_range(0..n)).unwrap(), n)
        }
    };
    let counts: Vec<usize> = (0..n).map(|_| r.gen_range(1..=4)).collect();
    random_zero_sum_polymatrix(graph, counts, seed).unwrap()
}
