//! Iterative learning dynamics on a single polymatrix game.
//!
//! Multiplicative updates run in log-space with max-subtraction.

use rand::distributions::{Distribution, WeightedIndex};

use crate::error::{Error, Result};
use crate::game_model::policy::uniform_profile;
use crate::game_model::{PolymatrixGame, Profile};
use crate::rng;
use crate::schedule::StepSchedule;

use super::gaps::{argmax, best_response_sum, logsumexp, matrix_ne_gap, matrix_qre_gap, softmax};

/// Iteration budget and recording.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub iters: usize,
    /// Snapshot every this many iterations (0: final iterate only).
    pub record_every: usize,
    /// Stop once the measured gap (checked every [`GAP_CHECK_EVERY`] steps)
    /// falls to this level.
    pub target_gap: Option<f64>,
}

pub const GAP_CHECK_EVERY: usize = 50;

impl RunOptions {
    pub fn new(iters: usize) -> Self {
        RunOptions {
            iters,
            record_every: 0,
            target_gap: None,
        }
    }

    pub fn record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn target_gap(mut self, g: Option<f64>) -> Self {
        self.target_gap = g;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub profile: Profile,
    /// Auxiliary sequence (the secondary iterate of optimistic methods).
    pub secondary: Option<Profile>,
    /// The dynamic's reported metric at this iterate.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Metric at every measured iteration.
    pub series: Vec<(usize, f64)>,
    pub last: Profile,
    pub last_secondary: Option<Profile>,
    /// Iterate with the smallest measured gap, when tracked.
    pub best: Option<TrajectoryPoint>,
    pub iterations: usize,
}

type Metric<'a> = Box<dyn Fn(&Profile) -> f64 + 'a>;

struct Recorder<'a> {
    opts: RunOptions,
    metric: Metric<'a>,
    points: Vec<TrajectoryPoint>,
    series: Vec<(usize, f64)>,
}

impl<'a> Recorder<'a> {
    fn new(opts: RunOptions, metric: Metric<'a>) -> Self {
        Recorder {
            opts,
            metric,
            points: Vec::new(),
            series: Vec::new(),
        }
    }

    /// Records iterate `t` when due; returns true when the target is met.
    fn observe(&mut self, t: usize, p: &Profile, secondary: Option<&Profile>) -> bool {
        let record = self.opts.record_every > 0 && t.is_multiple_of(self.opts.record_every);
        let check = self.opts.target_gap.is_some() && t.is_multiple_of(GAP_CHECK_EVERY);
        if !record && !check {
            return false;
        }
        let g = (self.metric)(p);
        if record {
            self.points.push(TrajectoryPoint {
                iter: t,
                profile: p.clone(),
                secondary: secondary.cloned(),
                gap: g,
            });
            self.series.push((t, g));
        }
        check && g <= self.opts.target_gap.unwrap_or(f64::NEG_INFINITY)
    }

    fn finish(mut self, t: usize, last: Profile, secondary: Option<Profile>) -> Trajectory {
        if self.points.last().map(|p| p.iter) != Some(t) {
            let g = (self.metric)(&last);
            self.points.push(TrajectoryPoint {
                iter: t,
                profile: last.clone(),
                secondary: secondary.clone(),
                gap: g,
            });
            self.series.push((t, g));
        }
        Trajectory {
            points: self.points,
            series: self.series,
            last,
            last_secondary: secondary,
            best: None,
            iterations: t,
        }
    }
}

fn ne_metric(game: &PolymatrixGame) -> Metric<'_> {
    Box::new(move |p| matrix_ne_gap(game, p).ne_gap)
}

fn uniform_logs(game: &PolymatrixGame) -> Vec<Vec<f64>> {
    game.action_counts()
        .iter()
        .map(|&k| vec![-(k as f64).ln(); k])
        .collect()
}

fn normalize_log(l: &mut [f64]) {
    let z = logsumexp(l);
    l.iter_mut().for_each(|x| *x -= z);
}

fn exp_profile(logs: &[Vec<f64>]) -> Profile {
    logs.iter()
        .map(|l| l.iter().map(|x| x.exp()).collect())
        .collect()
}

fn payoff_vectors(game: &PolymatrixGame, p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..game.num_players())
        .map(|i| game.payoff_vector(i, p))
        .collect()
}

/// `log π ← (1 − ητ) log π + η q`, renormalised.
fn regularized_step(logs: &mut [Vec<f64>], base: &[Vec<f64>], q: &[Vec<f64>], eta: f64, tau: f64) {
    for ((l, b), qi) in logs.iter_mut().zip(base).zip(q) {
        for ((x, &bx), &qx) in l.iter_mut().zip(b).zip(qi) {
            *x = (1.0 - eta * tau) * bx + eta * qx;
        }
        normalize_log(l);
    }
}

/// `K = ⌈2R/τ + log max|A_i|⌉` for the fixed-temperature schedule.
pub fn mwu_fixed_offset(game: &PolymatrixGame, tau: f64) -> f64 {
    (2.0 * game.reward_bound() / tau + game.max_log_actions())
        .ceil()
        .max(1.0)
}

/// Entropy-regularised MWU with step `η_t = 1/(τ(t+K))`.
pub fn mwu_fixed(game: &PolymatrixGame, tau: f64, opts: RunOptions) -> Result<Trajectory> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let k = mwu_fixed_offset(game, tau);
    let mut logs = uniform_logs(game);
    let mut rec = Recorder::new(opts, ne_metric(game));
    let mut t = 0;
    while t < opts.iters {
        let p = exp_profile(&logs);
        if rec.observe(t, &p, None) {
            return Ok(rec.finish(t, p, None));
        }
        let q = payoff_vectors(game, &p);
        let eta = 1.0 / (tau * (t as f64 + k));
        let base = logs.clone();
        regularized_step(&mut logs, &base, &q, eta, tau);
        t += 1;
    }
    Ok(rec.finish(t, exp_profile(&logs), None))
}

/// Maximiser of `⟨π, g⟩ − KL(π, π_prev)/η` over `{π : π(a) ≥ floor}` given
/// `log_u = log π_prev + η g`: `π(a) = max(floor, c·u(a))` with `c` fixed by
/// normalisation, found by flooring violators and renormalising until stable.
pub fn kl_project_floor(log_u: &[f64], floor: f64) -> Vec<f64> {
    let n = log_u.len();
    let m = log_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u: Vec<f64> = log_u.iter().map(|x| (x - m).exp()).collect();
    let mut floored = vec![false; n];
    loop {
        let free = floored.iter().filter(|f| !**f).count();
        if free == 0 {
            return vec![floor; n];
        }
        let mass = 1.0 - floor * (n - free) as f64;
        let denom: f64 = u
            .iter()
            .zip(&floored)
            .filter(|(_, f)| !**f)
            .map(|(x, _)| x)
            .sum();
        let c = mass / denom;
        let mut changed = false;
        for a in 0..n {
            if !floored[a] && c * u[a] < floor {
                floored[a] = true;
                changed = true;
            }
        }
        if !changed {
            return (0..n)
                .map(|a| if floored[a] { floor } else { c * u[a] })
                .collect();
        }
    }
}

/// MWU with temperature `(t+K)^{-1/6}`, step `(t+K)^{-1/2}` and iterates kept
/// in the clipped simplex `π(a) ≥ 1/(|A_i|(t+K)²)`.
pub fn mwu_diminishing(game: &PolymatrixGame, opts: RunOptions) -> Result<Trajectory> {
    let k = (game.reward_bound() + 2.0 * game.max_log_actions())
        .powi(2)
        .max(1.0);
    let counts = game.action_counts().to_vec();
    let mut p = uniform_profile(&counts);
    let mut rec = Recorder::new(opts, ne_metric(game));
    let mut t = 0;
    while t < opts.iters {
        if rec.observe(t, &p, None) {
            return Ok(rec.finish(t, p, None));
        }
        let q = payoff_vectors(game, &p);
        let tk = t as f64 + k;
        let tau = tk.powf(-1.0 / 6.0);
        let eta = tk.powf(-0.5);
        p = p
            .iter()
            .zip(&q)
            .zip(&counts)
            .map(|((pi, qi), &na)| {
                let log_u: Vec<f64> = pi
                    .iter()
                    .zip(qi)
                    .map(|(&x, &g)| {
                        let lx = x.ln();
                        lx + eta * (g - tau * lx)
                    })
                    .collect();
                kl_project_floor(&log_u, 1.0 / (na as f64 * tk * tk))
            })
            .collect();
        t += 1;
    }
    Ok(rec.finish(t, p, None))
}

/// Default temperature `1/(n max_i log|A_i|)`.
pub fn omwu_default_tau(game: &PolymatrixGame) -> f64 {
    let l = game.max_log_actions();
    if l > 0.0 {
        1.0 / (game.num_players() as f64 * l)
    } else {
        1.0
    }
}

fn step_from_norm(game: &PolymatrixGame, factor: f64) -> f64 {
    let norm = game.max_abs_entry();
    if norm > 0.0 {
        1.0 / (factor * game.num_players() as f64 * norm)
    } else {
        1.0
    }
}

/// Default step `1/(8n‖r‖_max)`.
pub fn omwu_default_eta(game: &PolymatrixGame) -> f64 {
    step_from_norm(game, 8.0)
}

/// Default step `1/(4n‖r‖_max)`.
pub fn omd_default_eta(game: &PolymatrixGame) -> f64 {
    step_from_norm(game, 4.0)
}

/// Optimistic entropy-regularised MWU. The secondary sequence `π̄` moves
/// with the gradient at the played iterate `π`; the next `π` is predicted
/// from the new `π̄` with that same gradient.
pub fn omwu(
    game: &PolymatrixGame,
    tau: Option<f64>,
    eta: Option<f64>,
    opts: RunOptions,
) -> Result<Trajectory> {
    let tau = tau.unwrap_or_else(|| omwu_default_tau(game));
    let eta = eta.unwrap_or_else(|| omwu_default_eta(game));
    if !(tau >= 0.0) || !(eta > 0.0) || eta * tau > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "need τ ≥ 0, η > 0 and ητ ≤ 1 (τ={tau}, η={eta})"
        )));
    }
    let mut bar = uniform_logs(game);
    let mut cur = bar.clone();
    let mut rec = Recorder::new(opts, ne_metric(game));
    let mut t = 0;
    while t < opts.iters {
        let p = exp_profile(&cur);
        if rec.observe(t, &p, Some(&exp_profile(&bar))) {
            return Ok(rec.finish(t, p, Some(exp_profile(&bar))));
        }
        let q = payoff_vectors(game, &p);
        let prev_bar = bar.clone();
        regularized_step(&mut bar, &prev_bar, &q, eta, tau);
        let new_bar = bar.clone();
        regularized_step(&mut cur, &new_bar, &q, eta, tau);
        t += 1;
    }
    Ok(rec.finish(t, exp_profile(&cur), Some(exp_profile(&bar))))
}

/// Optimistic mirror descent with the entropy mirror map; the iterate with
/// the smallest gap is reported as `best`.
pub fn omd(game: &PolymatrixGame, eta: Option<f64>, opts: RunOptions) -> Result<Trajectory> {
    let eta = eta.unwrap_or_else(|| omd_default_eta(game));
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {eta}"
        )));
    }
    let mut bar = uniform_logs(game);
    let mut cur = bar.clone();
    let mut rec = Recorder::new(opts, ne_metric(game));
    let mut best: Option<TrajectoryPoint> = None;
    let mut t = 0;
    let offer = |t: usize, p: &Profile, best: &mut Option<TrajectoryPoint>| {
        let g = matrix_ne_gap(game, p).ne_gap;
        if best.as_ref().is_none_or(|b| g < b.gap) {
            *best = Some(TrajectoryPoint {
                iter: t,
                profile: p.clone(),
                secondary: None,
                gap: g,
            });
        }
    };
    while t < opts.iters {
        let p = exp_profile(&cur);
        offer(t, &p, &mut best);
        if rec.observe(t, &p, Some(&exp_profile(&bar))) {
            let mut tr = rec.finish(t, p, Some(exp_profile(&bar)));
            tr.best = best;
            return Ok(tr);
        }
        let q = payoff_vectors(game, &p);
        regularized_step(&mut cur, &bar.clone(), &q, eta, 0.0);
        let q_next = payoff_vectors(game, &exp_profile(&cur));
        let prev_bar = bar.clone();
        regularized_step(&mut bar, &prev_bar, &q_next, eta, 0.0);
        t += 1;
    }
    let last = exp_profile(&cur);
    offer(t, &last, &mut best);
    let mut tr = rec.finish(t, last, Some(exp_profile(&bar)));
    tr.best = best;
    Ok(tr)
}

/// Fictitious play: players best-respond (lowest index on ties) to the
/// shared empirical beliefs. `series` holds `Σ_i` best-response gains of the
/// beliefs at every iteration.
pub fn fp_matrix(game: &PolymatrixGame, alpha: &StepSchedule, opts: RunOptions) -> Trajectory {
    let mut beliefs = uniform_profile(game.action_counts());
    let mut rec = Recorder::new(opts, Box::new(move |p| best_response_sum(game, p)));
    let mut series = Vec::with_capacity(opts.iters + 1);
    let mut t = 0;
    while t < opts.iters {
        series.push((t, best_response_sum(game, &beliefs)));
        if rec.observe(t, &beliefs, None) {
            break;
        }
        let actions: Vec<usize> = (0..game.num_players())
            .map(|i| argmax(&game.payoff_vector(i, &beliefs)))
            .collect();
        let a = alpha.at(t);
        for (b, &ai) in beliefs.iter_mut().zip(&actions) {
            b.iter_mut().for_each(|x| *x *= 1.0 - a);
            b[ai] += a;
        }
        t += 1;
    }
    if series.last().map(|s| s.0) != Some(t) {
        series.push((t, best_response_sum(game, &beliefs)));
    }
    let mut tr = rec.finish(t, beliefs, None);
    tr.series = series;
    tr
}

/// Smooth fictitious play: actions are sampled from `softmax(q_i/τ)` against
/// the beliefs. `series` holds the entropy-regularised gap of the beliefs.
pub fn smooth_fp_matrix(
    game: &PolymatrixGame,
    tau: f64,
    alpha: &StepSchedule,
    opts: RunOptions,
    seed: u64,
) -> Result<Trajectory> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let mut r = rng::stream(seed, 0x5f9);
    let mut beliefs = uniform_profile(game.action_counts());
    let metric = move |p: &Profile| matrix_qre_gap(game, p, tau).unwrap_or(f64::NAN);
    let mut rec = Recorder::new(opts, Box::new(metric));
    let mut series = Vec::with_capacity(opts.iters + 1);
    let mut t = 0;
    while t < opts.iters {
        series.push((t, metric(&beliefs)));
        if rec.observe(t, &beliefs, None) {
            break;
        }
        let mut actions = Vec::with_capacity(game.num_players());
        for i in 0..game.num_players() {
            let probs = softmax(&game.payoff_vector(i, &beliefs), tau);
            let dist = WeightedIndex::new(&probs).map_err(|e| Error::Solver(e.to_string()))?;
            actions.push(dist.sample(&mut r));
        }
        let a = alpha.at(t);
        for (b, &ai) in beliefs.iter_mut().zip(&actions) {
            b.iter_mut().for_each(|x| *x *= 1.0 - a);
            b[ai] += a;
        }
        t += 1;
    }
    if series.last().map(|s| s.0) != Some(t) {
        series.push((t, metric(&beliefs)));
    }
    let mut tr = rec.finish(t, beliefs, None);
    tr.series = series;
    Ok(tr)
}

/// Unregularised MWU self-play iterates `π^(0..T)` with
/// `η = √(log max|A_i| / T) / ‖r‖_max`.
pub fn mwu_self_play(game: &PolymatrixGame, iters: usize) -> Vec<Profile> {
    let norm = game.max_abs_entry();
    let eta = if norm > 0.0 && iters > 0 {
        (game.max_log_actions() / iters as f64).sqrt() / norm
    } else {
        0.0
    };
    let mut logs = uniform_logs(game);
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        let p = exp_profile(&logs);
        let q = payoff_vectors(game, &p);
        let base = logs.clone();
        regularized_step(&mut logs, &base, &q, eta, 0.0);
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn pennies() -> PolymatrixGame {
        PolymatrixGame::two_player_zero_sum(
            Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap(),
        )
    }

    fn is_uniform(p: &Profile) -> bool {
        p.iter().all(|v| v.iter().all(|x| (x - 0.5).abs() < 1e-12))
    }

    #[test]
    fn pennies_fixed_points() {
        let g = pennies();
        let opts = RunOptions::new(200).record_every(1);
        let tr = mwu_fixed(&g, 1.0, opts).unwrap();
        assert!(tr.points.iter().all(|p| is_uniform(&p.profile)));
        assert!(is_uniform(&mwu_diminishing(&g, opts).unwrap().last));
        let o = omwu(&g, None, None, opts).unwrap();
        assert!(o
            .points
            .iter()
            .all(|p| is_uniform(&p.profile) && is_uniform(p.secondary.as_ref().unwrap())));
        let d = omd(&g, None, opts).unwrap();
        assert!(is_uniform(&d.last) && d.best.unwrap().gap < 1e-12);
    }

    #[test]
    fn projection_floors_small_coordinates() {
        let p = kl_project_floor(&[0.0, 0.0, -50.0], 0.01);
        assert_eq!(p[2], 0.01);
        assert!((p[0] - 0.495).abs() < 1e-12);
        let q = kl_project_floor(&[0.0, (2.0f64).ln()], 0.1);
        assert!((q[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn early_stop_on_target() {
        let g = pennies();
        let tr = mwu_fixed(&g, 1.0, RunOptions::new(1000).target_gap(Some(1e-3))).unwrap();
        assert_eq!(tr.iterations, 0);
    }

    #[test]
    fn fp_on_pennies_converges() {
        let g = pennies();
        let tr = fp_matrix(&g, &StepSchedule::Harmonic, RunOptions::new(20_000));
        assert_eq!(tr.series.len(), 20_001);
        assert!(tr.series.last().unwrap().1 < 0.05);
    }
}
