use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One probability vector per player.
pub type Profile = Vec<Vec<f64>>;

pub fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

pub fn uniform_profile(action_counts: &[usize]) -> Profile {
    action_counts.iter().map(|&k| uniform(k)).collect()
}

pub fn pure(k: usize, a: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[a] = 1.0;
    v
}

pub fn pure_profile(action_counts: &[usize], actions: &[usize]) -> Profile {
    action_counts
        .iter()
        .zip(actions)
        .map(|(&k, &a)| pure(k, a))
        .collect()
}

pub fn check_simplex(p: &[f64], tol: f64) -> Result<()> {
    if p.iter().any(|&v| !(v >= -tol) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "negative or non-finite probability in {p:?}"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::InvalidParameter(format!("probabilities sum to {s}")));
    }
    Ok(())
}

pub fn check_profile(action_counts: &[usize], profile: &[Vec<f64>], tol: f64) -> Result<()> {
    if profile.len() != action_counts.len() {
        return Err(Error::Dimension(format!(
            "profile has {} players, game has {}",
            profile.len(),
            action_counts.len()
        )));
    }
    for (i, (p, &k)) in profile.iter().zip(action_counts).enumerate() {
        if p.len() != k {
            return Err(Error::Dimension(format!(
                "player {i}: {} probabilities for {k} actions",
                p.len()
            )));
        }
        check_simplex(p, tol).map_err(|e| Error::InvalidParameter(format!("player {i}: {e}")))?;
    }
    Ok(())
}

/// Correlated joint distribution written as a convex combination of
/// product distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointMixture {
    pub components: Vec<(f64, Profile)>,
}

impl JointMixture {
    pub fn product(profile: Profile) -> Self {
        JointMixture {
            components: vec![(1.0, profile)],
        }
    }

    /// Equal-weight mixture of the given products.
    pub fn empirical(profiles: Vec<Profile>) -> Self {
        let w = 1.0 / profiles.len() as f64;
        JointMixture {
            components: profiles.into_iter().map(|p| (w, p)).collect(),
        }
    }

    pub fn check(&self, action_counts: &[usize], tol: f64) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("empty mixture".into()));
        }
        let mut total = 0.0;
        for (w, p) in &self.components {
            if *w < -tol {
                return Err(Error::InvalidParameter(format!(
                    "negative mixture weight {w}"
                )));
            }
            total += w;
            check_profile(action_counts, p, tol)?;
        }
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(())
    }

    /// Per-player marginals.
    pub fn marginals(&self) -> Profile {
        let mut out: Profile = self.components[0]
            .1
            .iter()
            .map(|p| vec![0.0; p.len()])
            .collect();
        for (w, prof) in &self.components {
            for (o, p) in out.iter_mut().zip(prof) {
                for (x, y) in o.iter_mut().zip(p) {
                    *x += w * y;
                }
            }
        }
        out
    }
}

/// Product Markov policy indexed `[stage][state][player]`. A stationary
/// policy has a single stage.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovPolicy {
    pub stages: Vec<Vec<Profile>>,
}

impl MarkovPolicy {
    pub fn uniform(stages: usize, num_states: usize, action_counts: &[usize]) -> Self {
        MarkovPolicy {
            stages: vec![vec![uniform_profile(action_counts); num_states]; stages],
        }
    }

    pub fn stationary(per_state: Vec<Profile>) -> Self {
        MarkovPolicy {
            stages: vec![per_state],
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.stages.len() == 1
    }

    /// Profile used at stage `h` (stationary policies ignore `h`).
    pub fn at(&self, h: usize, s: usize) -> &Profile {
        let h = if self.is_stationary() { 0 } else { h };
        &self.stages[h][s]
    }
}

/// Per-(stage, state) correlated mixtures.
#[derive(Clone, Debug, PartialEq)]
pub struct JointMarkovPolicy {
    pub stages: Vec<Vec<JointMixture>>,
}

impl JointMarkovPolicy {
    pub fn at(&self, h: usize, s: usize) -> &JointMixture {
        let h = if self.stages.len() == 1 { 0 } else { h };
        &self.stages[h][s]
    }
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_of_mixture() {
        let m = JointMixture {
            components: vec![
                (0.5, vec![pure(2, 0), pure(2, 0)]),
                (0.5, vec![pure(2, 1), pure(2, 1)]),
            ],
        };
        m.check(&[2, 2], 1e-12).unwrap();
        assert_eq!(m.marginals(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn profile_checks() {
        assert!(check_profile(&[2], &[vec![0.4, 0.4]], 1e-9).is_err());
        assert!(check_profile(&[2], &[vec![0.5, 0.5, 0.0]], 1e-9).is_err());
        assert!(check_profile(&[2], &[vec![0.5, 0.5]], 1e-9).is_ok());
    }
}
