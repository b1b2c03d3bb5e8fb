use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{JointMixture, PolymatrixGame, Profile};
use crate::schedule::StepSchedule;

use super::dynamics::{
    fp_matrix, mwu_diminishing, mwu_fixed, omd, omwu, omwu_default_tau, smooth_fp_matrix,
    RunOptions,
};
use super::gaps::matrix_ne_gap;
use super::marginal::no_regret_avg;
use super::ne_lp::ne_lp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Lp,
    MwuFixed,
    MwuDiminishing,
    Omwu,
    Omd,
    Fp,
    SmoothFp,
    NoRegret,
}

impl OracleKind {
    pub const ALL: [OracleKind; 8] = [
        OracleKind::Lp,
        OracleKind::MwuFixed,
        OracleKind::MwuDiminishing,
        OracleKind::Omwu,
        OracleKind::Omd,
        OracleKind::Fp,
        OracleKind::SmoothFp,
        OracleKind::NoRegret,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Lp => "lp",
            OracleKind::MwuFixed => "mwu-fixed",
            OracleKind::MwuDiminishing => "mwu-diminishing",
            OracleKind::Omwu => "omwu",
            OracleKind::Omd => "omd",
            OracleKind::Fp => "fp",
            OracleKind::SmoothFp => "smooth-fp",
            OracleKind::NoRegret => "no-regret",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        OracleKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = OracleKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown oracle '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Stage-game solver configuration. Unset `tau`/`eta` fall back to each
/// method's default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub kind: OracleKind,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub max_iters: usize,
    pub seed: u64,
    pub target_gap: Option<f64>,
    pub solver_tol: f64,
}

impl OracleConfig {
    pub fn new(kind: OracleKind) -> Self {
        OracleConfig {
            kind,
            tau: None,
            eta: None,
            max_iters: 1000,
            seed: 0,
            target_gap: None,
            solver_tol: 1e-9,
        }
    }

    pub fn lp() -> Self {
        OracleConfig::new(OracleKind::Lp)
    }

    pub fn iters(mut self, t: usize) -> Self {
        self.max_iters = t;
        self
    }

    pub fn tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != OracleKind::Lp && self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "iteration budget must be positive".into(),
            ));
        }
        if let Some(t) = self.tau {
            if !(t >= 0.0)
                || (t == 0.0 && matches!(self.kind, OracleKind::MwuFixed | OracleKind::SmoothFp))
            {
                return Err(Error::InvalidParameter(format!(
                    "temperature {t} not allowed for {}",
                    self.kind
                )));
            }
        }
        if let Some(e) = self.eta {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "step size must be positive, got {e}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutput {
    pub profile: Profile,
    /// Measured NE gap of `profile` on the stage game.
    pub gap: f64,
    pub iterations: usize,
    /// Correlated mixture behind `profile` (no-regret averaging only).
    pub mixture: Option<JointMixture>,
    /// CCE gap of `mixture`.
    pub eps_cce: Option<f64>,
}

/// Runs the configured solver on one stage game; `seed` overrides the
/// configured seed for randomised methods.
pub fn solve_stage(game: &PolymatrixGame, cfg: &OracleConfig, seed: u64) -> Result<OracleOutput> {
    cfg.validate()?;
    let opts = RunOptions::new(cfg.max_iters).target_gap(cfg.target_gap);
    let tau = || cfg.tau.unwrap_or_else(|| omwu_default_tau(game));
    let (profile, iterations, mixture, eps_cce) = match cfg.kind {
        OracleKind::Lp => (ne_lp(game, cfg.solver_tol)?.profile, 0, None, None),
        OracleKind::MwuFixed => {
            let t = mwu_fixed(game, tau(), opts)?;
            (t.last, t.iterations, None, None)
        }
        OracleKind::MwuDiminishing => {
            let t = mwu_diminishing(game, opts)?;
            (t.last, t.iterations, None, None)
        }
        OracleKind::Omwu => {
            let t = omwu(game, cfg.tau, cfg.eta, opts)?;
            (t.last, t.iterations, None, None)
        }
        OracleKind::Omd => {
            let t = omd(game, cfg.eta, opts)?;
            (t.last, t.iterations, None, None)
        }
        OracleKind::Fp => {
            let t = fp_matrix(game, &StepSchedule::Harmonic, opts);
            (t.last, t.iterations, None, None)
        }
        OracleKind::SmoothFp => {
            let t = smooth_fp_matrix(game, tau(), &StepSchedule::Harmonic, opts, seed)?;
            (t.last, t.iterations, None, None)
        }
        OracleKind::NoRegret => {
            let r = no_regret_avg(game, cfg.max_iters)?;
            let eps = r.certificate.eps_cce;
            (r.marginal, cfg.max_iters, Some(r.mixture), Some(eps))
        }
    };
    let gap = matrix_ne_gap(game, &profile).ne_gap;
    Ok(OracleOutput {
        profile,
        gap,
        iterations,
        mixture,
        eps_cce,
    })
}
