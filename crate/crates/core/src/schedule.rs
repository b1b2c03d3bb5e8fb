use serde::{Deserialize, Serialize};

/// Step-size sequence indexed by a counter `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `k^{-p}` (and `1` at `k = 0`).
    Power(f64),
    /// `1/(k+1)`.
    Harmonic,
    /// Explicit table; the last entry repeats.
    Custom(Vec<f64>),
}

impl StepSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            StepSchedule::Power(p) => {
                if k == 0 {
                    1.0
                } else {
                    (k as f64).powf(-p)
                }
            }
            StepSchedule::Harmonic => 1.0 / (k as f64 + 1.0),
            StepSchedule::Custom(v) => v.get(k).or(v.last()).copied().unwrap_or(0.0),
        }
    }

    /// Decay exponent for the standard families; `None` for tables.
    fn exponent(&self) -> Option<f64> {
        match self {
            StepSchedule::Power(p) => Some(*p),
            StepSchedule::Harmonic => Some(1.0),
            StepSchedule::Custom(_) => None,
        }
    }

    /// Whether the sequence is non-summable and vanishing.
    pub fn is_robbins_monro(&self) -> bool {
        self.exponent().is_some_and(|p| p > 0.0 && p <= 1.0)
    }
}

/// Problems with a policy/value step-size pair under the two-timescale
/// condition (both non-summable and vanishing, value steps faster-decaying).
pub fn two_timescale_warnings(alpha: &StepSchedule, beta: &StepSchedule) -> Vec<String> {
    let mut w = Vec::new();
    if !alpha.is_robbins_monro() {
        w.push(format!(
            "policy steps {alpha:?} are not a vanishing non-summable power sequence"
        ));
    }
    if !beta.is_robbins_monro() {
        w.push(format!(
            "value steps {beta:?} are not a vanishing non-summable power sequence"
        ));
    }
    if let (Some(a), Some(b)) = (alpha.exponent(), beta.exponent()) {
        if b <= a {
            w.push(format!(
                "value steps must decay faster than policy steps (exponents {b} <= {a})"
            ));
        }
    }
    w
}
