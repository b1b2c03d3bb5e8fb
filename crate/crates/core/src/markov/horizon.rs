use crate::error::{Error, Result};

/// Horizon after which a discounted game can be cut: `⌈ln(R/ε)/(1−γ)⌉`,
/// and `1` once `ε ≥ R`.
pub fn truncate_horizon(gamma: f64, eps: f64, bound: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) || !(eps > 0.0) || !(bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need γ in (0,1), ε > 0, R > 0 (got {gamma}, {eps}, {bound})"
        )));
    }
    if eps >= bound {
        return Ok(1);
    }
    Ok((((bound / eps).ln() / (1.0 - gamma)).ceil() as usize).max(1))
}
