//! Discrete control: activation impulse, threshold gate, conjugate belief update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Belief, SocialGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationWeights {
    /// Structural pressure from previously active neighbours.
    pub w1: f64,
    /// Emotional energy ‖e − μ‖₂.
    pub w2: f64,
    /// Direct mention.
    pub w3: f64,
}

impl Default for ActivationWeights {
    fn default() -> Self {
        ActivationWeights {
            w1: 0.5,
            w2: 1.0,
            w3: 2.0,
        }
    }
}

impl ActivationWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w1", self.w1), ("w2", self.w2), ("w3", self.w3)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(format!(
                    "activation.{name} must be >= 0, got {w}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Reply,
    Silence,
}

/// U = w1·Σ_{j ∈ N(i), j active} G_ij + w2·‖e − μ‖₂ + w3·𝟙[mentioned].
///
/// `active_prev[j]` marks agents that spoke in the previous step.
pub fn interaction_impulse(
    agent: usize,
    emotion: &[f64],
    mu: &[f64],
    graph: &SocialGraph,
    active_prev: &[bool],
    mentioned: bool,
    weights: &ActivationWeights,
) -> f64 {
    let structural: f64 = graph
        .neighbors(agent)
        .iter()
        .filter(|(j, _)| active_prev[*j])
        .map(|(_, w)| w)
        .sum();
    let energy = emotion
        .iter()
        .zip(mu)
        .map(|(e, m)| (e - m) * (e - m))
        .sum::<f64>()
        .sqrt();
    let mention = if mentioned { 1.0 } else { 0.0 };
    weights.w1 * structural + weights.w2 * energy + weights.w3 * mention
}

/// Reply iff u strictly exceeds the threshold.
pub fn should_activate(u: f64, gamma: f64) -> Action {
    if u > gamma {
        Action::Reply
    } else {
        Action::Silence
    }
}

/// τ' = τ + 1/σ², μ' = (τμ + y/σ²) / τ'.
pub fn update_belief(belief: Belief, y: f64, obs_noise_var: f64) -> Result<Belief> {
    if !(obs_noise_var.is_finite() && obs_noise_var > 0.0) {
        return Err(Error::domain(format!(
            "observation noise variance must be positive, got {obs_noise_var}"
        )));
    }
    if belief.precision.is_nan() || belief.precision <= 0.0 {
        return Err(Error::domain(format!(
            "belief precision must be positive, got {}",
            belief.precision
        )));
    }
    let obs_precision = 1.0 / obs_noise_var;
    let precision = belief.precision + obs_precision;
    let mean = (belief.precision * belief.mean + obs_precision * y) / precision;
    Ok(Belief { mean, precision })
}
