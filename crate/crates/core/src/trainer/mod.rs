//! Group-robust training: interleaved SGD on policy parameters and
//! exponentiated-gradient ascent on group importance weights, plus ERM and
//! supervised modes.
//!
//! One outer step samples a group, runs `T'` inner REINFORCE steps on
//! batches from that group with the gradient scaled by the group's weight,
//! then exponentiates the sampled group's weight by the last inner loss and
//! renormalizes. ERM freezes the weights at group-size proportions and skips
//! the weight update; with a single group both modes produce bit-identical
//! trajectories.

mod config;
mod run;

pub use config::{GroupSampling, TrainConfig, TrainMode};
pub use run::{
    advantages, log_header, log_row, reinforce_loss, shared_baseline, sgd_step, supervised_step,
    HistoryEntry, StepRecord, TrainState, Trainer,
};

use crate::error::{Error, Result};

/// The simplex vector q over distribution groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupWeights {
    q: Vec<f64>,
}

impl GroupWeights {
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("group count must be >= 1".into()));
        }
        Ok(GroupWeights {
            q: vec![1.0 / m as f64; m],
        })
    }

    /// Weights proportional to group sizes (the ERM weighting).
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Parameter("group sizes must be positive".into()));
        }
        let total: usize = sizes.iter().sum();
        Ok(GroupWeights {
            q: sizes.iter().map(|&s| s as f64 / total as f64).collect(),
        })
    }

    pub fn from_vec(q: Vec<f64>) -> Result<Self> {
        let w = GroupWeights { q };
        w.validate()?;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn get(&self, g: usize) -> f64 {
        self.q[g]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// Simplex invariants: nonnegative entries summing to 1 within 1e-12.
    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::Parameter("empty weight vector".into()));
        }
        if self.q.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Contract(format!("negative group weight in {:?}", self.q)));
        }
        let sum: f64 = self.q.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!("group weights sum to {sum}")));
        }
        Ok(())
    }
}

/// Exponentiated-gradient ascent step on the simplex: multiply the sampled
/// group's weight by `exp(eta_q * loss)` and renormalize. When the direct
/// product would overflow, the update runs in log space with the max
/// exponent subtracted, which preserves the simplex invariants.
pub fn eg_update(weights: &mut GroupWeights, group: usize, loss: f64, eta_q: f64) -> Result<()> {
    if group >= weights.q.len() {
        return Err(Error::Parameter(format!(
            "group {group} out of range 0..{}",
            weights.q.len()
        )));
    }
    if !loss.is_finite() {
        return Err(Error::Contract(format!("non-finite group loss {loss}")));
    }
    let x = eta_q * loss;
    let factor = x.exp();
    let direct = weights.q[group] * factor;
    if factor.is_finite() && direct.is_finite() {
        let mut q = weights.q.clone();
        q[group] = direct;
        let sum: f64 = q.iter().sum();
        if sum.is_finite() && sum > 0.0 {
            for v in &mut q {
                *v /= sum;
            }
            weights.q = q;
            return Ok(());
        }
    }
    // Log-domain fallback.
    let mut logs: Vec<f64> = weights.q.iter().map(|&v| v.ln()).collect();
    logs[group] += x;
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut q: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = q.iter().sum();
    for v in &mut q {
        *v /= sum;
    }
    weights.q = q;
    Ok(())
}
