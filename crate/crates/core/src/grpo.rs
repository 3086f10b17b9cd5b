//! Group-relative advantages and the constant-normalized clipped policy loss.
//!
//! Only loss values are computed; log-probabilities come from the caller.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};

pub const DEFAULT_GROUP_SIZE: usize = 8;
/// Below this population std every advantage in the group is zero.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrpoHyperparams {
    pub epsilon: f64,
    pub beta: f64,
    pub normalizer_length: usize,
    pub group_size: usize,
}

impl Default for GrpoHyperparams {
    fn default() -> Self {
        // 1638 = floor(0.8 * 2048)
        Self { epsilon: 0.2, beta: 0.005, normalizer_length: 1638, group_size: DEFAULT_GROUP_SIZE }
    }
}

impl GrpoHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(config("epsilon must be positive"));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(config("beta must be non-negative"));
        }
        if self.normalizer_length == 0 {
            return Err(config("normalizer_length must be at least 1"));
        }
        if self.group_size < 2 {
            return Err(config("group_size must be at least 2"));
        }
        Ok(())
    }
}

/// Per-token log-probabilities of one sampled completion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenLogProbs {
    pub current: Vec<f64>,
    pub old: Vec<f64>,
    pub reference: Vec<f64>,
}

impl TokenLogProbs {
    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.old.len() != self.current.len() || self.reference.len() != self.current.len() {
            return Err(contract("log-probability sequences differ in length"));
        }
        if self.current.iter().chain(&self.old).chain(&self.reference).any(|v| !v.is_finite()) {
            return Err(contract("log-probabilities must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub surrogate_sum: f64,
    pub kl_sum: f64,
    pub total: f64,
}

/// `(R_i - mean) / std` with the population std of the group.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(contract("a group needs at least two rewards"));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(contract("rewards must be finite"));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if std < STD_FLOOR {
        return Ok(alloc::vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Non-negative per-token estimate of KL(current || reference).
pub fn kl_estimate(current: f64, reference: f64) -> f64 {
    let d = reference - current;
    libm::exp(d) - d - 1.0
}

pub fn clipped_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// `l_t = min(r_t A, clip(r_t) A) - beta * KL_t` for every token.
pub fn per_token_loss(logprobs: &TokenLogProbs, advantage: f64, params: &GrpoHyperparams) -> Result<Vec<f64>> {
    logprobs.check()?;
    if !advantage.is_finite() {
        return Err(contract("advantage must be finite"));
    }
    Ok(per_token_terms(logprobs, advantage, params).map(|(s, kl)| s - params.beta * kl).collect())
}

fn per_token_terms<'a>(
    lp: &'a TokenLogProbs,
    advantage: f64,
    params: &'a GrpoHyperparams,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    (0..lp.len()).map(move |t| {
        let ratio = libm::exp(lp.current[t] - lp.old[t]);
        (clipped_surrogate(ratio, advantage, params.epsilon), kl_estimate(lp.current[t], lp.reference[t]))
    })
}

/// `-(1 / (L G)) * sum_i sum_t l_{i,t}`.
///
/// The token losses already include the KL penalty, so `surrogate_sum` holds
/// their combined sum and `kl_sum` is zero; [`group_loss`] reports both parts.
pub fn dr_grpo_loss(token_losses: &[Vec<f64>], params: &GrpoHyperparams, group_size: usize) -> Result<LossBreakdown> {
    if token_losses.len() != group_size || group_size == 0 {
        return Err(contract("number of samples does not match the group size"));
    }
    if params.normalizer_length == 0 {
        return Err(config("normalizer_length must be at least 1"));
    }
    let sum: f64 = token_losses.iter().flatten().sum();
    let scale = 1.0 / (params.normalizer_length as f64 * group_size as f64);
    Ok(LossBreakdown { surrogate_sum: sum, kl_sum: 0.0, total: -scale * sum })
}

/// Loss for a whole group from rewards and log-probabilities, with the
/// surrogate and KL parts reported separately.
pub fn group_loss(rewards: &[f64], logprobs: &[TokenLogProbs], params: &GrpoHyperparams) -> Result<LossBreakdown> {
    if rewards.len() != logprobs.len() {
        return Err(contract("one log-probability set per reward is required"));
    }
    let adv = group_advantages(rewards)?;
    let (mut surrogate_sum, mut kl_sum) = (0.0, 0.0);
    for (lp, a) in logprobs.iter().zip(&adv) {
        lp.check()?;
        for (s, kl) in per_token_terms(lp, *a, params) {
            surrogate_sum += s;
            kl_sum += kl;
        }
    }
    let scale = 1.0 / (params.normalizer_length as f64 * rewards.len() as f64);
    Ok(LossBreakdown { surrogate_sum, kl_sum, total: -scale * (surrogate_sum - params.beta * kl_sum) })
}
