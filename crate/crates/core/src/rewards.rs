//! Proposer reward shaping.
//!
//! Three bounded reward kernels over a group of binary solver outcomes (a
//! rare-success band, Bernoulli variance, and an exponential decay), a
//! difficulty-targeting teacher utility, the two-gate bounded reward that
//! combines a hard validity gate with a pool-admission bonus, and discounted
//! path-backup values. Every function here returns a value in [0, 1]; that
//! boundedness is what the bandit layer's backup relies on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RewardError {
    #[error("outcome group must be non-empty")]
    EmptyGroup,
    #[error("ancestor index {index} exceeds path depth {depth}")]
    IndexPastDepth { index: usize, depth: usize },
}

/// A group of K binary verifier outcomes for one proposed spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeGroup {
    outcomes: Vec<bool>,
}

impl OutcomeGroup {
    pub fn new(outcomes: Vec<bool>) -> Result<Self, RewardError> {
        if outcomes.is_empty() {
            return Err(RewardError::EmptyGroup);
        }
        Ok(Self { outcomes })
    }

    pub fn k(&self) -> usize {
        self.outcomes.len()
    }

    /// Number of successes m.
    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|&&c| c).count()
    }

    /// Empirical pass rate p = m/K.
    pub fn pass_rate(&self) -> f64 {
        self.successes() as f64 / self.k() as f64
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }
}

/// Which reward kernel shapes the proposer signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardMode {
    /// 1 iff exactly one of the K rollouts passed.
    Band1OfK,
    /// 4p(1-p): smooth, peaked at p = 1/2.
    BernoulliVariance,
    /// e^{-Kp} - e^{-K}: strictly decreasing in p, rewards near-unsolvable.
    ExpDecay,
}

impl RewardMode {
    /// Config-facing name of the variant.
    pub fn key(&self) -> &'static str {
        match self {
            RewardMode::Band1OfK => "band_1of8",
            RewardMode::BernoulliVariance => "4p1p",
            RewardMode::ExpDecay => "exp_decay",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "band_1of8" => Some(RewardMode::Band1OfK),
            "4p1p" => Some(RewardMode::BernoulliVariance),
            "exp_decay" => Some(RewardMode::ExpDecay),
            _ => None,
        }
    }
}

/// Evaluates the selected reward kernel on an outcome group. Output in [0, 1].
pub fn entropy_reward(mode: RewardMode, group: &OutcomeGroup) -> f64 {
    let k = group.k() as f64;
    let p = group.pass_rate();
    match mode {
        RewardMode::Band1OfK => {
            if group.successes() == 1 {
                1.0
            } else {
                0.0
            }
        }
        RewardMode::BernoulliVariance => 4.0 * p * (1.0 - p),
        RewardMode::ExpDecay => (-k * p).exp() - (-k).exp(),
    }
}

/// Difficulty-targeting utility: the variance kernel damped by a Gaussian
/// window centered at the target pass rate `tau`.
///
/// `4p(1-p) * exp(-(p - tau)^2 / (2 sigma^2))`, in [0, 1] for `sigma > 0`.
pub fn teacher_utility(p: f64, tau: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0, "sigma must be positive");
    let window = (-(p - tau).powi(2) / (2.0 * sigma * sigma)).exp();
    4.0 * p * (1.0 - p) * window
}

/// Inputs to the two-gate reward: a hard validity gate, a pool-admission
/// bonus gate, and their mixing weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGateInputs {
    pub hard_gate: bool,
    pub admitted: bool,
    pub beta: f64,
}

/// `R = H * ((1 - beta) * u + beta * A)`. The hard gate zeroes everything;
/// the admission gate contributes at most `beta`. Bounded in [0, 1] for
/// `u` in [0, 1] and `beta` in [0, 1].
pub fn two_gate_reward(gates: TwoGateInputs, u: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&u), "utility must lie in [0, 1]");
    if !gates.hard_gate {
        return 0.0;
    }
    let a = if gates.admitted { 1.0 } else { 0.0 };
    (1.0 - gates.beta) * u + gates.beta * a
}

/// The value credited to the i-th ancestor (0 = root end) on a selection
/// path of depth L ending in terminal reward R: `gamma^{L-i} * R`.
pub fn path_backup_value(
    reward: f64,
    depth: usize,
    ancestor_index: usize,
    gamma: f64,
) -> Result<f64, RewardError> {
    if ancestor_index > depth {
        return Err(RewardError::IndexPastDepth {
            index: ancestor_index,
            depth,
        });
    }
    Ok(gamma.powi((depth - ancestor_index) as i32) * reward)
}
