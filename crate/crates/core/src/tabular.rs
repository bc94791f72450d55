//! Exactly enumerable softmax policies.
//!
//! A policy is a table of logits indexed by (context, output) over a finite
//! per-context universe, so log-probabilities, score gradients, and
//! on-manifold mass are all computable in closed form. On top of it sit the
//! group-gradient assemblers (success-averaged and mean-normalized) and a
//! from-scratch AdamW whose recursion deliberately omits bias correction,
//! because the momentum-drift effect under zero gradients depends on the
//! uncorrected moments. Everything the collapse analyses claim about sparse
//! sampling can be checked here against full enumeration.

use crate::advantages::GroupAdvantages;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("unknown context {0}")]
    UnknownContext(u32),
    #[error("output {output} out of range for context {context} (universe size {m})")]
    OutputOutOfRange { context: u32, output: usize, m: usize },
    #[error("positive set must be non-empty")]
    EmptyPositiveSet,
    #[error("outputs and advantages differ in length ({outputs} vs {advantages})")]
    LengthMismatch { outputs: usize, advantages: usize },
}

/// Logit table over a finite output universe, one row per context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxPolicy {
    rows: BTreeMap<u32, Vec<f64>>,
}

impl SoftmaxPolicy {
    /// All-zero logits: the uniform policy over `m` outputs per context.
    pub fn uniform<I: IntoIterator<Item = u32>>(contexts: I, m: usize) -> Self {
        Self {
            rows: contexts.into_iter().map(|c| (c, vec![0.0; m])).collect(),
        }
    }

    pub fn from_rows(rows: BTreeMap<u32, Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn contexts(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.keys().copied()
    }

    pub fn row(&self, context: u32) -> Result<&[f64], PolicyError> {
        self.rows
            .get(&context)
            .map(Vec::as_slice)
            .ok_or(PolicyError::UnknownContext(context))
    }

    pub fn row_mut(&mut self, context: u32) -> Result<&mut Vec<f64>, PolicyError> {
        self.rows
            .get_mut(&context)
            .ok_or(PolicyError::UnknownContext(context))
    }

    pub fn rows_iter_mut(&mut self) -> impl Iterator<Item = (u32, &mut Vec<f64>)> {
        self.rows.iter_mut().map(|(c, r)| (*c, r))
    }

    pub fn universe_size(&self, context: u32) -> Result<usize, PolicyError> {
        Ok(self.row(context)?.len())
    }

    /// Exact softmax probabilities of a context row.
    pub fn probs(&self, context: u32) -> Result<Vec<f64>, PolicyError> {
        let row = self.row(context)?;
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / z).collect())
    }

    pub fn log_prob(&self, context: u32, output: usize) -> Result<f64, PolicyError> {
        let p = self.probs(context)?;
        if output >= p.len() {
            return Err(PolicyError::OutputOutOfRange {
                context,
                output,
                m: p.len(),
            });
        }
        Ok(p[output].ln())
    }

    /// Shannon entropy of a context's output distribution, in nats.
    pub fn entropy(&self, context: u32) -> Result<f64, PolicyError> {
        Ok(self
            .probs(context)?
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum())
    }

    /// One draw from the context's softmax distribution.
    pub fn sample<R: Rng>(&self, context: u32, rng: &mut R) -> Result<usize, PolicyError> {
        let p = self.probs(context)?;
        let mut u: f64 = rng.gen();
        for (i, &pi) in p.iter().enumerate() {
            u -= pi;
            if u <= 0.0 {
                return Ok(i);
            }
        }
        Ok(p.len() - 1)
    }

    /// `n` i.i.d. draws from one context.
    pub fn sample_group<R: Rng>(
        &self,
        context: u32,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>, PolicyError> {
        (0..n).map(|_| self.sample(context, rng)).collect()
    }

    /// Exact probability mass on an output subset.
    pub fn manifold_mass(
        &self,
        context: u32,
        manifold: &BTreeSet<usize>,
    ) -> Result<f64, PolicyError> {
        let p = self.probs(context)?;
        Ok(manifold.iter().filter(|&&y| y < p.len()).map(|&y| p[y]).sum())
    }
}

/// A real table congruent to a policy's logit table. Rows absent from the
/// map are implicitly zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GradientVector {
    entries: BTreeMap<u32, Vec<f64>>,
}

impl GradientVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &BTreeMap<u32, Vec<f64>> {
        &self.entries
    }

    pub fn row(&self, context: u32) -> Option<&[f64]> {
        self.entries.get(&context).map(Vec::as_slice)
    }

    /// `self += coef * other`.
    pub fn add_scaled(&mut self, other: &GradientVector, coef: f64) {
        for (&ctx, row) in &other.entries {
            let dst = self
                .entries
                .entry(ctx)
                .or_insert_with(|| vec![0.0; row.len()]);
            for (d, &s) in dst.iter_mut().zip(row) {
                *d += coef * s;
            }
        }
    }

    pub fn scale(&mut self, coef: f64) {
        for row in self.entries.values_mut() {
            for v in row.iter_mut() {
                *v *= coef;
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|r| r.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

/// Gradient of `log pi(output | context)` with respect to the logits:
/// the output indicator minus the softmax row; other contexts' rows zero.
pub fn score_gradient(
    policy: &SoftmaxPolicy,
    context: u32,
    output: usize,
) -> Result<GradientVector, PolicyError> {
    let p = policy.probs(context)?;
    if output >= p.len() {
        return Err(PolicyError::OutputOutOfRange {
            context,
            output,
            m: p.len(),
        });
    }
    let mut row: Vec<f64> = p.iter().map(|&pi| -pi).collect();
    row[output] += 1.0;
    let mut entries = BTreeMap::new();
    entries.insert(context, row);
    Ok(GradientVector { entries })
}

/// Success-averaged policy gradient: `1[k>0] * (1/k) * sum_i r_i * g(y_i)`,
/// where k is the number of positive-reward samples.
pub fn success_averaged_gradient(
    policy: &SoftmaxPolicy,
    context: u32,
    outputs: &[usize],
    rewards: &[f64],
) -> Result<GradientVector, PolicyError> {
    if outputs.len() != rewards.len() {
        return Err(PolicyError::LengthMismatch {
            outputs: outputs.len(),
            advantages: rewards.len(),
        });
    }
    let k = rewards.iter().filter(|&&r| r > 0.0).count();
    let mut g = GradientVector::zero();
    if k == 0 {
        return Ok(g);
    }
    for (&y, &r) in outputs.iter().zip(rewards) {
        if r != 0.0 {
            g.add_scaled(&score_gradient(policy, context, y)?, r / k as f64);
        }
    }
    Ok(g)
}

/// Mean-normalized group gradient: `(1/N) * sum_i A_i * g(y_i)`.
pub fn grpo_group_gradient(
    policy: &SoftmaxPolicy,
    context: u32,
    outputs: &[usize],
    advantages: &GroupAdvantages,
) -> Result<GradientVector, PolicyError> {
    if outputs.len() != advantages.values.len() {
        return Err(PolicyError::LengthMismatch {
            outputs: outputs.len(),
            advantages: advantages.values.len(),
        });
    }
    let n = outputs.len() as f64;
    let mut g = GradientVector::zero();
    for (&y, &a) in outputs.iter().zip(&advantages.values) {
        if a != 0.0 {
            g.add_scaled(&score_gradient(policy, context, y)?, a / n);
        }
    }
    Ok(g)
}

/// The ideal mean-normalized gradient computed over the whole universe with
/// binary reward on the positive set: with P positives of M outputs, each
/// positive receives weight `(M-P)/(P*M)` and each negative `1/M`.
pub fn full_enumeration_gradient(
    policy: &SoftmaxPolicy,
    context: u32,
    positives: &BTreeSet<usize>,
) -> Result<GradientVector, PolicyError> {
    if positives.is_empty() {
        return Err(PolicyError::EmptyPositiveSet);
    }
    let m = policy.universe_size(context)?;
    let p_count = positives.len();
    let mut g = GradientVector::zero();
    let pos_w = (m - p_count) as f64 / (p_count as f64 * m as f64);
    let neg_w = -1.0 / m as f64;
    for y in 0..m {
        let w = if positives.contains(&y) { pos_w } else { neg_w };
        g.add_scaled(&score_gradient(policy, context, y)?, w);
    }
    Ok(g)
}

/// AdamW hyperparameters and moment tables. The default recursion carries
/// no bias correction; `bias_correction` restores the standard form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub beta1: f64,
    pub beta2: f64,
    pub eta: f64,
    pub lambda: f64,
    pub eps: f64,
    pub bias_correction: bool,
    pub step: u64,
    m: BTreeMap<u32, Vec<f64>>,
    v: BTreeMap<u32, Vec<f64>>,
}

impl OptimizerState {
    pub fn new(eta: f64, lambda: f64) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eta,
            lambda,
            eps: 1e-8,
            bias_correction: false,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn first_moment(&self, context: u32) -> Option<&[f64]> {
        self.m.get(&context).map(Vec::as_slice)
    }

    pub fn second_moment(&self, context: u32) -> Option<&[f64]> {
        self.v.get(&context).map(Vec::as_slice)
    }

    /// Seeds the moment tables of one row; used by drift experiments that
    /// need a policy already "in motion".
    pub fn preload_moments(&mut self, context: u32, m: Vec<f64>, v: Vec<f64>) {
        assert!(v.iter().all(|&x| x >= 0.0), "second moments must be nonnegative");
        self.m.insert(context, m);
        self.v.insert(context, v);
    }
}

/// One AdamW step over every policy row. Rows with no gradient entry see a
/// zero gradient but their moments still decay and push the parameters:
/// that residual motion is the drift mechanism, so it must not be skipped.
pub fn adamw_step(
    policy: &mut SoftmaxPolicy,
    state: &mut OptimizerState,
    grad: &GradientVector,
) -> Result<(), PolicyError> {
    state.step += 1;
    // Rows with neither a gradient entry nor accumulated moments move by
    // weight decay alone: the Adam term is exactly zero for them. Handling
    // the touched rows individually and bulk-decaying the rest is an
    // identity, not an approximation, and keeps moment state sparse.
    let touched: BTreeSet<u32> = grad
        .entries()
        .keys()
        .copied()
        .chain(state.m.keys().copied())
        .collect();
    let eta_lambda = state.eta * state.lambda;
    for (ctx, row) in policy.rows_iter_mut() {
        if touched.contains(&ctx) {
            continue;
        }
        for p in row {
            *p -= eta_lambda * *p;
        }
    }
    let mut zero_row: Vec<f64> = Vec::new();
    for &ctx in &touched {
        // Gradient entries for contexts the policy does not carry are
        // ignored, as the policy-driven loop always did.
        let Ok(width) = policy.universe_size(ctx) else {
            continue;
        };
        let g_row: &[f64] = match grad.row(ctx) {
            Some(r) => r,
            None => {
                zero_row.resize(width, 0.0);
                zero_row.fill(0.0);
                &zero_row
            }
        };
        let m_row = state.m.entry(ctx).or_insert_with(|| vec![0.0; width]);
        let v_row = state.v.entry(ctx).or_insert_with(|| vec![0.0; width]);
        let params = policy.row_mut(ctx)?;
        for i in 0..width {
            m_row[i] = state.beta1 * m_row[i] + (1.0 - state.beta1) * g_row[i];
            v_row[i] = state.beta2 * v_row[i] + (1.0 - state.beta2) * g_row[i] * g_row[i];
            let (m_hat, v_hat) = if state.bias_correction {
                let c1 = 1.0 - state.beta1.powi(state.step as i32);
                let c2 = 1.0 - state.beta2.powi(state.step as i32);
                (m_row[i] / c1, v_row[i] / c2)
            } else {
                (m_row[i], v_row[i])
            };
            params[i] -= state.eta * (m_hat / (v_hat.sqrt() + state.eps) + state.lambda * params[i]);
        }
    }
    Ok(())
}
