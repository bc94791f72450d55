//! The training loop: curriculum selection, proposal, solving, coupled
//! advantages, a joint optimizer step, and pool maintenance, in that order
//! every iteration.
//!
//! Each step runs six stages: (1) UCB batch selection from the seed pool,
//! (2) proposal generation plus the validity filter, (3) solver rollouts
//! with verification on filter-passing specs only, (4) mean-normalized
//! advantage computation per group, (5) one joint AdamW step with branch
//! token balancing (freeze flags zero a branch's gradient but never skip
//! its optimizer step, so momentum drift stays real), and (6) solved-only
//! pool admissions, two-gate reward backup along the selection paths,
//! absorb/prune maintenance, and end-of-step decay. Metrics are emitted
//! every step; pool snapshots on a fixed cadence. Runs are deterministic
//! functions of the configuration.

use crate::advantages::{
    adaptive_l2_weight, branch_token_scales, mlrl_group_advantages, AdvantageError,
};
use crate::config::{BalanceMode, ConfigError, ExperimentConfig};
use crate::rewards::{entropy_reward, two_gate_reward, RewardError, TwoGateInputs};
use crate::rng::RngStreams;
use crate::seed_pool::{
    AddOutcome, CandidateSeed, NodeId, PoolError, SeedPool, Selection,
};
use crate::similarity::{minhash_signature, tokenize};
use crate::tabular::{
    adamw_step, grpo_group_gradient, GradientVector, OptimizerState, PolicyError,
};
use crate::world::{
    solve_attempts, ProposerModel, SolveResult, SolverModel, SpecId, SpecUniverse, WorldError,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Advantage(#[from] AdvantageError),
    #[error("configuration rejected: {0}")]
    Config(String),
}

impl From<ConfigError> for EngineError {
    fn from(e: ConfigError) -> Self {
        EngineError::Config(e.to_string())
    }
}

/// Per-step observables, one JSON-lines record each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    /// Fraction of this step's proposals that survived the filter.
    pub q_valid_rate: f64,
    pub pool_size: usize,
    pub new_admissions: usize,
    pub absorbed: usize,
    pub pruned: usize,
    /// Mean pass rate on the frozen probe set, fresh rollouts each step.
    pub solver_pass_proxy: f64,
    /// l2 norm of the applied joint gradient.
    pub grad_norm: f64,
    pub grad_norm_q: f64,
    pub grad_norm_s: f64,
    /// Exact softmax entropy of the proposer, averaged over batch seeds.
    pub proposer_entropy: f64,
    /// Mean pool depth of the step's selected seeds.
    pub mean_selection_depth: f64,
    pub w_q: f64,
    pub w_s: f64,
    pub reward_mean_q: f64,
    pub reward_mean_s: f64,
    pub solver_ability: f64,
}

impl StepMetrics {
    pub fn all_finite(&self) -> bool {
        [
            self.q_valid_rate,
            self.solver_pass_proxy,
            self.grad_norm,
            self.grad_norm_q,
            self.grad_norm_s,
            self.proposer_entropy,
            self.mean_selection_depth,
            self.w_q,
            self.w_s,
            self.reward_mean_q,
            self.reward_mean_s,
            self.solver_ability,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Ordered trace of the consequential events inside one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineEvent {
    Selected(NodeId),
    Proposed { spec: SpecId, filter_passed: bool },
    Verified { spec: SpecId, passes: usize },
    Admitted { spec: SpecId, node: NodeId },
    Backup(NodeId),
    Absorbed { survivor: NodeId, merged: NodeId },
    Pruned(NodeId),
}

/// A pool snapshot taken mid-run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub step: usize,
    pub pool: String,
}

/// Everything `run_experiment` produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub metrics: Vec<StepMetrics>,
    pub snapshots: Vec<SnapshotRecord>,
    pub final_pool: String,
}

/// Live training state: world, both policies, optimizers, and the pool.
pub struct Engine {
    pub cfg: ExperimentConfig,
    pub universe: SpecUniverse,
    pub proposer: ProposerModel,
    pub solver: SolverModel,
    pub pool: SeedPool,
    pub opt_q: OptimizerState,
    pub opt_s: OptimizerState,
    streams: RngStreams,
    /// Universe specs already present in the pool.
    spec_nodes: BTreeMap<SpecId, NodeId>,
    /// Frozen probe specs for the solver pass proxy.
    probe: Vec<SpecId>,
    pub step: usize,
    /// Event trace of the most recent step, in execution order.
    pub events: Vec<EngineEvent>,
}

impl Engine {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let universe = SpecUniverse::generate(cfg.world);
        let proposer = ProposerModel::init_for_universe(
            &universe,
            cfg.proposer_outputs,
            cfg.q_valid_target,
            cfg.format_break,
            cfg.crossover_penalty,
        );
        let solver = SolverModel::calibrated(cfg.solver_init_ability, cfg.solver_width);
        let mut ucb = cfg.ucb;
        if cfg.root_only {
            ucb.root_ratio = 1.0;
        }
        let mut pool = SeedPool::new(cfg.gate, ucb);
        let mut spec_nodes = BTreeMap::new();
        for root in universe.roots() {
            let sig = minhash_signature(&tokenize(&root.payload));
            let pass = solver.pass_probability(root)?;
            if let AddOutcome::Admitted(id) = pool.add_root(root.id.0 as u64, sig, pass)? {
                spec_nodes.insert(root.id, id);
            }
        }
        if pool.is_empty() {
            return Err(EngineError::Pool(PoolError::EmptyPool));
        }
        let n_probe = ((cfg.probe_fraction * cfg.world.n_roots as f64).ceil() as usize)
            .clamp(1, cfg.world.n_roots);
        let probe: Vec<SpecId> = universe.roots().take(n_probe).map(|s| s.id).collect();
        let mut opt_q = OptimizerState::new(cfg.eta_q, cfg.weight_decay_q);
        let mut opt_s = OptimizerState::new(cfg.eta_s, cfg.weight_decay_s);
        opt_q.bias_correction = cfg.bias_correction;
        opt_s.bias_correction = cfg.bias_correction;
        Ok(Self {
            streams: RngStreams::new(cfg.seed),
            cfg,
            universe,
            proposer,
            solver,
            pool,
            opt_q,
            opt_s,
            spec_nodes,
            probe,
            step: 0,
            events: Vec::new(),
        })
    }

    fn node_spec(&self, id: NodeId) -> Result<SpecId, EngineError> {
        Ok(SpecId(self.pool.node(id)?.payload as u32))
    }

    /// Fresh-rollout pass rate on the frozen probe set.
    fn probe_pass_rate(&mut self) -> Result<f64, EngineError> {
        let mut rng = self.streams.stream("probe", self.step as u64);
        let mut passes = 0usize;
        let mut total = 0usize;
        for &sid in &self.probe {
            let res = solve_attempts(
                &self.solver,
                &self.universe,
                sid,
                self.cfg.rollouts_per_spec,
                &mut rng,
            )?;
            passes += res.outcomes.iter().filter(|&&c| c).count();
            total += res.outcomes.len();
        }
        Ok(passes as f64 / total as f64)
    }

    /// One full training iteration: all six stages, in order.
    pub fn run_iteration(&mut self) -> Result<StepMetrics, EngineError> {
        self.events.clear();
        let step = self.step as u64;
        let mut rng_select = self.streams.stream("select", step);
        let mut rng_propose = self.streams.stream("propose", step);
        let mut rng_solve = self.streams.stream("solve", step);

        // Stage 1: UCB batch selection.
        let selections: Vec<Selection> =
            self.pool
                .ucb_select_batch(self.cfg.batch_seeds, self.solver.ability, &mut rng_select)?;
        let mut depth_sum = 0usize;
        for sel in &selections {
            self.events.push(EngineEvent::Selected(sel.node));
            depth_sum += self.pool.node(sel.node)?.depth;
        }
        let mean_selection_depth = depth_sum as f64 / selections.len().max(1) as f64;

        // Stage 2: proposals plus filter.
        struct SeedBatch {
            selection: Selection,
            seed_spec: SpecId,
            proposals: Vec<crate::world::Proposal>,
        }
        let mut batches = Vec::with_capacity(selections.len());
        let mut proposed = 0usize;
        let mut valid = 0usize;
        for sel in selections {
            let seed_spec = self.node_spec(sel.node)?;
            let second_spec = sel
                .secondary_parent
                .map(|p| self.node_spec(p))
                .transpose()?;
            let proposals = self.proposer.propose_children(
                &self.universe,
                seed_spec,
                second_spec,
                self.cfg.specs_per_seed,
                &mut rng_propose,
            )?;
            for p in &proposals {
                proposed += 1;
                if p.valid {
                    valid += 1;
                }
                if let Some(spec) = p.child {
                    self.events.push(EngineEvent::Proposed {
                        spec,
                        filter_passed: p.valid,
                    });
                }
            }
            batches.push(SeedBatch {
                selection: sel,
                seed_spec,
                proposals,
            });
        }
        let q_valid_rate = if proposed == 0 {
            0.0
        } else {
            valid as f64 / proposed as f64
        };

        // Stage 3: solver rollouts on filter-passing specs only. One result
        // per distinct spec; repeated proposals of a spec share its group.
        let mut solved: BTreeMap<SpecId, SolveResult> = BTreeMap::new();
        for batch in &batches {
            for p in &batch.proposals {
                if let (true, Some(spec)) = (p.valid, p.child) {
                    if !solved.contains_key(&spec) {
                        let res = solve_attempts(
                            &self.solver,
                            &self.universe,
                            spec,
                            self.cfg.rollouts_per_spec,
                            &mut rng_solve,
                        )?;
                        self.events.push(EngineEvent::Verified {
                            spec,
                            passes: res.outcomes.iter().filter(|&&c| c).count(),
                        });
                        solved.insert(spec, res);
                    }
                }
            }
        }

        // Stage 4: mean-normalized advantages, one group per seed for the
        // proposer and one per solved spec for the solver. A filter-rejected
        // proposal earns exactly zero (hard gate) and never forms a group.
        let eps = self.cfg.adv_epsilon;
        let mut u_q = GradientVector::zero();
        let mut u_s = GradientVector::zero();
        let mut t_q_active = 0usize;
        let mut t_s_active = 0usize;
        let mut reward_sum_q = 0.0;
        let mut reward_count_q = 0usize;
        let mut proposal_rewards: Vec<(usize, Vec<f64>)> = Vec::new();
        let fmt_sigma = self.proposer.format_pass_prob();
        let mut fmt_grad = 0.0;
        for (bi, batch) in batches.iter().enumerate() {
            let mut outputs = Vec::with_capacity(batch.proposals.len());
            let mut rewards = Vec::with_capacity(batch.proposals.len());
            for p in &batch.proposals {
                let r = match (p.valid, p.child) {
                    (true, Some(spec)) => {
                        entropy_reward(self.cfg.reward_mode, &solved[&spec].group())
                    }
                    _ => 0.0,
                };
                outputs.push(p.output);
                rewards.push(r);
            }
            reward_sum_q += rewards.iter().sum::<f64>();
            reward_count_q += rewards.len();
            let adv = mlrl_group_advantages(&rewards, eps)?;
            // Score-function gradient of the shared format logit: pass
            // events carry (1 - sigma), break events carry -sigma.
            for (p, &a) in batch.proposals.iter().zip(adv.values.iter()) {
                fmt_grad += if p.format_broke {
                    -a * fmt_sigma
                } else {
                    a * (1.0 - fmt_sigma)
                };
            }
            t_q_active += adv.values.iter().filter(|&&a| a != 0.0).count();
            u_q.add_scaled(
                &grpo_group_gradient(&self.proposer.policy, batch.seed_spec.0, &outputs, &adv)?,
                1.0,
            );
            proposal_rewards.push((bi, rewards));
        }
        let mut solver_passes = 0usize;
        let mut solver_total = 0usize;
        for (&spec, res) in &solved {
            let ctx = SolverModel::context_for(self.universe.spec(spec)?);
            let rewards: Vec<f64> =
                res.outcomes.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
            solver_passes += res.outcomes.iter().filter(|&&c| c).count();
            solver_total += res.outcomes.len();
            let adv = mlrl_group_advantages(&rewards, eps)?;
            t_s_active += adv.values.iter().filter(|&&a| a != 0.0).count();
            u_s.add_scaled(
                &grpo_group_gradient(&self.solver.policy, ctx, &res.solutions, &adv)?,
                1.0,
            );
        }

        // Stage 5: joint update with branch balancing. Frozen branches feed
        // a zero gradient; the optimizer steps either way.
        let scales = branch_token_scales(t_q_active, t_s_active, self.cfg.q_scale);
        let w_q = match self.cfg.balance_mode {
            BalanceMode::Static => scales.w_q,
            BalanceMode::L2 => adaptive_l2_weight(
                u_q.l2_norm(),
                u_s.l2_norm(),
                scales.scale_s,
                self.cfg.l2_target_ratio,
                self.cfg.l2_floor,
            ),
        };
        let w_s = scales.w_s;
        // Ascent on the objective: the minimizer sees the negated gradient.
        let mut g_q = GradientVector::zero();
        if !self.cfg.freeze_q {
            g_q.add_scaled(&u_q, -w_q);
        }
        let mut g_s = GradientVector::zero();
        if !self.cfg.freeze_s {
            g_s.add_scaled(&u_s, -w_s);
        }
        let grad_norm_q = g_q.l2_norm();
        let grad_norm_s = g_s.l2_norm();
        adamw_step(&mut self.proposer.policy, &mut self.opt_q, &g_q)?;
        adamw_step(&mut self.solver.policy, &mut self.opt_s, &g_s)?;
        // Shared format skill: repaired by the proposer's own reward signal,
        // damaged a fixed amount by every step in which the solver branch
        // actually moves the joint policy. A frozen or signal-starved
        // solver inflicts no damage.
        if !self.cfg.freeze_q && proposed > 0 {
            // Mean-loss convention, matching the per-token scaling of the
            // policy gradients.
            self.proposer.validity_bias +=
                self.cfg.format_repair * w_q * fmt_grad / proposed as f64;
        }
        if !self.cfg.freeze_s && t_s_active > 0 {
            self.proposer.validity_bias -= self.cfg.interference * w_s;
        }
        self.proposer.validity_bias = self.proposer.validity_bias.clamp(-8.0, 8.0);

        // Stage 6: admissions, two-gate backup, maintenance, decay.
        let beta = self.cfg.pool_admit_bonus;
        let mut new_admissions = 0usize;
        for (bi, rewards) in &proposal_rewards {
            let batch = &batches[*bi];
            let mut backup_best = 0.0f64;
            for (p, &u) in batch.proposals.iter().zip(rewards) {
                let mut admitted_now = false;
                if let (true, Some(spec)) = (p.valid, p.child) {
                    let res = &solved[&spec];
                    let pass_rate = res.group().pass_rate();
                    let has_solution = res.outcomes.iter().any(|&c| c);
                    if let Some(&node) = self.spec_nodes.get(&spec) {
                        // Known spec: refresh its operational pass estimate.
                        self.pool.set_pass_rate(node, pass_rate)?;
                    } else if has_solution {
                        let mut parents: BTreeSet<NodeId> =
                            [batch.selection.node].into_iter().collect();
                        if let Some(second) = batch.selection.secondary_parent {
                            parents.insert(second);
                        }
                        let candidate = CandidateSeed {
                            payload: spec.0 as u64,
                            signature: minhash_signature(&tokenize(
                                &self.universe.spec(spec)?.payload,
                            )),
                            has_verified_solution: true,
                            pass_rate,
                        };
                        if let AddOutcome::Admitted(node) =
                            self.pool.add_seed(candidate, &parents)?
                        {
                            self.spec_nodes.insert(spec, node);
                            self.events.push(EngineEvent::Admitted { spec, node });
                            new_admissions += 1;
                            admitted_now = true;
                        }
                    }
                }
                backup_best = backup_best.max(two_gate_reward(
                    TwoGateInputs {
                        hard_gate: p.valid,
                        admitted: admitted_now,
                        beta,
                    },
                    u,
                ));
            }
            // A seed is credited with the best spec its group yielded: the
            // bandit statistic tracks what the arm can produce, not the
            // group's validity-diluted average.
            let backup = backup_best;
            self.pool.backup_path(
                &batch.selection.path,
                backup,
                self.cfg.backup_gamma,
                batch.selection.secondary_parent,
            )?;
            self.events.push(EngineEvent::Backup(batch.selection.node));
        }
        let absorbed_pairs = self.pool.absorb_similar()?;
        for &(survivor, merged) in &absorbed_pairs {
            self.events.push(EngineEvent::Absorbed { survivor, merged });
            // The survivor now stands in for the merged spec: future
            // proposals of it refresh the survivor instead of re-admitting.
            for node in self.spec_nodes.values_mut() {
                if *node == merged {
                    *node = survivor;
                }
            }
        }
        let pruned_ids = self.pool.prune_unsolvable();
        for &id in &pruned_ids {
            self.events.push(EngineEvent::Pruned(id));
            self.spec_nodes.retain(|_, &mut n| n != id);
        }
        if solver_total > 0 {
            self.solver.update_ability(
                solver_passes as f64 / solver_total as f64,
                self.cfg.ucb.pass_rate_decay,
            );
        }
        self.pool.decay_all();

        let solver_pass_proxy = self.probe_pass_rate()?;
        let metrics = StepMetrics {
            step: self.step,
            q_valid_rate,
            pool_size: self.pool.len(),
            new_admissions,
            absorbed: absorbed_pairs.len(),
            pruned: pruned_ids.len(),
            solver_pass_proxy,
            grad_norm: (grad_norm_q * grad_norm_q + grad_norm_s * grad_norm_s).sqrt(),
            grad_norm_q,
            grad_norm_s,
            proposer_entropy: {
                let mut sum = 0.0;
                for batch in &batches {
                    sum += self.proposer.policy.entropy(batch.seed_spec.0)?;
                }
                sum / batches.len().max(1) as f64
            },
            mean_selection_depth,
            w_q,
            w_s,
            reward_mean_q: if reward_count_q == 0 {
                0.0
            } else {
                reward_sum_q / reward_count_q as f64
            },
            reward_mean_s: if solver_total == 0 {
                0.0
            } else {
                solver_passes as f64 / solver_total as f64
            },
            solver_ability: self.solver.ability,
        };
        self.step += 1;
        Ok(metrics)
    }
}

/// Runs the configured number of steps from a fresh engine. Deterministic:
/// identical configs produce identical results byte for byte.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult, EngineError> {
    let mut engine = Engine::new(cfg.clone())?;
    let mut metrics = Vec::with_capacity(cfg.steps);
    let mut snapshots = Vec::new();
    for step in 0..cfg.steps {
        metrics.push(engine.run_iteration()?);
        if cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0 {
            snapshots.push(SnapshotRecord {
                step,
                pool: engine.pool.to_snapshot_string(),
            });
        }
    }
    Ok(RunResult {
        metrics,
        snapshots,
        final_pool: engine.pool.to_snapshot_string(),
    })
}

/// Window width of the collapse predicate.
pub const COLLAPSE_WINDOW: usize = 20;
/// Validity-rate threshold of the collapse predicate.
pub const COLLAPSE_THRESHOLD: f64 = 0.30;

/// Earliest step starting a 20-step window whose every q_valid_rate is
/// below 0.30, if any.
pub fn detect_collapse(series: &[StepMetrics]) -> Option<usize> {
    if series.len() < COLLAPSE_WINDOW {
        return None;
    }
    for start in 0..=series.len() - COLLAPSE_WINDOW {
        if series[start..start + COLLAPSE_WINDOW]
            .iter()
            .all(|m| m.q_valid_rate < COLLAPSE_THRESHOLD)
        {
            return Some(series[start].step);
        }
    }
    None
}
