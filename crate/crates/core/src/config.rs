//! Flat key=value experiment configuration.
//!
//! One line per setting, `#` comments, dotted namespaces, and key names that
//! match the hyperparameter table the defaults come from (ucb_c,
//! ucb_stat_decay, q_crossover_ratio, max_pool_sim, ...). Parsing starts
//! from the defaults and applies overrides; unknown keys are hard errors
//! that name the key. `to_text` emits every key, and the emitted text parses
//! back to an identical configuration.

use crate::rewards::RewardMode;
use crate::seed_pool::{ExploitMode, UcbConfig};
use crate::similarity::GateConfig;
use crate::world::UniverseConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for key `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("malformed line {line}: `{text}` (expected key=value)")]
    MalformedLine { line: usize, text: String },
    #[error("config invalid: {0}")]
    Invalid(String),
}

/// How proposer and solver updates are weighted against each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalanceMode {
    Static,
    L2,
}

impl BalanceMode {
    pub fn key(&self) -> &'static str {
        match self {
            BalanceMode::Static => "static",
            BalanceMode::L2 => "l2",
        }
    }

    pub fn from_key(k: &str) -> Option<Self> {
        match k {
            "static" => Some(BalanceMode::Static),
            "l2" => Some(BalanceMode::L2),
            _ => None,
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Seeds selected per step.
    pub batch_seeds: usize,
    /// Candidate specs proposed per seed.
    pub specs_per_seed: usize,
    /// Solver rollouts per filter-passing spec.
    pub rollouts_per_spec: usize,
    pub steps: usize,
    pub seed: u64,
    pub snapshot_every: usize,
    pub freeze_q: bool,
    pub freeze_s: bool,
    /// Forces root_ratio to 1 (no descent).
    pub root_only: bool,
    /// Discount applied along the backup path.
    pub backup_gamma: f64,
    /// Fraction of roots held out as the fixed solver probe set.
    pub probe_fraction: f64,

    pub reward_mode: RewardMode,
    /// Pool-admission bonus weight in the two-gate reward.
    pub pool_admit_bonus: f64,
    pub q_scale: f64,
    pub balance_mode: BalanceMode,
    pub adv_epsilon: f64,
    pub l2_target_ratio: f64,
    pub l2_floor: f64,

    pub ucb: UcbConfig,
    pub gate: GateConfig,
    pub world: UniverseConfig,

    pub proposer_outputs: usize,
    pub q_valid_target: f64,
    pub format_break: f64,
    pub crossover_penalty: f64,
    /// Per-step damage to the proposer's shared format-skill logit from
    /// solver updates, scaled by w_s * grad_norm_s.
    pub interference: f64,
    /// Learning rate of the shared format-skill logit on the proposer's
    /// own score-function gradient; repair competes with interference.
    pub format_repair: f64,
    pub solver_width: f64,
    pub solver_init_ability: f64,

    pub eta_q: f64,
    pub eta_s: f64,
    pub weight_decay_q: f64,
    pub weight_decay_s: f64,
    pub bias_correction: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            batch_seeds: 8,
            specs_per_seed: 8,
            rollouts_per_spec: 8,
            steps: 600,
            seed: 0,
            snapshot_every: 100,
            freeze_q: false,
            freeze_s: false,
            root_only: false,
            backup_gamma: 0.9,
            probe_fraction: 0.1,
            reward_mode: RewardMode::Band1OfK,
            pool_admit_bonus: 0.1,
            q_scale: 0.375,
            balance_mode: BalanceMode::Static,
            adv_epsilon: 1e-4,
            l2_target_ratio: 0.5,
            l2_floor: 0.125,
            ucb: UcbConfig::default(),
            gate: GateConfig::default(),
            world: UniverseConfig::default(),
            proposer_outputs: 16,
            q_valid_target: 0.7,
            format_break: 0.05,
            crossover_penalty: 0.25,
            interference: 0.0,
            format_repair: 0.25,
            solver_width: 0.1,
            solver_init_ability: 0.3,
            eta_q: 0.05,
            eta_s: 0.05,
            weight_decay_q: 0.0,
            weight_decay_s: 0.0,
            bias_correction: false,
        }
    }
}

impl ExperimentConfig {
    /// The reference configuration of the full-dynamics studies: a world
    /// deep and wide enough that the curriculum frontier keeps moving for
    /// hundreds of steps, a solver learning rate small enough that it does
    /// not saturate the universe immediately, weight decay on both
    /// branches, and nonzero format interference so the proposer's format
    /// skill is a live equilibrium between repair and damage.
    ///
    /// `Default::default()` stays small and fast for unit tests; this is
    /// the configuration the longer experiments and the command-line
    /// defaults are reported against.
    pub fn baseline() -> Self {
        let mut cfg = Self::default();
        cfg.world.n_roots = 16;
        cfg.world.children_per_spec = 5;
        cfg.world.root_difficulty_min = 0.30;
        cfg.world.root_difficulty_max = 0.55;
        cfg.world.difficulty_step_mean = 0.10;
        cfg.solver_init_ability = 0.25;
        cfg.probe_fraction = 0.25;
        cfg.eta_s = 0.004;
        cfg.weight_decay_s = 0.5;
        cfg.weight_decay_q = 0.05;
        cfg.format_break = 0.3;
        cfg.format_repair = 0.5;
        cfg.interference = 0.024;
        cfg.ucb.zpd_weight = 5.0;
        cfg.ucb.zpd_sigma = 0.08;
        cfg
    }
}

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

macro_rules! parse_as {
    ($key:expr, $value:expr, $ty:ty) => {
        $value
            .parse::<$ty>()
            .map_err(|e| bad($key, $value, e))?
    };
}

impl ExperimentConfig {
    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "engine.batch_seeds" => self.batch_seeds = parse_as!(key, value, usize),
            "engine.specs_per_seed" => self.specs_per_seed = parse_as!(key, value, usize),
            "engine.rollouts_per_spec" => {
                self.rollouts_per_spec = parse_as!(key, value, usize)
            }
            "engine.steps" => self.steps = parse_as!(key, value, usize),
            "engine.seed" => self.seed = parse_as!(key, value, u64),
            "engine.snapshot_every" => self.snapshot_every = parse_as!(key, value, usize),
            "engine.freeze_q" => self.freeze_q = parse_as!(key, value, bool),
            "engine.freeze_s" => self.freeze_s = parse_as!(key, value, bool),
            "engine.root_only" => self.root_only = parse_as!(key, value, bool),
            "engine.backup_gamma" => self.backup_gamma = parse_as!(key, value, f64),
            "engine.probe_fraction" => self.probe_fraction = parse_as!(key, value, f64),

            "q_reward_mode" => {
                self.reward_mode = RewardMode::from_key(value)
                    .ok_or_else(|| bad(key, value, "expected band_1of8 | 4p1p | exp_decay"))?
            }
            "pool_admit_bonus" => self.pool_admit_bonus = parse_as!(key, value, f64),
            "q_scale" => self.q_scale = parse_as!(key, value, f64),
            "q_balance_mode" => {
                self.balance_mode = BalanceMode::from_key(value)
                    .ok_or_else(|| bad(key, value, "expected static | l2"))?
            }
            "adv_epsilon" => self.adv_epsilon = parse_as!(key, value, f64),
            "l2_target_ratio" => self.l2_target_ratio = parse_as!(key, value, f64),
            "l2_floor" => self.l2_floor = parse_as!(key, value, f64),

            "ucb_c" => self.ucb.c = parse_as!(key, value, f64),
            "ucb_stat_decay" => self.ucb.gamma_ucb = parse_as!(key, value, f64),
            "ucb_root_ratio" => self.ucb.root_ratio = parse_as!(key, value, f64),
            "ucb_exploit_mode" => {
                self.ucb.exploit_mode = ExploitMode::from_key(value)
                    .ok_or_else(|| bad(key, value, "expected ratchet | empirical"))?
            }
            "zpd_prior_weight" => self.ucb.zpd_weight = parse_as!(key, value, f64),
            "zpd_sigma" => self.ucb.zpd_sigma = parse_as!(key, value, f64),
            "kinship_weight" => self.ucb.kinship_weight = parse_as!(key, value, f64),
            "descend_margin" => self.ucb.descend_margin = parse_as!(key, value, f64),
            "difficulty_window_delta" => {
                self.ucb.difficulty_window_delta = parse_as!(key, value, f64)
            }
            "batch_repulsion" => self.ucb.batch_repulsion = parse_as!(key, value, f64),
            "mcts_absorb_sim_threshold" => {
                self.ucb.absorb_threshold = parse_as!(key, value, f64)
            }
            "mcts_depth_cap" => self.ucb.depth_cap = parse_as!(key, value, usize),
            "mcts_prune_min_visits" => {
                self.ucb.prune_min_visits = parse_as!(key, value, f64)
            }
            "q_crossover_ratio" => self.ucb.crossover_ratio = parse_as!(key, value, f64),
            "pass_rate_decay" => self.ucb.pass_rate_decay = parse_as!(key, value, f64),
            "cold_start_constant" => {
                self.ucb.cold_start_constant = parse_as!(key, value, f64)
            }

            "max_pool_sim" => self.gate.max_pool_sim = parse_as!(key, value, f64),
            "max_sibling_sim" => self.gate.max_sibling_sim = parse_as!(key, value, f64),
            "duplicate_struct_sim_threshold" => {
                self.gate.duplicate_struct_sim = parse_as!(key, value, f64)
            }

            "world.n_roots" => self.world.n_roots = parse_as!(key, value, usize),
            "world.children_per_spec" => {
                self.world.children_per_spec = parse_as!(key, value, usize)
            }
            "world.depth" => self.world.depth = parse_as!(key, value, usize),
            "world.invalid_fraction" => {
                self.world.invalid_fraction = parse_as!(key, value, f64)
            }
            "world.payload_tokens" => self.world.payload_tokens = parse_as!(key, value, usize),
            "world.mutation_min" => self.world.mutation_min = parse_as!(key, value, usize),
            "world.mutation_max" => self.world.mutation_max = parse_as!(key, value, usize),
            "world.root_difficulty_min" => {
                self.world.root_difficulty_min = parse_as!(key, value, f64)
            }
            "world.root_difficulty_max" => {
                self.world.root_difficulty_max = parse_as!(key, value, f64)
            }
            "world.difficulty_step_mean" => {
                self.world.difficulty_step_mean = parse_as!(key, value, f64)
            }
            "world.difficulty_step_sd" => {
                self.world.difficulty_step_sd = parse_as!(key, value, f64)
            }
            "world.seed" => self.world.seed = parse_as!(key, value, u64),

            "proposer.outputs" => self.proposer_outputs = parse_as!(key, value, usize),
            "proposer.q_valid_target" => self.q_valid_target = parse_as!(key, value, f64),
            "proposer.format_break" => self.format_break = parse_as!(key, value, f64),
            "proposer.interference" => self.interference = parse_as!(key, value, f64),
            "proposer.format_repair" => self.format_repair = parse_as!(key, value, f64),
            "proposer.crossover_penalty" => {
                self.crossover_penalty = parse_as!(key, value, f64)
            }
            "solver.width" => self.solver_width = parse_as!(key, value, f64),
            "solver.init_ability" => self.solver_init_ability = parse_as!(key, value, f64),

            "opt.eta_q" => self.eta_q = parse_as!(key, value, f64),
            "opt.eta_s" => self.eta_s = parse_as!(key, value, f64),
            "opt.weight_decay_q" => self.weight_decay_q = parse_as!(key, value, f64),
            "opt.weight_decay_s" => self.weight_decay_s = parse_as!(key, value, f64),
            "opt.bias_correction" => self.bias_correction = parse_as!(key, value, bool),

            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses a full config text over the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the overrides in `text` to this config.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::MalformedLine {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.batch_seeds < 1 || self.specs_per_seed < 1 || self.rollouts_per_spec < 1 {
            return Err(ConfigError::Invalid(
                "batch_seeds, specs_per_seed, rollouts_per_spec must be >= 1".into(),
            ));
        }
        self.gate.validate().map_err(ConfigError::Invalid)?;
        for (name, v, lo, hi) in [
            ("ucb_stat_decay", self.ucb.gamma_ucb, 0.0, 1.0),
            ("pass_rate_decay", self.ucb.pass_rate_decay, 0.0, 1.0),
            ("ucb_root_ratio", self.ucb.root_ratio, 0.0, 1.0),
            ("q_crossover_ratio", self.ucb.crossover_ratio, 0.0, 1.0),
            ("engine.backup_gamma", self.backup_gamma, 0.0, 1.0),
            ("pool_admit_bonus", self.pool_admit_bonus, 0.0, 1.0),
        ] {
            if !(lo..=hi).contains(&v) {
                return Err(ConfigError::Invalid(format!(
                    "{name} = {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Emits every key in a fixed order. Parsing the output reproduces this
    /// configuration exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("engine.batch_seeds", self.batch_seeds.to_string());
        kv("engine.specs_per_seed", self.specs_per_seed.to_string());
        kv("engine.rollouts_per_spec", self.rollouts_per_spec.to_string());
        kv("engine.steps", self.steps.to_string());
        kv("engine.seed", self.seed.to_string());
        kv("engine.snapshot_every", self.snapshot_every.to_string());
        kv("engine.freeze_q", self.freeze_q.to_string());
        kv("engine.freeze_s", self.freeze_s.to_string());
        kv("engine.root_only", self.root_only.to_string());
        kv("engine.backup_gamma", fmt_f64(self.backup_gamma));
        kv("engine.probe_fraction", fmt_f64(self.probe_fraction));
        kv("q_reward_mode", self.reward_mode.key().to_string());
        kv("pool_admit_bonus", fmt_f64(self.pool_admit_bonus));
        kv("q_scale", fmt_f64(self.q_scale));
        kv("q_balance_mode", self.balance_mode.key().to_string());
        kv("adv_epsilon", fmt_f64(self.adv_epsilon));
        kv("l2_target_ratio", fmt_f64(self.l2_target_ratio));
        kv("l2_floor", fmt_f64(self.l2_floor));
        kv("ucb_c", fmt_f64(self.ucb.c));
        kv("ucb_stat_decay", fmt_f64(self.ucb.gamma_ucb));
        kv("ucb_root_ratio", fmt_f64(self.ucb.root_ratio));
        kv("ucb_exploit_mode", self.ucb.exploit_mode.key().to_string());
        kv("zpd_prior_weight", fmt_f64(self.ucb.zpd_weight));
        kv("zpd_sigma", fmt_f64(self.ucb.zpd_sigma));
        kv("kinship_weight", fmt_f64(self.ucb.kinship_weight));
        kv("descend_margin", fmt_f64(self.ucb.descend_margin));
        kv(
            "difficulty_window_delta",
            fmt_f64(self.ucb.difficulty_window_delta),
        );
        kv("batch_repulsion", fmt_f64(self.ucb.batch_repulsion));
        kv(
            "mcts_absorb_sim_threshold",
            fmt_f64(self.ucb.absorb_threshold),
        );
        kv("mcts_depth_cap", self.ucb.depth_cap.to_string());
        kv("mcts_prune_min_visits", fmt_f64(self.ucb.prune_min_visits));
        kv("q_crossover_ratio", fmt_f64(self.ucb.crossover_ratio));
        kv("pass_rate_decay", fmt_f64(self.ucb.pass_rate_decay));
        kv("cold_start_constant", fmt_f64(self.ucb.cold_start_constant));
        kv("max_pool_sim", fmt_f64(self.gate.max_pool_sim));
        kv("max_sibling_sim", fmt_f64(self.gate.max_sibling_sim));
        kv(
            "duplicate_struct_sim_threshold",
            fmt_f64(self.gate.duplicate_struct_sim),
        );
        kv("world.n_roots", self.world.n_roots.to_string());
        kv(
            "world.children_per_spec",
            self.world.children_per_spec.to_string(),
        );
        kv("world.depth", self.world.depth.to_string());
        kv("world.invalid_fraction", fmt_f64(self.world.invalid_fraction));
        kv("world.payload_tokens", self.world.payload_tokens.to_string());
        kv("world.mutation_min", self.world.mutation_min.to_string());
        kv("world.mutation_max", self.world.mutation_max.to_string());
        kv(
            "world.root_difficulty_min",
            fmt_f64(self.world.root_difficulty_min),
        );
        kv(
            "world.root_difficulty_max",
            fmt_f64(self.world.root_difficulty_max),
        );
        kv(
            "world.difficulty_step_mean",
            fmt_f64(self.world.difficulty_step_mean),
        );
        kv(
            "world.difficulty_step_sd",
            fmt_f64(self.world.difficulty_step_sd),
        );
        kv("world.seed", self.world.seed.to_string());
        kv("proposer.outputs", self.proposer_outputs.to_string());
        kv("proposer.q_valid_target", fmt_f64(self.q_valid_target));
        kv("proposer.format_break", fmt_f64(self.format_break));
        kv("proposer.crossover_penalty", fmt_f64(self.crossover_penalty));
        kv("proposer.interference", fmt_f64(self.interference));
        kv("proposer.format_repair", fmt_f64(self.format_repair));
        kv("solver.width", fmt_f64(self.solver_width));
        kv("solver.init_ability", fmt_f64(self.solver_init_ability));
        kv("opt.eta_q", fmt_f64(self.eta_q));
        kv("opt.eta_s", fmt_f64(self.eta_s));
        kv("opt.weight_decay_q", fmt_f64(self.weight_decay_q));
        kv("opt.weight_decay_s", fmt_f64(self.weight_decay_s));
        kv("opt.bias_correction", self.bias_correction.to_string());
        s
    }
}

/// Shortest representation that parses back to the same f64.
fn fmt_f64(v: f64) -> String {
    let mut buf = ryu_like(v);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_like(v: f64) -> String {
    // `{}` on f64 is the shortest round-trippable decimal in Rust.
    format!("{v}")
}
