//! The finite synthetic world the trainer runs against.
//!
//! A generated universe of specifications (a layered DAG with validity
//! labels, difficulties, and token payloads), a deterministic verifier, and
//! tabular proposer/solver models. The verifier's correct-solution sets are
//! nested prefixes of the solution universe whose size shrinks with
//! difficulty, so a solver that learns to favor low solution indices gets
//! better at every spec at once; a solver calibrated to ability `a` passes
//! a difficulty-`d` spec with probability `1/(1+exp((d-a)/w))` exactly,
//! realized as softmax mass on the prefix.

use crate::rewards::{OutcomeGroup, RewardError};
use crate::tabular::{PolicyError, SoftmaxPolicy};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("unknown spec {0:?}")]
    UnknownSpec(SpecId),
    #[error("spec {0:?} is invalid and should have been filtered out")]
    InvalidSpec(SpecId),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// Index into the spec universe.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SpecId(pub u32);

/// One specification: its manifold membership, difficulty, payload text,
/// and position in the generation DAG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spec {
    pub id: SpecId,
    pub valid: bool,
    pub difficulty: f64,
    pub payload: String,
    pub parent: Option<SpecId>,
    pub children: Vec<SpecId>,
    /// Distance from the root layer.
    pub layer: usize,
}

/// Generation parameters for a synthetic universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniverseConfig {
    pub n_roots: usize,
    pub children_per_spec: usize,
    /// Number of child layers below the roots.
    pub depth: usize,
    /// Fraction of generated children labeled off-manifold.
    pub invalid_fraction: f64,
    pub payload_tokens: usize,
    /// Contiguous mutation run length range for child payloads.
    pub mutation_min: usize,
    pub mutation_max: usize,
    /// Root difficulties drawn uniformly from this range.
    pub root_difficulty_min: f64,
    pub root_difficulty_max: f64,
    /// Child difficulty increment: normal(mean, sd) clamped to >= 0.
    pub difficulty_step_mean: f64,
    pub difficulty_step_sd: f64,
    pub seed: u64,
}

impl Default for UniverseConfig {
    fn default() -> Self {
        Self {
            n_roots: 8,
            children_per_spec: 3,
            depth: 6,
            invalid_fraction: 0.25,
            payload_tokens: 32,
            mutation_min: 4,
            mutation_max: 10,
            root_difficulty_min: 0.10,
            root_difficulty_max: 0.35,
            difficulty_step_mean: 0.05,
            difficulty_step_sd: 0.03,
            seed: 0,
        }
    }
}

/// The finite, immutable spec universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecUniverse {
    specs: Vec<Spec>,
    pub config: UniverseConfig,
}

impl SpecUniverse {
    /// Generates a layered DAG of specs. Child payloads are contiguous-run
    /// mutations of their parent's token sequence, so sibling similarity
    /// varies enough for the admission gate to fire occasionally.
    pub fn generate(config: UniverseConfig) -> Self {
        let mut rng = crate::rng::RngStreams::new(config.seed).stream("universe", 0);
        let step = Normal::new(config.difficulty_step_mean, config.difficulty_step_sd)
            .expect("valid normal parameters");
        let mut specs: Vec<Spec> = Vec::new();
        let mut frontier: Vec<u32> = Vec::new();
        for _ in 0..config.n_roots {
            let id = SpecId(specs.len() as u32);
            let tokens: Vec<String> = (0..config.payload_tokens)
                .map(|_| format!("w{:08x}", rng.gen::<u32>()))
                .collect();
            specs.push(Spec {
                id,
                valid: true,
                difficulty: rng
                    .gen_range(config.root_difficulty_min..config.root_difficulty_max),
                payload: tokens.join(" "),
                parent: None,
                children: Vec::new(),
                layer: 0,
            });
            frontier.push(id.0);
        }
        for layer in 1..=config.depth {
            let mut next = Vec::new();
            for &pid in &frontier {
                for _ in 0..config.children_per_spec {
                    let id = SpecId(specs.len() as u32);
                    let parent = &specs[pid as usize];
                    let mut tokens: Vec<String> = parent
                        .payload
                        .split(' ')
                        .map(str::to_string)
                        .collect();
                    let run =
                        rng.gen_range(config.mutation_min..=config.mutation_max);
                    let start = rng.gen_range(0..tokens.len().saturating_sub(run).max(1));
                    for t in tokens.iter_mut().skip(start).take(run) {
                        *t = format!("w{:08x}", rng.gen::<u32>());
                    }
                    let inc = step.sample(&mut rng).max(0.0);
                    let difficulty = (parent.difficulty + inc).min(0.98);
                    let valid = rng.gen::<f64>() >= config.invalid_fraction;
                    let payload = tokens.join(" ");
                    specs[pid as usize].children.push(id);
                    specs.push(Spec {
                        id,
                        valid,
                        difficulty,
                        payload,
                        parent: Some(SpecId(pid)),
                        children: Vec::new(),
                        layer,
                    });
                    next.push(id.0);
                }
            }
            frontier = next;
        }
        Self { specs, config }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn spec(&self, id: SpecId) -> Result<&Spec, WorldError> {
        self.specs
            .get(id.0 as usize)
            .ok_or(WorldError::UnknownSpec(id))
    }

    pub fn specs(&self) -> &[Spec] {
        &self.specs
    }

    pub fn roots(&self) -> impl Iterator<Item = &Spec> {
        self.specs.iter().filter(|s| s.layer == 0)
    }

    /// Portable structured-text form of the whole universe.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("universe serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Deterministic binary verification of (spec, solution) pairs.
pub trait Verifier {
    fn verify(&self, spec: SpecId, solution: usize) -> Result<bool, WorldError>;
}

/// Number of solution indices per spec.
pub const SOLUTION_UNIVERSE: usize = 64;

/// Logistic pass model: probability of passing difficulty `d` at ability
/// `a` with transition width `w`.
pub fn logistic_pass(difficulty: f64, ability: f64, width: f64) -> f64 {
    1.0 / (1.0 + ((difficulty - ability) / width).exp())
}

/// Size of the correct-solution prefix of a difficulty-`d` spec:
/// round(M * (1 - d)), clamped to [1, M-1]. Harder specs accept fewer
/// solutions, and the sets are nested across difficulties.
pub fn correct_set_size(difficulty: f64) -> usize {
    let m = (SOLUTION_UNIVERSE as f64 * (1.0 - difficulty)).round() as usize;
    m.clamp(1, SOLUTION_UNIVERSE - 1)
}

/// The synthetic verifier: a solution passes iff the spec is on-manifold
/// and the solution index falls inside the spec's correct prefix.
pub struct SyntheticVerifier<'a> {
    universe: &'a SpecUniverse,
}

impl<'a> SyntheticVerifier<'a> {
    pub fn new(universe: &'a SpecUniverse) -> Self {
        Self { universe }
    }
}

impl Verifier for SyntheticVerifier<'_> {
    fn verify(&self, spec: SpecId, solution: usize) -> Result<bool, WorldError> {
        let s = self.universe.spec(spec)?;
        Ok(s.valid && solution < correct_set_size(s.difficulty))
    }
}

/// The solver: a softmax policy over solution indices, one context per
/// correct-set size, plus a slow-moving ability estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverModel {
    pub policy: SoftmaxPolicy,
    /// EMA of batch pass rate.
    pub ability: f64,
    /// Logistic transition width of the calibrated pass model.
    pub width: f64,
}

impl SolverModel {
    /// The policy context a spec is solved under. Correct sets are nested
    /// prefixes of one shared solution universe, so every spec is solved
    /// under the same row: concentrating mass on low indices helps all
    /// specs at once, and practice on the hard frontier maintains skill
    /// on everything easier.
    pub fn context_for(_spec: &Spec) -> u32 {
        0
    }

    /// A solver whose mass on every correct prefix equals the logistic
    /// pass model at the given ability, exactly. The prefix masses of the
    /// single row form the increasing sequence c_m = 1/(1+exp((d_m -
    /// ability)/width)) with d_m = 1 - m/M, so each slot holds the
    /// probability increment c_{m+1} - c_m and the whole logistic curve
    /// is realized at once.
    pub fn calibrated(ability: f64, width: f64) -> Self {
        let m_total = SOLUTION_UNIVERSE;
        let prefix_mass = |m: usize| -> f64 {
            if m == 0 {
                0.0
            } else if m == m_total {
                1.0
            } else {
                logistic_pass(1.0 - m as f64 / m_total as f64, ability, width)
            }
        };
        let row: Vec<f64> = (0..m_total)
            // Monotone in m, so every increment is positive.
            .map(|i| (prefix_mass(i + 1) - prefix_mass(i)).max(1e-12).ln())
            .collect();
        let mut rows = BTreeMap::new();
        rows.insert(0u32, row);
        Self {
            policy: SoftmaxPolicy::from_rows(rows),
            ability,
            width,
        }
    }

    /// Exact per-attempt pass probability on a spec: policy mass on the
    /// correct prefix.
    pub fn pass_probability(&self, spec: &Spec) -> Result<f64, WorldError> {
        let m = correct_set_size(spec.difficulty);
        let prefix: BTreeSet<usize> = (0..m).collect();
        Ok(self.policy.manifold_mass(Self::context_for(spec), &prefix)?)
    }

    /// Folds a batch pass rate into the ability EMA.
    pub fn update_ability(&mut self, batch_pass_rate: f64, decay: f64) {
        self.ability = decay * self.ability + (1.0 - decay) * batch_pass_rate;
    }
}

/// Sampled solutions and their verdicts for one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solutions: Vec<usize>,
    pub outcomes: Vec<bool>,
}

impl SolveResult {
    pub fn group(&self) -> OutcomeGroup {
        OutcomeGroup::new(self.outcomes.clone()).expect("k >= 1 enforced upstream")
    }
}

/// Draws `k` solutions from the solver and verifies each. Rejects invalid
/// specs: the filter must have excluded them already.
pub fn solve_attempts<R: Rng>(
    solver: &SolverModel,
    universe: &SpecUniverse,
    spec_id: SpecId,
    k: usize,
    rng: &mut R,
) -> Result<SolveResult, WorldError> {
    let spec = universe.spec(spec_id)?;
    if !spec.valid {
        return Err(WorldError::InvalidSpec(spec_id));
    }
    assert!(k >= 1, "k must be at least 1");
    let verifier = SyntheticVerifier::new(universe);
    let ctx = SolverModel::context_for(spec);
    let solutions = solver.policy.sample_group(ctx, k, rng)?;
    let outcomes = solutions
        .iter()
        .map(|&y| verifier.verify(spec_id, y))
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(SolveResult { solutions, outcomes })
}

/// The proposer: a softmax policy over candidate slots, one context per
/// seed spec. Slots below the seed's child count map to universe children;
/// the rest are malformed emissions that always fail the filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposerModel {
    pub policy: SoftmaxPolicy,
    /// Output slots per context.
    pub n_outputs: usize,
    /// Shared format-skill logit: every emission passes formatting with
    /// probability sigmoid(validity_bias), independent of the slot drawn.
    /// Trainable, so format skill can drift globally.
    pub validity_bias: f64,
    /// Additional break probability under dual-parent conditioning.
    pub crossover_penalty: f64,
}

/// One proposed candidate with its filter verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    /// The universe spec this output maps to; `None` for malformed slots.
    pub child: Option<SpecId>,
    pub output: usize,
    /// Combined filter verdict (structural validity and format roll).
    pub valid: bool,
    /// Whether the format roll failed for this emission.
    pub format_broke: bool,
}

impl ProposerModel {
    /// Initializes one policy row per spec so that the probability of a
    /// filter-passing proposal is `q_valid_target`: valid-child slots get
    /// the logit bonus t with e^t = q(M-V) / ((1-q)V).
    pub fn init_for_universe(
        universe: &SpecUniverse,
        n_outputs: usize,
        q_valid_target: f64,
        format_break: f64,
        crossover_penalty: f64,
    ) -> Self {
        let q = q_valid_target.clamp(1e-6, 1.0 - 1e-6);
        let mut rows = BTreeMap::new();
        for spec in universe.specs() {
            let mut row = vec![0.0; n_outputs];
            let valid_slots: Vec<usize> = spec
                .children
                .iter()
                .take(n_outputs)
                .enumerate()
                .filter(|(_, cid)| universe.spec(**cid).map_or(false, |c| c.valid))
                .map(|(i, _)| i)
                .collect();
            let v = valid_slots.len();
            if v > 0 && v < n_outputs {
                let bonus =
                    (q * (n_outputs - v) as f64 / ((1.0 - q) * v as f64)).ln();
                for i in valid_slots {
                    row[i] = bonus;
                }
            }
            rows.insert(spec.id.0, row);
        }
        let fb = format_break.clamp(1e-6, 1.0 - 1e-6);
        Self {
            policy: SoftmaxPolicy::from_rows(rows),
            n_outputs,
            validity_bias: ((1.0 - fb) / fb).ln(),
            crossover_penalty,
        }
    }

    /// Probability that one emission survives the format filter.
    pub fn format_pass_prob(&self) -> f64 {
        1.0 / (1.0 + (-self.validity_bias).exp())
    }

    /// Exact probability that one draw from a seed yields a filter-passing
    /// proposal (before any crossover penalty).
    pub fn valid_rate(&self, universe: &SpecUniverse, seed: SpecId) -> Result<f64, WorldError> {
        let spec = universe.spec(seed)?;
        let probs = self.policy.probs(seed.0)?;
        let mut mass = 0.0;
        for (i, cid) in spec.children.iter().take(self.n_outputs).enumerate() {
            if universe.spec(*cid)?.valid {
                mass += probs[i];
            }
        }
        Ok(mass * self.format_pass_prob())
    }

    /// Samples `n` candidates from the seed's context. Dual-parent
    /// conditioning applies the crossover penalty, strictly lowering the
    /// probability that a candidate survives the filter.
    pub fn propose_children<R: Rng>(
        &self,
        universe: &SpecUniverse,
        seed: SpecId,
        second_seed: Option<SpecId>,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Proposal>, WorldError> {
        let spec = universe.spec(seed)?;
        if let Some(s) = second_seed {
            universe.spec(s)?;
        }
        let fmt_pass = self.format_pass_prob();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let output = self.policy.sample(seed.0, rng)?;
            let child = spec.children.get(output).copied();
            let structurally_valid =
                child.map_or(false, |cid| universe.spec(cid).map(|c| c.valid).unwrap_or(false));
            // The format roll is drawn for every emission so the format
            // event carries a gradient regardless of the slot outcome.
            let format_broke = rng.gen::<f64>() >= fmt_pass;
            let mut valid = structurally_valid && !format_broke;
            if valid && second_seed.is_some() {
                valid = rng.gen::<f64>() >= self.crossover_penalty;
            }
            out.push(Proposal { child, output, valid, format_broke });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_universe(seed: u64) -> SpecUniverse {
        SpecUniverse::generate(UniverseConfig {
            n_roots: 4,
            children_per_spec: 3,
            depth: 3,
            seed,
            ..UniverseConfig::default()
        })
    }

    #[test]
    fn generation_is_deterministic_and_layered() {
        let a = small_universe(7);
        let b = small_universe(7);
        assert_eq!(a, b);
        assert_eq!(a.roots().count(), 4);
        // 4 roots + 4*3 + 4*9 + 4*27 specs.
        assert_eq!(a.len(), 4 + 12 + 36 + 108);
        for s in a.specs() {
            assert!(s.layer == 0 || s.parent.is_some());
            assert!(s.difficulty >= 0.0 && s.difficulty <= 0.98);
            if let Some(p) = s.parent {
                assert!(s.difficulty >= a.spec(p).unwrap().difficulty - 1e-12);
            }
        }
    }

    #[test]
    fn universe_json_round_trips() {
        let u = small_universe(3);
        let restored = SpecUniverse::from_json(&u.to_json()).unwrap();
        assert_eq!(restored, u);
    }

    #[test]
    fn verifier_is_pure_and_deterministic() {
        let u = small_universe(11);
        let v = SyntheticVerifier::new(&u);
        let before = u.clone();
        for s in u.specs().iter().take(20) {
            let first = v.verify(s.id, 5).unwrap();
            for _ in 0..3 {
                assert_eq!(v.verify(s.id, 5).unwrap(), first);
            }
            if !s.valid {
                for sol in [0usize, 10, 63] {
                    assert!(!v.verify(s.id, sol).unwrap());
                }
            } else {
                assert!(v.verify(s.id, 0).unwrap(), "prefix start always passes");
                assert!(!v.verify(s.id, SOLUTION_UNIVERSE - 1).unwrap() || correct_set_size(s.difficulty) == SOLUTION_UNIVERSE - 1);
            }
        }
        assert_eq!(u, before, "verification must not mutate the universe");
        assert!(v.verify(SpecId(9999), 0).is_err());
    }

    #[test]
    fn calibrated_solver_hits_logistic_midpoint() {
        // A spec whose difficulty equals the solver's ability passes with
        // probability 0.5, exactly (up to the d-bucket rounding).
        let m = 32usize; // d_m = 0.5
        let solver = SolverModel::calibrated(0.5, 0.1);
        let prefix: BTreeSet<usize> = (0..m).collect();
        let mass = solver.policy.manifold_mass(0, &prefix).unwrap();
        assert_abs_diff_eq!(mass, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn calibrated_solver_saturates_far_from_ability() {
        let solver = SolverModel::calibrated(0.1, 0.1);
        // d = 1 - 8/64 = 0.875, far above ability 0.1.
        let prefix: BTreeSet<usize> = (0..8).collect();
        let mass = solver.policy.manifold_mass(0, &prefix).unwrap();
        assert!(mass < 1e-3, "mass {mass}");
        // d = 1 - 60/64 = 0.0625, below ability 0.1: logistic(0.375) = 0.593.
        let easy: BTreeSet<usize> = (0..60).collect();
        let mass = solver.policy.manifold_mass(0, &easy).unwrap();
        assert_abs_diff_eq!(mass, logistic_pass(0.0625, 0.1, 0.1), epsilon = 1e-9);
        assert!(mass > 0.55, "mass {mass}");
    }

    #[test]
    fn pass_model_is_monotone_in_ability() {
        let mut prev: Option<Vec<f64>> = None;
        for a10 in 0..=10 {
            let solver = SolverModel::calibrated(a10 as f64 / 10.0, 0.1);
            let masses: Vec<f64> = (1..SOLUTION_UNIVERSE)
                .map(|m| {
                    let prefix: BTreeSet<usize> = (0..m).collect();
                    solver.policy.manifold_mass(0, &prefix).unwrap()
                })
                .collect();
            if let Some(p) = prev {
                for (hi, lo) in masses.iter().zip(&p) {
                    assert!(hi >= lo, "higher ability lowered a pass probability");
                }
            }
            prev = Some(masses);
        }
    }

    #[test]
    fn band_probability_at_half_matches_binomial() {
        // k = 8 attempts at p = 0.5: P(exactly one pass) = 8 * 0.5^8.
        let mut u = small_universe(13);
        // Force one valid spec to the d = 0.5 bucket.
        let id = u.specs.iter().position(|s| s.valid).unwrap();
        u.specs[id].valid = true;
        u.specs[id].difficulty = 0.5;
        let sid = u.specs[id].id;
        let solver = SolverModel::calibrated(0.5, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 100_000usize;
        let mut band = 0usize;
        for _ in 0..trials {
            let res = solve_attempts(&solver, &u, sid, 8, &mut rng).unwrap();
            if res.group().successes() == 1 {
                band += 1;
            }
        }
        let frac = band as f64 / trials as f64;
        assert!((frac - 0.03125).abs() < 0.003, "band fraction {frac}");
    }

    #[test]
    fn invalid_specs_never_reach_the_solver() {
        let u = small_universe(17);
        let invalid = u.specs().iter().find(|s| !s.valid).unwrap().id;
        let solver = SolverModel::calibrated(0.5, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            solve_attempts(&solver, &u, invalid, 4, &mut rng),
            Err(WorldError::InvalidSpec(invalid))
        );
    }

    #[test]
    fn proposer_hits_the_validity_target() {
        let u = small_universe(19);
        let proposer = ProposerModel::init_for_universe(&u, 16, 0.7, 0.0, 0.2);
        // Pick a seed with at least one valid child.
        let seed = u
            .specs()
            .iter()
            .find(|s| {
                s.children
                    .iter()
                    .any(|c| u.spec(*c).unwrap().valid)
            })
            .unwrap()
            .id;
        let exact = proposer.valid_rate(&u, seed).unwrap();
        assert_abs_diff_eq!(exact, 0.7, epsilon = 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let props = proposer.propose_children(&u, seed, None, 10_000, &mut rng).unwrap();
        let frac = props.iter().filter(|p| p.valid).count() as f64 / props.len() as f64;
        assert!((frac - 0.7).abs() < 0.03, "valid fraction {frac}");
    }

    #[test]
    fn crossover_strictly_lowers_validity() {
        let u = small_universe(23);
        let proposer = ProposerModel::init_for_universe(&u, 16, 0.7, 0.0, 0.3);
        let seed = u
            .specs()
            .iter()
            .find(|s| s.children.iter().any(|c| u.spec(*c).unwrap().valid))
            .unwrap()
            .id;
        let other = u.roots().next().unwrap().id;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let single = proposer
            .propose_children(&u, seed, None, 20_000, &mut rng)
            .unwrap();
        let dual = proposer
            .propose_children(&u, seed, Some(other), 20_000, &mut rng)
            .unwrap();
        let f1 = single.iter().filter(|p| p.valid).count() as f64 / single.len() as f64;
        let f2 = dual.iter().filter(|p| p.valid).count() as f64 / dual.len() as f64;
        assert!(f2 < f1, "dual-parent validity {f2} not below single {f1}");
        assert_abs_diff_eq!(f2, f1 * 0.7, epsilon = 0.02);
    }

    #[test]
    fn zero_proposals_is_an_empty_set() {
        let u = small_universe(29);
        let proposer = ProposerModel::init_for_universe(&u, 16, 0.7, 0.0, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let props = proposer
            .propose_children(&u, u.roots().next().unwrap().id, None, 0, &mut rng)
            .unwrap();
        assert!(props.is_empty());
    }

    #[test]
    fn malformed_slots_are_always_invalid() {
        let u = small_universe(31);
        let proposer = ProposerModel::init_for_universe(&u, 16, 0.5, 0.0, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let seed = u.roots().next().unwrap().id;
        let props = proposer.propose_children(&u, seed, None, 5000, &mut rng).unwrap();
        for p in props {
            if p.child.is_none() {
                assert!(!p.valid);
            }
        }
    }
}
