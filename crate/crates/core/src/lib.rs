//! A desk-scale laboratory for anchored curriculum self-play.
//!
//! The crate implements, on a finite synthetic world, the full machinery of a
//! proposer/solver self-play trainer anchored to a curriculum DAG:
//!
//! - [`similarity`] — MinHash signatures and the three-threshold admission
//!   gate that keeps the seed pool an epsilon-packing.
//! - [`seed_pool`] — the curriculum DAG with discounted bandit statistics,
//!   hierarchical UCB selection under a root quota, solved-only admission,
//!   and discounted path backup.
//! - [`rewards`] — the entropy-targeting proposer reward family, the teacher
//!   utility, and the two-gate bounded reward.
//! - [`advantages`] — mean-normalized group advantages and branch balancing.
//! - [`tabular`] — an exactly enumerable softmax policy with exact score
//!   gradients, group-gradient assembly, and a from-scratch AdamW, so the
//!   collapse mechanisms (signal starvation, sparse-sampling distortion,
//!   momentum drift) can be measured rather than argued.
//! - [`world`] — the finite specification universe, a pluggable verifier,
//!   and synthetic proposer/solver models.
//! - [`engine`] — the six-stage training iteration, experiment runner, and
//!   collapse detector.
//! - [`theory`] — closed-form evaluators for every bound the simulations are
//!   compared against.
//! - [`config`] — the flat key=value experiment configuration format.

pub mod advantages;
pub mod config;
pub mod engine;
pub mod rewards;
pub mod rng;
pub mod seed_pool;
pub mod similarity;
pub mod tabular;
pub mod theory;
pub mod world;
