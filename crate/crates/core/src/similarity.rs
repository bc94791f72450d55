//! MinHash similarity estimation and the pool admission gate.
//!
//! Candidate payloads are shingled into token trigrams, hashed through a
//! fixed family of 128 multiply-add permutations, and compared by the
//! matching-slot fraction of their signatures — an unbiased per-slot
//! Bernoulli estimate of Jaccard similarity. The three-threshold gate
//! keeps the pool an epsilon-packing under the estimated distance, with
//! `epsilon = 1 - max_pool_sim`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::OnceLock;
use thiserror::Error;

/// Number of hash permutations, and therefore signature slots.
pub const SIGNATURE_SLOTS: usize = 128;

/// Identifier of the hash-family seeds compiled into this build. Signatures
/// are comparable only when their seed-set ids match.
pub const PERM_SEED_SET: u32 = 1;

const PERM_MASTER_SEED: u64 = 0x5eed_5e75_0000_0001;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("signatures from different permutation seed sets ({0} vs {1}) are incomparable")]
    IncomparableSignatures(u32, u32),
    #[error("signature blob malformed: {0}")]
    MalformedBlob(String),
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `(a, b)` pairs with odd `a`, so `a*x + b (mod 2^64)` is a permutation.
fn permutations() -> &'static [(u64, u64); SIGNATURE_SLOTS] {
    static PERMS: OnceLock<[(u64, u64); SIGNATURE_SLOTS]> = OnceLock::new();
    PERMS.get_or_init(|| {
        let mut out = [(0u64, 0u64); SIGNATURE_SLOTS];
        let mut state = PERM_MASTER_SEED;
        for slot in out.iter_mut() {
            state = splitmix64(state);
            let a = state | 1;
            state = splitmix64(state);
            *slot = (a, state);
        }
        out
    })
}

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        for &b in p.as_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// The shingle set of a payload: hashed token trigrams.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSet {
    shingles: BTreeSet<u64>,
}

impl TokenSet {
    pub fn from_shingles<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        Self {
            shingles: iter.into_iter().collect(),
        }
    }

    pub fn shingles(&self) -> &BTreeSet<u64> {
        &self.shingles
    }

    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }

    /// Exact Jaccard similarity between the underlying sets.
    pub fn exact_jaccard(&self, other: &TokenSet) -> f64 {
        if self.is_empty() && other.is_empty() {
            return 1.0;
        }
        let inter = self.shingles.intersection(&other.shingles).count();
        let union = self.shingles.len() + other.shingles.len() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Splits a payload into tokens (maximal alphanumeric runs) and hashes every
/// 3-token window into a shingle. Payloads shorter than three tokens yield a
/// single shingle over whatever tokens exist; an empty payload yields the
/// empty set.
pub fn tokenize(payload: &str) -> TokenSet {
    let tokens: Vec<&str> = payload
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    let mut shingles = BTreeSet::new();
    if tokens.is_empty() {
        return TokenSet { shingles };
    }
    if tokens.len() < 3 {
        shingles.insert(fnv1a(&tokens));
    } else {
        for w in tokens.windows(3) {
            shingles.insert(fnv1a(w));
        }
    }
    TokenSet { shingles }
}

/// A 128-slot MinHash signature. The empty-set signature is the distinguished
/// all-ones slot vector; it compares at distance 1.0 to everything but itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    perm_seed_set: u32,
    slots: Vec<u64>,
}

impl MinHashSignature {
    pub fn empty() -> Self {
        Self {
            perm_seed_set: PERM_SEED_SET,
            slots: vec![u64::MAX; SIGNATURE_SLOTS],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(|&s| s == u64::MAX)
    }

    pub fn perm_seed_set(&self) -> u32 {
        self.perm_seed_set
    }

    pub fn slots(&self) -> &[u64] {
        &self.slots
    }

    /// Wire format: 4-byte little-endian seed-set id, then 128 little-endian
    /// 64-bit slot values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * SIGNATURE_SLOTS);
        out.extend_from_slice(&self.perm_seed_set.to_le_bytes());
        for s in &self.slots {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SimilarityError> {
        if bytes.len() != 4 + 8 * SIGNATURE_SLOTS {
            return Err(SimilarityError::MalformedBlob(format!(
                "expected {} bytes, got {}",
                4 + 8 * SIGNATURE_SLOTS,
                bytes.len()
            )));
        }
        let perm_seed_set = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        let slots = bytes[4..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            perm_seed_set,
            slots,
        })
    }
}

/// Computes the 128-slot signature of a shingle set. The empty set maps to
/// the distinguished empty signature.
pub fn minhash_signature(tokens: &TokenSet) -> MinHashSignature {
    if tokens.is_empty() {
        return MinHashSignature::empty();
    }
    let perms = permutations();
    let mut slots = vec![u64::MAX; SIGNATURE_SLOTS];
    for &shingle in &tokens.shingles {
        for (i, &(a, b)) in perms.iter().enumerate() {
            let h = a.wrapping_mul(shingle).wrapping_add(b);
            if h < slots[i] {
                slots[i] = h;
            }
        }
    }
    MinHashSignature {
        perm_seed_set: PERM_SEED_SET,
        slots,
    }
}

/// Estimated Jaccard similarity: the matching-slot fraction.
pub fn jaccard_similarity(
    a: &MinHashSignature,
    b: &MinHashSignature,
) -> Result<f64, SimilarityError> {
    if a.perm_seed_set != b.perm_seed_set {
        return Err(SimilarityError::IncomparableSignatures(
            a.perm_seed_set,
            b.perm_seed_set,
        ));
    }
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let matches = a
        .slots
        .iter()
        .zip(&b.slots)
        .filter(|(x, y)| x == y)
        .count();
    Ok(matches as f64 / SIGNATURE_SLOTS as f64)
}

/// Estimated Jaccard distance, `1 - similarity`. Symmetric, zero iff the
/// signatures are identical.
pub fn jaccard_distance(
    a: &MinHashSignature,
    b: &MinHashSignature,
) -> Result<f64, SimilarityError> {
    Ok(1.0 - jaccard_similarity(a, b)?)
}

/// Thresholds of the admission gate. Invariant:
/// `max_sibling_sim <= max_pool_sim <= duplicate_struct_sim`, all in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub max_pool_sim: f64,
    pub max_sibling_sim: f64,
    pub duplicate_struct_sim: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            max_pool_sim: 0.72,
            max_sibling_sim: 0.55,
            duplicate_struct_sim: 0.90,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("max_pool_sim", self.max_pool_sim),
            ("max_sibling_sim", self.max_sibling_sim),
            ("duplicate_struct_sim_threshold", self.duplicate_struct_sim),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if self.max_sibling_sim > self.max_pool_sim {
            return Err("max_sibling_sim must not exceed max_pool_sim".into());
        }
        if self.max_pool_sim > self.duplicate_struct_sim {
            return Err("max_pool_sim must not exceed duplicate_struct_sim_threshold".into());
        }
        Ok(())
    }

    /// The packing radius the gate enforces on the pool.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.max_pool_sim
    }
}

/// Which threshold rejected a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    /// A pool member exceeded `duplicate_struct_sim`.
    Duplicate,
    /// Maximum similarity to the pool exceeded `max_pool_sim`.
    Pool,
    /// Maximum similarity to the sibling set exceeded `max_sibling_sim`.
    Sibling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateDecision {
    Accept,
    Reject(RejectReason),
}

impl GateDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, GateDecision::Accept)
    }
}

/// Evaluates the three-threshold admission gate. Accepts iff the candidate's
/// maximum similarity to the pool is at most `max_pool_sim`, its maximum
/// similarity to its would-be siblings is at most `max_sibling_sim`, and no
/// pool member exceeds `duplicate_struct_sim`.
pub fn gate_check<'a, P, S>(
    candidate: &MinHashSignature,
    pool: P,
    siblings: S,
    cfg: &GateConfig,
) -> Result<GateDecision, SimilarityError>
where
    P: IntoIterator<Item = &'a MinHashSignature>,
    S: IntoIterator<Item = &'a MinHashSignature>,
{
    let mut max_pool = 0.0f64;
    for sig in pool {
        let sim = jaccard_similarity(candidate, sig)?;
        if sim > max_pool {
            max_pool = sim;
        }
    }
    let mut max_sibling = 0.0f64;
    for sig in siblings {
        let sim = jaccard_similarity(candidate, sig)?;
        if sim > max_sibling {
            max_sibling = sim;
        }
    }
    if max_pool > cfg.duplicate_struct_sim {
        return Ok(GateDecision::Reject(RejectReason::Duplicate));
    }
    if max_pool > cfg.max_pool_sim {
        return Ok(GateDecision::Reject(RejectReason::Pool));
    }
    if max_sibling > cfg.max_sibling_sim {
        return Ok(GateDecision::Reject(RejectReason::Sibling));
    }
    Ok(GateDecision::Accept)
}
