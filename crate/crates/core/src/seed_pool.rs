//! The curriculum seed pool: a DAG of task seeds with discounted bandit
//! statistics and hierarchical UCB selection.
//!
//! Admission is solved-only (a non-root node must carry a verified solution)
//! and gated by the MinHash packing thresholds, so the pool stays an
//! epsilon-packing of distinct, reachable tasks. Per-node visit counts and
//! value sums decay geometrically each step, giving the bandit an effective
//! memory window of 1/(1-gamma) steps; the per-node ratchet (running max of
//! backed-up reward) is exempt from decay and is what the default exploit
//! mode scores with. Selection splits each batch between UCB-best roots and
//! UCB descent with parent-local exploration denominators.

use crate::similarity::{
    gate_check, jaccard_similarity, GateConfig, GateDecision, MinHashSignature, RejectReason,
    SimilarityError,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Stable node identifier, assigned in admission order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct NodeId(pub u64);

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("unknown node {0:?}")]
    UnknownNode(NodeId),
    #[error("missing parent {0:?}")]
    MissingParent(NodeId),
    #[error("candidate must name at least one parent")]
    NoParents,
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("selection from an empty pool")]
    EmptyPool,
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error("snapshot malformed: {0}")]
    MalformedSnapshot(String),
}

/// Why a candidate was not admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissionReject {
    /// No verified solution (solved-only admission).
    Unsolved,
    /// One of the similarity thresholds fired.
    Gate(RejectReason),
    /// Resulting depth would exceed the cap.
    Depth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Admitted(NodeId),
    Rejected(AdmissionReject),
}

impl AddOutcome {
    pub fn admitted(&self) -> Option<NodeId> {
        match self {
            AddOutcome::Admitted(id) => Some(*id),
            AddOutcome::Rejected(_) => None,
        }
    }
}

/// One task seed in the curriculum DAG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNode {
    pub id: NodeId,
    /// Handle into the spec universe (or any external payload table).
    pub payload: u64,
    pub signature: MinHashSignature,
    pub is_root: bool,
    /// Operational pass estimate, decayed by `pass_rate_decay` each step.
    pub pass_rate: f64,
    pub has_verified_solution: bool,
    pub parents: BTreeSet<NodeId>,
    pub children: BTreeSet<NodeId>,
    /// Shortest distance to a root. Roots are depth 0.
    pub depth: usize,
}

/// Discounted bandit statistics for one node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeStats {
    /// Discounted visit count.
    pub n: f64,
    /// Discounted value sum.
    pub s: f64,
    /// Discounted count of selections that stopped at this node.
    pub stay_n: f64,
    /// Running max of backed-up rewards; never decayed, never decreased.
    pub ratchet: f64,
}

/// Exploit-score source for selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExploitMode {
    /// Score by the decay-exempt running-max reward.
    Ratchet,
    /// Score by the discounted empirical mean s/n, plus the ZPD prior.
    Empirical,
}

impl ExploitMode {
    pub fn key(&self) -> &'static str {
        match self {
            ExploitMode::Ratchet => "ratchet",
            ExploitMode::Empirical => "empirical",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "ratchet" => Some(ExploitMode::Ratchet),
            "empirical" => Some(ExploitMode::Empirical),
            _ => None,
        }
    }
}

/// Selection and bookkeeping knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcbConfig {
    pub c: f64,
    pub gamma_ucb: f64,
    pub pass_rate_decay: f64,
    pub root_ratio: f64,
    pub exploit_mode: ExploitMode,
    pub zpd_weight: f64,
    pub zpd_sigma: f64,
    pub kinship_weight: f64,
    pub absorb_threshold: f64,
    pub depth_cap: usize,
    pub descend_margin: f64,
    pub prune_min_visits: f64,
    /// Depth of the frontier pass-rate band [0.5 - delta, 0.5]; selection
    /// prefers nodes inside it and ignores it when it would be empty. Nodes
    /// passing more than half the time are behind the frontier; nodes below
    /// the lower margin are out of reach.
    pub difficulty_window_delta: f64,
    pub crossover_ratio: f64,
    /// Multiplicative index penalty per prior within-batch selection.
    pub batch_repulsion: f64,
    /// Fallback exploit score when no pass data exists anywhere.
    pub cold_start_constant: f64,
}

impl Default for UcbConfig {
    fn default() -> Self {
        Self {
            c: 2.5,
            gamma_ucb: 0.995,
            pass_rate_decay: 0.996,
            root_ratio: 0.50,
            exploit_mode: ExploitMode::Ratchet,
            zpd_weight: 0.5,
            zpd_sigma: 0.15,
            kinship_weight: 0.0,
            absorb_threshold: 0.60,
            depth_cap: 6,
            descend_margin: 0.02,
            prune_min_visits: 20.0,
            difficulty_window_delta: 0.40,
            crossover_ratio: 0.5,
            batch_repulsion: 0.9,
            cold_start_constant: 0.15,
        }
    }
}

/// A draft node offered for admission.
#[derive(Debug, Clone)]
pub struct CandidateSeed {
    pub payload: u64,
    pub signature: MinHashSignature,
    pub has_verified_solution: bool,
    pub pass_rate: f64,
}

/// One batch selection: the chosen node, its descent path from the root,
/// and (when crossover fired) an independently chosen second parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub node: NodeId,
    pub path: Vec<NodeId>,
    pub secondary_parent: Option<NodeId>,
}

/// The pool plus all bandit bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPool {
    nodes: BTreeMap<NodeId, SeedNode>,
    stats: BTreeMap<NodeId, NodeStats>,
    edge_n: BTreeMap<(NodeId, NodeId), f64>,
    total_visits: f64,
    next_id: u64,
    pub gate: GateConfig,
    pub cfg: UcbConfig,
}

impl SeedPool {
    pub fn new(gate: GateConfig, cfg: UcbConfig) -> Self {
        Self {
            nodes: BTreeMap::new(),
            stats: BTreeMap::new(),
            edge_n: BTreeMap::new(),
            total_visits: 0.0,
            next_id: 0,
            gate,
            cfg,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&SeedNode, PoolError> {
        self.nodes.get(&id).ok_or(PoolError::UnknownNode(id))
    }

    pub fn stats(&self, id: NodeId) -> Result<&NodeStats, PoolError> {
        self.stats.get(&id).ok_or(PoolError::UnknownNode(id))
    }

    pub fn edge_visits(&self, parent: NodeId, child: NodeId) -> f64 {
        self.edge_n.get(&(parent, child)).copied().unwrap_or(0.0)
    }

    pub fn total_visits(&self) -> f64 {
        self.total_visits
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn roots(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .values()
            .filter(|n| n.is_root)
            .map(|n| n.id)
    }

    pub fn set_pass_rate(&mut self, id: NodeId, pass_rate: f64) -> Result<(), PoolError> {
        self.nodes
            .get_mut(&id)
            .ok_or(PoolError::UnknownNode(id))?
            .pass_rate = pass_rate.clamp(0.0, 1.0);
        Ok(())
    }

    /// Adds a protected root seed. Roots face the pool and duplicate
    /// thresholds (keeping the packing invariant) but have no siblings.
    pub fn add_root(
        &mut self,
        payload: u64,
        signature: MinHashSignature,
        pass_rate: f64,
    ) -> Result<AddOutcome, PoolError> {
        let decision = gate_check(
            &signature,
            self.nodes.values().map(|n| &n.signature),
            [],
            &self.gate,
        )?;
        if let GateDecision::Reject(reason) = decision {
            return Ok(AddOutcome::Rejected(AdmissionReject::Gate(reason)));
        }
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(
            id,
            SeedNode {
                id,
                payload,
                signature,
                is_root: true,
                pass_rate: pass_rate.clamp(0.0, 1.0),
                has_verified_solution: true,
                parents: BTreeSet::new(),
                children: BTreeSet::new(),
                depth: 0,
            },
        );
        self.stats.insert(id, NodeStats::default());
        Ok(AddOutcome::Admitted(id))
    }

    /// Solved-only, gated admission of a non-root candidate under one or
    /// more existing parents. Depth is one past the shallowest parent.
    pub fn add_seed(
        &mut self,
        candidate: CandidateSeed,
        parent_ids: &BTreeSet<NodeId>,
    ) -> Result<AddOutcome, PoolError> {
        if parent_ids.is_empty() {
            return Err(PoolError::NoParents);
        }
        for pid in parent_ids {
            if !self.nodes.contains_key(pid) {
                return Err(PoolError::MissingParent(*pid));
            }
        }
        if !candidate.has_verified_solution {
            return Ok(AddOutcome::Rejected(AdmissionReject::Unsolved));
        }
        let depth = 1 + parent_ids
            .iter()
            .map(|pid| self.nodes[pid].depth)
            .min()
            .unwrap();
        if depth > self.cfg.depth_cap {
            return Ok(AddOutcome::Rejected(AdmissionReject::Depth));
        }
        let sibling_ids: BTreeSet<NodeId> = parent_ids
            .iter()
            .flat_map(|pid| self.nodes[pid].children.iter().copied())
            .collect();
        let decision = gate_check(
            &candidate.signature,
            self.nodes.values().map(|n| &n.signature),
            sibling_ids.iter().map(|sid| &self.nodes[sid].signature),
            &self.gate,
        )?;
        if let GateDecision::Reject(reason) = decision {
            return Ok(AddOutcome::Rejected(AdmissionReject::Gate(reason)));
        }
        let id = NodeId(self.next_id);
        self.next_id += 1;
        for pid in parent_ids {
            self.nodes.get_mut(pid).unwrap().children.insert(id);
        }
        self.nodes.insert(
            id,
            SeedNode {
                id,
                payload: candidate.payload,
                signature: candidate.signature,
                is_root: false,
                pass_rate: candidate.pass_rate.clamp(0.0, 1.0),
                has_verified_solution: true,
                parents: parent_ids.clone(),
                children: BTreeSet::new(),
                depth,
            },
        );
        self.stats.insert(id, NodeStats::default());
        Ok(AddOutcome::Admitted(id))
    }

    /// End-of-step decay: every discounted counter shrinks by `gamma_ucb`,
    /// pass rates by `pass_rate_decay`. Ratchets are exempt.
    pub fn decay_all(&mut self) {
        let g = self.cfg.gamma_ucb;
        for st in self.stats.values_mut() {
            st.n *= g;
            st.s *= g;
            st.stay_n *= g;
        }
        for e in self.edge_n.values_mut() {
            *e *= g;
        }
        self.total_visits *= g;
        let pd = self.cfg.pass_rate_decay;
        for node in self.nodes.values_mut() {
            node.pass_rate *= pd;
        }
    }

    /// Mean pass rate over nodes with positive pass data, if any.
    fn global_positive_pass_mean(&self) -> Option<f64> {
        let positives: Vec<f64> = self
            .nodes
            .values()
            .map(|n| n.pass_rate)
            .filter(|&p| p > 0.0)
            .collect();
        if positives.is_empty() {
            None
        } else {
            Some(positives.iter().sum::<f64>() / positives.len() as f64)
        }
    }

    /// Cold-start chain: own pass rate, then mean child pass rate, then the
    /// global positive-pass mean, then a constant.
    fn cold_start_value(&self, id: NodeId) -> f64 {
        let node = &self.nodes[&id];
        if node.pass_rate > 0.0 {
            return node.pass_rate;
        }
        let child_rates: Vec<f64> = node
            .children
            .iter()
            .map(|cid| self.nodes[cid].pass_rate)
            .filter(|&p| p > 0.0)
            .collect();
        if !child_rates.is_empty() {
            return child_rates.iter().sum::<f64>() / child_rates.len() as f64;
        }
        self.global_positive_pass_mean()
            .unwrap_or(self.cfg.cold_start_constant)
    }

    fn zpd_kernel(&self, pass_rate: f64, ability: f64) -> f64 {
        let s = self.cfg.zpd_sigma;
        (-(pass_rate - ability).powi(2) / (2.0 * s * s)).exp()
    }

    /// Exploitation score of a node under the configured mode.
    pub fn exploit_value(&self, id: NodeId, ability: f64) -> Result<f64, PoolError> {
        let st = self.stats(id)?;
        let node = &self.nodes[&id];
        Ok(match self.cfg.exploit_mode {
            ExploitMode::Empirical => {
                if st.n > 0.0 {
                    st.s / st.n
                        + self.cfg.zpd_weight * self.zpd_kernel(node.pass_rate, ability)
                } else {
                    self.cold_start_value(id)
                }
            }
            ExploitMode::Ratchet => {
                if st.n > 0.0 {
                    st.ratchet
                } else {
                    self.cold_start_value(id)
                }
            }
        })
    }

    /// Kinship prior: mean signature similarity to the node's children,
    /// scaled by `kinship_weight`. Zero by default (weight 0).
    fn kinship_prior(&self, id: NodeId) -> Result<f64, PoolError> {
        if self.cfg.kinship_weight == 0.0 {
            return Ok(0.0);
        }
        let node = &self.nodes[&id];
        if node.children.is_empty() {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        for cid in &node.children {
            sum += jaccard_similarity(&node.signature, &self.nodes[cid].signature)?;
        }
        Ok(self.cfg.kinship_weight * sum / node.children.len() as f64)
    }

    fn in_difficulty_window(&self, id: NodeId, _ability: f64) -> bool {
        let p = self.nodes[&id].pass_rate;
        p >= 0.5 - self.cfg.difficulty_window_delta && p <= 0.5
    }

    /// UCB index of a root: exploit + c*sqrt(log(total+1)/(n+1)) + kinship.
    pub fn root_score(&self, id: NodeId, ability: f64) -> Result<f64, PoolError> {
        let st = self.stats(id)?;
        let explore =
            self.cfg.c * ((self.total_visits + 1.0).ln() / (st.n + 1.0)).sqrt();
        Ok(self.exploit_value(id, ability)? + explore + self.kinship_prior(id)?)
    }

    /// Picks the best root under the window, repulsion, and lowest-id
    /// tie-breaking. `picked` counts prior selections this batch.
    fn pick_root(
        &self,
        ability: f64,
        picked: &BTreeMap<NodeId, u32>,
    ) -> Result<NodeId, PoolError> {
        let roots: Vec<NodeId> = self.roots().collect();
        if roots.is_empty() {
            return Err(PoolError::EmptyPool);
        }
        let windowed: Vec<NodeId> = roots
            .iter()
            .copied()
            .filter(|&id| self.in_difficulty_window(id, ability))
            .collect();
        let candidates = if windowed.is_empty() { &roots } else { &windowed };
        let mut best: Option<(NodeId, f64)> = None;
        for &id in candidates {
            let mut score = self.root_score(id, ability)?;
            if let Some(&k) = picked.get(&id) {
                score *= self.cfg.batch_repulsion.powi(k as i32);
            }
            let better = match best {
                None => true,
                Some((bid, bscore)) => score > bscore || (score == bscore && id < bid),
            };
            if better {
                best = Some((id, score));
            }
        }
        Ok(best.unwrap().0)
    }

    /// Descends from a root: at each node the stay index competes with the
    /// children's edge indices, all under the parent-local denominator
    /// log(n_node + 1).
    fn descend(
        &self,
        root: NodeId,
        ability: f64,
        picked_edges: &BTreeMap<(NodeId, NodeId), u32>,
    ) -> Result<Vec<NodeId>, PoolError> {
        let mut path = vec![root];
        let mut current = root;
        loop {
            let node = &self.nodes[&current];
            if node.depth >= self.cfg.depth_cap || node.children.is_empty() {
                break;
            }
            let st = self.stats(current)?;
            let local = (st.n + 1.0).ln();
            let stay = self.exploit_value(current, ability)?
                + self.cfg.c * (local / (st.stay_n + 1.0)).sqrt();

            let children: Vec<NodeId> = node.children.iter().copied().collect();
            let windowed: Vec<NodeId> = children
                .iter()
                .copied()
                .filter(|&cid| self.in_difficulty_window(cid, ability))
                .collect();
            let candidates = if windowed.is_empty() { &children } else { &windowed };
            let mut best: Option<(NodeId, f64)> = None;
            for &cid in candidates {
                let edge = self.edge_visits(current, cid);
                let mut score = self.exploit_value(cid, ability)?
                    + self.cfg.c * (local / (edge + 1.0)).sqrt();
                if let Some(&k) = picked_edges.get(&(current, cid)) {
                    score *= self.cfg.batch_repulsion.powi(k as i32);
                }
                let better = match best {
                    None => true,
                    Some((bid, bscore)) => score > bscore || (score == bscore && cid < bid),
                };
                if better {
                    best = Some((cid, score));
                }
            }
            match best {
                Some((cid, score)) if score > stay + self.cfg.descend_margin => {
                    path.push(cid);
                    current = cid;
                }
                _ => break,
            }
        }
        Ok(path)
    }

    /// Selects a batch: ceil(root_ratio * B) root-level picks, the rest UCB
    /// descents. Descent selections carry an independently picked second
    /// parent with probability `crossover_ratio`.
    pub fn ucb_select_batch<R: rand::Rng>(
        &self,
        batch_size: usize,
        ability: f64,
        rng: &mut R,
    ) -> Result<Vec<Selection>, PoolError> {
        if self.is_empty() {
            return Err(PoolError::EmptyPool);
        }
        let n_root = ((self.cfg.root_ratio * batch_size as f64).ceil() as usize).min(batch_size);
        let mut picked: BTreeMap<NodeId, u32> = BTreeMap::new();
        let mut picked_edges: BTreeMap<(NodeId, NodeId), u32> = BTreeMap::new();
        let mut out = Vec::with_capacity(batch_size);
        for _ in 0..n_root {
            let root = self.pick_root(ability, &picked)?;
            *picked.entry(root).or_insert(0) += 1;
            out.push(Selection {
                node: root,
                path: vec![root],
                secondary_parent: None,
            });
        }
        for _ in n_root..batch_size {
            let root = self.pick_root(ability, &picked)?;
            *picked.entry(root).or_insert(0) += 1;
            let path = self.descend(root, ability, &picked_edges)?;
            for pair in path.windows(2) {
                *picked_edges.entry((pair[0], pair[1])).or_insert(0) += 1;
            }
            let secondary = if rng.gen::<f64>() < self.cfg.crossover_ratio {
                let second = self.pick_root(ability, &picked)?;
                Some(second)
            } else {
                None
            };
            out.push(Selection {
                node: *path.last().unwrap(),
                path,
                secondary_parent: secondary,
            });
        }
        Ok(out)
    }

    /// Credits a terminal reward back along a selection path: ancestor i of
    /// a depth-L path receives gamma^(L-i) * R to its value sum, one visit,
    /// and a ratchet update; edges along the path and the terminal stay
    /// counter each gain one visit. A crossover's secondary parent gets the
    /// same undiscounted credit as a depth-0 path.
    pub fn backup_path(
        &mut self,
        path: &[NodeId],
        reward: f64,
        backup_gamma: f64,
        secondary_parent: Option<NodeId>,
    ) -> Result<(), PoolError> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(PoolError::RewardOutOfRange(reward));
        }
        if path.is_empty() {
            return Err(PoolError::InvalidPath("empty path".into()));
        }
        for id in path {
            if !self.nodes.contains_key(id) {
                return Err(PoolError::UnknownNode(*id));
            }
        }
        for pair in path.windows(2) {
            if !self.nodes[&pair[0]].children.contains(&pair[1]) {
                return Err(PoolError::InvalidPath(format!(
                    "{:?} is not a child of {:?}",
                    pair[1], pair[0]
                )));
            }
        }
        let depth = path.len() - 1;
        for (i, id) in path.iter().enumerate() {
            let y = backup_gamma.powi((depth - i) as i32) * reward;
            let st = self.stats.get_mut(id).unwrap();
            st.n += 1.0;
            st.s += y;
            if y > st.ratchet {
                st.ratchet = y;
            }
        }
        for pair in path.windows(2) {
            *self.edge_n.entry((pair[0], pair[1])).or_insert(0.0) += 1.0;
        }
        let terminal = self.stats.get_mut(path.last().unwrap()).unwrap();
        terminal.stay_n += 1.0;
        self.total_visits += 1.0;
        if let Some(second) = secondary_parent {
            let st = self
                .stats
                .get_mut(&second)
                .ok_or(PoolError::UnknownNode(second))?;
            st.n += 1.0;
            st.s += reward;
            if reward > st.ratchet {
                st.ratchet = reward;
            }
            st.stay_n += 1.0;
            self.total_visits += 1.0;
        }
        Ok(())
    }

    /// Merges any non-root child whose similarity to a parent reaches the
    /// absorb threshold into that parent: stats and edges transfer, the
    /// child's children are re-parented, and depths are recomputed.
    pub fn absorb_similar(&mut self) -> Result<Vec<(NodeId, NodeId)>, PoolError> {
        let mut merged = Vec::new();
        loop {
            let mut pick: Option<(NodeId, NodeId)> = None;
            'outer: for (&cid, child) in &self.nodes {
                if child.is_root {
                    continue;
                }
                for &pid in &child.parents {
                    let sim =
                        jaccard_similarity(&self.nodes[&pid].signature, &child.signature)?;
                    if sim >= self.cfg.absorb_threshold {
                        pick = Some((pid, cid));
                        break 'outer;
                    }
                }
            }
            let Some((pid, cid)) = pick else { break };
            self.merge_into(pid, cid);
            merged.push((pid, cid));
        }
        if !merged.is_empty() {
            self.recompute_depths();
        }
        Ok(merged)
    }

    fn merge_into(&mut self, parent: NodeId, child: NodeId) {
        let child_node = self.nodes.remove(&child).unwrap();
        let child_stats = self.stats.remove(&child).unwrap();
        // Stats fold into the parent; ratchet is a max, the rest are sums.
        let pst = self.stats.get_mut(&parent).unwrap();
        pst.n += child_stats.n;
        pst.s += child_stats.s;
        pst.stay_n += child_stats.stay_n;
        if child_stats.ratchet > pst.ratchet {
            pst.ratchet = child_stats.ratchet;
        }
        // Drop edges into the child; re-point edges out of the child.
        for &pp in &child_node.parents {
            self.edge_n.remove(&(pp, child));
            if let Some(n) = self.nodes.get_mut(&pp) {
                n.children.remove(&child);
            }
        }
        for &gc in &child_node.children {
            let w = self.edge_n.remove(&(child, gc)).unwrap_or(0.0);
            if gc != parent {
                *self.edge_n.entry((parent, gc)).or_insert(0.0) += w;
                self.nodes.get_mut(&parent).unwrap().children.insert(gc);
                let gc_node = self.nodes.get_mut(&gc).unwrap();
                gc_node.parents.remove(&child);
                gc_node.parents.insert(parent);
            }
        }
    }

    fn recompute_depths(&mut self) {
        let mut queue: VecDeque<NodeId> = VecDeque::new();
        let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
        for n in self.nodes.values() {
            if n.is_root {
                depth.insert(n.id, 0);
                queue.push_back(n.id);
            }
        }
        while let Some(id) = queue.pop_front() {
            let d = depth[&id];
            let children: Vec<NodeId> = self.nodes[&id].children.iter().copied().collect();
            for c in children {
                if depth.get(&c).map_or(true, |&dc| d + 1 < dc) {
                    depth.insert(c, d + 1);
                    queue.push_back(c);
                }
            }
        }
        for (id, d) in depth {
            self.nodes.get_mut(&id).unwrap().depth = d;
        }
    }

    /// Removes non-root leaves that were visited at least `prune_min_visits`
    /// discounted times and never earned any reward. With solved-only
    /// admission and positive-gated rewards this is expected to fire never.
    pub fn prune_unsolvable(&mut self) -> Vec<NodeId> {
        let doomed: Vec<NodeId> = self
            .nodes
            .values()
            .filter(|n| {
                !n.is_root
                    && n.children.is_empty()
                    && self.stats[&n.id].n >= self.cfg.prune_min_visits
                    && self.stats[&n.id].ratchet == 0.0
            })
            .map(|n| n.id)
            .collect();
        for id in &doomed {
            let node = self.nodes.remove(id).unwrap();
            self.stats.remove(id);
            for pid in node.parents {
                self.edge_n.remove(&(pid, *id));
                if let Some(p) = self.nodes.get_mut(&pid) {
                    p.children.remove(id);
                }
            }
        }
        doomed
    }

    /// Maximum pairwise similarity in the pool, for packing checks.
    pub fn max_pairwise_similarity(&self) -> Result<f64, PoolError> {
        let sigs: Vec<&MinHashSignature> = self.nodes.values().map(|n| &n.signature).collect();
        let mut max = 0.0f64;
        for i in 0..sigs.len() {
            for j in (i + 1)..sigs.len() {
                let s = jaccard_similarity(sigs[i], sigs[j])?;
                if s > max {
                    max = s;
                }
            }
        }
        Ok(max)
    }

    /// Serializes the pool as a versioned JSON-lines snapshot: one header
    /// record, then one record per node in id order.
    pub fn to_snapshot_string(&self) -> String {
        #[derive(Serialize)]
        struct Header<'a> {
            version: u32,
            next_id: u64,
            total_visits: f64,
            gate: &'a GateConfig,
            cfg: &'a UcbConfig,
            edge_n: Vec<(u64, u64, f64)>,
        }
        #[derive(Serialize)]
        struct Record<'a> {
            node: &'a SeedNode,
            stats: &'a NodeStats,
        }
        let header = Header {
            version: 1,
            next_id: self.next_id,
            total_visits: self.total_visits,
            gate: &self.gate,
            cfg: &self.cfg,
            edge_n: self
                .edge_n
                .iter()
                .map(|(&(a, b), &w)| (a.0, b.0, w))
                .collect(),
        };
        let mut out = serde_json::to_string(&header).unwrap();
        out.push('\n');
        for (id, node) in &self.nodes {
            let rec = Record {
                node,
                stats: &self.stats[id],
            };
            out.push_str(&serde_json::to_string(&rec).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot_str(text: &str) -> Result<Self, PoolError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
            next_id: u64,
            total_visits: f64,
            gate: GateConfig,
            cfg: UcbConfig,
            edge_n: Vec<(u64, u64, f64)>,
        }
        #[derive(Deserialize)]
        struct Record {
            node: SeedNode,
            stats: NodeStats,
        }
        let mut lines = text.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| PoolError::MalformedSnapshot("empty snapshot".into()))?;
        let header: Header = serde_json::from_str(header_line)
            .map_err(|e| PoolError::MalformedSnapshot(e.to_string()))?;
        if header.version != 1 {
            return Err(PoolError::MalformedSnapshot(format!(
                "unsupported version {}",
                header.version
            )));
        }
        let mut pool = SeedPool::new(header.gate, header.cfg);
        pool.next_id = header.next_id;
        pool.total_visits = header.total_visits;
        pool.edge_n = header
            .edge_n
            .into_iter()
            .map(|(a, b, w)| ((NodeId(a), NodeId(b)), w))
            .collect();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| PoolError::MalformedSnapshot(e.to_string()))?;
            pool.stats.insert(rec.node.id, rec.stats);
            pool.nodes.insert(rec.node.id, rec.node);
        }
        Ok(pool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{minhash_signature, tokenize, TokenSet};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sig(rng: &mut ChaCha8Rng) -> MinHashSignature {
        minhash_signature(&TokenSet::from_shingles(
            (0..60).map(|_| rng.gen::<u64>()),
        ))
    }

    fn pool_with_roots(k: usize, seed: u64) -> (SeedPool, Vec<NodeId>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool = SeedPool::new(GateConfig::default(), UcbConfig::default());
        let mut ids = Vec::new();
        for i in 0..k {
            let sig = random_sig(&mut rng);
            let out = pool.add_root(i as u64, sig, 0.0).unwrap();
            ids.push(out.admitted().expect("random roots should pass the gate"));
        }
        (pool, ids, rng)
    }

    fn solved(rng: &mut ChaCha8Rng, payload: u64) -> CandidateSeed {
        CandidateSeed {
            payload,
            signature: random_sig(rng),
            has_verified_solution: true,
            pass_rate: 0.0,
        }
    }

    #[test]
    fn unsolved_candidates_are_rejected() {
        let (mut pool, roots, mut rng) = pool_with_roots(1, 1);
        let mut cand = solved(&mut rng, 10);
        cand.has_verified_solution = false;
        let out = pool
            .add_seed(cand, &BTreeSet::from([roots[0]]))
            .unwrap();
        assert_eq!(out, AddOutcome::Rejected(AdmissionReject::Unsolved));
    }

    #[test]
    fn solved_novel_candidate_lands_at_depth_one() {
        let (mut pool, roots, mut rng) = pool_with_roots(1, 2);
        let out = pool
            .add_seed(solved(&mut rng, 10), &BTreeSet::from([roots[0]]))
            .unwrap();
        let id = out.admitted().unwrap();
        assert_eq!(pool.node(id).unwrap().depth, 1);
        assert!(pool.node(roots[0]).unwrap().children.contains(&id));
    }

    #[test]
    fn depth_cap_rejects_deep_chains() {
        let (mut pool, roots, mut rng) = pool_with_roots(1, 3);
        let mut tip = roots[0];
        for d in 1..=6 {
            let id = pool
                .add_seed(solved(&mut rng, 100 + d), &BTreeSet::from([tip]))
                .unwrap()
                .admitted()
                .unwrap();
            assert_eq!(pool.node(id).unwrap().depth, d as usize);
            tip = id;
        }
        let out = pool
            .add_seed(solved(&mut rng, 200), &BTreeSet::from([tip]))
            .unwrap();
        assert_eq!(out, AddOutcome::Rejected(AdmissionReject::Depth));
    }

    #[test]
    fn missing_parent_is_an_error() {
        let (mut pool, _, mut rng) = pool_with_roots(1, 4);
        let cand = solved(&mut rng, 9);
        assert_eq!(
            pool.add_seed(cand, &BTreeSet::from([NodeId(99)])),
            Err(PoolError::MissingParent(NodeId(99)))
        );
    }

    #[test]
    fn near_duplicate_of_pool_member_is_gated() {
        let (mut pool, roots, _) = pool_with_roots(1, 5);
        let cand = CandidateSeed {
            payload: 77,
            signature: pool.node(roots[0]).unwrap().signature.clone(),
            has_verified_solution: true,
            pass_rate: 0.0,
        };
        let out = pool.add_seed(cand, &BTreeSet::from([roots[0]])).unwrap();
        assert_eq!(
            out,
            AddOutcome::Rejected(AdmissionReject::Gate(RejectReason::Duplicate))
        );
    }

    #[test]
    fn decay_scales_all_counters_exactly() {
        let (mut pool, roots, mut rng) = pool_with_roots(2, 6);
        let child = pool
            .add_seed(solved(&mut rng, 50), &BTreeSet::from([roots[0]]))
            .unwrap()
            .admitted()
            .unwrap();
        pool.backup_path(&[roots[0], child], 0.5, 1.0, None).unwrap();
        pool.backup_path(&[roots[0], child], 0.5, 1.0, None).unwrap();
        pool.backup_path(&[roots[0], child], 0.5, 1.0, None).unwrap();
        pool.backup_path(&[roots[0], child], 0.5, 1.0, None).unwrap();
        pool.set_pass_rate(child, 0.6).unwrap();
        let before = *pool.stats(roots[0]).unwrap();
        let edge_before = pool.edge_visits(roots[0], child);
        let tv_before = pool.total_visits();
        pool.decay_all();
        let g = pool.cfg.gamma_ucb;
        let after = pool.stats(roots[0]).unwrap();
        assert_eq!(after.n, before.n * g);
        assert_eq!(after.s, before.s * g);
        assert_eq!(pool.edge_visits(roots[0], child), edge_before * g);
        assert_eq!(pool.total_visits(), tv_before * g);
        assert_eq!(after.ratchet, before.ratchet, "ratchet is decay-exempt");
        assert_eq!(pool.node(child).unwrap().pass_rate, 0.6 * 0.996);
        // n=4, s=2 example: the discounted mean survives decay unchanged.
        assert_abs_diff_eq!(before.n, 4.0);
        assert_abs_diff_eq!(before.s, 2.0);
        assert_abs_diff_eq!(after.n, 3.98, epsilon = 1e-12);
        assert_abs_diff_eq!(after.s, 1.99, epsilon = 1e-12);
    }

    #[test]
    fn two_hundred_decays_shrink_by_e() {
        let (mut pool, roots, _) = pool_with_roots(1, 7);
        pool.backup_path(&[roots[0]], 1.0, 1.0, None).unwrap();
        for _ in 0..200 {
            pool.decay_all();
        }
        let n = pool.stats(roots[0]).unwrap().n;
        assert_abs_diff_eq!(n, 0.995f64.powi(200), epsilon = 1e-12);
        assert_abs_diff_eq!(n, 0.3670, epsilon = 1e-3);
    }

    #[test]
    fn empirical_exploit_is_the_discounted_mean() {
        let (mut pool, roots, _) = pool_with_roots(1, 8);
        pool.cfg.exploit_mode = ExploitMode::Empirical;
        pool.cfg.zpd_weight = 0.0;
        for _ in 0..4 {
            pool.backup_path(&[roots[0]], 0.5, 1.0, None).unwrap();
        }
        assert_abs_diff_eq!(
            pool.exploit_value(roots[0], 0.5).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ratchet_is_a_running_max() {
        let (mut pool, roots, _) = pool_with_roots(1, 9);
        let mut oracle = 0.0f64;
        for r in [0.3, 0.8, 0.5] {
            pool.backup_path(&[roots[0]], r, 1.0, None).unwrap();
            oracle = oracle.max(r);
            assert_eq!(pool.stats(roots[0]).unwrap().ratchet, oracle);
        }
        assert_eq!(pool.exploit_value(roots[0], 0.5).unwrap(), 0.8);
        // Ratchet never decreases across decays either.
        pool.decay_all();
        assert_eq!(pool.stats(roots[0]).unwrap().ratchet, 0.8);
    }

    #[test]
    fn cold_start_chain_bottoms_out_at_constant() {
        let (pool, roots, _) = pool_with_roots(1, 10);
        assert_eq!(pool.exploit_value(roots[0], 0.5).unwrap(), 0.15);
    }

    #[test]
    fn cold_start_prefers_own_then_child_then_global() {
        let (mut pool, roots, mut rng) = pool_with_roots(2, 11);
        let child = pool
            .add_seed(solved(&mut rng, 30), &BTreeSet::from([roots[0]]))
            .unwrap()
            .admitted()
            .unwrap();
        // Own pass rate wins when present.
        pool.set_pass_rate(roots[0], 0.4).unwrap();
        assert_eq!(pool.exploit_value(roots[0], 0.5).unwrap(), 0.4);
        // Without own data, mean child pass rate.
        pool.set_pass_rate(roots[0], 0.0).unwrap();
        pool.set_pass_rate(child, 0.7).unwrap();
        assert_abs_diff_eq!(pool.exploit_value(roots[0], 0.5).unwrap(), 0.7);
        // A childless node falls through to the global positive mean.
        assert_abs_diff_eq!(pool.exploit_value(roots[1], 0.5).unwrap(), 0.7);
    }

    #[test]
    fn ucb_prefers_the_less_visited_arm() {
        // Two arms, equal exploit 0.4, n = 1 vs 9, total such that
        // log(total+1) = 1.
        let (mut pool, roots, _) = pool_with_roots(2, 12);
        pool.cfg.exploit_mode = ExploitMode::Empirical;
        pool.cfg.zpd_weight = 0.0;
        let st0 = NodeStats { n: 1.0, s: 0.4, stay_n: 0.0, ratchet: 0.4 };
        let st9 = NodeStats { n: 9.0, s: 3.6, stay_n: 0.0, ratchet: 0.4 };
        pool.stats.insert(roots[0], st9);
        pool.stats.insert(roots[1], st0);
        pool.total_visits = std::f64::consts::E - 1.0;
        let s_heavy = pool.root_score(roots[0], 0.5).unwrap();
        let s_light = pool.root_score(roots[1], 0.5).unwrap();
        assert_abs_diff_eq!(s_light, 0.4 + 2.5 * (1.0f64 / 2.0).sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(s_heavy, 0.4 + 2.5 * (1.0f64 / 10.0).sqrt(), epsilon = 1e-9);
        assert!(s_light > s_heavy);
        let pick = pool.pick_root(0.5, &BTreeMap::new()).unwrap();
        assert_eq!(pick, roots[1]);
    }

    #[test]
    fn single_root_full_quota_selects_it_everywhere() {
        let (mut pool, roots, _) = pool_with_roots(1, 13);
        pool.cfg.root_ratio = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = pool.ucb_select_batch(8, 0.5, &mut rng).unwrap();
        assert_eq!(batch.len(), 8);
        assert!(batch.iter().all(|s| s.node == roots[0]));
    }

    #[test]
    fn batch_split_honors_root_quota() {
        let (mut pool, roots, mut rng) = pool_with_roots(4, 14);
        for r in &roots {
            pool.add_seed(solved(&mut rng, 1000 + r.0), &BTreeSet::from([*r]))
                .unwrap()
                .admitted()
                .unwrap();
        }
        let mut sel_rng = ChaCha8Rng::seed_from_u64(1);
        let batch = pool.ucb_select_batch(8, 0.5, &mut sel_rng).unwrap();
        assert_eq!(batch.len(), 8);
        // First ceil(0.5*8) = 4 are root-level picks with length-1 paths.
        for s in &batch[..4] {
            assert_eq!(s.path.len(), 1);
            assert!(pool.node(s.node).unwrap().is_root);
            assert!(s.secondary_parent.is_none());
        }
        // The rest are descents (paths start at a root).
        for s in &batch[4..] {
            assert!(pool.node(s.path[0]).unwrap().is_root);
            assert_eq!(*s.path.last().unwrap(), s.node);
        }
    }

    #[test]
    fn crossover_rate_matches_config() {
        let (mut pool, _, _) = pool_with_roots(4, 15);
        pool.cfg.root_ratio = 0.0;
        pool.cfg.crossover_ratio = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut with_secondary = 0usize;
        let mut total = 0usize;
        for _ in 0..200 {
            for s in pool.ucb_select_batch(8, 0.5, &mut rng).unwrap() {
                total += 1;
                if s.secondary_parent.is_some() {
                    with_secondary += 1;
                }
            }
        }
        let frac = with_secondary as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.05, "crossover fraction {frac}");
    }

    #[test]
    fn backup_discounts_along_the_path() {
        let (mut pool, roots, mut rng) = pool_with_roots(1, 16);
        let mut path = vec![roots[0]];
        for d in 0..3 {
            let id = pool
                .add_seed(solved(&mut rng, 300 + d), &BTreeSet::from([*path.last().unwrap()]))
                .unwrap()
                .admitted()
                .unwrap();
            path.push(id);
        }
        pool.backup_path(&path, 0.8, 0.9, None).unwrap();
        // Depth L=3; ancestor 1 receives 0.8 * 0.9^2 = 0.648.
        assert_abs_diff_eq!(pool.stats(path[1]).unwrap().s, 0.648, epsilon = 1e-12);
        assert_abs_diff_eq!(pool.stats(path[3]).unwrap().s, 0.8, epsilon = 1e-12);
        assert_eq!(pool.stats(path[3]).unwrap().stay_n, 1.0);
        assert_eq!(pool.stats(path[0]).unwrap().stay_n, 0.0);
        assert_eq!(pool.edge_visits(path[0], path[1]), 1.0);

        // gamma = 1: every ancestor receives exactly R.
        let mut pool2 = pool.clone();
        pool2.backup_path(&path, 0.3, 1.0, None).unwrap();
        for (a, b) in path.iter().zip(path.iter()) {
            let delta = pool2.stats(*a).unwrap().s - pool.stats(*b).unwrap().s;
            assert_abs_diff_eq!(delta, 0.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn backup_matches_independent_fold() {
        let (mut pool, roots, mut rng) = pool_with_roots(1, 17);
        let mut path = vec![roots[0]];
        for d in 0..4 {
            let id = pool
                .add_seed(solved(&mut rng, 400 + d), &BTreeSet::from([*path.last().unwrap()]))
                .unwrap()
                .admitted()
                .unwrap();
            path.push(id);
        }
        // Oracle: fold the expected (n, s) deltas independently.
        let rewards = [0.2, 0.9, 0.4, 0.7];
        let gamma = 0.85;
        let mut oracle: Vec<(f64, f64)> = vec![(0.0, 0.0); path.len()];
        for &r in &rewards {
            pool.backup_path(&path, r, gamma, None).unwrap();
            let l = path.len() - 1;
            for (i, o) in oracle.iter_mut().enumerate() {
                o.0 += 1.0;
                o.1 += gamma.powi((l - i) as i32) * r;
            }
        }
        for (i, id) in path.iter().enumerate() {
            let st = pool.stats(*id).unwrap();
            assert_abs_diff_eq!(st.n, oracle[i].0, epsilon = 1e-12);
            assert_abs_diff_eq!(st.s, oracle[i].1, epsilon = 1e-12);
        }
    }

    #[test]
    fn out_of_range_reward_is_an_error() {
        let (mut pool, roots, _) = pool_with_roots(1, 18);
        assert_eq!(
            pool.backup_path(&[roots[0]], 1.5, 1.0, None),
            Err(PoolError::RewardOutOfRange(1.5))
        );
    }

    #[test]
    fn crossover_secondary_gets_symmetric_credit() {
        let (mut pool, roots, _) = pool_with_roots(2, 19);
        pool.backup_path(&[roots[0]], 0.6, 0.9, Some(roots[1])).unwrap();
        let second = pool.stats(roots[1]).unwrap();
        assert_eq!(second.n, 1.0);
        assert_abs_diff_eq!(second.s, 0.6, epsilon = 1e-12);
        assert_eq!(second.ratchet, 0.6);
    }

    /// Builds a pool whose child shares most shingles with its parent, so
    /// similarity lands above the absorb threshold but below the gate.
    fn absorbable_pair() -> (SeedPool, NodeId, NodeId) {
        let mut pool = SeedPool::new(GateConfig::default(), UcbConfig::default());
        // Overlapping payload text: replacing the last 6 of 32 tokens breaks
        // 6 of 30 trigrams per side, exact Jaccard 24/36 ~ 0.67, inside
        // (0.60, 0.72).
        let base: Vec<String> = (0..32).map(|i| format!("tok{i}")).collect();
        let parent_payload = base.join(" ");
        let mut child_words = base.clone();
        for (j, w) in child_words.iter_mut().skip(26).enumerate() {
            *w = format!("alt{j}");
        }
        let child_payload = child_words.join(" ");
        let psig = minhash_signature(&tokenize(&parent_payload));
        let csig = minhash_signature(&tokenize(&child_payload));
        let sim = jaccard_similarity(&psig, &csig).unwrap();
        assert!(
            sim >= 0.60 && sim <= 0.72,
            "constructed similarity {sim} outside the target band"
        );
        let parent = pool.add_root(1, psig, 0.0).unwrap().admitted().unwrap();
        let child = pool
            .add_seed(
                CandidateSeed {
                    payload: 2,
                    signature: csig,
                    has_verified_solution: true,
                    pass_rate: 0.0,
                },
                &BTreeSet::from([parent]),
            )
            .unwrap()
            .admitted()
            .unwrap();
        (pool, parent, child)
    }

    #[test]
    fn absorb_merges_child_stats_into_parent() {
        let (mut pool, parent, child) = absorbable_pair();
        pool.backup_path(&[parent, child], 0.5, 1.0, None).unwrap();
        pool.backup_path(&[parent, child], 0.7, 1.0, None).unwrap();
        let p_before = *pool.stats(parent).unwrap();
        let c_before = *pool.stats(child).unwrap();
        let merged = pool.absorb_similar().unwrap();
        assert_eq!(merged, vec![(parent, child)]);
        assert!(pool.node(child).is_err());
        let p_after = pool.stats(parent).unwrap();
        assert_abs_diff_eq!(p_after.n, p_before.n + c_before.n, epsilon = 1e-12);
        assert_abs_diff_eq!(p_after.s, p_before.s + c_before.s, epsilon = 1e-12);
        assert_eq!(p_after.ratchet, p_before.ratchet.max(c_before.ratchet));
        assert!(pool.node(parent).unwrap().children.is_empty());
    }

    #[test]
    fn absorb_is_a_noop_below_threshold() {
        let (mut pool, roots, mut rng) = pool_with_roots(2, 20);
        pool.add_seed(solved(&mut rng, 5), &BTreeSet::from([roots[0]]))
            .unwrap()
            .admitted()
            .unwrap();
        let before = pool.clone();
        assert!(pool.absorb_similar().unwrap().is_empty());
        assert_eq!(pool, before);
    }

    #[test]
    fn prune_removes_only_hopeless_non_root_leaves() {
        let (mut pool, roots, mut rng) = pool_with_roots(1, 21);
        let child = pool
            .add_seed(solved(&mut rng, 5), &BTreeSet::from([roots[0]]))
            .unwrap()
            .admitted()
            .unwrap();
        pool.stats.insert(
            child,
            NodeStats { n: 25.0, s: 0.0, stay_n: 0.0, ratchet: 0.0 },
        );
        pool.stats.insert(
            roots[0],
            NodeStats { n: 25.0, s: 0.0, stay_n: 0.0, ratchet: 0.0 },
        );
        let removed = pool.prune_unsolvable();
        assert_eq!(removed, vec![child]);
        assert!(pool.node(roots[0]).is_ok(), "roots are never pruned");
        assert!(pool.node(roots[0]).unwrap().children.is_empty());
    }

    #[test]
    fn solved_only_and_packing_hold_under_random_admission_pressure() {
        let (mut pool, roots, mut rng) = pool_with_roots(4, 22);
        for i in 0..200u64 {
            let parent = roots[(i % 4) as usize];
            let _ = pool
                .add_seed(solved(&mut rng, 1000 + i), &BTreeSet::from([parent]))
                .unwrap();
        }
        for id in pool.node_ids().collect::<Vec<_>>() {
            let n = pool.node(id).unwrap();
            assert!(n.is_root || n.has_verified_solution);
            assert!(n.depth <= pool.cfg.depth_cap);
        }
        let max_sim = pool.max_pairwise_similarity().unwrap();
        assert!(
            max_sim <= pool.gate.max_pool_sim,
            "packing violated: max similarity {max_sim}"
        );
    }

    #[test]
    fn snapshot_round_trips_exactly() {
        let (mut pool, roots, mut rng) = pool_with_roots(3, 23);
        let child = pool
            .add_seed(solved(&mut rng, 9), &BTreeSet::from([roots[0]]))
            .unwrap()
            .admitted()
            .unwrap();
        pool.backup_path(&[roots[0], child], 0.37, 0.9, Some(roots[1]))
            .unwrap();
        pool.decay_all();
        let text = pool.to_snapshot_string();
        let restored = SeedPool::from_snapshot_str(&text).unwrap();
        assert_eq!(restored, pool);
        // Round-trip of the round-trip is byte-identical.
        assert_eq!(restored.to_snapshot_string(), text);
    }

    #[test]
    fn selection_is_deterministic_per_seed() {
        let (mut pool, roots, mut rng) = pool_with_roots(4, 24);
        for r in &roots {
            pool.add_seed(solved(&mut rng, 100 + r.0), &BTreeSet::from([*r]))
                .unwrap();
        }
        let a = pool
            .ucb_select_batch(8, 0.5, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        let b = pool
            .ucb_select_batch(8, 0.5, &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_pool_selection_is_an_error() {
        let pool = SeedPool::new(GateConfig::default(), UcbConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            pool.ucb_select_batch(4, 0.5, &mut rng),
            Err(PoolError::EmptyPool)
        );
    }
}
