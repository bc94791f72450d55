//! Mean-normalized group advantages and branch balancing.
//!
//! Advantages are centered on the group mean and divided by the mean, not
//! the standard deviation. On a binary group with k successes of N this
//! yields +(N-k)/k for each success and -1 for each failure, so a single
//! rare success carries weight N-1 while every failure's penalty stays
//! fixed. A degenerate group (mean zero, or all outcomes identical) emits
//! all-zero advantages. Branch scales equalize active token mass between
//! the proposer and solver updates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Denominator regularizer shared by all advantage computations.
pub const DEFAULT_ADV_EPSILON: f64 = 1e-4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdvantageError {
    #[error("reward vector must be non-empty")]
    EmptyGroup,
}

/// Mean-normalized advantages for one sample group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAdvantages {
    pub values: Vec<f64>,
    pub group_mean: f64,
    /// All-pass or all-fail: every advantage is zero.
    pub all_degenerate: bool,
}

/// Centers each reward on the group mean and divides by (mean + epsilon).
/// A zero-mean group is gated to all-zero advantages; an all-equal group
/// centers to zero anyway. Non-degenerate groups sum to zero exactly (up
/// to accumulation error).
pub fn mlrl_group_advantages(
    rewards: &[f64],
    epsilon: f64,
) -> Result<GroupAdvantages, AdvantageError> {
    if rewards.is_empty() {
        return Err(AdvantageError::EmptyGroup);
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    if mean == 0.0 {
        return Ok(GroupAdvantages {
            values: vec![0.0; rewards.len()],
            group_mean: mean,
            all_degenerate: true,
        });
    }
    let values: Vec<f64> = rewards.iter().map(|r| (r - mean) / (mean + epsilon)).collect();
    let all_degenerate = values.iter().all(|&v| v == 0.0);
    Ok(GroupAdvantages {
        values,
        group_mean: mean,
        all_degenerate,
    })
}

/// Test-only style comparator: standard GRPO std-normalized advantages,
/// (r_i - mean) / (std + epsilon). Kept in the public surface so the
/// rare-success weighting gap between the two normalizations can be
/// demonstrated side by side.
pub fn std_group_advantages(rewards: &[f64], epsilon: f64) -> Result<Vec<f64>, AdvantageError> {
    if rewards.is_empty() {
        return Err(AdvantageError::EmptyGroup);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / (std + epsilon)).collect())
}

/// Token-mass equalization between the two update branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchScales {
    pub t_q_active: usize,
    pub t_s_active: usize,
    pub scale_q: f64,
    pub scale_s: f64,
    pub w_q: f64,
    pub w_s: f64,
}

/// Computes per-branch scales so that both branches contribute equal active
/// token mass, then applies the static proposer weight. A branch with zero
/// active tokens gets weight 0 and leaves the other branch's scale at 1.
pub fn branch_token_scales(
    t_q_active: usize,
    t_s_active: usize,
    q_scale_static: f64,
) -> BranchScales {
    let (scale_q, scale_s, w_q, w_s) = match (t_q_active, t_s_active) {
        (0, 0) => (1.0, 1.0, 0.0, 0.0),
        (0, _) => (1.0, 1.0, 0.0, 1.0),
        (_, 0) => (1.0, 1.0, q_scale_static, 0.0),
        (tq, ts) => {
            let total = (tq + ts) as f64;
            let sq = total / (2.0 * tq as f64);
            let ss = total / (2.0 * ts as f64);
            (sq, ss, q_scale_static * sq, 1.0 * ss)
        }
    };
    BranchScales {
        t_q_active,
        t_s_active,
        scale_q,
        scale_s,
        w_q,
        w_s,
    }
}

/// Adaptive proposer weight targeting a fixed ratio between the scaled
/// update l2 norms: `max(floor, target_ratio * scale_s * |U_S| / |U_Q|)`.
/// A vanishing proposer norm falls back to the floor.
pub fn adaptive_l2_weight(
    u_q_norm: f64,
    u_s_norm: f64,
    scale_s: f64,
    target_ratio: f64,
    floor: f64,
) -> f64 {
    debug_assert!(u_q_norm >= 0.0 && u_s_norm >= 0.0);
    if u_q_norm == 0.0 {
        return floor;
    }
    (target_ratio * scale_s * u_s_norm / u_q_norm).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn binary(k: usize, n: usize) -> Vec<f64> {
        (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn empty_group_rejected() {
        assert_eq!(
            mlrl_group_advantages(&[], 1e-4),
            Err(AdvantageError::EmptyGroup)
        );
    }

    #[test]
    fn single_success_of_eight() {
        // Oracle at epsilon -> 0: A+ = (N-k)/k = 7, A- = -1.
        let adv = mlrl_group_advantages(&binary(1, 8), 0.0).unwrap();
        assert_abs_diff_eq!(adv.values[0], 7.0, epsilon = 1e-12);
        for v in &adv.values[1..] {
            assert_abs_diff_eq!(*v, -1.0, epsilon = 1e-12);
        }
        assert!(!adv.all_degenerate);
    }

    #[test]
    fn binary_closed_form_matches_for_all_k() {
        let n = 8usize;
        for k in 1..n {
            let adv = mlrl_group_advantages(&binary(k, n), 0.0).unwrap();
            let expect_pos = (n - k) as f64 / k as f64;
            for (i, v) in adv.values.iter().enumerate() {
                let expect = if i < k { expect_pos } else { -1.0 };
                assert_abs_diff_eq!(*v, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_groups_are_all_zero() {
        let all_fail = mlrl_group_advantages(&binary(0, 8), 1e-4).unwrap();
        assert!(all_fail.all_degenerate);
        assert!(all_fail.values.iter().all(|&v| v == 0.0));

        let all_pass = mlrl_group_advantages(&binary(8, 8), 1e-4).unwrap();
        assert!(all_pass.all_degenerate);
        assert!(all_pass.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn std_comparator_positive_coefficient_is_sqrt_form() {
        // Exact std-normalized positive advantage on a k-of-N binary group
        // is sqrt((N-k)/k); verified at epsilon -> 0.
        let n = 64usize;
        for k in 1..n {
            let adv = std_group_advantages(&binary(k, n), 0.0).unwrap();
            let expect = ((n - k) as f64 / k as f64).sqrt();
            assert_abs_diff_eq!(adv[0], expect, epsilon = 1e-10);
        }
    }

    proptest! {
        #[test]
        fn nondegenerate_advantages_center_to_zero(
            rewards in proptest::collection::vec(0.0f64..=1.0, 1..64)
        ) {
            let adv = mlrl_group_advantages(&rewards, 1e-4).unwrap();
            if !adv.all_degenerate {
                let sum: f64 = adv.values.iter().sum();
                prop_assert!(sum.abs() < 1e-12 * adv.values.len() as f64 * 100.0,
                             "sum {sum}");
            }
        }

        #[test]
        fn adaptive_weight_never_below_floor(
            uq in 0.0f64..100.0, us in 0.0f64..100.0, ss in 0.1f64..10.0
        ) {
            let w = adaptive_l2_weight(uq, us, ss, 0.5, 0.125);
            prop_assert!(w >= 0.125);
        }
    }

    #[test]
    fn branch_scales_equalize_mass() {
        let s = branch_token_scales(100, 300, 0.375);
        assert_abs_diff_eq!(s.scale_q, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.scale_s, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.w_q, 0.75, epsilon = 1e-15);
        // Mass identity: scale_q * T_Q = scale_s * T_S.
        assert_abs_diff_eq!(
            s.scale_q * s.t_q_active as f64,
            s.scale_s * s.t_s_active as f64,
            epsilon = 1e-9
        );

        let eq = branch_token_scales(200, 200, 0.375);
        assert_eq!(eq.scale_q, 1.0);
        assert_eq!(eq.scale_s, 1.0);

        // Reverse imbalance pushes w_q down.
        let rev = branch_token_scales(300, 100, 0.375);
        assert_abs_diff_eq!(rev.w_q, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn zero_active_branch_zeroes_its_weight() {
        let no_q = branch_token_scales(0, 500, 0.375);
        assert_eq!(no_q.w_q, 0.0);
        assert_eq!(no_q.w_s, 1.0);
        assert_eq!(no_q.scale_s, 1.0);

        let no_s = branch_token_scales(500, 0, 0.375);
        assert_eq!(no_s.w_s, 0.0);
        assert_eq!(no_s.w_q, 0.375);
    }

    #[test]
    fn adaptive_weight_examples() {
        assert_abs_diff_eq!(adaptive_l2_weight(2.0, 2.0, 1.0, 0.5, 0.125), 0.5);
        assert_eq!(adaptive_l2_weight(100.0, 1.0, 1.0, 0.5, 0.125), 0.125);
        assert_eq!(adaptive_l2_weight(0.0, 5.0, 1.0, 0.5, 0.125), 0.125);
    }
}
