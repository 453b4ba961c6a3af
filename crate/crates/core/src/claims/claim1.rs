//! Claim 1: the one-step change of an agent's expected-return vector is
//! bounded by its stake change and the squared lending increment,
//!
//! ```text
//! |mu_i(t+1) - mu_i(t)|_1 <= f(d) / (S_t + R_t) * (|D_i| + (2 C' l_t + R_t) / S_t) + C' D_lend^2
//! ```
//!
//! with `f(d) = (1 - d)^2 / d + 1` and `C' = beta1 * (1 - spread)`.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::sim::Trajectory;

use super::{ClaimReport, Verdict};

/// Per-block aggregates plus per-agent stake. Stake only changes at epoch
/// boundaries, so blocks share snapshots by index.
#[derive(Clone, Debug, PartialEq)]
pub struct StakePath {
    pub snapshots: Vec<Vec<f64>>,
    /// Snapshot index for each block.
    pub snapshot_of: Vec<usize>,
    pub supply: Vec<f64>,
    pub staked: Vec<f64>,
    pub lent: Vec<f64>,
    pub lend_rate: Vec<f64>,
    /// Reward of the block leading from `t` to `t + 1`.
    pub reward: Vec<f64>,
}

impl StakePath {
    /// Needs a trajectory recorded with `record_epochs`. Record `t >= 1`
    /// reflects the stake set at the start of block `t - 1`.
    pub fn from_trajectory(traj: &Trajectory<f64>, config: &SimConfig<f64>) -> Result<Self> {
        if traj.epochs.is_empty() {
            return Err(Error::domain("claim 1 needs per-epoch stake snapshots (record_epochs)"));
        }
        let tau = config.tau_stake;
        let records = &traj.records;
        let snapshot_of = records
            .iter()
            .map(|r| ((r.t.saturating_sub(1) / tau) as usize).min(traj.epochs.len() - 1))
            .collect();
        Ok(Self {
            snapshots: traj.epochs.iter().map(|e| e.stake.clone()).collect(),
            snapshot_of,
            supply: records.iter().map(|r| r.staked + r.lent).collect(),
            staked: records.iter().map(|r| r.staked).collect(),
            lent: records.iter().map(|r| r.lent).collect(),
            lend_rate: records.iter().map(|r| r.lend_rate).collect(),
            reward: records[..records.len() - 1].iter().map(|r| config.policy.block_reward(r.t)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.supply.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supply.is_empty()
    }
}

/// Convexity constant bounding `1 / (1 - l/S)` on `l/S < 1 - d`.
pub fn f_delta(delta: f64) -> f64 {
    (1.0 - delta) * (1.0 - delta) / delta + 1.0
}

pub fn check_claim1_bound(path: &StakePath, delta: f64, beta1: f64, spread: f64) -> ClaimReport {
    let check = "rebalance bound";
    if let Some(t) = (0..path.len()).find(|&t| !(path.staked[t] > delta * path.supply[t])) {
        return ClaimReport::inapplicable(1, check, format!("staked share must exceed delta={delta} (fails at block {t})"));
    }
    let fd = f_delta(delta);
    let c2 = beta1 * (1.0 - spread);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = 0;
    let mut max_lhs: f64 = 0.0;
    let mut evaluations = 0u64;
    for t in 0..path.len().saturating_sub(1) {
        let (supply, reward) = (path.supply[t], path.reward[t]);
        let (z0, z1) = (path.staked[t], path.staked[t + 1]);
        let d_lend = path.lent[t + 1] - path.lent[t];
        let d_gamma = (path.lend_rate[t + 1] - path.lend_rate[t]).abs();
        let base = (2.0 * c2 * path.lent[t] + reward) / supply;
        let tail = c2 * d_lend * d_lend;
        let before = &path.snapshots[path.snapshot_of[t]];
        let after = &path.snapshots[path.snapshot_of[t + 1]];
        for (a, b) in before.iter().zip(after) {
            let lhs = (b / z1 - a / z0).abs() + d_gamma;
            let rhs = fd / (supply + reward) * ((b - a).abs() + base) + tail;
            max_lhs = max_lhs.max(lhs);
            if lhs - rhs > worst {
                worst = lhs - rhs;
                worst_at = t;
            }
            evaluations += 1;
        }
    }
    let mut r = ClaimReport::new(1, check)
        .measured("max_violation", worst)
        .measured("max_lhs", max_lhs)
        .measured("worst_block", worst_at as f64)
        .target("f_delta", fd)
        .target("c_prime", c2);
    r.samples = evaluations;
    r.verdict = if worst <= 0.0 { Verdict::Pass } else { Verdict::Fail };
    r.note = format!("delta={delta}; violation = lhs - rhs, pass when <= 0");
    r
}
