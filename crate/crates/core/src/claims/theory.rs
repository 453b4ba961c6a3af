//! The idealized two-state dynamics used by the analysis: constant relative
//! demand `k`, deterministic exponential supply, and the unconstrained
//! Markowitz update without the risk-appetite factor,
//!
//! ```text
//! stake_i(t+1) = alpha_i * stake_i(t) / zeta_t * W_i(t)
//! lend_i(t+1)  = gamma_t * beta_i * W_i(t)
//! ```
//!
//! with `alpha_i ~ Exp(tau_stake)` and `beta_i ~ Exp(tau_lend)` drawn fresh
//! each step. Positions are capped at the agent's wealth, so no single
//! position exceeds the supply. Each step's reward `S_t (e^g - 1)` is paid
//! pro rata to the new stake.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lending::RateCurve;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct TheoryConfig {
    pub n_agents: usize,
    pub steps: usize,
    pub tau_stake: f64,
    pub tau_lend: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub spread: f64,
    /// Borrowing demand as a fraction of supply.
    pub k: f64,
    pub initial_supply: f64,
    /// Per-step log growth of the supply.
    pub growth: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            n_agents: 64,
            steps: 50,
            tau_stake: 1.0,
            tau_lend: 1.0,
            beta0: 0.05,
            beta1: 0.45,
            spread: 0.005,
            k: 1.0,
            initial_supply: 64.0,
            growth: 1.5,
        }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_agents", self.n_agents as f64),
            ("steps", self.steps as f64),
            ("tau_stake", self.tau_stake),
            ("tau_lend", self.tau_lend),
            ("k", self.k),
            ("initial_supply", self.initial_supply),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be positive and finite"));
            }
        }
        if !(self.growth.is_finite() && self.growth >= 0.0) {
            return Err(Error::config("growth", "must be non-negative and finite"));
        }
        let final_log = self.initial_supply.ln() + self.growth * self.steps as f64;
        if final_log > 600.0 {
            return Err(Error::config("growth", "supply would overflow before the last step"));
        }
        for (name, v) in [("beta0", self.beta0), ("beta1", self.beta1), ("spread", self.spread)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    pub fn lend_rate(&self, supply: f64, lent: f64) -> f64 {
        let u = self.k * supply / (lent + self.k * supply);
        RateCurve::new(self.beta0, self.beta1, self.spread).rates(u).lend
    }
}

/// Observables at steps `0..=steps`. Index `t` holds the state before the
/// update from `t` to `t + 1`; `lend_rate[t]` is the rate that update uses.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryPath {
    pub supply: Vec<f64>,
    pub staked: Vec<f64>,
    pub lent: Vec<f64>,
    pub lend_rate: Vec<f64>,
    /// `1 + |W|_2^2 / S^2`.
    pub eta: Vec<f64>,
    /// Per-agent stake at each step.
    pub stake: Vec<Vec<f64>>,
    pub min_wealth: f64,
}

impl TheoryPath {
    /// `Delta_lend(t)^2 = (l_{t+1} - l_t)^2` for `t` in `0..steps`.
    pub fn squared_lend_increments(&self) -> Vec<f64> {
        self.lent.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).collect()
    }
}

pub fn simulate_theory<R: Rng + ?Sized>(config: &TheoryConfig, rng: &mut R) -> Result<TheoryPath> {
    config.validate()?;
    let n = config.n_agents;
    let raw: Vec<f64> = (0..n).map(|_| f64::sample_exp(rng, 1.0)).collect();
    let scale = config.initial_supply / raw.iter().sum::<f64>();
    let mut wealth: Vec<f64> = raw.iter().map(|w| w * scale).collect();
    let mut stake: Vec<f64> = wealth.iter().map(|w| 0.5 * w).collect();
    let mut lend = stake.clone();

    let cap = config.steps + 1;
    let mut path = TheoryPath {
        supply: Vec::with_capacity(cap),
        staked: Vec::with_capacity(cap),
        lent: Vec::with_capacity(cap),
        lend_rate: Vec::with_capacity(cap),
        eta: Vec::with_capacity(cap),
        stake: Vec::with_capacity(cap),
        min_wealth: f64::INFINITY,
    };
    let growth = config.growth.exp_m1();
    for t in 0..=config.steps {
        let supply: f64 = wealth.iter().sum();
        let staked: f64 = stake.iter().sum();
        let lent: f64 = lend.iter().sum();
        let gamma = config.lend_rate(supply, lent);
        let w2: f64 = wealth.iter().map(|w| w * w).sum();
        path.supply.push(supply);
        path.staked.push(staked);
        path.lent.push(lent);
        path.lend_rate.push(gamma);
        path.eta.push(1.0 + w2 / (supply * supply));
        path.stake.push(stake.clone());
        path.min_wealth = wealth.iter().copied().fold(path.min_wealth, f64::min);
        if t == config.steps {
            break;
        }
        if !(staked > 0.0) {
            return Err(Error::EmptyStake);
        }
        for i in 0..n {
            let alpha = f64::sample_exp(rng, config.tau_stake);
            let beta = f64::sample_exp(rng, config.tau_lend);
            stake[i] = (alpha * stake[i] / staked * wealth[i]).min(wealth[i]);
            lend[i] = (gamma * beta * wealth[i]).min(wealth[i]);
        }
        let new_staked: f64 = stake.iter().sum();
        if !(new_staked > 0.0) {
            return Err(Error::EmptyStake);
        }
        let reward = supply * growth;
        for i in 0..n {
            wealth[i] += reward * stake[i] / new_staked;
        }
    }
    Ok(path)
}
