//! Simulation state, per-agent risk profiles and their initialization.

use std::collections::BTreeMap;

use rand::Rng;

use crate::config::{ModelKind, SimConfig};
use crate::error::Result;
use crate::lending::{utilization_three_state, RateCurve};
use crate::scalar::Real;

/// Per-agent token tallies accumulated during an epoch. Each agent id
/// appears at most once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochLedger<F> {
    entries: BTreeMap<usize, F>,
}

impl<F: Real> EpochLedger<F> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Adds `amount` to the agent's running tally.
    pub fn credit(&mut self, agent: usize, amount: F) {
        let slot = self.entries.entry(agent).or_insert_with(F::zero);
        *slot = *slot + amount;
    }

    pub fn get(&self, agent: usize) -> Option<F> {
        self.entries.get(&agent).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> F {
        self.entries.values().copied().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Full simulation state at block height `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState<F> {
    pub t: u64,
    pub stake: Vec<F>,
    pub lend: Vec<F>,
    /// Borrowed tokens; `k * S` under the two-state model.
    pub borrow_demand: F,
    pub utilization: F,
    pub borrow_rate: F,
    pub lend_rate: F,
    pub epoch_rewards: EpochLedger<F>,
    pub epoch_slashes: EpochLedger<F>,
}

impl<F: Real> SystemState<F> {
    /// All-zero state for `n` agents.
    pub fn empty(n: usize) -> Self {
        Self {
            t: 0,
            stake: vec![F::zero(); n],
            lend: vec![F::zero(); n],
            borrow_demand: F::zero(),
            utilization: F::zero(),
            borrow_rate: F::zero(),
            lend_rate: F::zero(),
            epoch_rewards: EpochLedger::new(),
            epoch_slashes: EpochLedger::new(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.stake.len()
    }

    /// Staked supply.
    pub fn staked(&self) -> F {
        self.stake.iter().copied().sum()
    }

    /// Lent supply.
    pub fn lent(&self) -> F {
        self.lend.iter().copied().sum()
    }

    /// Tokens held by agents, staked plus lent.
    pub fn agent_supply(&self) -> F {
        self.staked() + self.lent()
    }

    /// Circulating supply; borrowed tokens count under the three-state model.
    pub fn supply(&self, model: ModelKind) -> F {
        match model {
            ModelKind::TwoState => self.agent_supply(),
            ModelKind::ThreeState => self.agent_supply() + self.borrow_demand,
        }
    }

    pub fn wealth(&self, agent: usize) -> F {
        self.stake[agent] + self.lend[agent]
    }

    /// Agent balances plus rewards and slashes not yet applied.
    pub fn wealth_with_pending(&self) -> F {
        self.agent_supply() + self.epoch_rewards.total() - self.epoch_slashes.total()
    }
}

/// Static per-agent inverse variances and the shared risk appetite.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskProfile<F> {
    /// Inverse variance of the staking leg, one per agent.
    pub alpha: Vec<F>,
    /// Inverse variance of the lending leg, one per agent.
    pub beta: Vec<F>,
    pub lambda: F,
}

/// Draws initial balances: stake and lend are i.i.d. exponential with rates
/// `lambda_stake` and `lambda_lend`. Rates start at `initial_lend_rate`, with
/// utilization read off the inverted rate curve; walk demand starts at the
/// level implied by that utilization, clamped to its band.
pub fn init_state<F: Real, R: Rng + ?Sized>(config: &SimConfig<F>, rng: &mut R) -> Result<SystemState<F>> {
    config.validate()?;
    let n = config.n_agents;
    let stake: Vec<F> = (0..n).map(|_| F::sample_exp(rng, config.lambda_stake)).collect();
    let lend: Vec<F> = (0..n).map(|_| F::sample_exp(rng, config.lambda_lend)).collect();

    let mut state = SystemState::empty(n);
    state.stake = stake;
    state.lend = lend;

    let curve: RateCurve<F> = config.rate_curve();
    let utilization = curve.utilization_for_lend_rate(config.initial_lend_rate);
    let lent = state.lent();
    let implied = if utilization < F::one() {
        utilization * lent / (F::one() - utilization)
    } else {
        F::infinity()
    };
    let supply = state.agent_supply();
    state.borrow_demand = config.demand.initial_demand(supply, implied)?;
    utilization_three_state(state.borrow_demand, lent)?;
    state.utilization = utilization;
    state.lend_rate = config.initial_lend_rate;
    state.borrow_rate = config.initial_lend_rate / (F::one() - config.spread);
    Ok(state)
}

/// Draws `alpha_i ~ Exp(tau_stake)`, `beta_i ~ Exp(tau_lend)` (rates) and a
/// single `lambda ~ chi^2(n)` shared by every agent.
pub fn sample_risk_profiles<F: Real, R: Rng + ?Sized>(config: &SimConfig<F>, rng: &mut R) -> Result<RiskProfile<F>> {
    config.validate()?;
    let n = config.n_agents;
    let tau_stake = F::from_count(config.tau_stake);
    let tau_lend = F::from_count(config.tau_lend);
    let alpha = (0..n).map(|_| F::sample_exp(rng, tau_stake)).collect();
    let beta = (0..n).map(|_| F::sample_exp(rng, tau_lend)).collect();
    let lambda = F::sample_chi_squared(rng, F::from_count(n as u64));
    Ok(RiskProfile { alpha, beta, lambda })
}
