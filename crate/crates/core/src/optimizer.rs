//! Per-agent mean-variance allocation between staking and lending.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lending::{utilization_three_state, RateCurve};
use crate::scalar::{clamp_unit, Real};
use crate::state::{RiskProfile, SystemState};

/// Expected per-period return of each leg for one agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnEstimate<F> {
    /// Probability of producing the next block, `stake_i / staked`.
    pub mu_stake: F,
    /// Current lend rate.
    pub mu_lend: F,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortfolioWeights<F> {
    pub w_stake: F,
    pub w_lend: F,
}

pub fn expected_returns<F: Real>(state: &SystemState<F>, agent: usize) -> Result<ReturnEstimate<F>> {
    let staked = state.staked();
    if !(staked > F::zero()) {
        return Err(Error::domain("expected returns need a positive staked supply"));
    }
    Ok(ReturnEstimate {
        mu_stake: clamp_unit(state.stake[agent] / staked),
        mu_lend: clamp_unit(state.lend_rate),
    })
}

/// Minimizes `w' diag(1/alpha, 1/beta) w - lambda mu' w` over the simplex
/// `w_stake + w_lend = 1, w >= 0`.
///
/// The interior stationary point is
/// `w_stake = alpha (2 + lambda beta (mu_stake - mu_lend)) / (2 (alpha + beta))`;
/// with two assets clamping it to `[0, 1]` is the full KKT solution.
pub fn solve_markowitz_2asset<F: Real>(
    mu: ReturnEstimate<F>,
    alpha: F,
    beta: F,
    lambda: F,
) -> Result<PortfolioWeights<F>> {
    for (name, v) in [
        ("mu_stake", mu.mu_stake),
        ("mu_lend", mu.mu_lend),
        ("alpha", alpha),
        ("beta", beta),
        ("lambda", lambda),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    if !(alpha > F::zero() && beta > F::zero() && lambda > F::zero()) {
        return Err(Error::domain("alpha, beta and lambda must be positive"));
    }
    let two = F::lit(2.0);
    let interior = alpha * (two + lambda * beta * (mu.mu_stake - mu.mu_lend)) / (two * (alpha + beta));
    let w_stake = clamp_unit(interior);
    Ok(PortfolioWeights { w_stake, w_lend: F::one() - w_stake })
}

/// First-order solution `w = lambda Sigma^-1 mu` without the budget or sign
/// constraints.
pub fn unconstrained_weights<F: Real>(mu: ReturnEstimate<F>, alpha: F, beta: F, lambda: F) -> PortfolioWeights<F> {
    PortfolioWeights {
        w_stake: lambda * alpha * mu.mu_stake,
        w_lend: lambda * beta * mu.mu_lend,
    }
}

/// Target `(stake, lend)` for every agent, computed from one snapshot of the
/// state so that the pass does not depend on visiting order.
fn rebalance_targets<F: Real>(state: &SystemState<F>, profiles: &RiskProfile<F>) -> Result<Vec<(F, F)>> {
    let staked = state.staked();
    if !(staked > F::zero()) {
        return Err(Error::domain("cannot rebalance with zero staked supply"));
    }
    let mu_lend = clamp_unit(state.lend_rate);
    (0..state.n_agents())
        .map(|i| {
            let mu = ReturnEstimate { mu_stake: clamp_unit(state.stake[i] / staked), mu_lend };
            let w = solve_markowitz_2asset(mu, profiles.alpha[i], profiles.beta[i], profiles.lambda)?;
            let wealth = state.wealth(i);
            // One of the two subtractions is exact, so stake + lend == wealth.
            let lend = wealth - w.w_stake * wealth;
            Ok((wealth - lend, lend))
        })
        .collect()
}

fn refresh_rates<F: Real>(state: &mut SystemState<F>, curve: &RateCurve<F>) -> Result<()> {
    let lent = state.lent();
    if lent + state.borrow_demand > F::zero() {
        state.utilization = utilization_three_state(state.borrow_demand, lent)?;
        let r = curve.rates(state.utilization);
        state.borrow_rate = r.borrow;
        state.lend_rate = r.lend;
    }
    Ok(())
}

/// Rebalances every agent in the given visiting order, then refreshes
/// utilization and rates once.
pub fn rebalance_in_order<F: Real>(
    state: &mut SystemState<F>,
    profiles: &RiskProfile<F>,
    curve: &RateCurve<F>,
    tau_stake: u64,
    order: &[usize],
) -> Result<()> {
    if tau_stake == 0 || !state.t.is_multiple_of(tau_stake) {
        return Err(Error::Sequencing { t: state.t, epoch_len: tau_stake });
    }
    if order.len() != state.n_agents() {
        return Err(Error::domain("rebalance order must visit every agent once"));
    }
    let targets = rebalance_targets(state, profiles)?;
    for &i in order {
        let (stake, lend) = targets[i];
        state.stake[i] = stake;
        state.lend[i] = lend;
    }
    refresh_rates(state, curve)
}

/// Rebalances every agent in a uniformly random order.
pub fn rebalance_all<F: Real, R: Rng + ?Sized>(
    state: &mut SystemState<F>,
    profiles: &RiskProfile<F>,
    curve: &RateCurve<F>,
    tau_stake: u64,
    rng: &mut R,
) -> Result<()> {
    let mut order: Vec<usize> = (0..state.n_agents()).collect();
    order.shuffle(rng);
    rebalance_in_order(state, profiles, curve, tau_stake, &order)
}
