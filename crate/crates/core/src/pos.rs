//! Block production: stake-weighted winner sampling, Bernoulli slashing and
//! per-epoch settlement of the accumulated rewards and slashes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::SystemState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockOutcome<F> {
    pub winner: usize,
    pub slashed: bool,
    /// Block reward when unslashed, otherwise the slash charged to the winner.
    pub amount: F,
}

/// Totals moved by one epoch settlement.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpochSettlement<F> {
    pub rewarded: F,
    /// Slash actually removed from balances, after flooring at zero.
    pub burned: F,
    /// Slash that the zero floor absorbed.
    pub floored: F,
}

/// Vose alias table over a stake vector. Built once per epoch, since stake
/// is frozen between settlements.
#[derive(Clone, Debug)]
pub struct StakeSampler<F> {
    prob: Vec<F>,
    alias: Vec<usize>,
}

impl<F: Real> StakeSampler<F> {
    pub fn new(stake: &[F]) -> Result<Self> {
        let n = stake.len();
        if stake.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("stake"));
        }
        let total: F = stake.iter().copied().filter(|&s| s > F::zero()).sum();
        if n == 0 || !(total > F::zero()) {
            return Err(Error::EmptyStake);
        }
        let scale = F::from_count(n as u64) / total;
        let mut prob: Vec<F> = stake.iter().map(|&s| s.max(F::zero()) * scale).collect();
        let mut alias: Vec<usize> = (0..n).collect();
        let heaviest = (0..n)
            .max_by(|&a, &b| stake[a].partial_cmp(&stake[b]).expect("finite"))
            .expect("non-empty");

        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| prob[i] < F::one());
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            prob[l] = (prob[l] + prob[s]) - F::one();
            if prob[l] < F::one() {
                large.pop();
                small.push(l);
            }
        }
        for i in large {
            prob[i] = F::one();
        }
        // Rounding leftovers; a zero-stake slot must never be returned.
        for i in small {
            if stake[i] > F::zero() {
                prob[i] = F::one();
            } else {
                prob[i] = F::zero();
                alias[i] = heaviest;
            }
        }
        Ok(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if F::sample_unit(rng) < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// Draws agent `i` with probability `stake[i] / sum(stake)`.
pub fn sample_winner<F: Real, R: Rng + ?Sized>(stake: &[F], rng: &mut R) -> Result<usize> {
    Ok(StakeSampler::new(stake)?.sample(rng))
}

/// Produces one block with a prebuilt sampler. Rewards and slashes go to the
/// epoch ledgers; balances are untouched.
pub fn run_block_with<F: Real, R: Rng + ?Sized>(
    state: &mut SystemState<F>,
    sampler: &StakeSampler<F>,
    reward: F,
    slash_fraction: F,
    p_slash: F,
    rng: &mut R,
) -> BlockOutcome<F> {
    let winner = sampler.sample(rng);
    let slashed = F::sample_unit(rng) < p_slash;
    let amount = if slashed {
        let amount = slash_fraction * state.stake[winner];
        state.epoch_slashes.credit(winner, amount);
        amount
    } else {
        state.epoch_rewards.credit(winner, reward);
        reward
    };
    state.t += 1;
    BlockOutcome { winner, slashed, amount }
}

/// Produces one block, sampling directly from the current stake vector.
pub fn run_block<F: Real, R: Rng + ?Sized>(
    state: &mut SystemState<F>,
    reward: F,
    slash_fraction: F,
    p_slash: F,
    rng: &mut R,
) -> Result<BlockOutcome<F>> {
    let sampler = StakeSampler::new(&state.stake)?;
    Ok(run_block_with(state, &sampler, reward, slash_fraction, p_slash, rng))
}

/// Applies the epoch's rewards and slashes to stake, flooring at zero, and
/// clears both ledgers.
pub fn apply_epoch<F: Real>(state: &mut SystemState<F>, tau_stake: u64) -> Result<EpochSettlement<F>> {
    if tau_stake == 0 || !state.t.is_multiple_of(tau_stake) {
        return Err(Error::Sequencing { t: state.t, epoch_len: tau_stake });
    }
    let mut out = EpochSettlement { rewarded: F::zero(), burned: F::zero(), floored: F::zero() };
    for (i, r) in state.epoch_rewards.iter() {
        state.stake[i] = state.stake[i] + r;
        out.rewarded = out.rewarded + r;
    }
    for (i, s) in state.epoch_slashes.iter() {
        let burned = s.min(state.stake[i]);
        state.stake[i] = (state.stake[i] - burned).max(F::zero());
        out.burned = out.burned + burned;
        out.floored = out.floored + (s - burned);
    }
    state.epoch_rewards.clear();
    state.epoch_slashes.clear();
    Ok(out)
}
