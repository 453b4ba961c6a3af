//! The block-by-block event loop, trajectory records and the two summary
//! metrics.

use std::io::Write;

use crate::config::{ModelKind, SimConfig};
use crate::error::{Error, Result};
use crate::lending::{accrue_interest, utilization_three_state, utilization_two_state, DemandModel, RateCurve};
use crate::optimizer::rebalance_all;
use crate::pos::{apply_epoch, run_block_with, BlockOutcome, EpochSettlement, StakeSampler};
use crate::rng::{Purpose, SimRng, StreamFactory};
use crate::scalar::Real;
use crate::state::{init_state, sample_risk_profiles, RiskProfile, SystemState};

/// Observables after block `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockRecord<F> {
    pub t: u64,
    pub staked: F,
    pub lent: F,
    pub demand: F,
    pub utilization: F,
    pub borrow_rate: F,
    pub lend_rate: F,
    /// Change in lent supply since the previous record.
    pub delta_lend: F,
}

/// Per-agent balances at an epoch boundary, taken after settlement and
/// rebalancing.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochSnapshot<F> {
    pub t: u64,
    pub stake: Vec<F>,
    pub lend: Vec<F>,
}

/// Run-level token flows.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Counters<F> {
    pub initial_supply: F,
    pub interest_minted: F,
    pub rewards_applied: F,
    pub slashed_burned: F,
    pub slash_events: u64,
}

/// What happened during one call to [`Simulation::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSummary<F> {
    pub outcome: BlockOutcome<F>,
    pub interest_minted: F,
    /// Present when the step opened a new epoch after block 0.
    pub settlement: Option<EpochSettlement<F>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<F> {
    pub records: Vec<BlockRecord<F>>,
    pub epochs: Vec<EpochSnapshot<F>>,
    pub counters: Counters<F>,
    /// Blocks after which staked supply was at or below the security floor.
    pub floor_events: Vec<u64>,
    pub profiles: RiskProfile<F>,
    /// State after the last block, including unsettled epoch ledgers.
    pub final_state: SystemState<F>,
}

/// A trajectory in progress. Randomness is drawn from per-epoch streams, so
/// epoch `e` sees the same draws regardless of how earlier epochs were run.
pub struct Simulation<F: Real> {
    config: SimConfig<F>,
    curve: RateCurve<F>,
    streams: StreamFactory,
    profiles: RiskProfile<F>,
    state: SystemState<F>,
    sampler: StakeSampler<F>,
    consensus_rng: SimRng,
    demand_rng: SimRng,
    counters: Counters<F>,
    records: Vec<BlockRecord<F>>,
    epochs: Vec<EpochSnapshot<F>>,
    floor_events: Vec<u64>,
}

impl<F: Real> Simulation<F> {
    pub fn new(config: SimConfig<F>) -> Result<Self> {
        config.validate()?;
        let streams = StreamFactory::new(config.seed);
        let state = init_state(&config, &mut streams.stream(Purpose::InitialWealth, 0))?;
        let profiles = sample_risk_profiles(&config, &mut streams.stream(Purpose::RiskProfile, 0))?;
        let sampler = StakeSampler::new(&state.stake)?;
        let counters = Counters {
            initial_supply: state.agent_supply(),
            ..Counters::default()
        };
        let initial = BlockRecord {
            t: 0,
            staked: state.staked(),
            lent: state.lent(),
            demand: state.borrow_demand,
            utilization: state.utilization,
            borrow_rate: state.borrow_rate,
            lend_rate: state.lend_rate,
            delta_lend: F::zero(),
        };
        let mut records = Vec::with_capacity(config.horizon as usize + 1);
        records.push(initial);
        Ok(Self {
            curve: config.rate_curve(),
            consensus_rng: streams.stream(Purpose::Consensus, 0),
            demand_rng: streams.stream(Purpose::Demand, 0),
            config,
            streams,
            profiles,
            state,
            sampler,
            counters,
            records,
            epochs: Vec::new(),
            floor_events: Vec::new(),
        })
    }

    pub fn state(&self) -> &SystemState<F> {
        &self.state
    }

    pub fn profiles(&self) -> &RiskProfile<F> {
        &self.profiles
    }

    pub fn counters(&self) -> &Counters<F> {
        &self.counters
    }

    pub fn records(&self) -> &[BlockRecord<F>] {
        &self.records
    }

    /// Advances exactly one block: epoch settlement and rebalance on a
    /// boundary, demand step, rate refresh, interest, block production.
    pub fn step(&mut self) -> Result<StepSummary<F>> {
        let tau = self.config.tau_stake;
        let t = self.state.t;
        let settlement = if t.is_multiple_of(tau) { self.begin_epoch(t / tau)? } else { None };

        let supply = self.state.agent_supply();
        let lent = self.state.lent();
        self.state.borrow_demand = self
            .config
            .demand
            .step(self.state.borrow_demand, supply, &mut self.demand_rng)?;
        self.state.utilization = match (self.config.model_kind, self.config.demand) {
            (ModelKind::TwoState, DemandModel::ConstantK { k }) => utilization_two_state(k, supply, lent)?,
            _ => utilization_three_state(self.state.borrow_demand, lent)?,
        };
        let r = self.curve.rates(self.state.utilization);
        self.state.borrow_rate = r.borrow;
        self.state.lend_rate = r.lend;

        let minted = accrue_interest(&mut self.state, self.config.rate_period_blocks);
        self.counters.interest_minted = self.counters.interest_minted + minted;

        let reward = self.config.policy.block_reward(t);
        let outcome = run_block_with(
            &mut self.state,
            &self.sampler,
            reward,
            self.config.slash_fraction,
            self.config.p_slash,
            &mut self.consensus_rng,
        );
        if outcome.slashed {
            self.counters.slash_events += 1;
        }

        let staked = self.state.staked();
        let lent_now = self.state.lent();
        if staked <= self.config.security_floor * self.state.supply(self.config.model_kind) {
            self.floor_events.push(self.state.t);
        }
        let prev_lent = self.records.last().expect("initial record").lent;
        self.records.push(BlockRecord {
            t: self.state.t,
            staked,
            lent: lent_now,
            demand: self.state.borrow_demand,
            utilization: self.state.utilization,
            borrow_rate: self.state.borrow_rate,
            lend_rate: self.state.lend_rate,
            delta_lend: lent_now - prev_lent,
        });
        Ok(StepSummary { outcome, interest_minted: minted, settlement })
    }

    fn begin_epoch(&mut self, epoch: u64) -> Result<Option<EpochSettlement<F>>> {
        let tau = self.config.tau_stake;
        let mut settlement = None;
        if epoch > 0 {
            let settled = apply_epoch(&mut self.state, tau)?;
            self.counters.rewards_applied = self.counters.rewards_applied + settled.rewarded;
            self.counters.slashed_burned = self.counters.slashed_burned + settled.burned;
            let mut rng = self.streams.stream(Purpose::Rebalance, epoch);
            rebalance_all(&mut self.state, &self.profiles, &self.curve, tau, &mut rng)?;
            settlement = Some(settled);
        }
        self.sampler = StakeSampler::new(&self.state.stake)?;
        self.consensus_rng = self.streams.stream(Purpose::Consensus, epoch);
        self.demand_rng = self.streams.stream(Purpose::Demand, epoch);
        if self.config.record_epochs {
            self.epochs.push(EpochSnapshot {
                t: self.state.t,
                stake: self.state.stake.clone(),
                lend: self.state.lend.clone(),
            });
        }
        Ok(settlement)
    }

    pub fn finish(self) -> Trajectory<F> {
        Trajectory {
            records: self.records,
            epochs: self.epochs,
            counters: self.counters,
            floor_events: self.floor_events,
            profiles: self.profiles,
            final_state: self.state,
        }
    }
}

/// Initializes, runs `horizon` blocks and returns the full record.
pub fn run_trajectory<F: Real>(config: &SimConfig<F>) -> Result<Trajectory<F>> {
    let mut sim = Simulation::new(config.clone())?;
    for _ in 0..config.horizon {
        sim.step()?;
    }
    Ok(sim.finish())
}

fn mean_over<F: Real>(records: &[BlockRecord<F>], f: impl Fn(&BlockRecord<F>) -> F) -> Result<F> {
    if records.is_empty() {
        return Err(Error::domain("metrics need at least one record"));
    }
    let sum: F = records.iter().map(f).sum();
    Ok(sum / F::from_count(records.len() as u64))
}

/// Time average of `(staked - lent) / (staked + lent)`.
pub fn metric_f<F: Real>(traj: &Trajectory<F>) -> Result<F> {
    mean_over(&traj.records, |r| {
        let total = r.staked + r.lent;
        if total > F::zero() {
            (r.staked - r.lent) / total
        } else {
            F::zero()
        }
    })
}

/// Time average of `borrow_rate - lend_rate`.
pub fn metric_g<F: Real>(traj: &Trajectory<F>) -> Result<F> {
    mean_over(&traj.records, |r| r.borrow_rate - r.lend_rate)
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,staked,lent,demand,utilization,borrow_rate,lend_rate,delta_lend";

impl<F: Real> Trajectory<F> {
    /// One row per block, floats with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t,
                r.staked.as_f64(),
                r.lent.as_f64(),
                r.demand.as_f64(),
                r.utilization.as_f64(),
                r.borrow_rate.as_f64(),
                r.lend_rate.as_f64(),
                r.delta_lend.as_f64(),
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn had_flippening(&self) -> bool {
        self.records.iter().any(|r| r.lent > r.staked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::MonetaryPolicy;

    fn small(seed: u64) -> SimConfig<f64> {
        SimConfig {
            n_agents: 32,
            horizon: 400,
            seed,
            ..SimConfig::default()
        }
    }

    fn record(staked: f64, lent: f64, borrow: f64, lend: f64) -> BlockRecord<f64> {
        BlockRecord {
            t: 0,
            staked,
            lent,
            demand: 0.0,
            utilization: 0.0,
            borrow_rate: borrow,
            lend_rate: lend,
            delta_lend: 0.0,
        }
    }

    fn traj_of(records: Vec<BlockRecord<f64>>) -> Trajectory<f64> {
        let mut t = run_trajectory(&SimConfig { horizon: 0, ..small(0) }).unwrap();
        t.records = records;
        t
    }

    #[test]
    fn empty_run_has_initial_record() {
        let t = run_trajectory(&SimConfig { horizon: 0, ..small(1) }).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].t, 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run_trajectory(&small(5)).unwrap();
        let b = run_trajectory(&small(5)).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&small(6)).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn frozen_two_state_run_is_deterministic() {
        let c = SimConfig {
            p_slash: 0.0,
            model_kind: ModelKind::TwoState,
            demand: DemandModel::ConstantK { k: 0.3 },
            ..small(3)
        };
        assert_eq!(run_trajectory(&c).unwrap(), run_trajectory(&c).unwrap());
    }

    #[test]
    fn rebalances_only_on_epoch_boundaries() {
        let c = SimConfig { record_epochs: true, ..small(2) };
        let mut sim = Simulation::new(c).unwrap();
        let mut prev = sim.state().clone();
        for _ in 0..100 {
            sim.step().unwrap();
            let s = sim.state();
            // Stake moves only through settlement + rebalance at t = 10, 20, ...
            let before_block = s.t - 1;
            if before_block % 10 != 0 || before_block == 0 {
                assert_eq!(s.stake, prev.stake, "stake moved at t={}", s.t);
            }
            prev = s.clone();
        }
        let t = sim.finish();
        let times: Vec<u64> = t.epochs.iter().map(|e| e.t).collect();
        assert_eq!(times, (0..10).map(|e| e * 10).collect::<Vec<_>>());
    }

    #[test]
    fn per_block_accounting() {
        let c = SimConfig { p_slash: 0.05, ..small(4) };
        let mut sim = Simulation::new(c.clone()).unwrap();
        for _ in 0..c.horizon {
            let before = sim.state().wealth_with_pending();
            let step = sim.step().unwrap();
            let s = sim.state();
            let produced = if step.outcome.slashed { -step.outcome.amount } else { step.outcome.amount };
            let floored = step.settlement.map_or(0.0, |x| x.floored);
            let expected = before + produced + step.interest_minted + floored;
            let got = s.wealth_with_pending();
            assert!((got - expected).abs() <= 1e-9 * got, "t={}: {got} vs {expected}", s.t);
            let rec = sim.records().last().unwrap();
            assert_eq!(rec.staked + rec.lent, s.staked() + s.lent());
            let (lo, hi) = c.demand.band(s.agent_supply() - step.interest_minted).unwrap();
            assert!(rec.demand >= lo * (1.0 - 1e-12) && rec.demand <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn telescoped_supply() {
        let c = SimConfig { p_slash: 0.02, slash_fraction: 0.5, ..small(8) };
        let t = run_trajectory(&c).unwrap();
        let k = t.counters;
        let s = &t.final_state;
        let lhs = s.agent_supply();
        let rhs = k.initial_supply + k.rewards_applied - k.slashed_burned + k.interest_minted;
        assert!((lhs - rhs).abs() <= 1e-9 * rhs, "{lhs} vs {rhs}");
        assert!(k.slash_events > 0);
    }

    #[test]
    fn records_ordered() {
        let t = run_trajectory(&small(9)).unwrap();
        assert_eq!(t.records.len(), 401);
        assert!(t.records.windows(2).all(|w| w[1].t == w[0].t + 1));
        for r in &t.records {
            assert!((0.0..=1.0).contains(&r.utilization));
            assert!(r.lend_rate <= r.borrow_rate);
        }
    }

    #[test]
    fn metrics_on_synthetic_records() {
        let t = traj_of(vec![record(5.0, 0.0, 0.0, 0.0); 3]);
        assert_eq!(metric_f(&t).unwrap(), 1.0);
        assert_eq!(metric_g(&t).unwrap(), 0.0);
        let t = traj_of(vec![record(4.0, 4.0, 0.5, 0.4975); 3]);
        assert_eq!(metric_f(&t).unwrap(), 0.0);
        assert!((metric_g(&t).unwrap() - 0.0025).abs() < 1e-15);
        let t = traj_of(vec![record(2.0 / 3.0, 1.0 / 3.0, 0.1, 0.1); 4]);
        assert!((metric_f(&t).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let t = traj_of(vec![record(1000.0 / 1.5, 1000.0 / 3.0, 0.1, 0.1); 4]);
        assert!((metric_f(&t).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(metric_f(&traj_of(vec![])).is_err());
    }

    #[test]
    fn spread_metric_non_negative() {
        for seed in 0..3 {
            assert!(metric_g(&run_trajectory(&small(seed)).unwrap()).unwrap() >= 0.0);
        }
    }

    #[test]
    fn csv_format() {
        let t = run_trajectory(&SimConfig { horizon: 10, ..small(1) }).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        let staked: f64 = row[1].parse().unwrap();
        assert_eq!(staked, t.records[0].staked);
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn f32_instantiation_runs() {
        let c: SimConfig<f32> = SimConfig::cast_from(&small(3));
        let t = run_trajectory(&c).unwrap();
        assert_eq!(t.records.len(), 401);
        let f = metric_f(&t).unwrap();
        assert!((-1.0..=1.0).contains(&f));
    }

    #[test]
    fn security_floor_events_recorded() {
        let c = SimConfig { security_floor: 0.99, ..small(1) };
        let t = run_trajectory(&c).unwrap();
        assert_eq!(t.floor_events.len(), 400);
        let c = SimConfig {
            policy: MonetaryPolicy::Constant { r0: 1000.0, s0: 0.0 },
            ..small(1)
        };
        assert!(run_trajectory(&c).unwrap().floor_events.is_empty());
    }
}
