//! Simulation configuration.

use crate::error::{Error, Result};
use crate::lending::{DemandModel, RateCurve};
use crate::policy::MonetaryPolicy;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Demand is a constant multiple of supply.
    TwoState,
    /// Demand follows its own stochastic path.
    ThreeState,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TwoState => "two-state",
            ModelKind::ThreeState => "three-state",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<F> {
    pub n_agents: usize,
    pub beta0: F,
    pub beta1: F,
    /// Relative borrow/lend spread: `lend = (1 - spread) * borrow`.
    pub spread: F,
    /// Epoch length in blocks; also the rate of the staking risk draws.
    pub tau_stake: u64,
    /// Lending withdrawal window in blocks; also the rate of the lending risk draws.
    pub tau_lend: u64,
    pub p_slash: F,
    /// Fraction of the producer's stake burned on a slash.
    pub slash_fraction: F,
    pub lambda_stake: F,
    pub lambda_lend: F,
    pub initial_lend_rate: F,
    /// Blocks per nominal rate period; interest accrues at `rate / period` per block.
    pub rate_period_blocks: u64,
    pub horizon: u64,
    pub seed: u64,
    /// Minimum staked fraction of supply; breaches are recorded, not fatal.
    pub security_floor: F,
    /// Keep per-agent balances at every epoch boundary.
    pub record_epochs: bool,
    pub policy: MonetaryPolicy<F>,
    pub demand: DemandModel<F>,
    pub model_kind: ModelKind,
}

impl Default for SimConfig<f64> {
    fn default() -> Self {
        Self {
            n_agents: 512,
            beta0: 0.05,
            beta1: 0.45,
            spread: 0.005,
            tau_stake: 10,
            tau_lend: 30,
            p_slash: 0.001,
            slash_fraction: 0.01,
            lambda_stake: 0.01,
            lambda_lend: 0.01,
            initial_lend_rate: 0.1,
            rate_period_blocks: 1000,
            horizon: 20_000,
            seed: 0,
            security_floor: 0.0,
            record_epochs: false,
            policy: MonetaryPolicy::Constant { r0: 1000.0, s0: 0.0 },
            demand: DemandModel::BoundedRandomWalk {
                drift: 0.0,
                vol: 10_000.0,
                eta0: 0.98,
                eta1: 1.0,
            },
            model_kind: ModelKind::ThreeState,
        }
    }
}

fn in_open_unit<F: Real>(x: F) -> bool {
    x > F::zero() && x < F::one()
}

fn in_closed_unit<F: Real>(x: F) -> bool {
    x >= F::zero() && x <= F::one()
}

impl<F: Real> SimConfig<F> {
    pub fn rate_curve(&self) -> RateCurve<F> {
        RateCurve::new(self.beta0, self.beta1, self.spread)
    }

    /// Converts an `f64` configuration into another scalar type.
    pub fn cast_from(c: &SimConfig<f64>) -> SimConfig<F> {
        let f = F::lit;
        SimConfig {
            n_agents: c.n_agents,
            beta0: f(c.beta0),
            beta1: f(c.beta1),
            spread: f(c.spread),
            tau_stake: c.tau_stake,
            tau_lend: c.tau_lend,
            p_slash: f(c.p_slash),
            slash_fraction: f(c.slash_fraction),
            lambda_stake: f(c.lambda_stake),
            lambda_lend: f(c.lambda_lend),
            initial_lend_rate: f(c.initial_lend_rate),
            rate_period_blocks: c.rate_period_blocks,
            horizon: c.horizon,
            seed: c.seed,
            security_floor: f(c.security_floor),
            record_epochs: c.record_epochs,
            policy: match c.policy {
                MonetaryPolicy::Constant { r0, s0 } => MonetaryPolicy::Constant { r0: f(r0), s0: f(s0) },
                MonetaryPolicy::GeometricHalfLife { r0, half_life, s0 } => MonetaryPolicy::GeometricHalfLife {
                    r0: f(r0),
                    half_life: f(half_life),
                    s0: f(s0),
                },
                MonetaryPolicy::Polynomial { r0, degree, s0 } => MonetaryPolicy::Polynomial {
                    r0: f(r0),
                    degree,
                    s0: f(s0),
                },
                MonetaryPolicy::Exponential { r0, growth, s0 } => MonetaryPolicy::Exponential {
                    r0: f(r0),
                    growth: f(growth),
                    s0: f(s0),
                },
            },
            demand: match c.demand {
                DemandModel::ConstantK { k } => DemandModel::ConstantK { k: f(k) },
                DemandModel::BoundedRandomWalk { drift, vol, eta0, eta1 } => DemandModel::BoundedRandomWalk {
                    drift: f(drift),
                    vol: f(vol),
                    eta0: f(eta0),
                    eta1: f(eta1),
                },
                DemandModel::ReflectedGbm { drift, vol, eta0, eta1 } => DemandModel::ReflectedGbm {
                    drift: f(drift),
                    vol: f(vol),
                    eta0: f(eta0),
                    eta1: f(eta1),
                },
            },
            model_kind: c.model_kind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::config("n_agents", "must be positive"));
        }
        for (name, v) in [("beta0", self.beta0), ("beta1", self.beta1), ("spread", self.spread)] {
            if !in_open_unit(v) {
                return Err(Error::config(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        for (name, v) in [("tau_stake", self.tau_stake), ("tau_lend", self.tau_lend)] {
            if v == 0 {
                return Err(Error::config(name, "must be a positive number of blocks"));
            }
        }
        if self.rate_period_blocks == 0 {
            return Err(Error::config("rate_period_blocks", "must be positive"));
        }
        if !in_closed_unit(self.p_slash) {
            return Err(Error::config("p_slash", "must lie in [0, 1]"));
        }
        if !(self.slash_fraction > F::zero() && self.slash_fraction <= F::one()) {
            return Err(Error::config("slash_fraction", "must lie in (0, 1]"));
        }
        for (name, v) in [("lambda_stake", self.lambda_stake), ("lambda_lend", self.lambda_lend)] {
            if !(v > F::zero()) || !v.is_finite() {
                return Err(Error::config(name, "must be a positive rate"));
            }
        }
        if !in_closed_unit(self.initial_lend_rate) {
            return Err(Error::config("initial_lend_rate", "must lie in [0, 1]"));
        }
        if !(self.security_floor >= F::zero() && self.security_floor < F::one()) {
            return Err(Error::config("security_floor", "must lie in [0, 1)"));
        }
        if !self.horizon.is_multiple_of(self.tau_stake) {
            return Err(Error::config(
                "horizon",
                format!("must be a multiple of tau_stake ({})", self.tau_stake),
            ));
        }
        self.policy.validate()?;
        self.demand.validate()?;
        if self.model_kind == ModelKind::TwoState && !matches!(self.demand, DemandModel::ConstantK { .. }) {
            return Err(Error::config("demand", "the two-state model requires constant-k demand"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    type Mutation = Box<dyn Fn(&mut SimConfig<f64>)>;

    #[test]
    fn errors_name_the_field() {
        let cases: Vec<(&str, Mutation)> = vec![
            ("n_agents", Box::new(|c| c.n_agents = 0)),
            ("beta0", Box::new(|c| c.beta0 = 1.0)),
            ("beta1", Box::new(|c| c.beta1 = 0.0)),
            ("spread", Box::new(|c| c.spread = -0.1)),
            ("tau_stake", Box::new(|c| c.tau_stake = 0)),
            ("p_slash", Box::new(|c| c.p_slash = 1.5)),
            ("slash_fraction", Box::new(|c| c.slash_fraction = 0.0)),
            ("lambda_lend", Box::new(|c| c.lambda_lend = 0.0)),
            ("horizon", Box::new(|c| c.horizon = 15)),
            ("demand", Box::new(|c| c.model_kind = ModelKind::TwoState)),
        ];
        for (field, mutate) in cases {
            let mut c = SimConfig::default();
            mutate(&mut c);
            match c.validate() {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn cast_round_trip() {
        let c = SimConfig::default();
        let c32: SimConfig<f32> = SimConfig::cast_from(&c);
        c32.validate().unwrap();
        assert_eq!(c32.n_agents, 512);
        assert_eq!(c32.beta1, 0.45f32);
    }
}
