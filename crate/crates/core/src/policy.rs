//! Block-reward schedules and the implied token supply.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Block-reward schedule. Every variant carries the initial reward `r0`
/// (tokens per block) and the supply `s0` outstanding before block 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MonetaryPolicy<F> {
    Constant { r0: F, s0: F },
    /// `r0 * 2^(-t / half_life)`.
    GeometricHalfLife { r0: F, half_life: F, s0: F },
    /// `r0 * (t + 1)^(degree - 1)`; supply grows like `t^degree`.
    Polynomial { r0: F, degree: u32, s0: F },
    /// `r0 * exp(growth * t)`.
    Exponential { r0: F, growth: F, s0: F },
}

/// Result of the closed-form worst-rebalance-time analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RebalanceTime<F> {
    pub time: F,
    /// False when the formula leaves its domain (no positive `t*` exists).
    pub feasible: bool,
}

impl<F: Real> MonetaryPolicy<F> {
    /// Maps a per-epoch reward ratio onto a schedule with
    /// `R(e * epoch_len) = r0 * ratio^e`: a half-life schedule below 1,
    /// constant at 1, exponential growth above 1.
    pub fn from_epoch_ratio(ratio: F, r0: F, s0: F, epoch_len: u64) -> Result<Self> {
        if !(ratio > F::zero()) || !ratio.is_finite() {
            return Err(Error::config("inflation_ratio", "must be a positive finite number"));
        }
        let epoch = F::from_count(epoch_len);
        let policy = if ratio < F::one() {
            MonetaryPolicy::GeometricHalfLife {
                r0,
                half_life: epoch * F::LN_2() / (-ratio.ln()),
                s0,
            }
        } else if ratio == F::one() {
            MonetaryPolicy::Constant { r0, s0 }
        } else {
            MonetaryPolicy::Exponential {
                r0,
                growth: ratio.ln() / epoch,
                s0,
            }
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MonetaryPolicy::Constant { .. } => "constant",
            MonetaryPolicy::GeometricHalfLife { .. } => "half-life",
            MonetaryPolicy::Polynomial { .. } => "polynomial",
            MonetaryPolicy::Exponential { .. } => "exponential",
        }
    }

    pub fn r0(&self) -> F {
        match *self {
            MonetaryPolicy::Constant { r0, .. }
            | MonetaryPolicy::GeometricHalfLife { r0, .. }
            | MonetaryPolicy::Polynomial { r0, .. }
            | MonetaryPolicy::Exponential { r0, .. } => r0,
        }
    }

    pub fn s0(&self) -> F {
        match *self {
            MonetaryPolicy::Constant { s0, .. }
            | MonetaryPolicy::GeometricHalfLife { s0, .. }
            | MonetaryPolicy::Polynomial { s0, .. }
            | MonetaryPolicy::Exponential { s0, .. } => s0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r0 = self.r0();
        if !(r0 > F::zero()) || !r0.is_finite() {
            return Err(Error::config("policy.r0", "initial block reward must be positive"));
        }
        let s0 = self.s0();
        if !(s0 >= F::zero()) || !s0.is_finite() {
            return Err(Error::config("policy.s0", "initial supply must be non-negative"));
        }
        match *self {
            MonetaryPolicy::GeometricHalfLife { half_life, .. }
                if !(half_life > F::zero()) || !half_life.is_finite() =>
            {
                Err(Error::config("policy.half_life", "must be positive"))
            }
            MonetaryPolicy::Polynomial { degree: 0, .. } => {
                Err(Error::config("policy.degree", "must be a positive integer"))
            }
            MonetaryPolicy::Exponential { growth, .. }
                if !(growth > F::zero()) || !growth.is_finite() =>
            {
                Err(Error::config("policy.growth", "must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Reward minted for block `t`. Floored at the smallest positive scalar
    /// so a long-decayed half-life schedule never returns zero.
    pub fn block_reward(&self, t: u64) -> F {
        let tf = F::from_count(t);
        let r = match *self {
            MonetaryPolicy::Constant { r0, .. } => r0,
            MonetaryPolicy::GeometricHalfLife { r0, half_life, .. } => {
                r0 * F::lit(2.0).powf(-tf / half_life)
            }
            MonetaryPolicy::Polynomial { r0, degree, .. } => {
                r0 * (tf + F::one()).powi(degree as i32 - 1)
            }
            MonetaryPolicy::Exponential { r0, growth, .. } => r0 * (growth * tf).exp(),
        };
        r.max(F::min_positive_value())
    }

    /// `s0 + sum_{u=0}^{t} block_reward(u)`, summed term by term.
    pub fn cumulative_supply(&self, t: u64) -> F {
        self.supply_path().nth(t as usize).expect("supply path is infinite")
    }

    /// Iterator over `cumulative_supply(0), cumulative_supply(1), ...` using
    /// the same sequential summation as [`Self::cumulative_supply`].
    pub fn supply_path(&self) -> impl Iterator<Item = F> + '_ {
        (0u64..).scan(self.s0(), move |acc, u| {
            *acc = *acc + self.block_reward(u);
            Some(*acc)
        })
    }

    /// Terminal supply of a half-life schedule, `s0 + r0 / (1 - 2^(-1/h))`.
    pub fn terminal_supply(&self) -> Option<F> {
        match *self {
            MonetaryPolicy::GeometricHalfLife { r0, half_life, s0 } => {
                Some(s0 + r0 / (F::one() - F::lit(2.0).powf(-half_life.recip())))
            }
            _ => None,
        }
    }

    /// Block height of the worst expected single-agent rebalance.
    ///
    /// With `q = n * delta / (gamma * tau_stake * tau_lend)`:
    /// polynomial (and constant, as degree 1) schedules give `t* = q^(1/k)`;
    /// half-life schedules give `t* = -ln(C - sqrt(q))` with `C` the terminal
    /// supply, feasible only when the log argument lies in `(0, 1)`.
    pub fn worst_rebalance_time(
        &self,
        n: usize,
        delta: F,
        gamma: F,
        tau_stake: F,
        tau_lend: F,
    ) -> Result<RebalanceTime<F>> {
        for (name, v) in [
            ("gamma", gamma),
            ("tau_stake", tau_stake),
            ("tau_lend", tau_lend),
        ] {
            if !(v > F::zero()) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if n == 0 {
            return Err(Error::domain("agent count must be positive"));
        }
        if !(delta > F::zero() && delta < F::one()) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        let q = F::from_count(n as u64) * delta / (gamma * tau_stake * tau_lend);
        match *self {
            MonetaryPolicy::Constant { .. } => Ok(RebalanceTime {
                time: q,
                feasible: true,
            }),
            MonetaryPolicy::Polynomial { degree, .. } => Ok(RebalanceTime {
                time: q.powf(F::from_count(degree as u64).recip()),
                feasible: true,
            }),
            MonetaryPolicy::GeometricHalfLife { .. } => {
                let c = self.terminal_supply().expect("half-life policy");
                let arg = c - q.sqrt();
                let feasible = arg > F::zero() && arg < F::one();
                let time = if arg > F::zero() { -arg.ln() } else { F::nan() };
                Ok(RebalanceTime { time, feasible })
            }
            MonetaryPolicy::Exponential { .. } => Err(Error::UnsupportedAnalysis("exponential")),
        }
    }
}
