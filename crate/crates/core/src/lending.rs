//! Utilization-driven lending market: Compound-style rate curve, borrowing
//! demand paths and interest accrual.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{clamp_unit, Real};
use crate::state::SystemState;

/// Quadratic utilization curve `borrow = U (beta0 + beta1 U)` with the lend
/// rate a fixed relative `spread` below the borrow rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateCurve<F> {
    pub beta0: F,
    pub beta1: F,
    pub spread: F,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePair<F> {
    pub borrow: F,
    pub lend: F,
}

impl<F: Real> RateCurve<F> {
    pub fn new(beta0: F, beta1: F, spread: F) -> Self {
        Self { beta0, beta1, spread }
    }

    pub fn rates(&self, utilization: F) -> RatePair<F> {
        rates(utilization, self.beta0, self.beta1, self.spread)
    }

    /// Smallest utilization whose lend rate reaches `lend_rate`, clamped to
    /// `[0, 1]`.
    pub fn utilization_for_lend_rate(&self, lend_rate: F) -> F {
        let borrow = lend_rate / (F::one() - self.spread);
        if borrow <= F::zero() {
            return F::zero();
        }
        let (b0, b1) = (self.beta0, self.beta1);
        let u = if b1 > F::zero() {
            (-b0 + (b0 * b0 + F::lit(4.0) * b1 * borrow).sqrt()) / (F::lit(2.0) * b1)
        } else {
            borrow / b0
        };
        clamp_unit(u)
    }
}

/// Borrow and lend rates at a given utilization.
pub fn rates<F: Real>(utilization: F, beta0: F, beta1: F, spread: F) -> RatePair<F> {
    let u = clamp_unit(utilization);
    let borrow = clamp_unit(u * (beta0 + beta1 * u));
    let lend = (F::one() - spread) * borrow;
    RatePair { borrow, lend }
}

/// Three-state utilization `demand / (lent + demand)`.
pub fn utilization_three_state<F: Real>(demand: F, lent: F) -> Result<F> {
    if !(demand >= F::zero()) || !(lent >= F::zero()) {
        return Err(Error::domain(format!(
            "demand ({demand}) and lent supply ({lent}) must be non-negative"
        )));
    }
    let denom = lent + demand;
    if denom <= F::zero() {
        return Err(Error::domain("utilization undefined with zero demand and zero lent supply"));
    }
    Ok(clamp_unit(demand / denom))
}

/// Two-state utilization with demand pinned at `k * supply`.
pub fn utilization_two_state<F: Real>(k: F, supply: F, lent: F) -> Result<F> {
    if !(supply > F::zero()) {
        return Err(Error::domain(format!("supply must be positive, got {supply}")));
    }
    if !(k > F::zero()) {
        return Err(Error::domain(format!("demand ratio k must be positive, got {k}")));
    }
    utilization_three_state(k * supply, lent)
}

/// Exogenous borrowing-demand generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DemandModel<F> {
    /// Demand is always `k * supply`.
    ConstantK { k: F },
    /// Additive walk with Rademacher steps of size `vol` plus `drift`.
    BoundedRandomWalk { drift: F, vol: F, eta0: F, eta1: F },
    /// Multiplicative log-normal steps.
    ReflectedGbm { drift: F, vol: F, eta0: F, eta1: F },
}

impl<F: Real> DemandModel<F> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DemandModel::ConstantK { .. } => "constant-k",
            DemandModel::BoundedRandomWalk { .. } => "random-walk",
            DemandModel::ReflectedGbm { .. } => "reflected-gbm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DemandModel::ConstantK { k } => {
                if !(k > F::zero()) || !k.is_finite() {
                    return Err(Error::config("demand_k", "must be positive"));
                }
            }
            DemandModel::BoundedRandomWalk { drift, vol, eta0, eta1 }
            | DemandModel::ReflectedGbm { drift, vol, eta0, eta1 } => {
                if !drift.is_finite() {
                    return Err(Error::config("demand_drift", "must be finite"));
                }
                if !(vol >= F::zero()) || !vol.is_finite() {
                    return Err(Error::config("demand_vol", "must be non-negative"));
                }
                if !(eta0 >= F::zero() && eta0 <= F::one()) {
                    return Err(Error::config("eta0", "must lie in [0, 1]"));
                }
                if !(eta1 >= F::zero()) || !eta1.is_finite() {
                    return Err(Error::config("eta1", "must be non-negative"));
                }
                if !(F::one() - eta0 < F::one() + eta1) {
                    return Err(Error::config("eta0", "demand band is empty: need (1-eta0) < (1+eta1)"));
                }
            }
        }
        Ok(())
    }

    /// Reflecting band `[(1 - eta0) S, (1 + eta1) S]`; `None` for constant-k.
    pub fn band(&self, supply: F) -> Option<(F, F)> {
        match *self {
            DemandModel::ConstantK { .. } => None,
            DemandModel::BoundedRandomWalk { eta0, eta1, .. }
            | DemandModel::ReflectedGbm { eta0, eta1, .. } => {
                Some(((F::one() - eta0) * supply, (F::one() + eta1) * supply))
            }
        }
    }

    /// Demand at block 0. Walks start from `preferred` clamped to the band.
    pub fn initial_demand(&self, supply: F, preferred: F) -> Result<F> {
        match *self {
            DemandModel::ConstantK { k } => Ok(k * supply),
            _ => {
                let (lo, hi) = self.band(supply).expect("band exists for walk kinds");
                if preferred.is_nan() {
                    return Err(Error::NonFinite("initial demand"));
                }
                Ok(preferred.max(lo).min(hi))
            }
        }
    }

    /// Advances the demand path by one block.
    pub fn step<R: Rng + ?Sized>(&self, prev: F, supply: F, rng: &mut R) -> Result<F> {
        step_demand(self, prev, supply, rng)
    }
}

impl<F: Real> DemandModel<F> {
    /// `(eta0, eta1)` for banded models.
    pub fn band_params(&self) -> Option<(F, F)> {
        match *self {
            DemandModel::ConstantK { .. } => None,
            DemandModel::BoundedRandomWalk { eta0, eta1, .. } | DemandModel::ReflectedGbm { eta0, eta1, .. } => {
                Some((eta0, eta1))
            }
        }
    }

    pub fn with_eta0(self, eta0: F) -> Self {
        match self {
            DemandModel::ConstantK { .. } => self,
            DemandModel::BoundedRandomWalk { drift, vol, eta1, .. } => {
                DemandModel::BoundedRandomWalk { drift, vol, eta0, eta1 }
            }
            DemandModel::ReflectedGbm { drift, vol, eta1, .. } => DemandModel::ReflectedGbm { drift, vol, eta0, eta1 },
        }
    }
}

/// One step of the borrowing-demand path, reflected into the band.
pub fn step_demand<F: Real, R: Rng + ?Sized>(
    model: &DemandModel<F>,
    prev: F,
    supply: F,
    rng: &mut R,
) -> Result<F> {
    if !(supply > F::zero()) {
        return Err(Error::domain(format!("supply must be positive, got {supply}")));
    }
    if !(prev >= F::zero()) {
        return Err(Error::domain(format!("previous demand must be non-negative, got {prev}")));
    }
    match *model {
        DemandModel::ConstantK { k } => Ok(k * supply),
        DemandModel::BoundedRandomWalk { drift, vol, .. } => {
            let sign = if rng.random::<bool>() { F::one() } else { -F::one() };
            let proposal = prev + drift + vol * sign;
            let (lo, hi) = model.band(supply).expect("walk has a band");
            reflect_into(proposal, lo, hi)
        }
        DemandModel::ReflectedGbm { drift, vol, .. } => {
            let z = F::sample_std_normal(rng);
            let proposal = prev * ((drift - vol * vol / F::lit(2.0)) + vol * z).exp();
            let (lo, hi) = model.band(supply).expect("gbm has a band");
            reflect_into(proposal, lo, hi)
        }
    }
}

/// Folds `x` back across whichever boundary it crosses until it lies in
/// `[lo, hi]`. Repeated folding is the triangle wave of period `2 (hi - lo)`.
pub fn reflect_into<F: Real>(x: F, lo: F, hi: F) -> Result<F> {
    if !(lo <= hi) {
        return Err(Error::config("eta0", format!("empty demand band [{lo}, {hi}]")));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("demand proposal"));
    }
    if x >= lo && x <= hi {
        return Ok(x);
    }
    let width = hi - lo;
    if width <= F::zero() {
        return Ok(lo);
    }
    let period = width + width;
    let mut y = (x - lo) % period;
    if y < F::zero() {
        y = y + period;
    }
    let folded = if y <= width { lo + y } else { hi - (y - width) };
    Ok(folded.max(lo).min(hi))
}

/// Multiplies every lend balance by `1 + lend_rate / rate_period_blocks` and
/// returns the tokens minted.
pub fn accrue_interest<F: Real>(state: &mut SystemState<F>, rate_period_blocks: u64) -> F {
    if state.lend_rate <= F::zero() {
        return F::zero();
    }
    let factor = F::one() + state.lend_rate / F::from_count(rate_period_blocks);
    let mut minted = F::zero();
    for l in state.lend.iter_mut() {
        let grown = *l * factor;
        minted = minted + (grown - *l);
        *l = grown;
    }
    minted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::SystemState;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn two_state_utilization() {
        assert!((utilization_two_state(0.2f64, 1000.0, 300.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(utilization_two_state(0.2, 1000.0, 0.0).unwrap(), 1.0);
        let mut last = 0.0;
        for k in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let u = utilization_two_state(k, 1000.0, 300.0).unwrap();
            assert!(u > last);
            last = u;
        }
        assert!(last > 0.9999);
        assert!(utilization_two_state(0.2, 0.0, 1.0).is_err());
        assert!(utilization_two_state(0.2, -5.0, 1.0).is_err());
    }

    #[test]
    fn three_state_utilization() {
        assert_eq!(utilization_three_state(250.0, 250.0).unwrap(), 0.5);
        assert_eq!(utilization_three_state(0.0, 10.0).unwrap(), 0.0);
        assert!((utilization_three_state(400.0f64, 100.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(utilization_three_state(0.0, 0.0).is_err());
    }

    #[test]
    fn compound_parameters() {
        assert_eq!(rates(0.0, 0.05, 0.45, 0.005), RatePair { borrow: 0.0, lend: 0.0 });
        let r = rates(1.0f64, 0.05, 0.45, 0.005);
        assert!((r.borrow - 0.5).abs() < 1e-15);
        assert!((r.lend - 0.4975).abs() < 1e-15);
    }

    #[test]
    fn inverse_curve() {
        let c = RateCurve::new(0.05f64, 0.45, 0.005);
        for u in [0.0, 0.1, 0.5, 0.93, 1.0] {
            let back = c.utilization_for_lend_rate(c.rates(u).lend);
            assert!((back - u).abs() < 1e-12, "{u} -> {back}");
        }
        assert_eq!(c.utilization_for_lend_rate(0.9), 1.0);
    }

    #[test]
    fn constant_k_ignores_history() {
        let m = DemandModel::ConstantK { k: 0.2 };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for prev in [0.0, 5.0, 1e6] {
            assert_eq!(step_demand(&m, prev, 1000.0, &mut rng).unwrap(), 200.0);
        }
    }

    #[test]
    fn frozen_walk_stays_put() {
        let m = DemandModel::BoundedRandomWalk { drift: 0.0, vol: 0.0, eta0: 0.5, eta1: 0.5 };
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..50 {
            assert_eq!(step_demand(&m, 700.0, 1000.0, &mut rng).unwrap(), 700.0);
        }
    }

    #[test]
    fn walk_reflects_off_upper_band() {
        let m = DemandModel::BoundedRandomWalk { drift: 30.0, vol: 0.0, eta0: 0.5, eta1: 0.2 };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let next = step_demand(&m, 1200.0, 1000.0, &mut rng).unwrap();
        assert!(next > 500.0 && next < 1200.0);
        assert_eq!(next, 1170.0);
    }

    #[test]
    fn reflection_handles_large_excursions() {
        assert_eq!(reflect_into(12.0, 0.0, 10.0).unwrap(), 8.0);
        assert_eq!(reflect_into(-3.0, 0.0, 10.0).unwrap(), 3.0);
        assert_eq!(reflect_into(25.0, 0.0, 10.0).unwrap(), 5.0);
        assert_eq!(reflect_into(-27.0, 0.0, 10.0).unwrap(), 7.0);
        assert_eq!(reflect_into(3.0, 5.0, 5.0).unwrap(), 5.0);
        assert!(reflect_into(3.0, 6.0, 5.0).is_err());
    }

    #[test]
    fn empty_band_rejected() {
        let m = DemandModel::BoundedRandomWalk { drift: 0.0, vol: 1.0, eta0: 0.0, eta1: 0.0 };
        assert!(m.validate().is_err());
        let ok = DemandModel::ReflectedGbm { drift: 0.0, vol: 1.0, eta0: 0.3, eta1: 0.0 };
        assert!(ok.validate().is_ok());
    }

    fn lending_state(lend: Vec<f64>, rate: f64) -> SystemState<f64> {
        let mut s = SystemState::empty(lend.len());
        s.stake = vec![1.0; lend.len()];
        s.lend = lend;
        s.lend_rate = rate;
        s
    }

    #[test]
    fn interest_accrual() {
        let mut s = lending_state(vec![100.0, 50.0], 0.0);
        assert_eq!(accrue_interest(&mut s, 1000), 0.0);
        assert_eq!(s.lend, vec![100.0, 50.0]);

        let mut s = lending_state(vec![100.0, 50.0], 0.1);
        let minted = accrue_interest(&mut s, 1000);
        assert!((s.lend[0] - 100.01).abs() < 1e-12);
        assert!((s.lend[1] - 50.005).abs() < 1e-12);
        assert!((minted - 0.015).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rate_curve_monotone_with_spread(
            u1 in 0.0f64..1.0, u2 in 0.0f64..1.0,
            b0 in 0.001f64..0.999, b1 in 0.001f64..0.999, spread in 0.0f64..0.5,
        ) {
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            let a = rates(lo, b0, b1, spread);
            let b = rates(hi, b0, b1, spread);
            prop_assert!(a.borrow <= b.borrow && a.lend <= b.lend);
            for r in [a, b] {
                prop_assert!(r.lend <= r.borrow);
                prop_assert!((0.0..=1.0).contains(&r.borrow) && (0.0..=1.0).contains(&r.lend));
                prop_assert!(((r.borrow - r.lend) - spread * r.borrow).abs() <= 1e-15);
            }
        }

        #[test]
        fn constant_k_models_agree(k in 0.01f64..10.0, s in 1.0f64..1e7, l in 0.0f64..1e7) {
            prop_assert_eq!(
                utilization_two_state(k, s, l).unwrap(),
                utilization_three_state(k * s, l).unwrap()
            );
        }

        #[test]
        fn demand_stays_in_band(
            seed in any::<u64>(), gbm in any::<bool>(),
            eta0 in 0.0f64..1.0, eta1 in 0.0f64..2.0,
            vol in 0.0f64..2.0, drift in -0.5f64..0.5,
        ) {
            let model = if gbm {
                DemandModel::ReflectedGbm { drift, vol, eta0, eta1 }
            } else {
                DemandModel::BoundedRandomWalk { drift: drift * 500.0, vol: vol * 500.0, eta0, eta1 }
            };
            prop_assume!(model.validate().is_ok());
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut supply = 1000.0;
            let mut d = model.initial_demand(supply, 1000.0).unwrap();
            for step in 0..200 {
                supply *= if step % 2 == 0 { 1.01 } else { 0.995 };
                d = step_demand(&model, d, supply, &mut rng).unwrap();
                let (lo, hi) = model.band(supply).unwrap();
                prop_assert!(d >= lo && d <= hi, "{} not in [{}, {}]", d, lo, hi);
            }
        }
    }
}
