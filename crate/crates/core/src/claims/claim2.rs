//! Claim 2: under fast exponential supply growth, per-agent stake moves
//! larger than `S_t^b` have probability below `2^(-tau_stake S_t^b)`.

use super::theory::{TheoryConfig, TheoryPath};
use super::{ClaimReport, Verdict};

/// One-sided binomial slack: the larger of the empirical and bound-implied
/// standard errors.
pub(crate) fn binomial_se(freq: f64, bound: f64, trials: f64) -> f64 {
    let p = freq.max(bound.min(1.0));
    (p * (1.0 - p) / trials).sqrt()
}

pub fn check_claim2_tail(paths: &[TheoryPath], config: &TheoryConfig, exponent: f64) -> ClaimReport {
    let check = "stake tail";
    if !(config.growth > config.tau_stake) {
        return ClaimReport::inapplicable(
            2,
            check,
            format!("supply growth rate {} must exceed tau_stake {}", config.growth, config.tau_stake),
        );
    }
    if let Some(p) = paths.iter().find(|p| !(p.min_wealth > 0.0)) {
        return ClaimReport::inapplicable(2, check, format!("min wealth must stay positive, got {}", p.min_wealth));
    }
    if paths.is_empty() {
        return ClaimReport::inapplicable(2, check, "empty ensemble");
    }
    let steps = paths[0].supply.len() - 1;
    let trials = (paths.len() * config.n_agents) as f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let (mut worst_t, mut worst_freq, mut worst_bound) = (0, 0.0, 0.0);
    let mut total_exceed = 0u64;
    for t in 0..steps {
        let threshold = paths[0].supply[t].powf(exponent);
        let exceed: usize = paths
            .iter()
            .map(|p| p.stake[t].iter().zip(&p.stake[t + 1]).filter(|(a, b)| (*b - *a).abs() > threshold).count())
            .sum();
        total_exceed += exceed as u64;
        let freq = exceed as f64 / trials;
        let bound = (-config.tau_stake * threshold * std::f64::consts::LN_2).exp();
        let excess = freq - bound - 3.0 * binomial_se(freq, bound, trials);
        if excess > worst_excess {
            (worst_excess, worst_t, worst_freq, worst_bound) = (excess, t, freq, bound);
        }
    }
    let mut r = ClaimReport::new(2, check)
        .measured("worst_excess", worst_excess)
        .measured("freq_at_worst", worst_freq)
        .measured("worst_step", worst_t as f64)
        .measured("total_exceedances", total_exceed as f64)
        .target("bound_at_worst", worst_bound);
    r.tolerance = 3.0;
    r.samples = trials as u64 * steps as u64;
    r.verdict = if worst_excess <= 0.0 { Verdict::Pass } else { Verdict::Fail };
    r.note = format!("exponent={exponent}; excess = freq - bound - 3 se over steps, pass when <= 0");
    r
}
