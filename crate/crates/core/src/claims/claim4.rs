//! Claim 4: with enough borrowing demand, `D_lend(t)^2` is a submartingale
//! and `Pr[max_t D_lend(t)^2 > lam] < Var[D_lend(t)^2] / lam^2`.

use crate::error::Result;
use crate::rng::{Purpose, StreamFactory};

use super::claim2::binomial_se;
use super::theory::{simulate_theory, TheoryConfig, TheoryPath};
use super::{ClaimReport, Verdict};

/// Lower bound on the lend rate when lent supply never exceeds supply:
/// `U >= k / (k + 1)`.
pub fn aleph(k: f64, beta0: f64, beta1: f64, spread: f64) -> f64 {
    let u = k / (k + 1.0);
    (1.0 - spread) * u * (beta0 + beta1 * u)
}

/// `a_t = l_t tau_lend / (S_t eta_t)`; the claim needs `k >= a_t / (1 - a_t)`.
fn required_k(path: &TheoryPath, tau_lend: f64) -> Option<f64> {
    let mut need: f64 = 0.0;
    for t in 0..path.supply.len() {
        let a = path.lent[t] * tau_lend / (path.supply[t] * path.eta[t]);
        if a >= 1.0 {
            return None;
        }
        need = need.max(a / (1.0 - a));
    }
    Some(need)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claim4Ensemble {
    pub paths: Vec<TheoryPath>,
    /// Demand level each trajectory ran with.
    pub ks: Vec<f64>,
    /// Trajectories whose hypothesis could not be met.
    pub rejected: usize,
}

impl Claim4Ensemble {
    /// Runs `trajectories` paths. Each starts from `config.k` and raises `k`
    /// to the hypothesis' requirement, re-running on the same stream until
    /// the requirement holds along the whole path.
    pub fn generate(config: &TheoryConfig, trajectories: usize, seed: u64) -> Result<Self> {
        let streams = StreamFactory::new(seed);
        let mut out = Claim4Ensemble { paths: Vec::new(), ks: Vec::new(), rejected: 0 };
        for j in 0..trajectories as u64 {
            let mut c = config.clone();
            let mut accepted = None;
            for _ in 0..50 {
                let path = simulate_theory(&c, &mut streams.stream(Purpose::Claims, j))?;
                match required_k(&path, c.tau_lend) {
                    None => break,
                    Some(need) if c.k >= need => {
                        accepted = Some(path);
                        break;
                    }
                    Some(need) => c.k = need * (1.0 + 1e-9),
                }
            }
            match accepted {
                Some(p) => {
                    out.paths.push(p);
                    out.ks.push(c.k);
                }
                None => out.rejected += 1,
            }
        }
        Ok(out)
    }

    pub fn squared_increments(&self) -> Vec<Vec<f64>> {
        self.paths.iter().map(|p| p.squared_lend_increments()).collect()
    }
}

/// Exceedance frequency of `max_t X_t > threshold` against `Var[X_T] /
/// threshold^2`, with `X_T` the last increment and its variance taken across
/// the ensemble.
pub fn doob_tail_check(squared_increments: &[Vec<f64>], threshold: f64) -> ClaimReport {
    let check = "doob tail";
    let m = squared_increments.len();
    if m < 2 || squared_increments.iter().any(|x| x.is_empty()) {
        return ClaimReport::inapplicable(4, check, "need at least two non-empty trajectories");
    }
    let last: Vec<f64> = squared_increments.iter().map(|x| *x.last().expect("non-empty")).collect();
    let mean = last.iter().sum::<f64>() / m as f64;
    let var = last.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
    let exceed = squared_increments
        .iter()
        .filter(|x| x.iter().copied().fold(f64::NEG_INFINITY, f64::max) > threshold)
        .count();
    let freq = exceed as f64 / m as f64;
    let bound = if threshold.is_infinite() { 0.0 } else { var / (threshold * threshold) };
    let se = binomial_se(freq, bound, m as f64);
    let mut r = ClaimReport::new(4, check)
        .measured("exceedance", freq)
        .measured("var_last", var)
        .measured("mean_last", mean)
        .target("bound", bound)
        .target("threshold", threshold);
    r.tolerance = 3.0;
    r.samples = m as u64;
    r.verdict = if freq <= bound + 3.0 * se { Verdict::Pass } else { Verdict::Fail };
    r.note = "pass when exceedance <= bound + 3 binomial se".to_string();
    r
}
