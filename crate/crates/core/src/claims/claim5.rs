//! Claim 5: the one-step drift of `D_lend^2` is the quadratic
//!
//! ```text
//! f(g) = g^2 S^2 eta / tau^2 - g 2 l_t S / tau + (2 l_t l_{t-1} - l_{t-1}^2)
//! ```
//!
//! so `D_lend^2` is a supermartingale between its roots and a submartingale
//! outside them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::moments;
use crate::scalar::Real;

use super::{ClaimReport, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MartingaleKind {
    Submartingale,
    Supermartingale,
    Martingale,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Roots {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `(r-, r+)`, or `None` for a negative discriminant.
    pub roots: Option<(f64, f64)>,
}

impl Roots {
    pub fn f(&self, gamma: f64) -> f64 {
        (self.a * gamma - self.b) * gamma + self.c
    }

    pub fn classify(&self, gamma: f64) -> MartingaleKind {
        if let Some((lo, hi)) = self.roots {
            if gamma == lo || gamma == hi {
                return MartingaleKind::Martingale;
            }
        }
        let v = self.f(gamma);
        let scale = self.a * gamma * gamma + self.b * gamma.abs() + self.c.abs();
        if v.abs() <= 1e-12 * scale {
            MartingaleKind::Martingale
        } else if v > 0.0 {
            MartingaleKind::Submartingale
        } else {
            MartingaleKind::Supermartingale
        }
    }
}

pub fn martingale_roots(l_t: f64, l_prev: f64, supply: f64, eta: f64, tau_lend: f64) -> Result<Roots> {
    for (name, v) in [("l_t", l_t), ("l_prev", l_prev), ("supply", supply), ("eta", eta), ("tau_lend", tau_lend)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let a = supply * supply * eta / (tau_lend * tau_lend);
    let b = 2.0 * l_t * supply / tau_lend;
    let c = 2.0 * l_t * l_prev - l_prev * l_prev;
    let disc = 1.0 + eta * l_prev * (l_prev - 2.0 * l_t) / (l_t * l_t);
    let roots = (disc >= 0.0).then(|| {
        let scale = l_t * tau_lend / (supply * eta);
        let hi = scale * (1.0 + disc.sqrt());
        // Product of roots is c / a; avoids cancellation in 1 - sqrt(disc).
        (c / (a * hi), hi)
    });
    Ok(Roots { a, b, c, roots })
}

/// State for a one-step drift estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftInstance {
    pub wealth: Vec<f64>,
    pub l_t: f64,
    pub l_prev: f64,
    pub tau_lend: f64,
}

impl DriftInstance {
    pub fn supply(&self) -> f64 {
        self.wealth.iter().sum()
    }

    pub fn eta(&self) -> f64 {
        let s = self.supply();
        1.0 + self.wealth.iter().map(|w| w * w).sum::<f64>() / (s * s)
    }

    pub fn roots(&self) -> Result<Roots> {
        martingale_roots(self.l_t, self.l_prev, self.supply(), self.eta(), self.tau_lend)
    }
}

/// Monte-Carlo estimate of `E[D_lend(t)^2] - D_lend(t-1)^2` under
/// `l_{t+1} = gamma sum_i beta_i W_i`, compared in sign with `f(gamma)`.
pub fn empirical_drift<R: Rng + ?Sized>(
    inst: &DriftInstance,
    gamma: f64,
    samples: usize,
    rng: &mut R,
) -> Result<ClaimReport> {
    if samples < 10_000 {
        return Err(Error::domain("empirical drift needs at least 10000 samples"));
    }
    let roots = inst.roots()?;
    let prev = (inst.l_t - inst.l_prev) * (inst.l_t - inst.l_prev);
    let xs: Vec<f64> = (0..samples)
        .map(|_| {
            let next = gamma * inst.wealth.iter().map(|&w| f64::sample_exp(rng, inst.tau_lend) * w).sum::<f64>();
            (next - inst.l_t) * (next - inst.l_t) - prev
        })
        .collect();
    let m = moments(&xs);
    let predicted = roots.f(gamma);
    let mut r = ClaimReport::new(5, "drift sign")
        .measured("drift", m.mean)
        .measured("drift_se", m.mean_se)
        .target("f_gamma", predicted)
        .target("gamma", gamma);
    r.tolerance = 3.0;
    r.samples = samples as u64;
    r.verdict = if m.mean.abs() <= 3.0 * m.mean_se {
        Verdict::Inconclusive
    } else if (m.mean > 0.0) == (predicted > 0.0) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    r.note = format!("classification {:?}", roots.classify(gamma));
    Ok(r)
}
