//! Claim 6: the CDF of `AB` with `A ~ Exp(tau_stake)` and
//! `B ~ Erlang(n, tau_lend)`,
//!
//! ```text
//! Pr[AB <= y] = 1 - tau_lend^n / (n-1)! * int_0^inf x^(n-1) exp(-tau_lend x - tau_stake y / x) dx
//! ```
//!
//! and the steepest-descent bound `Pr[AB <= y] >= 1 - C g(y)` with
//! `g(y) = tau_stake^n / (n-1)! (2 tau_stake y)^(n-1) exp(-tau_stake^2 y + tau_lend / (2 tau_stake))`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::numeric::integrate;
use crate::scalar::Real;

use super::{ClaimReport, Verdict};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductCdf {
    pub exact: f64,
    /// `1 - exact`, computed directly.
    pub complement: f64,
    /// Quadrature error estimate on the complement.
    pub error: f64,
    /// `g(y)`, the bound without its constant.
    pub bound_shape: f64,
}

impl ProductCdf {
    /// `1 - C g(y)`, the claimed lower bound on the CDF.
    pub fn lower_bound(&self, c: f64) -> f64 {
        1.0 - c * self.bound_shape
    }
}

/// `n` values and `y` values of the reference grid for the bound's shape,
/// with unit rates.
pub const PRODUCT_CDF_GRID: (&[u32], &[f64]) = (&[16, 64], &[0.1, 0.3, 1.0, 3.0, 10.0, 30.0]);

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

pub fn product_cdf(y: f64, n: u32, tau_stake: f64, tau_lend: f64) -> Result<ProductCdf> {
    if !(y >= 0.0) {
        return Err(Error::domain(format!("y must be non-negative, got {y}")));
    }
    if n == 0 || !(tau_stake > 0.0 && tau_lend > 0.0) {
        return Err(Error::domain("n and both rates must be positive"));
    }
    let nf = n as f64;
    let ln_norm = nf * tau_lend.ln() - ln_factorial(n - 1);
    let power = if n > 1 { (nf - 1.0) * (2.0 * tau_stake * y).ln() } else { 0.0 };
    let ln_shape = nf * tau_stake.ln() - ln_factorial(n - 1) + power - tau_stake * tau_stake * y
        + tau_lend / (2.0 * tau_stake);
    let bound_shape = ln_shape.exp();
    if y == 0.0 {
        return Ok(ProductCdf { exact: 0.0, complement: 1.0, error: 0.0, bound_shape });
    }
    if y.is_infinite() {
        return Ok(ProductCdf { exact: 1.0, complement: 0.0, error: 0.0, bound_shape: 0.0 });
    }
    // Integrate over u = ln(x / x*) around the integrand's mode.
    let (a, b) = (tau_lend, tau_stake * y);
    let x_star = ((nf - 1.0) + ((nf - 1.0).powi(2) + 4.0 * a * b).sqrt()) / (2.0 * a);
    let psi = |u: f64| {
        let x = x_star * u.exp();
        (nf - 1.0) * x.ln() - a * x - b / x + x.ln() + ln_norm
    };
    let peak = psi(0.0);
    let mut lo = -1.0;
    while psi(lo) - peak > -60.0 {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while psi(hi) - peak > -60.0 {
        hi *= 2.0;
    }
    let r = integrate(|u| (psi(u) - peak).exp(), lo, hi, 1e-300, 1e-12)?;
    let scale = peak.exp();
    let complement = (scale * r.value).min(1.0);
    Ok(ProductCdf { exact: 1.0 - complement, complement, error: scale * r.error, bound_shape })
}

/// Monte-Carlo estimate of `Pr[AB <= y]` for each `y`, with standard errors.
pub fn product_cdf_monte_carlo<R: Rng + ?Sized>(
    ys: &[f64],
    n: u32,
    tau_stake: f64,
    tau_lend: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let erlang = Gamma::new(n as f64, 1.0 / tau_lend).map_err(|e| Error::domain(e.to_string()))?;
    let mut hits = vec![0usize; ys.len()];
    for _ in 0..samples {
        let prod = f64::sample_exp(rng, tau_stake) * erlang.sample(rng);
        for (h, &y) in hits.iter_mut().zip(ys) {
            if prod <= y {
                *h += 1;
            }
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| {
            let p = h as f64 / samples as f64;
            (p, (p * (1.0 - p) / samples as f64).sqrt())
        })
        .collect())
}

/// `K_1(z) = int_0^inf exp(-z cosh t) cosh t dt` by the trapezoid rule,
/// which converges geometrically for this integrand.
pub fn bessel_k1(z: f64) -> f64 {
    let h = 1e-3f64;
    let mut sum = 0.5 * (-z).exp();
    let mut t = h;
    loop {
        let c = t.cosh();
        let term = (-z * c).exp() * c;
        sum += term;
        if z * c > 750.0 || (term < 1e-300 && t > 1.0) {
            break;
        }
        t += h;
    }
    sum * h
}

/// Agreement of quadrature, Monte Carlo and (for `n = 1`) the Bessel form,
/// and the shape check of the calibrated bound on the reference grid.
pub fn check_claim6<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Result<Vec<ClaimReport>> {
    let ys = [0.1, 1.0, 10.0];
    let mut reports = Vec::new();
    for n in [1u32, 4] {
        let mc = product_cdf_monte_carlo(&ys, n, 1.0, 1.0, samples, rng)?;
        let mut worst: f64 = 0.0;
        let mut r = ClaimReport::new(6, format!("cdf agreement n={n}"));
        for (&y, &(p, se)) in ys.iter().zip(&mc) {
            let exact = product_cdf(y, n, 1.0, 1.0)?.exact;
            worst = worst.max((exact - p).abs() / se);
            r = r.measured(&format!("mc_y{y}"), p).target(&format!("quad_y{y}"), exact);
            if n == 1 {
                let z = 2.0 * y.sqrt();
                let bessel = 1.0 - z * bessel_k1(z);
                worst = worst.max((bessel - p).abs() / se).max((bessel - exact).abs() / se);
                r = r.target(&format!("bessel_y{y}"), bessel);
            }
        }
        r = r.measured("max_gap_in_se", worst);
        r.tolerance = 3.0;
        r.samples = samples as u64;
        r.verdict = if worst <= 3.0 { Verdict::Pass } else { Verdict::Fail };
        reports.push(r);
    }
    reports.push(check_bound_shape()?);
    Ok(reports)
}

/// Least-squares constant `C = sum Q g / sum g^2` over the reference grid.
pub fn calibrate_c(points: &[ProductCdf]) -> f64 {
    let num: f64 = points.iter().map(|p| p.complement * p.bound_shape).sum();
    let den: f64 = points.iter().map(|p| p.bound_shape * p.bound_shape).sum();
    num / den
}

/// Passes when, for each `n`, the exact complement decays at least as fast
/// as `g` between consecutive grid points, i.e. `Q / g` is non-increasing.
fn check_bound_shape() -> Result<ClaimReport> {
    let (ns, ys) = PRODUCT_CDF_GRID;
    let mut points = Vec::new();
    for &n in ns {
        for &y in ys {
            points.push(product_cdf(y, n, 1.0, 1.0)?);
        }
    }
    let c = calibrate_c(&points);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_at = (0, 0.0);
    let mut covered = 0;
    for (i, &n) in ns.iter().enumerate() {
        let row = &points[i * ys.len()..(i + 1) * ys.len()];
        for (j, w) in row.windows(2).enumerate() {
            let rise = (w[1].complement / w[1].bound_shape).ln() - (w[0].complement / w[0].bound_shape).ln();
            if rise > worst_rise {
                worst_rise = rise;
                worst_at = (n, ys[j + 1]);
            }
        }
        covered += row.iter().filter(|p| p.complement <= c * p.bound_shape).count();
    }
    let mut r = ClaimReport::new(6, "bound decay")
        .measured("max_log_ratio_rise", worst_rise)
        .measured("worst_n", worst_at.0 as f64)
        .measured("worst_y", worst_at.1)
        .measured("grid_points_bounded", covered as f64)
        .target("calibrated_c", c)
        .target("grid_points", points.len() as f64);
    r.samples = points.len() as u64;
    r.verdict = if worst_rise <= 0.0 { Verdict::Pass } else { Verdict::Fail };
    r.note = "log(Q/g) must not rise along y; unit rates".to_string();
    Ok(r)
}
