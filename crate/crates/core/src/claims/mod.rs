//! Numerical checks of the model's formal results against brute-force and
//! Monte-Carlo oracles.
//!
//! The checks use the idealized dynamics the analysis assumes (two-state
//! demand, unconstrained Markowitz weights, no risk-appetite factor), except
//! the rebalance bound of claim 1, which is evaluated on simulator output.

mod claim1;
mod claim2;
mod claim3;
mod claim4;
mod claim5;
mod claim6;
mod harness;
mod theory;

use std::fmt::{self, Write as _};

pub use claim1::{check_claim1_bound, f_delta, StakePath};
pub use claim2::check_claim2_tail;
pub use claim3::{conditional_lending_moments, LendingMoments};
pub use claim4::{aleph, doob_tail_check, Claim4Ensemble};
pub use claim5::{empirical_drift, martingale_roots, DriftInstance, MartingaleKind, Roots};
pub use claim6::{bessel_k1, check_claim6, product_cdf, product_cdf_monte_carlo, ProductCdf, PRODUCT_CDF_GRID};
pub use harness::{run_claim, ClaimSelection, CLAIM4_THRESHOLDS_IN_SD};
pub use theory::{simulate_theory, TheoryConfig, TheoryPath};

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Monte-Carlo noise is too large to decide.
    Inconclusive,
    /// The claim's hypothesis does not hold; carries the failed hypothesis.
    Inapplicable(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("PASS"),
            Verdict::Fail => f.write_str("FAIL"),
            Verdict::Inconclusive => f.write_str("INCONCLUSIVE"),
            Verdict::Inapplicable(_) => f.write_str("INAPPLICABLE"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClaimReport {
    pub claim: u8,
    /// Short name of the check within the claim.
    pub check: String,
    pub verdict: Verdict,
    pub measured: Vec<(String, f64)>,
    pub target: Vec<(String, f64)>,
    pub tolerance: f64,
    pub samples: u64,
    pub note: String,
}

pub const CLAIM_CSV_HEADER: &str = "claim,check,verdict,tolerance,samples,measured,target,note";

impl ClaimReport {
    pub fn new(claim: u8, check: impl Into<String>) -> Self {
        Self {
            claim,
            check: check.into(),
            verdict: Verdict::Pass,
            measured: Vec::new(),
            target: Vec::new(),
            tolerance: 0.0,
            samples: 0,
            note: String::new(),
        }
    }

    pub fn inapplicable(claim: u8, check: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        let hypothesis = hypothesis.into();
        Self {
            verdict: Verdict::Inapplicable(hypothesis.clone()),
            note: hypothesis,
            ..Self::new(claim, check)
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn measured(mut self, name: &str, value: f64) -> Self {
        self.measured.push((name.to_string(), value));
        self
    }

    pub fn target(mut self, name: &str, value: f64) -> Self {
        self.target.push((name.to_string(), value));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.measured.iter().chain(&self.target).find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// One human-readable line.
    pub fn to_text(&self) -> String {
        let mut out = format!("claim {} [{}] {}", self.claim, self.check, self.verdict);
        for (k, v) in &self.measured {
            let _ = write!(out, " {k}={v:.6e}");
        }
        if !self.target.is_empty() {
            out.push_str(" |");
            for (k, v) in &self.target {
                let _ = write!(out, " {k}={v:.6e}");
            }
        }
        let _ = write!(out, " | tol={:.3e} n={}", self.tolerance, self.samples);
        if !self.note.is_empty() {
            let _ = write!(out, " | {}", self.note);
        }
        out
    }

    pub fn to_csv_row(&self) -> String {
        let join = |xs: &[(String, f64)]| xs.iter().map(|(k, v)| format!("{k}={v:e}")).collect::<Vec<_>>().join(";");
        format!(
            "{},{},{},{:e},{},{},{},\"{}\"",
            self.claim,
            self.check,
            self.verdict,
            self.tolerance,
            self.samples,
            join(&self.measured),
            join(&self.target),
            self.note.replace('"', "'")
        )
    }
}

pub fn reports_to_text(reports: &[ClaimReport]) -> String {
    reports.iter().map(|r| r.to_text() + "\n").collect()
}

pub fn reports_to_csv(reports: &[ClaimReport]) -> String {
    let mut out = String::from(CLAIM_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_formatting() {
        let r = ClaimReport::new(3, "moments").measured("mean", 0.35).target("mean", 0.35);
        let line = r.to_text();
        assert!(line.starts_with("claim 3 [moments] PASS mean=3.5"), "{line}");
        let csv = reports_to_csv(std::slice::from_ref(&r));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CLAIM_CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[..3], ["3", "moments", "PASS"]);
        assert_eq!(r.get("mean"), Some(0.35));
        let r = ClaimReport::inapplicable(1, "bound", "staked share above delta");
        assert!(!r.passed());
        assert!(r.to_text().contains("INAPPLICABLE"));
    }
}
