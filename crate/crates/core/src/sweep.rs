//! Parameter sweeps over the rate-curve, inflation and borrow-threshold axes.
//!
//! Each (inflation ratio, borrow threshold) pair yields one [`HeatmapTable`]
//! over the (beta0, beta1) grid. Every trajectory is seeded with its seed value
//! alone, so a cell's result does not depend on the grid around it, and
//! per-seed metrics are folded in seed order so thread scheduling cannot
//! change the aggregate.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::config_file::ConfigFile;
use crate::error::{Error, Result};
use crate::policy::MonetaryPolicy;
use crate::sim::{metric_f, metric_g, run_trajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: SimConfig<f64>,
    pub beta0_grid: Vec<f64>,
    pub beta1_grid: Vec<f64>,
    /// Per-epoch reward ratios; `None` keeps the base policy.
    pub inflation_grid: Vec<Option<f64>>,
    /// Values of `1 - eta0`; `None` keeps the base demand band.
    pub borrow_threshold_grid: Vec<Option<f64>>,
    pub seeds: Vec<u64>,
    pub outputs: PathBuf,
}

impl SweepSpec {
    /// Builds a spec from a parsed file. Absent grids collapse to the base
    /// value; `seeds` overrides the file's seed list when given.
    pub fn from_config(file: &ConfigFile, seeds: Option<Vec<u64>>, outputs: PathBuf) -> Result<Self> {
        let base = file.sim.clone();
        let axes = &file.sweep;
        let inflation_grid = match &axes.inflation_grid {
            Some(g) => g.iter().copied().map(Some).collect(),
            None => vec![file.inflation_ratio.or(match base.policy {
                MonetaryPolicy::Constant { .. } => Some(1.0),
                _ => None,
            })],
        };
        let borrow_threshold_grid = match &axes.borrow_threshold_grid {
            Some(g) => g.iter().copied().map(Some).collect(),
            None => vec![base.demand.band_params().map(|(eta0, _)| 1.0 - eta0)],
        };
        let spec = SweepSpec {
            beta0_grid: axes.beta0_grid.clone().unwrap_or_else(|| vec![base.beta0]),
            beta1_grid: axes.beta1_grid.clone().unwrap_or_else(|| vec![base.beta1]),
            inflation_grid,
            borrow_threshold_grid,
            seeds: seeds.or_else(|| axes.seeds.clone()).unwrap_or_else(|| vec![base.seed]),
            outputs,
            base,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for (name, grid) in [("beta0_grid", &self.beta0_grid), ("beta1_grid", &self.beta1_grid)] {
            if grid.is_empty() {
                return Err(Error::config(name, "must not be empty"));
            }
            if grid.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
                return Err(Error::config(name, "values must lie in (0, 1)"));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(name, "values must be strictly ascending"));
            }
        }
        if self.inflation_grid.is_empty() {
            return Err(Error::config("inflation_grid", "must not be empty"));
        }
        for ir in self.inflation_grid.iter().flatten() {
            if !(ir.is_finite() && *ir > 0.0) {
                return Err(Error::config("inflation_grid", "ratios must be positive and finite"));
            }
        }
        if self.borrow_threshold_grid.is_empty() {
            return Err(Error::config("borrow_threshold_grid", "must not be empty"));
        }
        for bt in self.borrow_threshold_grid.iter().flatten() {
            if self.base.demand.band_params().is_none() {
                return Err(Error::config("borrow_threshold_grid", "requires walk or GBM demand"));
            }
            if !(0.0..=1.0).contains(bt) {
                return Err(Error::config("borrow_threshold_grid", "values must lie in [0, 1]"));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds", "must be distinct"));
        }
        // Every cell must be constructible before any work starts.
        for &ir in &self.inflation_grid {
            for &bt in &self.borrow_threshold_grid {
                for &b0 in &self.beta0_grid {
                    for &b1 in &self.beta1_grid {
                        self.cell_config(ir, bt, b0, b1, self.seeds[0])?.validate()?;
                    }
                }
            }
        }
        Ok(())
    }

    /// The configuration a single trajectory of the sweep runs with.
    pub fn cell_config(&self, ir: Option<f64>, bt: Option<f64>, beta0: f64, beta1: f64, seed: u64) -> Result<SimConfig<f64>> {
        let mut c = self.base.clone();
        c.beta0 = beta0;
        c.beta1 = beta1;
        c.seed = seed;
        if let Some(ir) = ir {
            c.policy = MonetaryPolicy::from_epoch_ratio(ir, c.policy.r0(), c.policy.s0(), c.tau_stake)?;
        }
        if let Some(bt) = bt {
            c.demand = c.demand.with_eta0(1.0 - bt);
        }
        Ok(c)
    }

    pub fn n_trajectories(&self) -> usize {
        self.inflation_grid.len()
            * self.borrow_threshold_grid.len()
            * self.beta0_grid.len()
            * self.beta1_grid.len()
            * self.seeds.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapCell {
    pub beta0: f64,
    pub beta1: f64,
    pub f_mean: f64,
    pub f_std: f64,
    pub g_mean: f64,
    pub g_std: f64,
    pub n_seeds: usize,
    pub n_errors: usize,
    /// Message of the lowest-seed failure, if any.
    pub first_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapTable {
    pub inflation_ratio: Option<f64>,
    pub borrow_threshold: Option<f64>,
    /// Row-major over `beta0`, then `beta1`.
    pub cells: Vec<HeatmapCell>,
}

pub const HEATMAP_CSV_HEADER: &str = "beta0,beta1,f_mean,f_std,g_mean,g_std,n_seeds,n_errors";

impl HeatmapTable {
    /// `dfs_bt_<bt>_ir_<ir>.csv`; integral values keep one decimal.
    pub fn file_name(&self) -> String {
        format!("dfs_bt_{}_ir_{}.csv", label(self.borrow_threshold), label(self.inflation_ratio))
    }

    pub fn cell(&self, beta0: f64, beta1: f64) -> Option<&HeatmapCell> {
        self.cells.iter().find(|c| c.beta0 == beta0 && c.beta1 == beta1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEATMAP_CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                c.beta0, c.beta1, c.f_mean, c.f_std, c.g_mean, c.g_std, c.n_seeds, c.n_errors
            );
        }
        out
    }
}

/// Shortest decimal after rounding to 12 significant digits, so that a
/// threshold derived as `1 - 0.98` still reads `0.02`.
fn label(x: Option<f64>) -> String {
    let Some(v) = x else {
        return "base".to_string();
    };
    let v: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    if v.fract() == 0.0 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Mean and sample standard deviation (zero for a single value, NaN for none).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

type SeedResult = (u64, std::result::Result<(f64, f64), String>);

fn run_one(spec: &SweepSpec, ir: Option<f64>, bt: Option<f64>, b0: f64, b1: f64, seed: u64) -> SeedResult {
    let out = spec
        .cell_config(ir, bt, b0, b1, seed)
        .and_then(|c| run_trajectory(&c))
        .and_then(|t| Ok((metric_f(&t)?, metric_g(&t)?)))
        .map_err(|e| e.to_string());
    (seed, out)
}

fn aggregate(beta0: f64, beta1: f64, mut results: Vec<SeedResult>) -> HeatmapCell {
    results.sort_by_key(|r| r.0);
    let mut fs = Vec::with_capacity(results.len());
    let mut gs = Vec::with_capacity(results.len());
    let mut n_errors = 0;
    let mut first_error = None;
    for (seed, r) in results {
        match r {
            Ok((f, g)) => {
                fs.push(f);
                gs.push(g);
            }
            Err(msg) => {
                n_errors += 1;
                first_error.get_or_insert_with(|| format!("seed {seed}: {msg}"));
            }
        }
    }
    let (f_mean, f_std) = mean_std(&fs);
    let (g_mean, g_std) = mean_std(&gs);
    HeatmapCell { beta0, beta1, f_mean, f_std, g_mean, g_std, n_seeds: fs.len(), n_errors, first_error }
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<HeatmapTable>> {
    spec.validate()?;
    let mut jobs = Vec::with_capacity(spec.n_trajectories());
    for &ir in &spec.inflation_grid {
        for &bt in &spec.borrow_threshold_grid {
            for &b0 in &spec.beta0_grid {
                for &b1 in &spec.beta1_grid {
                    for &seed in &spec.seeds {
                        jobs.push((ir, bt, b0, b1, seed));
                    }
                }
            }
        }
    }
    let results: Vec<SeedResult> = jobs
        .par_iter()
        .map(|&(ir, bt, b0, b1, seed)| run_one(spec, ir, bt, b0, b1, seed))
        .collect();

    let per_cell = spec.seeds.len();
    let per_table = per_cell * spec.beta0_grid.len() * spec.beta1_grid.len();
    let mut tables = Vec::new();
    for (table_jobs, table_results) in jobs.chunks(per_table).zip(results.chunks(per_table)) {
        let (ir, bt, ..) = table_jobs[0];
        let cells = table_jobs
            .chunks(per_cell)
            .zip(table_results.chunks(per_cell))
            .map(|(cj, cr)| aggregate(cj[0].2, cj[0].3, cr.to_vec()))
            .collect();
        tables.push(HeatmapTable { inflation_ratio: ir, borrow_threshold: bt, cells });
    }
    Ok(tables)
}

/// Runs the sweep on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<Vec<HeatmapTable>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("parallelism", e.to_string()))?;
    pool.install(|| run_sweep(spec))
}

/// Writes `table` into `dir` and returns the file path.
pub fn emit_heatmap_csv(table: &HeatmapTable, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(table.file_name());
    std::fs::write(&path, table.to_csv())?;
    Ok(path)
}
