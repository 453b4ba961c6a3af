use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use stakelend::claims::{reports_to_csv, reports_to_text, run_claim, ClaimSelection};
use stakelend::sweep::run_sweep_with_threads;
use stakelend::{emit_heatmap_csv, load_config, run_trajectory, ConfigFile, SweepSpec};

#[derive(Parser)]
#[command(name = "stakelend", version, about = "Staking versus lending token-economy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write its per-block CSV.
    Simulate {
        /// Flat key = value configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep and write one heatmap CSV per
    /// (borrow threshold, inflation ratio) pair.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Seeds `seed .. seed + N`, replacing any `seeds` in the file.
        #[arg(long)]
        seeds: Option<u64>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Check the formal results against Monte-Carlo and quadrature oracles.
    VerifyClaims {
        /// 1-6 or all.
        #[arg(long, default_value = "all")]
        claim: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Text report path; a CSV is written next to it.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn load(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => load_config(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(stakelend::parse_config("")?),
    }
}

fn simulate(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut sim = load(config)?.sim;
    if let Some(s) = seed {
        sim.seed = s;
    }
    let traj = run_trajectory(&sim)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    traj.write_csv(BufWriter::new(file))?;
    eprintln!(
        "wrote {} blocks to {} (f = {:.6}, g = {:.6})",
        sim.horizon,
        out.display(),
        stakelend::metric_f(&traj)?,
        stakelend::metric_g(&traj)?
    );
    Ok(())
}

fn sweep(config: Option<&Path>, out_dir: &Path, seeds: Option<u64>, parallelism: Option<usize>) -> Result<()> {
    let file = load(config)?;
    let seeds = seeds.map(|n| (file.sim.seed..file.sim.seed + n).collect());
    let spec = SweepSpec::from_config(&file, seeds, out_dir.to_path_buf())?;
    let threads = match parallelism {
        Some(0) => bail!("--parallelism must be positive"),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    eprintln!("running {} trajectories on {threads} threads", spec.n_trajectories());
    let tables = run_sweep_with_threads(&spec, threads)?;
    for table in &tables {
        let path = emit_heatmap_csv(table, &spec.outputs)?;
        let errors: usize = table.cells.iter().map(|c| c.n_errors).sum();
        println!("{}", path.display());
        if let Some(first) = table.cells.iter().find_map(|c| c.first_error.as_deref()) {
            eprintln!("{errors} failed trajectories in {}; first: {first}", path.display());
        }
    }
    Ok(())
}

fn verify_claims(claim: &str, samples: usize, seed: u64, report: Option<&Path>) -> Result<()> {
    let selection: ClaimSelection = claim.parse()?;
    let mut reports = Vec::new();
    for c in selection.claims() {
        reports.extend(run_claim(c, samples, seed)?);
    }
    let text = reports_to_text(&reports);
    print!("{text}");
    if let Some(path) = report {
        let csv_path = if path.extension().is_some_and(|e| e == "csv") {
            std::fs::write(path.with_extension("txt"), &text)?;
            path.to_path_buf()
        } else {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            path.with_extension("csv")
        };
        std::fs::write(&csv_path, reports_to_csv(&reports))?;
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    eprintln!("{passed}/{} checks passed", reports.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, seed, out } => simulate(config.as_deref(), *seed, out),
        Command::Sweep { config, out_dir, seeds, parallelism } => {
            sweep(config.as_deref(), out_dir, *seeds, *parallelism)
        }
        Command::VerifyClaims { claim, samples, seed, report } => {
            verify_claims(claim, *samples, *seed, report.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
