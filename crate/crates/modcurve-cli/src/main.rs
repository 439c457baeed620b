//! `modcurve`: batch driver for certified maps from modular curves to rank-0 elliptic curves.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::LevelFilter;
use serde::Serialize;

use modcurve::bundle::{candidate_factors, load_table, CurveBundle};
use modcurve::exactmath::rational::parse_rat;
use modcurve::pipeline::{run_find_map, run_rat_pts, select_classes, summarize_bundle, PipelineConfig};

#[derive(Parser, Debug)]
#[command(name = "modcurve", version, about = "Certified maps from modular curves to rank-0 elliptic curves")]
struct Cli {
    /// Narrate each step on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate a bundle, print its summary.
    Init { bundle: PathBuf },
    /// Isogeny classes from a table whose eigenvalues occur on the bundle's cusp forms.
    Candidates {
        bundle: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// Largest Hecke prime used.
        #[arg(long, default_value_t = 50)]
        pmax: u64,
    },
    /// Find and certify the map of least degree to a rank-0 candidate.
    FindMap(RunArgs),
    /// Find the map, then determine X(ℚ) from it.
    RatPts(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    bundle: PathBuf,
    #[arg(long)]
    table: PathBuf,
    /// Restrict to these isogeny classes (repeatable); default: all rank-0 candidates.
    #[arg(long = "class")]
    classes: Vec<String>,
    /// Working-precision multiplier, a rational ≥ 1.
    #[arg(long, default_value = "1")]
    precmult: String,
    /// Skip the base-point search and translation.
    #[arg(long)]
    ignore_base: bool,
    #[arg(long, default_value_t = 20)]
    num_mats: usize,
    #[arg(long, default_value_t = 128)]
    precision_bits: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Bound for the upper-bound prime ℓ.
    #[arg(long, default_value_t = 400)]
    prime_bound: u64,
    /// Coordinate bound for the rational point search.
    #[arg(long, default_value_t = 10)]
    height_bound: i64,
}

impl RunArgs {
    fn config(&self, verbose: bool) -> Result<PipelineConfig> {
        let precmult = parse_rat(&self.precmult).with_context(|| format!("--precmult {}", self.precmult))?;
        let cfg = PipelineConfig {
            precmult,
            ignore_base: self.ignore_base,
            verbose,
            num_mats: self.num_mats,
            precision_bits: self.precision_bits,
            seed: self.seed,
            prime_bound: self.prime_bound,
            height_bound: self.height_bound,
            ..PipelineConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(path: &Path) -> Result<CurveBundle> {
    CurveBundle::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Writes through a temporary file in the same directory so readers never see half a report.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        None => println!("{text}"),
        Some(p) => {
            let tmp = p.with_extension("tmp");
            fs::write(&tmp, text + "\n").with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, p).with_context(|| format!("renaming to {}", p.display()))?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { LevelFilter::Info } else { LevelFilter::Warn })
        .parse_default_env()
        .format_timestamp(None)
        .init();
    let out = cli.output.as_deref();
    match &cli.cmd {
        Command::Init { bundle } => emit(&summarize_bundle(&load(bundle)?), out),
        Command::Candidates { bundle, table, pmax } => {
            let b = load(bundle)?;
            let t = load_table(table)?;
            emit(&candidate_factors(&b, &t, *pmax)?, out)
        }
        Command::FindMap(a) => {
            let cfg = a.config(cli.verbose)?;
            let b = load(&a.bundle)?;
            let classes = select_classes(&b, &load_table(&a.table)?, &a.classes, &cfg)?;
            emit(&run_find_map(&b, &classes, &cfg)?.report, out)
        }
        Command::RatPts(a) => {
            let cfg = a.config(cli.verbose)?;
            let b = load(&a.bundle)?;
            let classes = select_classes(&b, &load_table(&a.table)?, &a.classes, &cfg)?;
            let run = run_find_map(&b, &classes, &cfg)?;
            let report = run_rat_pts(&b, run, &cfg)?;
            let ok = report.success;
            emit(&report, out)?;
            if !ok {
                anyhow::bail!("point determination incomplete; see the report");
            }
            Ok(())
        }
    }
}
