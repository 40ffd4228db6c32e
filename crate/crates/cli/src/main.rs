//! `infgen`: run inflated-generator analyses from a JSON config.
//!
//! Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infgen_core::pipeline::{
    export_selection, parse_time_indices, run_pipeline, run_seba, RunArtifacts, RunConfig, RunManifest, RunOptions,
    SebaRequest, Selection,
};
use infgen_core::{Error, Result, TimeUnit};

const THREADS_VAR: &str = "INFGEN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "infgen", version, about = "Quasi-stationary almost-invariant families via the inflated generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full run: spectrum, classification, SEBA and field exports.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Stops after classification.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// SEBA on chosen eigenvectors of an existing run.
    Seba {
        #[arg(long)]
        run: PathBuf,
        /// 1-based eigenvector indices, e.g. `1,2,4`.
        #[arg(long, value_delimiter = ',', required = true)]
        vectors: Vec<usize>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Writes one stored vector into `<run>/export/`.
    Export {
        #[arg(long)]
        run: PathBuf,
        /// `vec:<i>` or `seba:<j>`.
        #[arg(long)]
        select: String,
        /// Time nodes such as `t0,t4`; every node when absent.
        #[arg(long)]
        times: Option<String>,
    },
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR}=`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))
}

fn print_summary(artifacts: &RunArtifacts) {
    let m = &artifacts.manifest;
    println!("run directory: {}", artifacts.dir.display());
    if let Some(r) = &m.resolved {
        println!(
            "grid {} boxes x {} nodes, h = {}, tau = {}",
            r.n, r.n_t, r.h, r.tau
        );
        println!("epsilon = {} ({:?}), epsilon_total = {}", r.epsilon, r.epsilon_source, r.epsilon_total);
        println!("a = {} ({:?}), heuristic a = {}", r.a, r.a_source, r.a_heuristic);
        if let (TimeUnit::Days, Some(alt)) = (r.time_unit, r.a_consistent) {
            println!("a convention: tau in days, lengths in metres, speeds in m/s (mixed units)");
            println!("dimensionally consistent alternative (sqrt(day)): a = {alt}");
        }
        println!(
            "leading temporal eigenvalue: {} (continuum {})",
            r.temporal_eigenvalue_discrete, r.temporal_eigenvalue_continuous
        );
    }
    if let Some(gap) = m.matching_gap {
        println!("temporal/spatial matching gap: {gap}");
    }
    println!("{:>5} {:>16} {:>16} {:>16}  class", "index", "re", "im", "residual");
    for e in &m.spectrum {
        println!(
            "{:>5} {:>16.9e} {:>16.9e} {:>16.3e}  {}",
            e.index, e.re, e.im, e.residual, e.classification.class
        );
    }
    println!("SEBA candidates: {:?}", m.seba_candidates);
    if let Some(s) = &m.seba {
        print_families(s);
    }
}

fn print_families(report: &infgen_core::pipeline::SebaReport) {
    println!(
        "SEBA on {:?}: {} iterations (converged: {}), mu = {}",
        report.vectors, report.iterations, report.converged, report.mu
    );
    for f in &report.families {
        println!(
            "family {}: birth {:?} death {:?} peak change at {:?}",
            f.index, f.birth_time, f.death_time, f.peak_change_time
        );
    }
}

fn run_config(path: &Path, spectrum_only: bool) -> Result<()> {
    let config = RunConfig::from_path(path)?;
    let artifacts = run_pipeline(&config, RunOptions { spectrum_only })?;
    print_summary(&artifacts);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Run { config } => run_config(&config, false),
        Command::Spectrum { config } => run_config(&config, true),
        Command::Seba {
            run,
            vectors,
            mu,
            cutoff,
        } => {
            let manifest = RunManifest::load(&run)?;
            let request = SebaRequest {
                vectors,
                mu,
                cutoff: cutoff.unwrap_or(manifest.config.seba.cutoff),
                init: manifest.config.seba.init,
            };
            run_seba(&run, &request)?;
            let manifest = RunManifest::load(&run)?;
            if let Some(s) = &manifest.seba {
                print_families(s);
            }
            Ok(())
        }
        Command::Export { run, select, times } => {
            let selection: Selection = select.parse()?;
            let times = times.as_deref().map(parse_time_indices).transpose()?;
            for path in export_selection(&run, selection, times.as_deref())? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
