use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_partition_cli::config::RunConfig;
use spectral_partition_cli::{commands, exit_code, sweep, UsageError};

#[derive(Parser, Debug)]
#[command(name = "specpart", version, about = "Spectral minimal partitions on grids")]
struct Cli {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First eigenpair of each domain.
    Eigen,
    /// Optimized partitions for each domain and m.
    Partition,
    /// Explicit tiling from the [tile] section.
    Tile,
    /// Optimizer sweep with construction bounds and a convergence plot.
    Sweep,
    /// Refined first eigenvalues of the unit-area disk and hexagon.
    Bounds {
        #[arg(long, default_value_t = 256)]
        resolution: usize,
    },
    /// Cut-and-glue energy audit using the [strip] section.
    GlueVerify,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            anyhow::bail!(UsageError("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    match cli.command {
        Command::Eigen => commands::run_eigen(&cfg, &out),
        Command::Partition => commands::run_partition(&cfg, &out),
        Command::Tile => commands::run_tile(&cfg, &out),
        Command::Sweep => {
            let records = sweep::run_sweep(&cfg, &out)?;
            for r in &records {
                if let Some(e) = &r.error {
                    eprintln!("{} m={}: {e}", r.domain_id, r.m);
                }
            }
            Ok(())
        }
        Command::Bounds { resolution } => {
            let r = commands::run_bounds(resolution, &out)?;
            print!("{}", r.to_text());
            Ok(())
        }
        Command::GlueVerify => {
            let runs = commands::run_glue_verify(&cfg, &out)?;
            for r in &runs {
                println!("m={} chain_holds={}", r.report.m, r.report.chain_holds);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
