mod commands;
mod config;
mod context;
mod error;
mod output;
mod plot;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Suite;
use context::{Common, Ctx};
use error::CliError;

/// Variational laboratory and solver for the SU(3) Toda system on the sphere and the flat torus.
///
/// Artifacts are versioned JSON files in the output directory, with CSV
/// tables next to them. Meshes are cached in $TODA_CACHE_DIR, or in
/// <out-dir>/cache when it is unset.
#[derive(Parser)]
#[command(name = "toda", version)]
struct Cli {
    /// TOML run file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// sphere or torus
    #[arg(long, global = true)]
    surface: Option<String>,
    #[arg(long, global = true)]
    level: Option<u32>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build (or load) the mesh and write its statistics.
    Mesh,
    /// Scale and Moser-Trudinger diagnostics over a random probe corpus.
    Probe {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Concentration scale and barycenter of one or two fields.
    Psi {
        /// Field spec such as bubble:lambda=1e4; repeat for a pair.
        #[arg(long, required = true)]
        field: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Margins of one inequality family along a bubble sweep.
    MtCheck {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Bubble scales; a half-decade sweep from 10 by default.
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integral, energy and concentration scans over the test family.
    TestfnScan {
        /// e.g. 5pi,5pi
        #[arg(long)]
        rho: Option<String>,
        /// JSON grid {"x1": [..], "x2": [..], "lo": .., "hi": .., "n": ..}
        #[arg(long)]
        grid: Option<PathBuf>,
        /// JSON weights {"h1": "exp:a=0.5,axis=z", "h2": ...}
        #[arg(long)]
        h: Option<PathBuf>,
        /// CSV of the integral scan; the JSON and the other tables go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Continuation solve from the coercive range to the target ρ.
    Solve {
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        h: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also solve on this level and compare.
        #[arg(long)]
        compare_level: Option<u32>,
    },
    /// Upper bound for the min-max level and the sublevel barrier check.
    Minmax {
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        h: Option<PathBuf>,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the artifacts of a directory and plot them.
    Report {
        /// Defaults to the output directory.
        dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common =
        Common { config: cli.config, out_dir: cli.out_dir, seed: cli.seed, surface: cli.surface, level: cli.level };
    let ctx = Ctx::resolve(&common)?;
    match cli.cmd {
        Cmd::Mesh => commands::mesh(&ctx),
        Cmd::Probe { n } => commands::probe(&ctx, n),
        Cmd::Psi { field, out } => {
            if field.len() > 2 {
                return Err(CliError::Config("psi takes one or two fields".into()));
            }
            commands::psi(&ctx, &field, out.as_deref())
        }
        Cmd::MtCheck { suite, lambdas, eps, out } => commands::mt_check(&ctx, suite, &lambdas, eps, out.as_deref()),
        Cmd::TestfnScan { rho, grid, h, out, delta, nu } => {
            let args = commands::ScanArgs {
                rho: rho.as_deref(),
                grid: grid.as_deref(),
                h: h.as_deref(),
                out: out.as_deref(),
                delta,
                nu,
            };
            commands::testfn_scan(&ctx, &args)
        }
        Cmd::Solve { rho, h, out, compare_level } => {
            commands::solve(&ctx, rho.as_deref(), h.as_deref(), out.as_deref(), compare_level)
        }
        Cmd::Minmax { rho, h, grid, out } => {
            commands::minmax(&ctx, rho.as_deref(), h.as_deref(), grid.as_deref(), out.as_deref())
        }
        Cmd::Report { dir } => commands::report(&dir.unwrap_or(ctx.out_dir)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
