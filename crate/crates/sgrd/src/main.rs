//! `sgrd` — spectral simulator for a stochastically forced damped
//! sine-Gordon equation, with attractor and rotation-number experiments.
//!
//! Every subcommand reads one flat `key = value` config file, runs one
//! experiment, and writes `manifest.json`, `summary.json`, and CSV artifacts
//! into the output directory.  Identical config + seed produce byte-identical
//! artifacts regardless of worker count.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sgrd::config::{load_config, ExperimentKind};
use sgrd::runner::{exit_code, run};
use sgrd::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sgrd",
    version,
    about = "Stochastic damped sine-Gordon: simulation, attractor, and rotation-number experiments",
    after_help = "Config keys (defaults): alpha*, kappa*, delta (auto), length (pi), f ([]), \
                  h1 ([0.1]), h2... , n_modes (32), n_quad (2*n_modes), dt (1e-3), seed (0), \
                  t (10), t_ladder ([10..70]), n_p (128), n_realizations (1), n_ics (8), \
                  curve_tol (1e-4), n_checkpoints (20), alpha_list ([alpha]), kappa_list ([kappa]).\n\
                  * required.  Lists use brackets: f = [0.5, 0.25].  '#' starts a comment.\n\
                  Exit codes: 0 ok, 2 config error, 3 numerical blow-up, 4 i/o error."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate parameters and report derived constants and regime flags.
    CheckParams(RunArgs),
    /// Integrate one trajectory forward; record mean coordinate and fluctuation norm.
    Simulate(RunArgs),
    /// Pullback ladder: absorbing-set check, curve evolution, attractor estimate.
    Attractor(RunArgs),
    /// Ensemble rotation-number estimate with order-preservation diagnostics.
    Rotation(RunArgs),
    /// Parameter sweep over (alpha, kappa): one phase-table row per grid point.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (flat `key = value` text).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: ./sgrd-out; env: SGRD_OUT].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 = all cores [default: 0; env: SGRD_WORKERS].
    #[arg(long)]
    workers: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let (kind, args) = match &cli.cmd {
        Cmd::CheckParams(a) => (ExperimentKind::CheckParams, a),
        Cmd::Simulate(a) => (ExperimentKind::Simulate, a),
        Cmd::Attractor(a) => (ExperimentKind::Attractor, a),
        Cmd::Rotation(a) => (ExperimentKind::Rotation, a),
        Cmd::Sweep(a) => (ExperimentKind::Sweep, a),
    };
    match execute(kind, args) {
        Ok(out) => println!("wrote {}", out.display()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> Result<PathBuf> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = load_config(&text, kind)?;
    if let Some(seed) = args.seed {
        cfg.params.seed = seed;
    }

    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os("SGRD_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sgrd-out"));

    let workers = match args.workers {
        Some(w) => Some(w),
        None => match std::env::var("SGRD_WORKERS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| {
                Error::Config(format!("SGRD_WORKERS must be a non-negative integer, got {s:?}"))
            })?),
            Err(_) => None,
        },
    };

    run(&cfg, &out, workers)?;
    Ok(out)
}
