use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bswtv_cli::commands::{self, Overrides};
use bswtv_cli::config::TaskKind;

/// Multi-frame super-resolution and denoising under mixed
/// Poisson-Gaussian noise with bilateral spectrum weighted total
/// variation.
#[derive(Parser)]
#[command(name = "bswtv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fabricate degraded low-resolution frames plus a replay manifest.
    Degrade {
        /// JSON degradation config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Restore a single noisy image (A = I).
    Denoise {
        /// JSON run config.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the metric dynamic range.
        #[arg(long)]
        peak: Option<f64>,
        /// Dump the weighting map and shrink field each iteration.
        #[arg(long)]
        dump_phi: bool,
    },
    /// Multi-frame super-resolution from a degradation manifest.
    Sr {
        /// JSON run config.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        peak: Option<f64>,
        #[arg(long)]
        dump_phi: bool,
    },
    /// PSNR/SSIM/MSE between a reference and a test image.
    Eval {
        /// Reference image (binary PGM).
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Test image (binary PGM).
        #[arg(long)]
        test: PathBuf,
        /// Metric dynamic range.
        #[arg(long, default_value_t = 255.0)]
        peak: f64,
    },
    /// Run the base config once per value of one parameter.
    Sweep {
        /// JSON sweep config.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> bswtv_cli::Result<()> {
    match cli.command {
        Command::Degrade { config, seed } => {
            commands::cmd_degrade(&config, &Overrides { seed, ..Default::default() })
        }
        Command::Denoise { config, seed, peak, dump_phi } => commands::cmd_restore(
            TaskKind::Denoise,
            &config,
            &Overrides { seed, peak, dump_phi },
        )
        .map(|_| ()),
        Command::Sr { config, seed, peak, dump_phi } => commands::cmd_restore(
            TaskKind::Sr,
            &config,
            &Overrides { seed, peak, dump_phi },
        )
        .map(|_| ()),
        Command::Eval { reference, test, peak } => commands::cmd_eval(&reference, &test, peak),
        Command::Sweep { config, seed } => {
            commands::cmd_sweep(&config, &Overrides { seed, ..Default::default() })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
