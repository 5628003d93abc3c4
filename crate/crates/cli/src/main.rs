use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cdr_core::config::ExperimentConfig;
use cdr_core::harness::{compare_methods, write_output, Prepared};
use cdr_core::vqe::{optimize, write_angles};

/// Clifford data regression experiments on noisy simulated VQE circuits.
#[derive(Parser)]
#[command(name = "cdr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV plus a gnuplot script.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the repeat count.
        #[arg(long)]
        repeats: Option<usize>,
        /// Directory for the output files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several experiments on one shared problem and print aligned rows.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Write the comparison CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize the ansatz angles and write the angle file.
    Vqe {
        config: PathBuf,
        /// Angle file to write (defaults to `theta.file`, else `angles_L<layers>.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without simulating.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, repeats, out } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.experiment.seed = s;
            }
            if let Some(r) = repeats {
                cfg.experiment.repeats = r;
            }
            cfg.validate()?;
            let prepared = Prepared::new(&cfg)?;
            let output = prepared.run(&cfg)?;
            let path = write_output(&cfg, &output, out.as_deref())?;
            if let Some(rows) = output.error_rows() {
                let flagged = rows.iter().filter(|r| r.flagged).count();
                if flagged > 0 {
                    eprintln!("warning: {flagged} grid point(s) have failed repeats");
                }
            }
            println!("{}", path.display());
        }
        Command::Compare { configs, out } => {
            let cfgs = configs.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
            let csv = compare_methods(&cfgs)?;
            match out {
                Some(p) => std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::Vqe { config, out } => {
            let cfg = load(&config)?;
            let (h, e_core, circuit) = cdr_core::harness::load_problem(&cfg)?;
            let r = optimize(&circuit, &h, None, &cfg.vqe)?;
            let path = out
                .or_else(|| cfg.theta_path())
                .unwrap_or_else(|| cfg.resolve(Path::new(&format!("angles_L{}.txt", cfg.ansatz.layers))));
            write_angles(&path, &r.theta_opt)?;
            println!(
                "electronic {:.9} total {:.9} grad {:.1e} converged {} -> {}",
                r.energy - e_core,
                r.energy,
                r.grad_norm,
                r.converged,
                path.display()
            );
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("{}: ok ({} grid points)", cfg.experiment.name, cfg.scan.values.len());
        }
    }
    Ok(())
}
