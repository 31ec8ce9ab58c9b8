use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zopl::commands::{self, BoundsCase, Outcome};
use zopl::Result;

#[derive(Parser)]
#[command(name = "zopl", version, about = "Zero-order minibatch SGD experiments under inexact oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check moment conditions and kappa certificates of the built kernels.
    ValidateKernels {
        #[arg(long, default_value_t = 6)]
        beta_max: u32,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run one configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out/run")]
        out: PathBuf,
        #[arg(long)]
        plot: bool,
        /// Overrides `opt.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one of the preset figure scenarios (1-4).
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        /// Defaults to `out/figure<id>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
        /// Problem and optimizer seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Step size for every run: a number, or `caption` for 0.01.
        /// Defaults to the preset's dimension-scaled step.
        #[arg(long)]
        eta: Option<String>,
    },
    /// Run a configuration once per value of one key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `KEY=v1,v2,...`
        #[arg(long)]
        vary: String,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
        #[arg(long)]
        plot: bool,
    },
    /// Evaluate closed-form bounds and complexity tables.
    Bounds {
        /// One of t1, t2, t3, lemma1, table2, table3.
        #[arg(long)]
        case: String,
        /// `key=val` inputs, e.g. `--set d=16 --set beta=3`.
        #[arg(long = "set")]
        sets: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare Monte-Carlo estimator bias and second moment with their bounds.
    BiasTest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::ValidateKernels { beta_max, tol } => commands::validate_kernels(beta_max, tol),
        Command::Run { config, out, plot, seed } => commands::run(&config, &out, plot, seed),
        Command::Figure {
            id,
            iters,
            reps,
            out,
            plot,
            seed,
            eta,
        } => {
            let out = out.unwrap_or_else(|| PathBuf::from(format!("out/figure{id}")));
            commands::figure(id, iters, reps, seed, eta.as_deref(), &out, plot)
        }
        Command::Sweep { config, vary, out, plot } => commands::sweep(&config, &vary, &out, plot),
        Command::Bounds { case, sets, csv } => commands::bounds(BoundsCase::parse(&case)?, &sets, csv.as_deref()),
        Command::BiasTest { config, samples } => commands::bias_test(&config, samples),
    }
}

fn main() -> ExitCode {
    // clap reports usage errors with status 2, which is reserved here for
    // divergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
