//! Benchmark driver: scenario sweeps and order fits of saved histories.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nse_core::bench::{
    parse_method, read_history_residuals, run_scenario, BenchConfig, OneOrMany, Scenario,
};
use nse_core::nonlinear::estimate_order;
use nse_core::NseError;

#[derive(Parser)]
#[command(name = "nse-bench", version, about = "Steady Navier-Stokes nonlinear solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    L2,
    H1,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario sweep and write history CSVs plus summary.csv.
    Run {
        /// analytical | cavity2d
        #[arg(long)]
        scenario: Option<String>,
        /// JSON config file; flags below override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        re: Option<Vec<f64>>,
        #[arg(long = "mesh-n", value_delimiter = ',')]
        mesh_n: Option<Vec<usize>>,
        /// picard, newton, newton-ls, picard-newton, aa-picard-newton, aa-picard
        #[arg(long, value_delimiter = ',')]
        method: Option<Vec<String>>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        /// Permit cavity Reynolds numbers above the default cap.
        #[arg(long)]
        allow_high_re: bool,
    },
    /// Fit the convergence order of a history CSV.
    Order {
        history: PathBuf,
        #[arg(long, default_value_t = 4)]
        tail: usize,
        #[arg(long, value_enum, default_value = "l2")]
        norm: Norm,
    },
}

fn exit_code(e: &NseError) -> u8 {
    match e {
        NseError::Config(_) | NseError::InvalidArgument(_) | NseError::InsufficientData { .. } => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), NseError> {
    match cli.command {
        Command::Run {
            scenario,
            config,
            re,
            mesh_n,
            method,
            tol,
            out,
            allow_high_re,
        } => {
            let mut cfg = match &config {
                Some(path) => BenchConfig::load(path)?,
                None => BenchConfig::default(),
            };
            if let Some(re) = re {
                cfg.re = Some(OneOrMany::Many(re));
            }
            if let Some(n) = mesh_n {
                cfg.mesh_n = Some(OneOrMany::Many(n));
            }
            if let Some(m) = method {
                // validated here so a bad name is a config error
                for name in &m {
                    parse_method(name, 1, 1.0)?;
                }
                cfg.methods = Some(m);
            }
            if tol.is_some() {
                cfg.tol = tol;
            }
            if allow_high_re {
                cfg.allow_high_re = Some(true);
            }
            let scenario = Scenario::from_config(&cfg, scenario.as_deref())?;
            let records = run_scenario(&scenario, Some(&out))?;
            for r in &records {
                println!(
                    "{} {} re={} n={} status={} iters={}",
                    r.label(),
                    r.method,
                    r.re,
                    r.mesh_n,
                    r.status(),
                    r.history.iterations()
                );
            }
            println!("wrote {}", out.join("summary.csv").display());
            Ok(())
        }
        Command::Order { history, tail, norm } => {
            let column = match norm {
                Norm::L2 => "res_l2",
                Norm::H1 => "res_h1",
            };
            let residuals = read_history_residuals(&history, column).map_err(|e| match e {
                NseError::Io(msg) => NseError::Config(msg),
                other => other,
            })?;
            let order = estimate_order(&residuals, tail)?;
            println!("{order:.6}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
