//! Command-line front end; every subcommand is a thin call into `qvp::cli`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qvp::cli::{self, BoundsRequest, Figure, RunConfig};
use qvp::matrix::KernelKind;
use qvp::Result;

#[derive(Parser)]
#[command(name = "qvp", version, about = "Queue-length-violation probability analysis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config key, e.g. --set policy.V=4 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        RunConfig::load(&self.config, &self.overrides)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Analytic SQL bounds plus effective-capacity tails.
    Analyze(ConfigArgs),
    /// Monte-Carlo QVP estimate.
    Simulate {
        #[command(flatten)]
        args: ConfigArgs,
        /// Splice MC onto the analytic tail below this probability.
        #[arg(long)]
        hybrid: Option<f64>,
    },
    /// Data for one of the reference figure settings.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        /// Fraction of the 1e9 reference slots to simulate.
        #[arg(long, default_value_t = 1e-2)]
        scale: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        hybrid: f64,
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
    },
    /// Closed-form bounds on the accumulated decay-rate error.
    Bounds {
        #[command(subcommand)]
        law: BoundsCmd,
    },
    /// Write one SQL kernel as CSV.
    BuildMatrix {
        #[command(flatten)]
        args: ConfigArgs,
        /// raw, fca, lca, upper or lower.
        #[arg(long, default_value = "raw")]
        kind: KernelKind,
    },
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Exponential tail with rate theta and p.
    Ldt {
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
    },
    /// Generalized Pareto exceedances.
    Gpd {
        #[arg(long)]
        xi_t: f64,
        #[arg(long)]
        sigma_t: f64,
    },
    /// Generalized extreme value maxima.
    Gev {
        #[arg(long)]
        xi: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        sigma: f64,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Analyze(a) => {
            let report = cli::run_analyze(&a.load()?, sink(a.out.as_deref())?)?;
            eprintln!("{report}");
        }
        Cmd::Simulate { args, hybrid } => {
            let o = cli::run_simulate(&args.load()?, hybrid, sink(args.out.as_deref())?)?;
            if let Some(h) = o.hybrid {
                eprintln!("splice at q* = {}", h.splice);
            }
            eprintln!("recorded slots = {}, mean queue = {}", o.estimate.total, o.estimate.mean_queue());
        }
        Cmd::Reproduce { figure, scale, seed, hybrid, out_dir } => {
            for p in cli::run_reproduce(figure, scale, seed, hybrid, &out_dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Cmd::Bounds { law } => {
            let req = match law {
                BoundsCmd::Ldt { theta, p } => BoundsRequest::Ldt { theta, p },
                BoundsCmd::Gpd { xi_t, sigma_t } => BoundsRequest::Gpd { xi_t, sigma_t },
                BoundsCmd::Gev { xi, mu, sigma } => BoundsRequest::Gev { xi, mu, sigma },
            };
            println!("{}", cli::run_bounds(req)?);
        }
        Cmd::BuildMatrix { args, kind } => {
            cli::run_build_matrix(&args.load()?, kind, sink(args.out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
