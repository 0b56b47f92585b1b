//! `plap`: profiles, radial integration, verification and sweeps for
//! quasilinear p-Laplacian systems.

mod commands;
mod config;
mod error;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plap_core::IntegrationOptions;

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "plap",
    version,
    about = "Radial solutions of quasilinear p-Laplacian systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the explicit power-law profile as JSON
    Profile(Common),
    /// Integrate from the origin and write `r,u,v,du,dv,P,S` as CSV
    Integrate(Common),
    /// Integrate, compare with the profile and write the report as JSON
    Verify {
        #[command(flatten)]
        common: Common,
        /// Also write the quotient series `r,U,V,W,Y` as CSV
        #[arg(long)]
        quotients: Option<PathBuf>,
    },
    /// Run `verify` over the config's sweep grid and write a CSV summary
    Sweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON system definition
    #[arg(long)]
    config: PathBuf,
    /// Output file (standard output if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative integration tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Outer radius
    #[arg(long)]
    rmax: Option<f64>,
    /// Initial value u(0)
    #[arg(long)]
    a: Option<f64>,
    /// Initial value v(0)
    #[arg(long)]
    b: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(r) = self.rmax {
            cfg.r_max = r;
        }
        if let Some(a) = self.a {
            cfg.a = a;
        }
        if let Some(b) = self.b {
            cfg.b = b;
        }
        Ok(cfg)
    }
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("PLAP_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                CliError::config(format!(
                    "PLAP_THREADS must be a positive integer, got `{v}`"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out_path = |c: &Common| c.out.clone();
    match cli.command {
        Command::Profile(c) => {
            let cfg = c.load()?;
            commands::profile(&cfg.system()?, out_path(&c).as_deref())
        }
        Command::Integrate(c) => {
            let cfg = c.load()?;
            let opts = IntegrationOptions::with_tol(cfg.tol);
            commands::integrate(
                &cfg.system()?,
                (cfg.a, cfg.b),
                &opts,
                out_path(&c).as_deref(),
            )
        }
        Command::Verify { common, quotients } => {
            let cfg = common.load()?;
            let opts = IntegrationOptions::with_tol(cfg.tol);
            commands::verify(
                &cfg.system()?,
                (cfg.a, cfg.b),
                &opts,
                out_path(&common).as_deref(),
                quotients.as_deref(),
            )
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let axes = cfg.sweep.clone().ok_or_else(|| {
                CliError::config("sweep command needs a `sweep` grid in the config")
            })?;
            let rows = sweep::run(&cfg, &IntegrationOptions::default(), threads_from_env()?)?;
            output::emit(out_path(&c).as_deref(), &sweep::summary_csv(&axes, &rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
