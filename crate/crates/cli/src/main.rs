// SPDX-License-Identifier: Apache-2.0 OR MIT

//! `loomcas`: feasibility checks, scenario runs, falsification campaigns and
//! the live bridge.
//!
//! Exit codes: 0 success, 1 domain failure (infeasible parameters, a
//! safety violation, a rejected scenario), 2 usage or config error.

mod commands;
mod overrides;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "loomcas", version, about = "Loom-based collision avoidance toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct ConfigArgs {
    /// JSON config file.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Dotted-key override applied before parsing, e.g. `design.beta=6.3`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the feasibility conditions of a parameter set.
    Check {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one scenario and write its trace and result.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Parent directory; each run gets a fresh subdirectory.
        #[arg(short, long, default_value = "runs")]
        out: PathBuf,
        /// Run even when the feasibility check fails.
        #[arg(long)]
        force: bool,
    },
    /// Randomized search for episodes that reach the anti-target set.
    Falsify {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of episodes.
        #[arg(short, long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Campaign JSON (sampling ranges, policy mix); flags take precedence.
        #[arg(long)]
        campaign: Option<PathBuf>,
        #[arg(short, long, default_value = "runs")]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Start the websocket bridge for the live console.
    Serve {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Write each session's trace here as CSV.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOOMCAS_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check { cfg, json } => commands::check(&cfg, json),
        Command::Run { cfg, out, force } => commands::run(&cfg, &out, force),
        Command::Falsify {
            cfg,
            n,
            seed,
            campaign,
            out,
            force,
        } => commands::falsify(&cfg, n, seed, campaign.as_deref(), &out, force),
        Command::Serve {
            cfg,
            port,
            host,
            trace_dir,
        } => commands::serve(&cfg, &host, port, trace_dir),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
