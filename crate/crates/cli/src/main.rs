//! `fstar`: runs a scenario and writes its tables, `summary.json` and
//! `timings.json`. Exit status 0 when every check passes, 1 when one fails,
//! 2 for configuration or I/O errors.

mod builtin;
mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::Format;
use scenarios::Command;

#[derive(Parser)]
#[command(name = "fstar", version, about = "Discrete checks of generalized subharmonicity")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Product-cone membership of block matrices or of a grid ψ.
    CheckProduct(RunArgs),
    /// Marginals of product-subharmonic ψ.
    Prekopa(RunArgs),
    /// -log volume of sections and body families.
    Bm(RunArgs),
    /// Infimum over y and the Lᵖ family.
    MinPrinciple(RunArgs),
    /// Harmonic interpolation of bodies and functions.
    Interp(RunArgs),
    /// Sup-convolution in y.
    Supconv(RunArgs),
    /// The explicit quadratic and its section volumes.
    Example8(RunArgs),
    /// Lists the builtin scenarios.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file, or `builtin:<name>`.
    #[arg(long)]
    config: String,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's, else `out/<id>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::CheckProduct(a) => (Command::CheckProduct, a),
        Cmd::Prekopa(a) => (Command::Prekopa, a),
        Cmd::Bm(a) => (Command::Bm, a),
        Cmd::MinPrinciple(a) => (Command::MinPrinciple, a),
        Cmd::Interp(a) => (Command::Interp, a),
        Cmd::Supconv(a) => (Command::Supconv, a),
        Cmd::Example8(a) => (Command::Example8, a),
        Cmd::List => {
            for n in builtin::names() {
                println!("{n}");
            }
            return ExitCode::SUCCESS;
        }
    };
    match execute(cmd, &args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(cmd: Command, args: &RunArgs) -> Result<bool, String> {
    let t0 = Instant::now();
    let loaded = config::load(&args.config).map_err(|e| e.to_string())?;
    let s = &loaded.scenario;
    let seed = args.seed.or(s.seed).unwrap_or(0);
    let parsed = t0.elapsed();
    log::info!("running {} on scenario {}", cmd.name(), s.id);

    let t1 = Instant::now();
    let out = scenarios::run(cmd, &loaded, seed).map_err(|e| e.to_string())?;
    let computed = t1.elapsed();

    for c in &out.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let dir = args
        .out
        .clone()
        .or_else(|| s.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&s.id));
    let format = args.format.or(s.output.format).unwrap_or_default();
    let timings = [("config".to_string(), parsed), ("compute".to_string(), computed), ("total".to_string(), t0.elapsed())];
    output::write_all(&dir, format, &s.id, cmd.name(), Some(seed), &out, &timings)
        .map_err(|e| format!("cannot write to {}: {e}", dir.display()))?;
    let pass = out.pass();
    println!("{} {} [{}]", if pass { "PASS" } else { "FAIL" }, s.id, dir.display());
    Ok(pass)
}
