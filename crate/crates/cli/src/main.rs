use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use splitvar_cli::{execute, Command, RawConfig, RunConfig};

/// Exit codes.
const CHECKS_FAILED: u8 = 1;
const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "splitvar", version, about = "Linear-growth splitting functionals: checks and regularization paths")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Growth constants and ellipticity fits of the density
    CheckDensity(Args),
    /// Level-curve curvature probe
    Lemma1(Args),
    /// Exponent admissibility verdicts
    Admissible(Args),
    /// Single solve at the terminal δ of the schedule
    Solve(Args),
    /// δ-path with the selected diagnostics
    Path(Args),
    /// Density checks, probe, admissibility and path
    Full(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Configuration file; omitted means defaults plus `--set` entries
    config: Option<PathBuf>,
    /// Override a configuration entry (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output root; each run writes to <root>/<run-id>/
    #[arg(long, env = "SPLITVAR_OUT")]
    out: Option<PathBuf>,
    /// Run directory name [default: config file stem, else the command]
    #[arg(long)]
    run_id: Option<String>,
    /// Proceed even when the exponents are inadmissible
    #[arg(long = "override")]
    allow_inadmissible: bool,
    /// Print the canonical configuration and exit
    #[arg(long)]
    print_config: bool,
}

fn load(args: &Args) -> Result<RunConfig, String> {
    let mut raw = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            RawConfig::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => RawConfig::default(),
    };
    for s in &args.set {
        raw.set(s).map_err(|e| e.to_string())?;
    }
    let mut cfg = RunConfig::from_raw(raw).map_err(|e| match &args.config {
        Some(p) if e.line.is_some() => format!("{}: {e}", p.display()),
        _ => e.to_string(),
    })?;
    cfg.allow_inadmissible |= args.allow_inadmissible;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::CheckDensity(a) => (Command::CheckDensity, a),
        Cmd::Lemma1(a) => (Command::Lemma1, a),
        Cmd::Admissible(a) => (Command::Admissible, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Path(a) => (Command::Path, a),
        Cmd::Full(a) => (Command::Full, a),
    };
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if args.print_config {
        print!("{}", cfg.emit());
        return ExitCode::SUCCESS;
    }
    let run_id = args.run_id.clone().unwrap_or_else(|| {
        args.config
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| cmd.name().to_string())
    });
    let root = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("splitvar-out"));
    let outcome = match execute(cmd, &cfg, &root.join(&run_id), &run_id) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(RUNTIME_ERROR);
        }
    };
    for c in &outcome.checks {
        println!("{:<10} {}: {}", format!("{:?}", c.status).to_uppercase(), c.name, c.detail);
    }
    println!("artifacts in {}", outcome.dir.display());
    let failed: Vec<_> = outcome.failures().collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for c in &failed {
            eprintln!("failed: {}: {}", c.name, c.detail);
        }
        ExitCode::from(CHECKS_FAILED)
    }
}
