use blowup_forge::{run, Command, ForgeError, RunConfig};
use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Profile,
    Residual,
    Spectral,
    Parametrix,
    Simulate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Profile => Command::Profile,
            Cmd::Residual => Command::Residual,
            Cmd::Spectral => Command::Spectral,
            Cmd::Parametrix => Command::Parametrix,
            Cmd::Simulate => Command::Simulate,
        }
    }
}

/// Approximate Type II blow-up for the energy-critical wave equation: tables, checks and runs.
#[derive(Debug, Parser)]
#[command(name = "blowup-forge", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Flat JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(4..=5))]
    d: Option<u8>,
    #[arg(long)]
    nu: Option<f64>,
}

fn load(cli: &Cli) -> Result<RunConfig, ForgeError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.d {
        cfg.d = d as usize;
    }
    if let Some(nu) = cli.nu {
        cfg.nu = nu;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = load(&cli).and_then(|cfg| run(cli.command.into(), &cfg));
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            for i in &report.invariants {
                println!("{} {}: {}", if i.passed { "PASS" } else { "FAIL" }, i.name, i.detail);
            }
            ExitCode::from(if report.passed() { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("blowup-forge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
