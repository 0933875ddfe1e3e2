use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use biofet_cli::{emit_config, execute, resolve_config, Mode};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Response,
    Sensitivity,
    Snr,
    Lod,
    Simulate,
    Validate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Response => Mode::Response,
            ModeArg::Sensitivity => Mode::Sensitivity,
            ModeArg::Snr => Mode::Snr,
            ModeArg::Lod => Mode::Lod,
            ModeArg::Simulate => Mode::Simulate,
            ModeArg::Validate => Mode::Validate,
        }
    }
}

/// Signal, noise and stochastic models of a SiNW bioFET molecular receiver.
#[derive(Debug, Parser)]
#[command(name = "biofet-rx", version)]
struct Cli {
    /// What to compute
    mode: ModeArg,
    /// Configuration file; keys override the preset
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named starting configuration (table1, fig7a-d, fig9a-d, fig10a-d)
    #[arg(long)]
    preset: Option<String>,
    /// Random seed for stochastic modes
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the fully resolved configuration to stderr
    #[arg(long)]
    print_config: bool,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut cfg = resolve_config(cli.preset.as_deref(), cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if cli.print_config {
        eprint!("{}", emit_config(&cfg));
    }
    let mode = Mode::from(cli.mode);
    let table = execute(mode, &cfg)?;

    let out = cli.out.or_else(|| cfg.run.output.clone());
    match &out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            if let Err(e) = table.write_csv(io::stdout().lock()) {
                // a closed pipe (e.g. `| head`) is not a failure of the run
                let broken = e
                    .downcast_ref::<io::Error>()
                    .map(|io| io.kind() == io::ErrorKind::BrokenPipe)
                    .or_else(|| e.downcast_ref::<csv::Error>().map(|c| matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe)))
                    .unwrap_or(false);
                if !broken {
                    return Err(e);
                }
            }
        }
    }

    for e in &table.errors {
        eprintln!("error: grid point {}: {}", e.index, e.message);
    }
    if mode == Mode::Validate {
        let checks = table.rows.len();
        eprintln!("validate: {} of {checks} checks passed", checks - table.failed_checks);
    }
    Ok(table.succeeded())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
