//! `simulate <command> --config <path> --out <dir> [--grid-points N] [--oracle-K K]`
//!
//! Exit codes: 0 success or verification pass, 1 verification fail,
//! 2 error (record on stderr and in `<out>/error.txt` when possible).

use std::path::PathBuf;
use std::process::ExitCode;

use bae_core::config::{parse_config, RunConfig};
use bae_core::run::{error_record, run, Command, Status};
use bae_core::SimError;
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Spectrum,
    OutputSpectrum,
    Duan,
    Sweep,
    VerifyBae,
    OracleCompare,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::OutputSpectrum => Command::OutputSpectrum,
            Cmd::Duan => Command::Duan,
            Cmd::Sweep => Command::Sweep,
            Cmd::VerifyBae => Command::VerifyBae,
            Cmd::OracleCompare => Command::OracleCompare,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Two-tone probed optomechanical entanglement simulator")]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// key=value configuration file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `points`.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Overrides `oracle_K`.
    #[arg(long = "oracle-K")]
    oracle_k: Option<usize>,
}

fn load(args: &Args) -> Result<RunConfig, SimError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| SimError::Io(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(n) = args.grid_points {
        cfg.points = n;
    }
    if let Some(k) = args.oracle_k {
        cfg.oracle_k = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() -> Result<(), SimError> {
    let n = match std::env::var("SIM_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| SimError::Validation {
            key: "SIM_THREADS".into(),
            msg: format!("expected a non-negative integer, got `{v}`"),
        })?,
        Err(_) => 0,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| SimError::Io(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = Command::from(args.command);
    let result = init_threads().and_then(|_| load(&args)).and_then(|cfg| run(command, &cfg, &args.out));
    match result {
        Ok((r, files)) => {
            for f in &files {
                println!("wrote {}", f.display());
            }
            println!("status={}", r.status.label());
            if r.status == Status::Fail {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let record = error_record(Some(command), &e);
            eprint!("{record}");
            if std::fs::create_dir_all(&args.out).is_ok() {
                let _ = std::fs::write(args.out.join("error.txt"), &record);
            }
            ExitCode::from(2)
        }
    }
}
