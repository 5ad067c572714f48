//! `violet`: static analysis, symbolic profiling and configuration checking for
//! ConfScript programs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit codes shared by every command.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const SPECIOUS: u8 = 2;
    pub const OUTSIDE: u8 = 3;
    pub const MALFORMED: u8 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "violet", version, about = "Detect configuration settings with severe performance cost")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report enabler and influenced parameters of every configuration parameter.
    Related {
        program: PathBuf,
        /// Only report this parameter.
        #[arg(long)]
        target: Option<String>,
        /// Write the report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Explore a program symbolically and build its impact model.
    Analyze(commands::AnalyzeArgs),
    /// Check concrete configurations against an impact model.
    Check(commands::CheckArgs),
    /// Print the call tree of a trace file with per-call latencies.
    TraceDump { trace: PathBuf },
}

fn main() -> ExitCode {
    // clap's own usage errors exit with 2, which is taken by the specious verdict
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::MALFORMED } else { exit::OK });
        }
    };
    let result = match cli.command {
        Command::Related { program, target, output } => commands::related(&program, target.as_deref(), output.as_deref()),
        Command::Analyze(args) => commands::analyze(&args),
        Command::Check(args) => commands::check(&args),
        Command::TraceDump { trace } => commands::trace_dump(&trace),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("violet: {e:#}");
            let code = match e.downcast_ref::<commands::Failure>() {
                Some(f) => f.code,
                None => exit::ERROR,
            };
            ExitCode::from(code)
        }
    }
}
