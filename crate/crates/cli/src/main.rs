//! `vsim`: run, replay, benchmark and serve headless sessions.
//!
//! Exit codes: 0 success, 1 invalid input (scenario, script, log format),
//! 2 I/O failure, 3 replay divergence.

mod commands;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "vsim", version, about = "Deterministic headless engine for balance-rehabilitation scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a session headless and write its log.
    Run {
        /// Scenario file, or the name of a built-in scene.
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulated seconds.
        #[arg(long)]
        duration: f64,
        /// Input records (pose, param_change) in session-log format.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Log destination; standard output if omitted.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Re-simulate a session log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Require every regenerated line to match the log.
        #[arg(long)]
        verify: bool,
    },
    /// Measure ticks per second with a per-phase breakdown.
    Bench {
        #[arg(long)]
        scene: String,
        /// Set every graded control to its maximum first.
        #[arg(long)]
        max_complexity: bool,
        #[arg(long, default_value_t = 10_000)]
        ticks: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a scenario file.
    Validate {
        #[arg(long)]
        scene: String,
    },
    /// Serve the control endpoint until interrupted.
    Serve {
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 7777)]
        port: u16,
        /// Also accept newline-delimited JSON on this TCP port.
        #[arg(long)]
        tcp_port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for session logs, one file per scene load.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Tick immediately instead of waiting for a start message.
        #[arg(long)]
        autostart: bool,
    },
    /// Print the parameter and protocol schema.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scene, seed, duration, script, log } => commands::run(&scene, seed, duration, script.as_deref(), log.as_deref()),
        Command::Replay { log, verify } => commands::replay(&log, verify),
        Command::Bench { scene, max_complexity, ticks, seed } => commands::bench(&scene, max_complexity, ticks, seed),
        Command::Validate { scene } => commands::validate(&scene),
        Command::Serve { scene, port, tcp_port, bind, seed, log_dir, autostart } => {
            commands::serve(&scene, port, tcp_port, bind, seed, log_dir, autostart)
        }
        Command::Schema => commands::schema(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vsim: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
