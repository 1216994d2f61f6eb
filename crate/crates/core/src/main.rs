use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use femcont::io::{run, Action, RunConfig, EXIT_CONFIG};

/// Finite element continuation and bifurcation runs driven by a TOML config.
#[derive(Parser, Debug)]
#[command(name = "femcont", version)]
struct Cli {
    /// Action to run; overrides `action` in the config.
    action: Option<Action>,
    /// Run configuration (TOML).
    #[arg(short, long, required_unless_present = "list")]
    config: Option<PathBuf>,
    /// Session directory; overrides `session` in the config.
    #[arg(long)]
    session: Option<PathBuf>,
    /// Start from this point file instead of the preset's initial guess.
    #[arg(long)]
    from: Option<PathBuf>,
    /// Signed initial step length.
    #[arg(long, allow_hyphen_values = true)]
    ds: Option<f64>,
    /// List the built-in problems and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.list {
        for p in femcont::problems::presets() {
            println!("{:10} {}", p.name, p.summary);
        }
        return ExitCode::SUCCESS;
    }
    let Some(config) = cli.config else {
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    let mut cfg = match RunConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("femcont: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(a) = cli.action {
        cfg.action = a;
    }
    if let Some(s) = cli.session {
        // command line paths are relative to the working directory
        cfg.session = std::env::current_dir().map(|d| d.join(&s)).unwrap_or(s);
    }
    let from = cli
        .from
        .map(|f| std::env::current_dir().map(|d| d.join(&f)).unwrap_or(f));
    let out = run(&cfg, from.as_deref(), cli.ds);
    if out.code == 0 {
        println!("{}: {}", cfg.action.name(), out.message);
    } else {
        eprintln!("femcont {}: {}", cfg.action.name(), out.message);
    }
    ExitCode::from(out.code as u8)
}
