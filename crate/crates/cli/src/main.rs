//! `spdc`: run ghost-imaging simulations from a flat key-value config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spdc_core::config::{validate_config, RunConfig};
use spdc_core::experiment::{self, Artifacts, PRESETS};

#[derive(Parser)]
#[command(name = "spdc", version, about = "Ghost imaging with spatially entangled photon pairs")]
struct Cli {
    /// Config file (`section.key = value` lines); defaults are used for
    /// missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Turn sampling and survival warnings into errors.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Marginal image at the end of the configured train.
    Simulate,
    /// Run a named experiment; the name may come from `run.preset`.
    Preset { name: Option<String> },
    /// Check the config and list every violation.
    Validate,
    /// Marginal versus aperture diameter and imaging distance.
    FocusScan,
    /// Read the marginal out on fork holograms.
    PhaseFlatten,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::Config(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.set).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if cli.strict {
        cfg.strict = true;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = load(cli)?;
    let violations = validate_config(&cfg);
    if matches!(cli.command, Command::Validate) {
        if violations.is_empty() {
            println!("ok");
            return Ok(());
        }
        for v in &violations {
            println!("{v}");
        }
        return Err(Failure::Config(format!("{} violation(s)", violations.len())));
    }
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::Config(list.join("\n")));
    }
    let result: spdc_core::Result<Artifacts> = match &cli.command {
        Command::Simulate => {
            cfg.preset = None;
            experiment::simulate(&cfg)
        }
        Command::Preset { name } => {
            let name = name.clone().or_else(|| cfg.preset.clone()).ok_or_else(|| {
                Failure::Config(format!("no preset given and run.preset is unset; known: {}", PRESETS.join(", ")))
            })?;
            if !PRESETS.contains(&name.as_str()) {
                return Err(Failure::Config(format!("unknown preset {name:?}; known: {}", PRESETS.join(", "))));
            }
            cfg.preset = Some(name.clone());
            experiment::run_preset(&name, &cfg)
        }
        Command::FocusScan => {
            cfg.preset = Some("focus-scan".into());
            experiment::focus_scan(&cfg)
        }
        Command::PhaseFlatten => {
            cfg.preset = None;
            experiment::phase_flatten(&cfg)
        }
        Command::Validate => unreachable!(),
    };
    let art = result.map_err(|e| Failure::Runtime(e.to_string()))?;
    experiment::write_artifacts(&cfg.output_dir, &cfg, &art).map_err(|e| Failure::Runtime(e.to_string()))?;
    for n in &art.notes {
        println!("{n}");
    }
    println!(
        "wrote {} images and {} tables to {}",
        art.images.len(),
        art.tables.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
