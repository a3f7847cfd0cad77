//! Command-line front end. Every run takes a TOML config and a subcommand
//! name resolved against the registry, writes its data artifacts into the
//! output directory, and finishes with a JSON result envelope that echoes the
//! config for reproducibility.

mod commands;
mod config;
mod csvio;
mod envelope;
mod plot;

use anyhow::{bail, Context, Result};
use clap::Parser;
use commands::{registry, RunContext};
use envelope::ResultEnvelope;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "phononwire", version, about = "phononic waveguide analysis toolkit")]
struct Cli {
    /// Subcommand name, or `list` to print the registry.
    command: String,

    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for artifacts and the result envelope.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Also write plain-text plot data next to each CSV.
    #[arg(long)]
    emit_plots: bool,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Rayon worker threads; overrides PHONONWIRE_THREADS and the config.
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, short)]
    verbose: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let commands = registry();

    if cli.command == "list" {
        for c in &commands {
            println!("{:<20} {}", c.name(), c.about());
        }
        return Ok(());
    }

    let command = commands.iter().find(|c| c.name() == cli.command).with_context(|| {
        let names: Vec<&str> = commands.iter().map(|c| c.name()).collect();
        format!("unknown command `{}`; available: {}", cli.command, names.join(", "))
    })?;

    let config_path = cli
        .config
        .as_ref()
        .with_context(|| format!("`{}` needs --config <file.toml>", cli.command))?;
    let (config, config_text) = config::load(config_path)?;
    let config_dir = config_path
        .canonicalize()
        .with_context(|| format!("resolving {}", config_path.display()))?
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("PHONONWIRE_THREADS").ok().and_then(|v| v.parse().ok())
        })
        .or(config.threads);
    if let Some(n) = threads {
        if n == 0 {
            bail!("thread count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }

    let seed = cli.seed.or(config.seed).unwrap_or(0);
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;

    let ctx = RunContext {
        config: &config,
        config_dir: &config_dir,
        out_dir: &cli.out,
        emit_plots: cli.emit_plots,
        seed,
    };

    let start = Instant::now();
    let result = command.run(&ctx)?;
    let elapsed_s = start.elapsed().as_secs_f64();

    if cli.verbose {
        for (key, q) in &result.outputs {
            eprintln!("{key} = {} {}", q.value, q.unit);
        }
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let envelope = ResultEnvelope {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: cli.command.clone(),
        seed,
        elapsed_s,
        warnings: result.warnings,
        artifacts: result.artifacts,
        outputs: result.outputs,
        config_echo: config_text,
    };
    let envelope_path = cli.out.join(format!("{}.json", cli.command));
    let json = serde_json::to_string_pretty(&envelope)?;
    std::fs::write(&envelope_path, json)
        .with_context(|| format!("writing {}", envelope_path.display()))?;
    println!("{}", envelope_path.display());
    Ok(())
}
