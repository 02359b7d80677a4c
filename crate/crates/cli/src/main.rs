use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

mod commands;
mod config;
mod output;

use config::Config;

#[derive(Parser, Debug)]
#[command(name = "ergolab", version, about = "Desk-scale experiments on non-uniformly hyperbolic maps")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Flat TOML config; see --print-schema.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the documented config schema and exit.
    #[arg(long)]
    print_schema: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// One orbit with its split log-norms.
    Orbit,
    /// cs, cu and J^cu exponents over independent orbits.
    Lyapunov,
    /// Pliss times of -phi_cu along one orbit.
    Pliss,
    /// Hyperbolic, inverse and reverse hyperbolic times along one orbit.
    Hyptimes,
    /// Expansion-time tail, decay fits and the predicted mixing class.
    Tail,
    /// Correlation function Cor(phi, psi o f^n).
    Correlate,
    /// Block measure against the upper density of hyperbolic times.
    Block,
    /// Ergodic / geometric / topological basin scan on a grid.
    Basin,
    /// Stable holonomy densities on fiber pairs.
    Holonomy,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Lyapunov => "lyapunov",
            Command::Pliss => "pliss",
            Command::Hyptimes => "hyptimes",
            Command::Tail => "tail",
            Command::Correlate => "correlate",
            Command::Block => "block",
            Command::Basin => "basin",
            Command::Holonomy => "holonomy",
        }
    }
}

fn run(cli: &Cli, cmd: Command) -> Result<()> {
    let start = Instant::now();
    let mut cfg: Config = config::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let sys = cfg.validate()?;
    if let Some(w) = cli.workers {
        anyhow::ensure!(w >= 1, config::ConfigInvalid {
            field: "--workers".into(),
            message: "must be at least 1".into(),
        });
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out = match cmd {
        Command::Orbit => commands::orbit(&sys, &cfg),
        Command::Lyapunov => commands::lyapunov(&sys, &cfg),
        Command::Pliss => commands::pliss(&sys, &cfg),
        Command::Hyptimes => commands::hyptimes(&sys, &cfg),
        Command::Tail => commands::tail(&sys, &cfg),
        Command::Correlate => commands::correlate(&sys, &cfg),
        Command::Block => commands::block(&sys, &cfg),
        Command::Basin => commands::basin(&sys, &cfg),
        Command::Holonomy => commands::holonomy(&sys, &cfg),
    }
    .with_context(|| format!("{} failed", cmd.name()))?;

    let mut writer = output::Writer::new(&cli.out)?;
    let mut outputs = Vec::new();
    for table in out.tables {
        let file = table.file.clone();
        let bytes = table.into_bytes()?;
        writer.write(&file, &bytes)?;
        outputs.push(json!({
            "file": file,
            "sha256": output::sha256_hex(&bytes),
            "bytes": bytes.len(),
        }));
    }
    let manifest = json!({
        "tool": "ergolab",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cmd.name(),
        "seed": cfg.seed,
        "workers": cli.workers,
        "system": cfg.spec()?,
        "config": cfg,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
        "outputs": outputs,
        "summary": out.summary,
    });
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    writer.write("manifest.json", text.as_bytes())?;
    writer.commit();
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{}", config::SCHEMA);
        return;
    }
    let Some(cmd) = cli.command else {
        use clap::CommandFactory;
        let _ = Cli::command().print_help();
        std::process::exit(2);
    };
    if let Err(e) = run(&cli, cmd) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
