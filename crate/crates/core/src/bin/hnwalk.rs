use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hnwalk::experiment::{self, ExperimentConfig, RunManifest, OUTPUT_ROOT_ENV};
use hnwalk::Error;

#[derive(Parser)]
#[command(
    name = "hnwalk",
    version,
    about = "Boson quantum walks on a tilted Hatano-Nelson chain"
)]
struct Cli {
    /// Output root used when the config sets no `output_dir`.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML experiment config.
    Run {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a named figure preset.
    Preset {
        name: String,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print the resolved config as TOML instead of running it.
        #[arg(long)]
        dump: bool,
    },
    /// List preset names with a one-line description.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 1,
        _ => 2,
    }
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    let (mut config, default_name) = match cli.command {
        Command::ListPresets => {
            for name in experiment::preset_names() {
                println!("{name:8}  {}", experiment::describe(name)?);
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Run { config, overrides } => {
            let stem = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            let loaded = ExperimentConfig::load(&config).map_err(|e| match e {
                Error::Io { path, source } => Error::Config {
                    path: path.display().to_string(),
                    message: source.to_string(),
                },
                e => e,
            })?;
            (loaded.with_overrides(&overrides)?, stem)
        }
        Command::Preset {
            name,
            overrides,
            dump,
        } => {
            let config = experiment::preset(&name)?.with_overrides(&overrides)?;
            if dump {
                print!("{}", config.to_toml_string()?);
                return Ok(ExitCode::SUCCESS);
            }
            (config, name)
        }
    };
    if config.output_dir.is_none() {
        if let Some(root) = cli.output_root {
            let name = config.name.clone().unwrap_or(default_name);
            config.output_dir = Some(root.join(name));
        } else if config.name.is_none() {
            config.name = Some(default_name);
        }
    }

    let root = config.output_root();
    let manifest = experiment::run(&config)?;
    report(&manifest, &root);
    if manifest.violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &manifest.violations {
            eprintln!("invariant violated: {v}");
        }
        Ok(ExitCode::from(2))
    }
}

fn report(manifest: &RunManifest, root: &std::path::Path) {
    println!("{} -> {}", manifest.name, root.display());
    for p in &manifest.points {
        let d = &p.diagnostics;
        let mut line = format!(
            "  {:<24} snapshots={} norm_dev={:.2e} asym={:+.4}",
            p.label, d.snapshots, d.max_norm_deviation, d.final_asymmetry
        );
        if let Some(period) = d.spread_period {
            line += &format!(" period={period:.3}");
        }
        if let Some(q) = &p.qfi {
            line += &format!(" F_Q(end)={:.4e}", q.fq_final);
            if let Some(a) = q.alpha {
                line += &format!(" alpha={a:.3}");
            }
            if !q.reliable {
                line += " (eps-unstable)";
            }
        }
        println!("{line}");
    }
}
