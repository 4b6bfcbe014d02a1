use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ringrad_cli::{run, CliError, RunOptions, ScenarioConfig};

/// Simulate cooperative emission of phase-imprinted atomic rings.
#[derive(Parser, Debug)]
#[command(name = "ringrad", version)]
struct Args {
    /// Scenario config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output root; results go to <DIR>/<name>/.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Override a config key, e.g. `r=0.3` or `grid.n_phi=720`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Also write the coupling matrix of every sweep point.
    #[arg(long)]
    dump_matrix: bool,

    /// Far-field grid, e.g. 181x360.
    #[arg(long, value_name = "THETAxPHI")]
    grid: Option<String>,
}

fn grid_overrides(grid: &str) -> Result<[String; 2], CliError> {
    let (t, p) = grid
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Parse(format!("--grid expects THETAxPHI, got `{grid}`")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Parse(format!("--grid expects THETAxPHI, got `{grid}`")))
    };
    Ok([
        format!("grid.n_theta={}", parse(t)?),
        format!("grid.n_phi={}", parse(p)?),
    ])
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let mut overrides = args.overrides;
    if let Some(grid) = &args.grid {
        overrides.extend(grid_overrides(grid)?);
    }
    let config = ScenarioConfig::load(&args.config, &overrides)?;
    let options = RunOptions {
        out: args.out,
        workers: args.workers,
        dump_matrix: args.dump_matrix,
    };
    let summary = run(&config, &options)?;
    let failed = summary.jobs.iter().filter(|j| !j.checks_pass).count();
    let fallback = summary.jobs.iter().filter(|j| j.fallback).count();
    println!(
        "{}: {} job(s) written to {}{}{}",
        config.name,
        summary.jobs.len(),
        summary.scenario_dir.display(),
        if fallback > 0 { format!(", {fallback} via integrator fallback") } else { String::new() },
        if failed > 0 { format!(", {failed} with failed consistency checks") } else { String::new() },
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ringrad: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
