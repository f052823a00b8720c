//! `relaysim`: run, compare and sweep the relay routing simulator.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime error,
//! 3 sweep finished with at least one failed point.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use relaysim_core::config::{parse_with_overrides, ConfigError};
use relaysim_core::report::{summary_table, sweep_summary, write_compare_csv, write_frames_csv, write_sweep_csv};
use relaysim_core::simulator::{compare, Algorithm, Prepared, SimConfig};
use relaysim_core::sweep::{run_sweep, SweepAxis, SweepRow, SweepSpec};

#[derive(Parser)]
#[command(name = "relaysim", version, about = "Energy-aware uplink routing simulator for relay networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one or both algorithms and write per-frame rows.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Algo::Both)]
        algo: Algo,
        #[command(flatten)]
        output: Output,
    },
    /// Compare EBCD against the Dijkstra baseline on one instance.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Compare over a range of MS or RS counts and several seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated, strictly increasing counts.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        /// Count of the other station kind (defaults to the configured one).
        #[arg(long)]
        fixed: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seeds_per_point: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Parse and check a configuration without running anything.
    ValidateConfig {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value`, applied after the file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// 3hop, 4hop or 5hop.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    ms: Option<usize>,
    #[arg(long)]
    rs: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Output {
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print a savings table to standard output.
    #[arg(long)]
    summary: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Ebcd,
    Dijkstra,
    Both,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    SweepAxis::parse(s).ok_or_else(|| "expected ms_count or rs_count".to_string())
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
    Partial(usize),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(common: &Common) -> Result<SimConfig, Failure> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = common.overrides.clone();
    let shorthand = [
        ("sim.scenario", common.scenario.clone()),
        ("sim.n_ms", common.ms.map(|v| v.to_string())),
        ("sim.n_rs", common.rs.map(|v| v.to_string())),
        ("sim.n_frames", common.frames.map(|v| v.to_string())),
        ("sim.seed", common.seed.map(|v| v.to_string())),
    ];
    for (key, value) in shorthand {
        if let Some(v) = value {
            overrides.push(format!("{key}={v}"));
        }
    }
    let cfg = parse_with_overrides(&text, &overrides)?;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

/// Writes `render`ed CSV to `--out` or standard output.
fn emit(output: &Output, render: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> anyhow::Result<()> {
    match &output.out {
        Some(p) => {
            let mut buf = Vec::new();
            render(&mut buf).context("rendering CSV")?;
            fs::write(p, buf).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            render(&mut lock).context("writing CSV")
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ValidateConfig { common } => {
            load(&common)?;
            println!("configuration ok");
            Ok(())
        }
        Command::Run { common, algo, output } => {
            let cfg = load(&common)?;
            let prepared = Prepared::new(&cfg).context("building the instance")?;
            let algos: &[Algorithm] = match algo {
                Algo::Ebcd => &[Algorithm::Ebcd],
                Algo::Dijkstra => &[Algorithm::Dijkstra],
                Algo::Both => &[Algorithm::Ebcd, Algorithm::Dijkstra],
            };
            let mut runs = Vec::new();
            for &a in algos {
                runs.push(prepared.run(&cfg, a).with_context(|| format!("running {}", a.name()))?);
            }
            let refs: Vec<_> = runs.iter().collect();
            emit(&output, |w| write_frames_csv(&refs, w))?;
            if output.summary {
                let rows: Vec<_> = runs
                    .iter()
                    .map(|r| (r.algorithm.name().to_string(), r.mean_energy_per_frame_mj))
                    .collect();
                for (name, mj) in rows {
                    println!("{name:<10} mean energy per frame {mj:.6} mJ");
                }
            }
            Ok(())
        }
        Command::Compare { common, output } => {
            let cfg = load(&common)?;
            let r = compare(&cfg).context("running the comparison")?;
            emit(&output, |w| write_compare_csv(cfg.seed, &r, w))?;
            if output.summary {
                print!(
                    "{}",
                    summary_table(
                        "scenario",
                        &[(
                            cfg.scenario.name().to_string(),
                            r.ebcd.mean_energy_per_frame_mj,
                            r.baseline.mean_energy_per_frame_mj,
                            r.savings_percent
                        )]
                    )
                );
            }
            Ok(())
        }
        Command::Sweep { common, axis, values, fixed, seeds_per_point, output } => {
            let cfg = load(&common)?;
            let spec = SweepSpec {
                axis,
                values,
                fixed: fixed.unwrap_or(match axis {
                    SweepAxis::MsCount => cfg.n_rs,
                    SweepAxis::RsCount => cfg.n_ms,
                }),
                scenario: cfg.scenario,
                seeds_per_point,
                first_seed: cfg.seed,
            };
            spec.validate().map_err(|e| Failure::Config(e.to_string()))?;
            let outcome = run_sweep(&spec, &cfg).map_err(|e| Failure::Config(e.to_string()))?;
            for row in &outcome.rows {
                if let SweepRow::Error { axis_value, seed, message } = row {
                    eprintln!("error at {}={axis_value} seed {seed}: {message}", axis.name());
                }
            }
            emit(&output, |w| write_sweep_csv(&outcome.rows, w))?;
            if output.summary {
                print!("{}", sweep_summary(axis.name(), &outcome.rows));
            }
            match outcome.error_count() {
                0 => Ok(()),
                n => Err(Failure::Partial(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Partial(n)) => {
            eprintln!("sweep finished with {n} failed point(s)");
            ExitCode::from(3)
        }
    }
}
