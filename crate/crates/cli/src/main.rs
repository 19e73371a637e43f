//! `markov-up`: certify, bound, simulate and verify Markov-up benchmark models.
//!
//! Exit codes: 0 when every verdict passes, 2 when a verdict fails or is
//! withheld, 1 on usage or configuration errors.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use markov_up_core::montecarlo::{simulate_records, tau_moments, with_threads};
use markov_up_core::report::Report;
use markov_up_core::{bound_set, build_benchmark, certify, theorem_bound, verify};
use serde::Serialize;

use crate::config::{load_config, ExperimentConfig};

#[derive(Parser)]
#[command(name = "markov-up", version, about = "Moment-bound verification for Markov-up processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the assumption certificate.
    Certify(Common),
    /// Print the bound constants and the hitting-time bound for every start state.
    Bounds(Common),
    /// Simulate paths and write paths.csv (optionally full trajectories).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also dump the first N trajectories per start state.
        #[arg(long, value_name = "N")]
        dump_trajectories: Option<usize>,
    },
    /// Run the whole pipeline and write report.json, paths.csv and verdicts.csv.
    Verify(Common),
    /// Same as `verify`.
    Run(Common),
    /// Summarize an existing report.json.
    Report {
        /// Path to a report.json written by `verify`.
        report: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the report (makes reports non-reproducible).
    #[arg(long)]
    wall_clock: bool,
}

enum Failure {
    Usage(String),
    Verdict,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Certify(c) => cmd_certify(&c),
        Command::Bounds(c) => cmd_bounds(&c),
        Command::Simulate {
            common,
            dump_trajectories,
        } => cmd_simulate(&common, dump_trajectories),
        Command::Verify(c) | Command::Run(c) => cmd_verify(&c),
        Command::Report { report } => cmd_report(&report),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    if common.threads == Some(0) {
        return Err(Failure::Usage("--threads must be positive".into()));
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_certify(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let e = &cfg.experiment;
    let m_max = e.m_list.iter().copied().max().unwrap_or(1);
    let cert = certify(&cfg.model_spec(), m_max, e.a2_tolerance, e.epsilon)?;
    print_json(&cert)
}

fn cmd_bounds(common: &Common) -> Outcome {
    #[derive(Serialize)]
    struct Entry {
        #[serde(flatten)]
        set: markov_up_core::BoundSet,
        theorem: Vec<markov_up_core::TheoremBound>,
    }
    let cfg = load(common)?;
    let spec = cfg.model_spec();
    let mut entries = Vec::new();
    for &m in &cfg.experiment.m_list {
        let set = bound_set(m, &spec, cfg.experiment.epsilon)?;
        let theorem = cfg
            .experiment
            .x_grid
            .iter()
            .map(|&x| theorem_bound(m, x, &set))
            .collect::<Result<Vec<_>, _>>()?;
        entries.push(Entry { set, theorem });
    }
    print_json(&entries)
}

fn cmd_simulate(common: &Common, dump: Option<usize>) -> Outcome {
    let cfg = load(common)?;
    let kernel = build_benchmark(&cfg.model_spec())?;
    let e = &cfg.experiment;
    std::fs::create_dir_all(&cfg.output.dir)?;

    let mut summaries = Vec::new();
    for &x0 in &e.x_grid {
        let records = with_threads(common.threads, || {
            simulate_records(&kernel, x0, e.n_traj, e.seed, e.max_steps)
        })??;
        for est in tau_moments(&records, x0, &e.m_list)? {
            println!(
                "x0={:<6} m={} mean={:.6} se={:.6} ci99_upper={:.6} capped={}",
                x0, est.m, est.mean, est.std_error, est.ci99_upper, est.capped_paths
            );
        }
        summaries.extend(records.iter().map(|r| r.summary));
    }
    output::write_paths(&cfg.output_file(&cfg.output.paths), &summaries)?;

    if let Some(n) = dump {
        let path = cfg.output_file(&cfg.output.trajectories);
        output::write_trajectories(&path, &kernel, e, n)?;
    }
    Ok(())
}

fn cmd_verify(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let spec = cfg.model_spec();
    let kernel = build_benchmark(&spec)?;
    let started = Instant::now();
    let run = verify(&kernel, &spec, &cfg.settings(common.threads))?;
    let elapsed = started.elapsed().as_millis() as u64;

    let echo = serde_json::to_value(&cfg)?;
    let report = Report::new(echo, &run, common.wall_clock.then_some(elapsed));

    std::fs::create_dir_all(&cfg.output.dir)?;
    std::fs::write(cfg.output_file(&cfg.output.report), report.to_json())?;
    output::write_paths(&cfg.output_file(&cfg.output.paths), &run.paths)?;
    output::write_verdicts(&cfg.output_file(&cfg.output.verdicts), &run.verdicts)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    output::print_summary(&report);
    if report.summary.all_pass {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn cmd_report(path: &Path) -> Outcome {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let report: Report = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    output::print_summary(&report);
    if report.summary.all_pass {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}
