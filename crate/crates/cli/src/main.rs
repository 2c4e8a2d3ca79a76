#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quasifix::gallery;

/// Fixed-point solver and contraction checker for quasicontractive maps.
#[derive(Parser)]
#[command(name = "quasifix", version)]
struct Cli {
    /// Directory for reports and CSV exports (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for pair sampling; overrides the config's seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Also write the iteration trace as CSV.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the problem described by a JSON config.
    Run { config: PathBuf },
    /// Run the built-in gallery of worked examples.
    Gallery {
        /// Only run entries whose label matches this glob.
        #[arg(long, value_name = "GLOB")]
        filter: Option<String>,
    },
}

const EXIT_INPUT: u8 = 1;
const EXIT_NEGATIVE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match &cli.command {
        Command::Run { config } => run(config, &out, cli.seed, cli.trace),
        Command::Gallery { filter } => run_gallery(filter.as_deref(), cli.out.as_deref(), cli.seed),
    }
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INPUT)
}

fn run(path: &Path, out: &Path, seed: Option<u64>, trace: bool) -> ExitCode {
    let cfg = match config::load(path) {
        Ok(c) => c,
        Err(e) => return input_error(e),
    };
    let seed = seed.unwrap_or(cfg.seed);
    let result = match tasks::run(&cfg, seed, trace) {
        Ok(r) => r,
        Err(e) => return input_error(format!("{}: {e}", path.display())),
    };

    let report_path = out.join(&cfg.output.report);
    if let Err(e) = output::write_json(&report_path, &tasks::report(&cfg, seed, &result)) {
        return input_error(format!("{}: {e}", report_path.display()));
    }
    let mut written = vec![report_path];
    let exports = [
        (trace, &result.trace_csv, &cfg.output.trace),
        (true, &result.points_csv, &cfg.output.points),
    ];
    for (wanted, data, name) in exports {
        if let (true, Some(bytes)) = (wanted, data) {
            let p = out.join(name);
            if let Err(e) = output::write_atomic(&p, |w| w.write_all(bytes)) {
                return input_error(format!("{}: {e}", p.display()));
            }
            written.push(p);
        }
    }

    println!("{}: {}", cfg.task.name(), result.summary);
    for p in &written {
        println!("wrote {}", p.display());
    }
    match result.status {
        tasks::Status::Success => ExitCode::SUCCESS,
        tasks::Status::Negative => ExitCode::from(EXIT_NEGATIVE),
    }
}

fn run_gallery(filter: Option<&str>, out: Option<&Path>, seed: Option<u64>) -> ExitCode {
    let pattern = match filter.map(glob::Pattern::new).transpose() {
        Ok(p) => p,
        Err(e) => return input_error(format!("invalid filter: {e}")),
    };
    let keep = |label: &str| pattern.as_ref().is_none_or(|p| p.matches(label));
    if !gallery::list_entries().iter().any(|e| keep(e.label)) {
        return input_error(format!("no entries match '{}'", filter.unwrap_or("*")));
    }

    let reports = gallery::run_matching(keep, seed.unwrap_or(0));
    let mut all_met = true;
    let mut errored = false;
    println!("{:<12} {:>7}  status", "entry", "checks");
    for r in &reports {
        match r {
            Ok(rep) => {
                let met = rep.checks.iter().filter(|c| c.met).count();
                let status = if rep.all_met { "PASS" } else { "FAIL" };
                println!(
                    "{:<12} {:>3}/{:<3}  {status}",
                    rep.label,
                    met,
                    rep.checks.len()
                );
                for c in rep.failed_checks() {
                    println!(
                        "    unmet: {} (expected {}, observed {})",
                        c.name, c.expected, c.observed
                    );
                }
                all_met &= rep.all_met;
                if let Some(dir) = out {
                    let p = dir.join(format!("{}.json", rep.label));
                    if let Err(e) = output::write_json(&p, rep) {
                        return input_error(format!("{}: {e}", p.display()));
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                errored = true;
            }
        }
    }
    if errored {
        ExitCode::from(EXIT_INPUT)
    } else if all_met {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NEGATIVE)
    }
}
