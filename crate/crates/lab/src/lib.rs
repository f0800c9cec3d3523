//! Scenario runner wrapping the laboratory crate: JSON scenarios in,
//! versioned JSON reports and flat CSV out, with built-in suites and a
//! strict exit-code contract (0 success, 1 failed check, 2 bad input).

use std::fs;
use std::sync::Once;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};

pub mod cli;
pub mod report;
pub mod scenario;
pub mod suites;
pub mod tasks;

use cli::{Cli, Command, Topic};

/// Caps the global thread pool from `LAB_THREADS`. Unset or `0` leaves the
/// pool at its automatic size. Runs once; later calls keep the first cap.
fn init_threads() -> Result<()> {
    static INIT: Once = Once::new();
    let threads = match std::env::var("LAB_THREADS") {
        Err(_) => None,
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| anyhow!("LAB_THREADS: expected a nonnegative integer, got `{v}`"))?;
            (n > 0).then_some(n)
        }
    };
    if let Some(n) = threads {
        INIT.call_once(|| {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        });
    }
    Ok(())
}

/// Runs one parsed command line to completion and returns the exit code
/// (0 or 1). All input problems surface as errors; the binary maps those
/// to exit code 2.
pub fn execute(cli: Cli) -> Result<i32> {
    init_threads()?;
    match cli.command {
        Command::Run { scenario, out, csv, seed, samples } => {
            let text = fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let mut sc = scenario::parse_scenario(&text)?;
            scenario::apply_overrides(&mut sc, seed, samples)?;
            let label = scenario
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());

            let started = Instant::now();
            let outcome = tasks::run_scenario(&sc, &label)?;
            let wall = cli.timings.then(|| started.elapsed());

            let rep = report::scenario_report(sc.echo()?, outcome.results, wall);
            report::emit(&rep, out.as_deref())?;
            if let Some(path) = &csv {
                report::write_csv(path, &outcome.csv)?;
            }
            for note in &outcome.notes {
                eprintln!("{note}");
            }
            Ok(outcome.code)
        }
        Command::Suite { name, out, csv } => {
            let started = Instant::now();
            let run = suites::run_members(&name)?;
            let wall = cli.timings.then(|| started.elapsed());

            let rep = report::suite_report(&name, run.members, run.code == 0, wall);
            report::emit(&rep, out.as_deref())?;
            if let Some(path) = &csv {
                report::write_csv(path, &run.csv)?;
            }
            for note in &run.notes {
                eprintln!("{note}");
            }
            eprintln!("suite {name}: {}", if run.code == 0 { "PASS" } else { "FAIL" });
            Ok(run.code)
        }
        Command::Describe { what } => {
            let text = match what {
                Topic::Spaces => suites::describe_spaces(),
                Topic::Maps => suites::describe_maps(),
                Topic::Tasks => suites::describe_tasks(),
            };
            print!("{text}");
            Ok(0)
        }
    }
}
