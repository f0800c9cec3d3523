//! Command-line surface of the `lab` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "lab", version, about = "Scenario runner for the local-convexity laboratory")]
pub struct Cli {
    /// Attach wall-clock timings to reports. Timed reports are not
    /// byte-stable across runs; leave this off when diffing output.
    #[arg(long, global = true)]
    pub timings: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one scenario file and emit its JSON report.
    Run {
        /// Path to the scenario JSON file.
        scenario: PathBuf,

        /// Write the report to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,

        /// Also export the results as flat CSV rows.
        #[arg(long)]
        csv: Option<PathBuf>,

        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,

        /// Override the task's primary sample count.
        #[arg(long)]
        samples: Option<usize>,
    },

    /// Run a named suite sequentially and aggregate the verdicts.
    Suite {
        /// Suite name; `lab describe tasks` lists the registered suites.
        name: String,

        /// Write the suite report to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,

        /// Also export every member's results as flat CSV rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Print the registered spaces, map families, or tasks.
    Describe {
        #[arg(value_enum)]
        what: Topic,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Topic {
    Spaces,
    Maps,
    Tasks,
}
