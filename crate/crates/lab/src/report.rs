//! Report assembly and export.
//!
//! Reports are JSON documents carrying the runner version, the scenario echo,
//! and the task results. Wall-clock time is attached only on request, so that
//! two runs of the same scenario with the same seed stay byte-identical.

use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One flat export row. `x` is the abscissa where one exists: the grid `t`
/// for curves, the ball radius for verdicts, the pair index for traces.
#[derive(Clone, Debug, Serialize)]
pub struct CsvRow {
    pub scenario: String,
    pub task: String,
    pub item: String,
    pub x: Option<f64>,
    pub value: String,
}

impl CsvRow {
    pub fn new(item: &str, x: Option<f64>, value: impl ToString) -> CsvRow {
        CsvRow {
            scenario: String::new(),
            task: String::new(),
            item: item.into(),
            x,
            value: value.to_string(),
        }
    }
}

/// Stamps the owning scenario and task onto rows produced by a task body.
/// Rows already labeled (suite members) keep their own labels.
pub fn label_rows(rows: &mut [CsvRow], scenario: &str, task: &str) {
    for r in rows.iter_mut() {
        if r.scenario.is_empty() {
            r.scenario = scenario.into();
            r.task = task.into();
        }
    }
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn wall_ms(d: Duration) -> Value {
    // Milliseconds with microsecond resolution; plenty for a progress figure.
    Value::from((d.as_secs_f64() * 1e3 * 1e3).round() / 1e3)
}

/// The report for a single scenario run.
pub fn scenario_report(echo: Value, results: Value, wall: Option<Duration>) -> Value {
    let mut m = Map::new();
    m.insert("version".into(), Value::String(VERSION.into()));
    m.insert("scenario".into(), echo);
    m.insert("results".into(), results);
    if let Some(d) = wall {
        m.insert("wall_time_ms".into(), wall_ms(d));
    }
    Value::Object(m)
}

/// The report for a suite run: one entry per member scenario plus the
/// aggregate verdict.
pub fn suite_report(name: &str, members: Vec<Value>, passed: bool, wall: Option<Duration>) -> Value {
    let mut m = Map::new();
    m.insert("version".into(), Value::String(VERSION.into()));
    m.insert("suite".into(), Value::String(name.into()));
    m.insert("scenarios".into(), Value::Array(members));
    m.insert("passed".into(), Value::Bool(passed));
    if let Some(d) = wall {
        m.insert("wall_time_ms".into(), wall_ms(d));
    }
    Value::Object(m)
}

/// Writes the report to `out`, or to stdout when no path is given.
pub fn emit(report: &Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}
