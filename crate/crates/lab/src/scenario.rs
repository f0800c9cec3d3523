//! Scenario files: the JSON surface of the runner.
//!
//! A scenario names at most one space, at most one map, a task, the task's
//! parameters, and a seed. Validation happens on the raw JSON before the
//! typed parse so that diagnostics can name the offending field by path.

use anyhow::{anyhow, bail, Result};
use serde_json::{Map, Value};

use lclab::{MapSpec64, Space64};

/// Everything the runner can be asked to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Delta,
    Conv2,
    Omega,
    Lip1,
    Lip2,
    Dcheck,
    Lipo,
    Verify,
    Lcr,
    Bound,
    Claim1,
    Suite,
}

/// Task names with one-line summaries, in the order `describe tasks` prints.
pub const TASKS: &[(&str, &str)] = &[
    ("delta", "modulus-of-convexity curve of a space, with the closed form on Euclidean spaces"),
    ("conv2", "2-convexity number of a space, checked against the universal 1/8 ceiling"),
    ("omega", "modulus of smoothness of a map at a chosen order"),
    ("lip1", "first-order Lipschitz constant of a map"),
    ("lip2", "second-order smoothness constant of a map"),
    ("dcheck", "finite-difference audit of the analytic derivative"),
    ("lipo", "Lipschitz-openness constant via the Jacobian and membership routes"),
    ("verify", "convexity verdict for the image of one ball, optionally against the grid oracle"),
    ("lcr", "local convexity radius around a center, bracketed by bisection"),
    ("bound", "every constant in the bound plus the certified radius it predicts"),
    ("claim1", "midpoint inequality chain on sampled pairs"),
    ("suite", "a named scenario list with aggregated verdicts"),
];

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Delta => "delta",
            Task::Conv2 => "conv2",
            Task::Omega => "omega",
            Task::Lip1 => "lip1",
            Task::Lip2 => "lip2",
            Task::Dcheck => "dcheck",
            Task::Lipo => "lipo",
            Task::Verify => "verify",
            Task::Lcr => "lcr",
            Task::Bound => "bound",
            Task::Claim1 => "claim1",
            Task::Suite => "suite",
        }
    }

    pub fn from_name(s: &str) -> Option<Task> {
        Some(match s {
            "delta" => Task::Delta,
            "conv2" => Task::Conv2,
            "omega" => Task::Omega,
            "lip1" => Task::Lip1,
            "lip2" => Task::Lip2,
            "dcheck" => Task::Dcheck,
            "lipo" => Task::Lipo,
            "verify" => Task::Verify,
            "lcr" => Task::Lcr,
            "bound" => Task::Bound,
            "claim1" => Task::Claim1,
            "suite" => Task::Suite,
            _ => return None,
        })
    }

    fn needs_space(self) -> bool {
        matches!(self, Task::Delta | Task::Conv2)
    }

    fn needs_map(self) -> bool {
        matches!(
            self,
            Task::Omega
                | Task::Lip1
                | Task::Lip2
                | Task::Dcheck
                | Task::Lipo
                | Task::Verify
                | Task::Lcr
                | Task::Bound
                | Task::Claim1
        )
    }

    /// Tasks whose primary sample count the `--samples` flag may override.
    fn samples_override(self) -> bool {
        matches!(
            self,
            Task::Delta | Task::Conv2 | Task::Omega | Task::Lip1 | Task::Lip2 | Task::Dcheck | Task::Lipo
        )
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub space: Option<Space64>,
    pub map: Option<MapSpec64>,
    pub task: Task,
    pub params: Map<String, Value>,
    pub seed: u64,
}

impl Scenario {
    /// The scenario as it is echoed into reports: the parsed form
    /// re-serialized, so overrides and defaults are visible.
    pub fn echo(&self) -> Result<Value> {
        let mut m = Map::new();
        if let Some(s) = &self.space {
            m.insert("space".into(), serde_json::to_value(s)?);
        }
        if let Some(f) = &self.map {
            m.insert("map".into(), serde_json::to_value(f)?);
        }
        m.insert("task".into(), Value::String(self.task.name().into()));
        m.insert("params".into(), Value::Object(self.params.clone()));
        m.insert("seed".into(), Value::Number(self.seed.into()));
        Ok(Value::Object(m))
    }
}

fn check_fields(path: &str, obj: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            bail!("{path}: unknown field `{k}` (expected {})", allowed.join(", "));
        }
    }
    Ok(())
}

fn as_object<'v>(path: &str, v: &'v Value) -> Result<&'v Map<String, Value>> {
    v.as_object().ok_or_else(|| anyhow!("{path}: expected an object"))
}

fn check_space_fields(path: &str, v: &Value) -> Result<()> {
    check_fields(path, as_object(path, v)?, &["kind", "dim", "p", "weights"])
}

fn check_family_fields(path: &str, obj: &Map<String, Value>) -> Result<()> {
    if let Some(p) = obj.get("params") {
        let ppath = format!("{path}.params");
        let pobj = as_object(&ppath, p)?;
        check_fields(
            &ppath,
            pobj,
            &["matrix", "offset", "k", "quads", "outer_matrix", "outer_offset", "inner"],
        )?;
        if let Some(inner) = pobj.get("inner") {
            let ipath = format!("{ppath}.inner");
            let iobj = as_object(&ipath, inner)?;
            check_fields(&ipath, iobj, &["family", "params"])?;
            check_family_fields(&ipath, iobj)?;
        }
    }
    Ok(())
}

fn parse_space(path: &str, v: &Value) -> Result<Space64> {
    check_space_fields(path, v)?;
    serde_json::from_value(v.clone()).map_err(|e| anyhow!("{path}: {e}"))
}

fn parse_map(v: &Value) -> Result<MapSpec64> {
    let path = "scenario.map";
    let obj = as_object(path, v)?;
    check_fields(path, obj, &["family", "params", "domain", "codomain_space"])?;
    check_family_fields(path, obj)?;
    if let Some(d) = obj.get("domain") {
        let dobj = as_object("scenario.map.domain", d)?;
        check_fields("scenario.map.domain", dobj, &["space", "center", "radius"])?;
        if let Some(s) = dobj.get("space") {
            check_space_fields("scenario.map.domain.space", s)?;
        }
    }
    if let Some(s) = obj.get("codomain_space") {
        check_space_fields("scenario.map.codomain_space", s)?;
    }
    serde_json::from_value(v.clone()).map_err(|e| anyhow!("{path}: {e}"))
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: Value = serde_json::from_str(text).map_err(|e| anyhow!("scenario: {e}"))?;
    let obj = as_object("scenario", &raw)?;
    check_fields("scenario", obj, &["space", "map", "task", "params", "seed"])?;

    let task = match obj.get("task") {
        None => bail!("scenario: missing field `task`"),
        Some(Value::String(s)) => Task::from_name(s).ok_or_else(|| {
            let names: Vec<&str> = TASKS.iter().map(|(n, _)| *n).collect();
            anyhow!("scenario.task: unknown task `{s}` (expected {})", names.join(", "))
        })?,
        Some(v) => bail!("scenario.task: expected a string, got {v}"),
    };

    let seed = match obj.get("seed") {
        None => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| anyhow!("scenario.seed: expected a nonnegative integer, got {v}"))?,
    };

    let params = match obj.get("params") {
        None => Map::new(),
        Some(v) => as_object("scenario.params", v)?.clone(),
    };

    let space = obj.get("space").map(|v| parse_space("scenario.space", v)).transpose()?;
    let map = obj.get("map").map(parse_map).transpose()?;

    if task.needs_space() && space.is_none() {
        bail!("scenario.space: required for task `{}`", task.name());
    }
    if task.needs_map() && map.is_none() {
        bail!("scenario.map: required for task `{}`", task.name());
    }
    if task.needs_space() && map.is_some() {
        bail!("scenario.map: not used by task `{}`", task.name());
    }
    if task.needs_map() && space.is_some() {
        bail!("scenario.space: not used by task `{}`; the map carries its own spaces", task.name());
    }
    if task == Task::Suite && (space.is_some() || map.is_some()) {
        bail!("scenario: task `suite` takes only `params.name` and ignores spaces and maps");
    }

    Ok(Scenario { space, map, task, params, seed })
}

pub fn apply_overrides(sc: &mut Scenario, seed: Option<u64>, samples: Option<usize>) -> Result<()> {
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(n) = samples {
        if !sc.task.samples_override() {
            bail!(
                "--samples does not apply to task `{}`; set the task's own parameters in `params`",
                sc.task.name()
            );
        }
        sc.params.insert("samples".into(), Value::Number(n.into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_minimal_space_scenario_parses() {
        let sc = parse_scenario(
            r#"{"space": {"kind": "euclidean", "dim": 2}, "task": "conv2", "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(sc.task, Task::Conv2);
        assert_eq!(sc.seed, 3);
        assert_eq!(sc.space.unwrap().dim(), 2);
    }

    #[test]
    fn unknown_fields_are_named_by_path() {
        let err = parse_scenario(r#"{"task": "conv2", "spice": {}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field `spice`"), "{err}");

        let err = parse_scenario(
            r#"{"task": "conv2", "space": {"kind": "euclidean", "dmi": 2}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("scenario.space: unknown field `dmi`"), "{err}");

        let err = parse_scenario(
            r#"{"task": "lip2", "map": {"family": "parabolic_shear", "params": {"kk": 1.0},
                "domain": {"space": {"kind": "euclidean", "dim": 2}, "center": [0,0], "radius": 1},
                "codomain_space": {"kind": "euclidean", "dim": 2}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("scenario.map.params: unknown field `kk`"), "{err}");
    }

    #[test]
    fn missing_requirements_are_reported() {
        let err = parse_scenario(r#"{"task": "delta"}"#).unwrap_err();
        assert!(err.to_string().contains("scenario.space: required"), "{err}");

        let err = parse_scenario(r#"{"space": {"kind": "euclidean", "dim": 2}}"#).unwrap_err();
        assert!(err.to_string().contains("missing field `task`"), "{err}");

        let err = parse_scenario(r#"{"task": "hustle"}"#).unwrap_err();
        assert!(err.to_string().contains("unknown task `hustle`"), "{err}");
    }

    #[test]
    fn overrides_respect_the_task() {
        let mut sc =
            parse_scenario(r#"{"space": {"kind": "linf", "dim": 2}, "task": "conv2"}"#).unwrap();
        apply_overrides(&mut sc, Some(11), Some(500)).unwrap();
        assert_eq!(sc.seed, 11);
        assert_eq!(sc.params["samples"], 500);

        let mut sc = parse_scenario(
            r#"{"task": "verify", "map": {"family": "parabolic_shear", "params": {"k": 1.0},
                "domain": {"space": {"kind": "euclidean", "dim": 2}, "center": [0,0], "radius": 1},
                "codomain_space": {"kind": "euclidean", "dim": 2}}}"#,
        )
        .unwrap();
        let err = apply_overrides(&mut sc, None, Some(10)).unwrap_err();
        assert!(err.to_string().contains("--samples does not apply"), "{err}");
    }
}
