//! Built-in suites and the `describe` listings.
//!
//! `paper-verification` runs the Euclidean scenarios and asserts the bound
//! on each; `degeneracy-demo` runs the max-norm shear, certifies
//! non-convexity at every probed radius, and pins the degenerate bound to
//! exactly zero.

use anyhow::{bail, Result};
use serde_json::{json, Value};

use lclab::linalg::Mat;
use lclab::map::MapFamily;
use lclab::space::Ball;
use lclab::{Ball64, MapSpec64, Space64};

use crate::report::CsvRow;
use crate::scenario::{Scenario, Task, TASKS};

pub const SUITES: &[(&str, &str)] = &[
    ("paper-verification", "Euclidean shear, quadratic, and linear scenarios; asserts every bound"),
    ("degeneracy-demo", "max-norm shear; certifies non-convexity at all radii and a bound of exactly 0"),
];

/// What a suite member must show beyond its task finishing cleanly.
enum Expect {
    /// The measured radius covers the predicted bound (and the Hilbert form
    /// where one is reported).
    BoundHolds,
    /// The verifier produced a certified non-convexity witness.
    NonConvexCertified,
    /// The degenerate case: the predicted bound is exactly zero and holds.
    ZeroBound,
}

struct Member {
    label: &'static str,
    scenario: Scenario,
    expect: Expect,
}

fn euclidean_unit_ball(dim: usize) -> Ball64 {
    Ball::unit(Space64::euclidean(dim))
}

fn bound_member(label: &'static str, map: MapSpec64, expect: Expect) -> Member {
    Member {
        label,
        scenario: Scenario {
            space: None,
            map: Some(map),
            task: Task::Bound,
            params: serde_json::Map::new(),
            seed: 0,
        },
        expect,
    }
}

fn shear(k: f64, dim: usize) -> MapSpec64 {
    MapSpec64::endomorphic(MapFamily::parabolic_shear(k), euclidean_unit_ball(dim))
        .expect("shear member")
}

fn paper_verification() -> Vec<Member> {
    let quad_fold = MapSpec64::endomorphic(
        MapFamily::quadratic_perturbation(vec![
            Mat::zeros(2, 2),
            Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]),
        ]),
        euclidean_unit_ball(2),
    )
    .expect("quad-fold member");
    let parabolic_stretch = MapSpec64::endomorphic(
        MapFamily::quadratic_perturbation(vec![
            Mat::from_rows(&[vec![0.25, 0.0], vec![0.0, 0.0]]),
            Mat::zeros(2, 2),
        ]),
        euclidean_unit_ball(2),
    )
    .expect("parabolic-stretch member");
    let doubling = MapSpec64::endomorphic(
        MapFamily::linear_homogeneous(Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]])),
        euclidean_unit_ball(2),
    )
    .expect("doubling member");
    let triangular = MapSpec64::endomorphic(
        MapFamily::linear_homogeneous(Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 0.5]])),
        euclidean_unit_ball(2),
    )
    .expect("triangular-linear member");

    vec![
        bound_member("shear-0.5", shear(0.5, 2), Expect::BoundHolds),
        bound_member("shear-1", shear(1.0, 2), Expect::BoundHolds),
        bound_member("shear-2", shear(2.0, 2), Expect::BoundHolds),
        bound_member("shear-4", shear(4.0, 2), Expect::BoundHolds),
        bound_member("quad-fold", quad_fold, Expect::BoundHolds),
        bound_member("parabolic-stretch", parabolic_stretch, Expect::BoundHolds),
        bound_member("doubling", doubling, Expect::BoundHolds),
        bound_member("triangular-linear", triangular, Expect::BoundHolds),
        bound_member("shear-1-3d", shear(1.0, 3), Expect::BoundHolds),
    ]
}

fn linf_shear() -> MapSpec64 {
    MapSpec64::endomorphic(MapFamily::parabolic_shear(1.0), Ball::unit(Space64::linf(2)))
        .expect("max-norm shear member")
}

fn degeneracy_demo() -> Vec<Member> {
    let radii = [0.05, 0.1, 0.2, 0.4, 0.8];
    let labels = ["linf-shear-r0.05", "linf-shear-r0.1", "linf-shear-r0.2", "linf-shear-r0.4", "linf-shear-r0.8"];
    let mut members: Vec<Member> = radii
        .iter()
        .zip(labels)
        .map(|(&r, label)| {
            let mut params = serde_json::Map::new();
            params.insert("radius".into(), json!(r));
            params.insert("pairs".into(), json!(128));
            Member {
                label,
                scenario: Scenario {
                    space: None,
                    map: Some(linf_shear()),
                    task: Task::Verify,
                    params,
                    seed: 8,
                },
                expect: Expect::NonConvexCertified,
            }
        })
        .collect();
    members.push(bound_member("linf-shear-bound", linf_shear(), Expect::ZeroBound));
    members
}

fn expect_failures(expect: &Expect, results: &Value) -> Vec<String> {
    let mut out = Vec::new();
    match expect {
        Expect::BoundHolds => {
            if results["bound_holds"] != json!(true) {
                out.push("the bound did not hold".into());
            }
            if let Some(h) = results.get("hilbert_bound_holds") {
                if h != &json!(true) {
                    out.push("the Hilbert-form bound did not hold".into());
                }
            }
        }
        Expect::NonConvexCertified => {
            if results["verdict"]["verdict"] != json!("non_convex") {
                out.push(format!(
                    "expected a non_convex verdict, got {}",
                    results["verdict"]["verdict"]
                ));
            } else if !results["verdict"]["witness"].is_object() {
                out.push("non-convexity reported without a witness pair".into());
            }
        }
        Expect::ZeroBound => {
            if results["bound"] != json!(0.0) {
                out.push(format!("expected a bound of exactly 0, got {}", results["bound"]));
            }
            if results["bound_holds"] != json!(true) {
                out.push("the degenerate bound did not hold".into());
            }
        }
    }
    out
}

pub struct SuiteRun {
    pub members: Vec<Value>,
    pub csv: Vec<CsvRow>,
    /// Max of the member codes.
    pub code: i32,
    pub notes: Vec<String>,
}

/// Runs every member of the named suite in order and aggregates verdicts.
pub fn run_members(name: &str) -> Result<SuiteRun> {
    let members = match name {
        "paper-verification" => paper_verification(),
        "degeneracy-demo" => degeneracy_demo(),
        other => {
            let names: Vec<&str> = SUITES.iter().map(|(n, _)| *n).collect();
            bail!("unknown suite `{other}` (expected {})", names.join(", "));
        }
    };

    let mut run = SuiteRun { members: Vec::new(), csv: Vec::new(), code: 0, notes: Vec::new() };
    for m in members {
        let mut out = crate::tasks::run_scenario(&m.scenario, m.label)?;
        let failures = expect_failures(&m.expect, &out.results);
        let passed = out.code == 0 && failures.is_empty();
        let member_code = if passed { 0 } else { out.code.max(1) };
        run.code = run.code.max(member_code);
        run.members.push(json!({
            "label": m.label,
            "task": m.scenario.task.name(),
            "scenario": m.scenario.echo()?,
            "results": out.results,
            "passed": passed,
            "failures": failures,
        }));
        run.csv.append(&mut out.csv);
        for note in out.notes {
            run.notes.push(format!("  {note}"));
        }
        run.notes.push(format!("{}: {}", m.label, if passed { "PASS" } else { "FAIL" }));
    }
    Ok(run)
}

// --- describe -------------------------------------------------------------

pub fn describe_spaces() -> String {
    let mut s = String::new();
    s.push_str("Spaces (scenario field \"space\", also inside map domains):\n\n");
    s.push_str("  euclidean    {\"kind\": \"euclidean\", \"dim\": n}\n");
    s.push_str("  l1           {\"kind\": \"l1\", \"dim\": n}\n");
    s.push_str("  linf         {\"kind\": \"linf\", \"dim\": n}\n");
    s.push_str("  lp           {\"kind\": \"lp\", \"dim\": n, \"p\": p}            with p >= 1\n");
    s.push_str("  weighted_lp  {\"kind\": \"weighted_lp\", \"dim\": n, \"p\": p, \"weights\": [w1, ..., wn]}\n");
    s.push('\n');
    s.push_str("Every space carries its own norm; balls are {x : |x - center| <= radius}\n");
    s.push_str("in that norm. `delta` and `conv2` act on a space directly.\n");
    s
}

pub fn describe_maps() -> String {
    let mut s = String::new();
    s.push_str("Map families (scenario field \"map\"):\n\n");
    s.push_str("  linear                  params {\"matrix\": [[...]], \"offset\": [...]}\n");
    s.push_str("                          x -> Ax + b; offset defaults to zero\n");
    s.push_str("  parabolic_shear         params {\"k\": k}, k > 0\n");
    s.push_str("                          (x1, ..., xn) -> (x1, ..., xn + k x1^2)\n");
    s.push_str("  quadratic_perturbation  params {\"quads\": [[[...]], ...]}, one matrix per component\n");
    s.push_str("                          f_i(x) = x_i + x^T Q_i x\n");
    s.push_str("  composed                params {\"outer_matrix\", \"outer_offset\", \"inner\"}\n");
    s.push_str("                          x -> A g(x) + b with g another family\n");
    s.push('\n');
    s.push_str("A map carries its domain ball and codomain space:\n");
    s.push_str("  {\"family\": \"parabolic_shear\", \"params\": {\"k\": 1.0},\n");
    s.push_str("   \"domain\": {\"space\": {\"kind\": \"euclidean\", \"dim\": 2}, \"center\": [0, 0], \"radius\": 1.0},\n");
    s.push_str("   \"codomain_space\": {\"kind\": \"euclidean\", \"dim\": 2}}\n");
    s
}

pub fn describe_tasks() -> String {
    let mut s = String::new();
    s.push_str("Tasks (scenario field \"task\"):\n\n");
    for (name, blurb) in TASKS {
        s.push_str(&format!("  {name:<8} {blurb}\n"));
    }
    s.push('\n');
    s.push_str("Suites:\n\n");
    for (name, blurb) in SUITES {
        s.push_str(&format!("  {name:<20} {blurb}\n"));
    }
    s.push('\n');
    s.push_str("Exit codes: 0 success, 1 a checked assertion or cross-check failed,\n");
    s.push_str("2 unreadable or invalid input. A suite exits with the max over its members.\n");
    s
}
