//! Task dispatch: one function per task name, all returning the same
//! outcome shape.
//!
//! A task reports `code` 0 when everything it asserts held, 1 when a
//! computed check failed (a violated bound, a verifier/oracle disagreement,
//! a broken inequality chain). Infeasible requests surface as errors and
//! become exit code 2 in the binary.

use anyhow::{anyhow, bail, Result};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use lclab::map::{derivative_check, omega_estimate};
use lclab::openness::{lipo_membership_probe, lipo_via_inverse};
use lclab::oracle::{grid_convexity_oracle_2d, GridVerdict};
use lclab::sample::SampleMode;
use lclab::space::{
    conv2_estimate, delta_estimate, delta_hilbert_exact, geometric_t_grid, NormKind,
};
use lclab::verify::{
    check_theorem, claim1_trace, estimate_lcr, theorem_bound, verify_convexity, Bound, LcrMode,
    TheoremOptions, Verdict,
};
use lclab::{Ball64, MapSpec64};

use crate::report::{label_rows, CsvRow};
use crate::scenario::{Scenario, Task};

pub struct TaskOutcome {
    pub results: Value,
    pub csv: Vec<CsvRow>,
    /// 0 = all checks held, 1 = an assertion or cross-check failed.
    pub code: i32,
    /// Human-readable status lines for stderr.
    pub notes: Vec<String>,
}

impl TaskOutcome {
    fn ok(results: Value) -> TaskOutcome {
        TaskOutcome { results, csv: Vec::new(), code: 0, notes: Vec::new() }
    }
}

pub fn run_scenario(sc: &Scenario, label: &str) -> Result<TaskOutcome> {
    let mut out = match sc.task {
        Task::Delta => delta_task(sc)?,
        Task::Conv2 => conv2_task(sc)?,
        Task::Omega => omega_task(sc)?,
        Task::Lip1 => lip_task(sc, 1)?,
        Task::Lip2 => lip_task(sc, 2)?,
        Task::Dcheck => dcheck_task(sc)?,
        Task::Lipo => lipo_task(sc)?,
        Task::Verify => verify_task(sc)?,
        Task::Lcr => lcr_task(sc)?,
        Task::Bound => bound_task(sc)?,
        Task::Claim1 => claim1_task(sc)?,
        Task::Suite => suite_task(sc)?,
    };
    label_rows(&mut out.csv, label, sc.task.name());
    Ok(out)
}

fn task_params<T: for<'de> Deserialize<'de>>(sc: &Scenario) -> Result<T> {
    serde_json::from_value(Value::Object(sc.params.clone()))
        .map_err(|e| anyhow!("scenario.params: {e}"))
}

fn the_map(sc: &Scenario) -> &MapSpec64 {
    sc.map.as_ref().expect("validated: map tasks carry a map")
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Convex => "convex",
        Verdict::NonConvex => "non_convex",
        Verdict::Inconclusive => "inconclusive",
    }
}

// --- delta ----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DeltaParams {
    t_grid: Vec<f64>,
    samples: usize,
}

impl Default for DeltaParams {
    fn default() -> Self {
        DeltaParams { t_grid: vec![0.25, 0.5, 1.0, 1.5, 2.0], samples: 20_000 }
    }
}

fn delta_task(sc: &Scenario) -> Result<TaskOutcome> {
    let space = sc.space.as_ref().expect("validated: space tasks carry a space");
    let p: DeltaParams = task_params(sc)?;
    let curve = delta_estimate(space, &p.t_grid, p.samples, sc.seed)?;

    let mut out = TaskOutcome::ok(json!({ "curve": curve }));
    for (&t, v) in curve.t_grid.iter().zip(&curve.values) {
        out.csv.push(CsvRow::new("delta", Some(t), v.map(|x| x.to_string()).unwrap_or_default()));
    }

    if matches!(space.kind(), NormKind::Euclidean) {
        // The sampled infimum can only overshoot the closed form; undershoot
        // means one of the two implementations is wrong.
        let exact: Vec<f64> =
            p.t_grid.iter().map(|&t| delta_hilbert_exact(t)).collect::<lclab::Result<_>>()?;
        let mut sound = true;
        for ((&t, v), &e) in curve.t_grid.iter().zip(&curve.values).zip(&exact) {
            out.csv.push(CsvRow::new("delta_exact", Some(t), e));
            if let Some(v) = v {
                if *v + 1e-9 < e {
                    sound = false;
                    out.notes.push(format!(
                        "delta({t}) = {v} undershoots the closed form {e}"
                    ));
                }
            }
        }
        out.results["hilbert_exact"] = json!(exact);
        out.results["sound_against_closed_form"] = json!(sound);
        if !sound {
            out.code = 1;
        }
    }
    Ok(out)
}

// --- conv2 ----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Conv2Params {
    samples: usize,
    refine: bool,
}

impl Default for Conv2Params {
    fn default() -> Self {
        Conv2Params { samples: 20_000, refine: true }
    }
}

fn conv2_task(sc: &Scenario) -> Result<TaskOutcome> {
    let space = sc.space.as_ref().expect("validated: space tasks carry a space");
    let p: Conv2Params = task_params(sc)?;
    let est = conv2_estimate(space, p.samples, sc.seed, p.refine)?;

    // No space beats the parallelogram law, so the sampled value must stay
    // under 1/8 no matter the norm.
    let ceiling_ok = est.value <= 0.125 + 1e-6;
    let mut out = TaskOutcome::ok(json!({
        "estimate": est,
        "ceiling": 0.125,
        "ceiling_ok": ceiling_ok,
    }));
    out.csv.push(CsvRow::new("conv2", None, est.value));
    if !ceiling_ok {
        out.code = 1;
        out.notes.push(format!("conv2 = {} exceeds the universal ceiling 1/8", est.value));
    }
    Ok(out)
}

// --- omega / lip1 / lip2 --------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OmegaParams {
    order: u8,
    levels: u32,
    samples: usize,
}

impl Default for OmegaParams {
    fn default() -> Self {
        OmegaParams { order: 2, levels: 16, samples: 400 }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LipParams {
    levels: u32,
    samples: usize,
}

impl Default for LipParams {
    fn default() -> Self {
        LipParams { levels: 16, samples: 400 }
    }
}

fn smoothness_outcome(sc: &Scenario, order: u8, levels: u32, samples: usize) -> Result<TaskOutcome> {
    let map = the_map(sc);
    let grid = geometric_t_grid(2.0 * map.domain().radius, levels);
    let est = omega_estimate(map, order, &grid, samples, sc.seed)?;

    let mut out = TaskOutcome::ok(json!({
        "estimate": est,
        "lip_constant": est.lip_constant,
    }));
    for (&t, &w) in est.t_grid.iter().zip(&est.omega_values) {
        out.csv.push(CsvRow::new("omega", Some(t), w));
    }
    out.csv.push(CsvRow::new(if order == 1 { "lip1" } else { "lip2" }, None, est.lip_constant));
    Ok(out)
}

fn omega_task(sc: &Scenario) -> Result<TaskOutcome> {
    let p: OmegaParams = task_params(sc)?;
    if p.order != 1 && p.order != 2 {
        bail!("scenario.params.order: expected 1 or 2, got {}", p.order);
    }
    smoothness_outcome(sc, p.order, p.levels, p.samples)
}

fn lip_task(sc: &Scenario, order: u8) -> Result<TaskOutcome> {
    let p: LipParams = task_params(sc)?;
    smoothness_outcome(sc, order, p.levels, p.samples)
}

// --- dcheck ---------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DcheckParams {
    samples: usize,
}

impl Default for DcheckParams {
    fn default() -> Self {
        DcheckParams { samples: 60 }
    }
}

fn dcheck_task(sc: &Scenario) -> Result<TaskOutcome> {
    let map = the_map(sc);
    let p: DcheckParams = task_params(sc)?;
    let chk = derivative_check(map, p.samples, sc.seed)?;

    // Taylor: the second-order remainder is at most half the Lipschitz
    // constant of the derivative.
    let residual_ok = chk.frechet_residual_max <= 0.5 * chk.lip1_of_derivative.value + 1e-6;
    let mut out = TaskOutcome::ok(json!({
        "check": chk,
        "residual_ok": residual_ok,
    }));
    out.csv.push(CsvRow::new("frechet_residual_max", None, chk.frechet_residual_max));
    out.csv.push(CsvRow::new("lip1_of_derivative", None, chk.lip1_of_derivative.value));
    out.csv.push(CsvRow::new("operator_norm_sup", None, chk.operator_norm_sup.value));
    if !residual_ok {
        out.code = 1;
        out.notes.push(format!(
            "Frechet residual {} exceeds half the derivative Lipschitz constant {}",
            chk.frechet_residual_max, chk.lip1_of_derivative.value
        ));
    }
    Ok(out)
}

// --- lipo -----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LipoParams {
    method: String,
    samples: usize,
    centers: usize,
    radii_per_center: usize,
    directions: usize,
    agreement_tol: f64,
}

impl Default for LipoParams {
    fn default() -> Self {
        LipoParams {
            method: "both".into(),
            samples: 150,
            centers: 12,
            radii_per_center: 3,
            directions: 48,
            agreement_tol: 0.05,
        }
    }
}

fn lipo_task(sc: &Scenario) -> Result<TaskOutcome> {
    let map = the_map(sc);
    let p: LipoParams = task_params(sc)?;

    let (run_inverse, run_membership) = match p.method.as_str() {
        "inverse" => (true, false),
        "membership" => (false, true),
        "both" => (true, true),
        other => bail!("scenario.params.method: expected inverse, membership, or both, got `{other}`"),
    };

    let mut results = Map::new();
    let mut out_csv = Vec::new();
    let inverse = if run_inverse {
        let est = lipo_via_inverse(map, p.samples, sc.seed)?;
        out_csv.push(CsvRow::new("lipo_inverse", None, est.value));
        results.insert("inverse".into(), serde_json::to_value(&est)?);
        Some(est.value)
    } else {
        None
    };
    let membership = if run_membership {
        let est = lipo_membership_probe(map, p.centers, p.radii_per_center, p.directions, sc.seed)?;
        out_csv.push(CsvRow::new("lipo_membership", None, est.value));
        results.insert("membership".into(), serde_json::to_value(&est)?);
        Some(est.value)
    } else {
        None
    };

    let mut out = TaskOutcome::ok(Value::Object(results));
    out.csv = out_csv;
    if let (Some(a), Some(b)) = (inverse, membership) {
        let denom = a.max(b);
        let gap = if denom > 0.0 { (a - b).abs() / denom } else { 0.0 };
        let agree = gap <= p.agreement_tol;
        out.results["relative_gap"] = json!(gap);
        out.results["agreement_tol"] = json!(p.agreement_tol);
        out.results["agree"] = json!(agree);
        out.csv.push(CsvRow::new("relative_gap", None, gap));
        if !agree {
            out.code = 1;
            out.notes.push(format!(
                "openness routes disagree: inverse {a} vs membership {b} (gap {gap:.4})"
            ));
        }
    }
    Ok(out)
}

// --- verify ---------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct VerifyParams {
    center: Option<Vec<f64>>,
    radius: Option<f64>,
    pairs: usize,
    oracle: bool,
    resolution: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { center: None, radius: None, pairs: 128, oracle: false, resolution: 192 }
    }
}

/// Largest radius a ball at `center` can have inside the map's domain.
fn headroom(map: &MapSpec64, center: &[f64]) -> Result<f64> {
    let dom = map.domain();
    let off = dom.space.norm(&lclab::vecops::sub(center, &dom.center))?;
    Ok(dom.radius - off)
}

fn verify_task(sc: &Scenario) -> Result<TaskOutcome> {
    let map = the_map(sc);
    let p: VerifyParams = task_params(sc)?;
    let center = p.center.unwrap_or_else(|| map.domain().center.clone());
    let radius = match p.radius {
        Some(r) => r,
        None => {
            let h = headroom(map, &center)?;
            if !(h > 0.0) {
                bail!("scenario.params.radius: required when the center sits on the domain boundary");
            }
            h
        }
    };
    let ball = Ball64::new(map.domain_space().clone(), center, radius)?;
    let v = verify_convexity(map, &ball, p.pairs, sc.seed)?;

    let mut out = TaskOutcome::ok(json!({ "verdict": v }));
    out.csv.push(CsvRow::new("verdict", Some(radius), verdict_name(v.verdict)));
    out.notes.push(format!("image of radius {radius}: {}", verdict_name(v.verdict)));

    if p.oracle {
        let o = grid_convexity_oracle_2d(map, &ball, p.resolution)?;
        let disagree = matches!(
            (v.verdict, o.verdict),
            (Verdict::Convex, GridVerdict::NonConvex) | (Verdict::NonConvex, GridVerdict::Convex)
        );
        let oracle_name = match o.verdict {
            GridVerdict::Convex => "convex",
            GridVerdict::NonConvex => "non_convex",
        };
        out.csv.push(CsvRow::new("oracle_verdict", Some(radius), oracle_name));
        out.results["oracle"] = serde_json::to_value(&o)?;
        out.results["oracle_agrees"] = json!(!disagree);
        if disagree {
            out.code = 1;
            out.notes.push(format!(
                "verifier says {} but the grid oracle says {oracle_name}",
                verdict_name(v.verdict)
            ));
        }
    }
    Ok(out)
}

// --- lcr ------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LcrParams {
    center: Option<Vec<f64>>,
    eps_max: Option<f64>,
    steps: usize,
    pairs: usize,
    mode: String,
}

impl Default for LcrParams {
    fn default() -> Self {
        LcrParams { center: None, eps_max: None, steps: 12, pairs: 128, mode: "at-point".into() }
    }
}

fn lcr_task(sc: &Scenario) -> Result<TaskOutcome> {
    let map = the_map(sc);
    let p: LcrParams = task_params(sc)?;
    let mode = match p.mode.as_str() {
        "at-point" | "at_point" => LcrMode::AtPoint,
        "uniform" => LcrMode::Uniform,
        other => bail!("scenario.params.mode: expected at-point or uniform, got `{other}`"),
    };
    let center = p.center.unwrap_or_else(|| map.domain().center.clone());
    let eps_max = match p.eps_max {
        Some(e) => e,
        None => {
            let h = headroom(map, &center)?;
            if !(h > 0.0) {
                bail!("scenario.params.eps_max: required when the center sits on the domain boundary");
            }
            h
        }
    };
    let est = estimate_lcr(map, &center, eps_max, p.steps, p.pairs, sc.seed, mode)?;

    let mut out = TaskOutcome::ok(json!({ "estimate": est }));
    out.csv.push(CsvRow::new("lcr", None, est.value));
    out.csv.push(CsvRow::new("bracket_lo", None, est.bracket.0));
    out.csv.push(CsvRow::new("bracket_hi", None, est.bracket.1));
    out.notes.push(format!(
        "lcr at {:?}: {} (bracket [{}, {}])",
        est.center, est.value, est.bracket.0, est.bracket.1
    ));
    Ok(out)
}

// --- bound ----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BoundParams {
    conv2_samples: usize,
    omega_levels: usize,
    omega_samples: usize,
    lipo_samples: usize,
    lcr_pairs: usize,
    bisection_steps: usize,
}

impl Default for BoundParams {
    fn default() -> Self {
        let d = TheoremOptions::default();
        BoundParams {
            conv2_samples: d.conv2_samples,
            omega_levels: d.omega_levels,
            omega_samples: d.omega_samples,
            lipo_samples: d.lipo_samples,
            lcr_pairs: d.lcr_pairs,
            bisection_steps: d.bisection_steps,
        }
    }
}

fn bound_value_string(b: &Bound<f64>) -> String {
    match b {
        Bound::Finite(v) => v.to_string(),
        Bound::Unbounded => "unbounded".into(),
    }
}

fn bound_task(sc: &Scenario) -> Result<TaskOutcome> {
    let map = the_map(sc);
    let p: BoundParams = task_params(sc)?;
    let opts = TheoremOptions {
        conv2_samples: p.conv2_samples,
        omega_levels: p.omega_levels,
        omega_samples: p.omega_samples,
        lipo_samples: p.lipo_samples,
        lcr_pairs: p.lcr_pairs,
        bisection_steps: p.bisection_steps,
        seed: sc.seed,
    };
    let rep = check_theorem(map, &opts)?;

    let ok = rep.bound_holds && rep.hilbert_bound_holds != Some(false);
    let mut out = TaskOutcome::ok(serde_json::to_value(&rep)?);
    out.csv.push(CsvRow::new("conv2", None, rep.conv2));
    out.csv.push(CsvRow::new("lipo", None, rep.lipo));
    out.csv.push(CsvRow::new("lip2", None, rep.lip2));
    out.csv.push(CsvRow::new("bound", None, bound_value_string(&rep.bound)));
    out.csv.push(CsvRow::new("effective_bound", None, rep.effective_bound));
    out.csv.push(CsvRow::new("lcr", None, rep.lcr_measured.value));
    out.csv.push(CsvRow::new("lcr_bracket_lo", None, rep.lcr_measured.bracket.0));
    out.csv.push(CsvRow::new("lcr_bracket_hi", None, rep.lcr_measured.bracket.1));
    out.csv.push(CsvRow::new("bound_holds", None, rep.bound_holds));
    if let Some(h) = &rep.hilbert_bound {
        out.csv.push(CsvRow::new("hilbert_bound", None, bound_value_string(h)));
    }
    if let Some(h) = rep.hilbert_bound_holds {
        out.csv.push(CsvRow::new("hilbert_bound_holds", None, h));
    }
    if ok {
        out.notes.push(format!(
            "bound holds: lcr {} >= effective bound {} (slack {})",
            rep.lcr_measured.value, rep.effective_bound, rep.slack
        ));
    } else {
        out.code = 1;
        out.notes.push(format!(
            "BOUND VIOLATED: lcr {} < effective bound {} (slack {})",
            rep.lcr_measured.value, rep.effective_bound, rep.slack
        ));
    }
    Ok(out)
}

// --- claim1 ---------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Claim1Params {
    pairs: usize,
    eps: Option<f64>,
    conv2_samples: usize,
    omega_levels: u32,
    omega_samples: usize,
    lipo_samples: usize,
}

impl Default for Claim1Params {
    fn default() -> Self {
        Claim1Params {
            pairs: 100,
            eps: None,
            conv2_samples: 20_000,
            omega_levels: 16,
            omega_samples: 400,
            lipo_samples: 150,
        }
    }
}

/// Pairs closer than this fraction of the ball radius are skipped: their
/// guaranteed depth shrinks quadratically and certifying them checks nothing.
const PAIR_SEPARATION_FLOOR: f64 = 0.05;

fn claim1_task(sc: &Scenario) -> Result<TaskOutcome> {
    let map = the_map(sc);
    let p: Claim1Params = task_params(sc)?;
    if p.pairs == 0 {
        bail!("scenario.params.pairs: must be at least 1");
    }
    let dom = map.domain();
    let space = map.domain_space().clone();

    // The same constants and seed streams the bound task uses, so the chain
    // is checked against the numbers it would be reported with.
    let conv2 = if matches!(space.kind(), NormKind::Euclidean) {
        0.125
    } else {
        conv2_estimate(&space, p.conv2_samples, sc.seed, true)?.value
    };
    let grid = geometric_t_grid(2.0 * dom.radius, p.omega_levels);
    let lip2 = omega_estimate(map, 2, &grid, p.omega_samples, sc.seed ^ 0x9e37)?.lip_constant;
    let lipo = lipo_via_inverse(map, p.lipo_samples, sc.seed ^ 0x51f1)?.value;

    let effective = theorem_bound(conv2, lipo, lip2)?.capped(dom.radius);
    let eps = match p.eps {
        Some(e) => e,
        None if effective > 0.0 => 0.5 * effective,
        None => 0.5 * dom.radius,
    };
    if !(eps > 0.0 && eps <= dom.radius) {
        bail!("scenario.params.eps: must lie in (0, {}], got {eps}", dom.radius);
    }
    let ball = Ball64::new(space.clone(), dom.center.clone(), eps)?;

    let mut traces = Vec::new();
    let raw = space.sample_ball(eps, 4 * p.pairs, sc.seed, SampleMode::Interior)?;
    for chunk in raw.chunks_exact(2) {
        if traces.len() == p.pairs {
            break;
        }
        let sep = space.norm(&lclab::vecops::sub(&chunk[0], &chunk[1]))?;
        if sep < PAIR_SEPARATION_FLOOR * eps {
            continue;
        }
        let shift = |q: &[f64]| -> Vec<f64> {
            q.iter().zip(&dom.center).map(|(a, c)| a + c).collect()
        };
        let x = shift(&chunk[0]);
        let y = shift(&chunk[1]);
        traces.push(claim1_trace(map, &ball, &x, &y, lipo, lip2, conv2)?);
    }
    if traces.is_empty() {
        bail!("scenario.params.pairs: no usable pairs survived the separation filter");
    }

    let all_hold = traces.iter().all(|t| t.all_inequalities_hold);
    let worst_dev = traces.iter().map(|t| t.deviation_margin).fold(f64::INFINITY, f64::min);
    let worst_depth = traces.iter().map(|t| t.ball_depth_margin).fold(f64::INFINITY, f64::min);
    let all_certified = traces.iter().all(|t| t.openness_certified);
    let failures: Vec<Value> = traces
        .iter()
        .filter(|t| !t.all_inequalities_hold)
        .take(3)
        .map(serde_json::to_value)
        .collect::<std::result::Result<_, _>>()?;

    let mut out = TaskOutcome::ok(json!({
        "conv2": conv2,
        "lipo": lipo,
        "lip2": lip2,
        "eps": eps,
        "pairs_requested": p.pairs,
        "pairs_checked": traces.len(),
        "all_hold": all_hold,
        "worst_deviation_margin": worst_dev,
        "worst_ball_depth_margin": worst_depth,
        "openness_all_certified": all_certified,
        "failures": failures,
    }));
    for (i, t) in traces.iter().enumerate() {
        out.csv.push(CsvRow::new("deviation_margin", Some(i as f64), t.deviation_margin));
    }
    out.csv.push(CsvRow::new("all_hold", None, all_hold));
    if all_hold {
        out.notes.push(format!(
            "midpoint chain holds on {} pairs at radius {eps} (worst margin {worst_dev})",
            traces.len()
        ));
    } else {
        out.code = 1;
        out.notes.push(format!(
            "midpoint chain BROKEN on {} of {} pairs at radius {eps}",
            traces.iter().filter(|t| !t.all_inequalities_hold).count(),
            traces.len()
        ));
    }
    Ok(out)
}

// --- suite ----------------------------------------------------------------

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct SuiteParams {
    name: Option<String>,
}

fn suite_task(sc: &Scenario) -> Result<TaskOutcome> {
    let p: SuiteParams = task_params(sc)?;
    let name =
        p.name.ok_or_else(|| anyhow!("scenario.params.name: required for task `suite`"))?;
    let run = crate::suites::run_members(&name)?;
    let mut out = TaskOutcome::ok(json!({
        "suite": name,
        "scenarios": run.members,
        "passed": run.code == 0,
    }));
    out.csv = run.csv;
    out.code = run.code;
    out.notes = run.notes;
    Ok(out)
}
