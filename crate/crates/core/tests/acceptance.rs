//! The acceptance gate: one test per shipping criterion, pinned tolerances,
//! one `ACCEPTANCE <n> PASS` line per criterion on success (run with
//! `--nocapture` to see them; a failed assertion is the FAIL line).
//!
//! Criterion 7's exit-code half and criterion 10's byte-identical-report half
//! live in the CLI crate's acceptance test, which drives the built binary.

mod fixtures;

use fixtures::{registry, shear_lipo};
use lclab::linalg::Mat;
use lclab::map::{derivative_check, omega_estimate, MapFamily, MapSpec};
use lclab::openness::{lipo_membership_probe, lipo_via_inverse};
use lclab::oracle::{grid_convexity_oracle_2d, GridVerdict};
use lclab::sample::SampleMode;
use lclab::space::{
    conv2_estimate, delta_estimate, delta_hilbert_exact, geometric_t_grid, Ball, NormedSpace,
};
use lclab::verify::{
    check_theorem, claim1_trace, estimate_lcr, theorem_bound, verify_convexity, Bound, LcrMode,
    TheoremOptions, Verdict,
};

fn shear2(k: f64) -> MapSpec<f64> {
    MapSpec::endomorphic(MapFamily::parabolic_shear(k), Ball::unit(NormedSpace::euclidean(2)))
        .unwrap()
}

#[test]
fn criterion_01_conv2_reproduction() {
    for dim in [2usize, 3] {
        let space = NormedSpace::<f64>::euclidean(dim);
        let est = conv2_estimate(&space, 100_000, 11, true).unwrap();
        assert!(
            (est.value - 0.125).abs() <= 0.007,
            "dim {dim}: conv2 {} off the Hilbert value 1/8",
            est.value
        );
        assert!(
            est.value <= 0.125 + 1e-6,
            "dim {dim}: conv2 {} exceeds the universal ceiling",
            est.value
        );
    }
    println!("ACCEPTANCE 1 PASS: conv2 on Euclidean R2/R3 reproduces 1/8 within 0.007, never above the ceiling");
}

#[test]
fn criterion_02_delta_closed_form() {
    let grid = [0.25f64, 0.5, 1.0, 1.5, 2.0];
    let curve = delta_estimate(&NormedSpace::euclidean(2), &grid, 200_000, 7).unwrap();
    for (t, v) in curve.t_grid.iter().zip(&curve.values) {
        let v = v.expect("grid point unreached");
        let exact = delta_hilbert_exact(*t).unwrap();
        assert!(v >= exact - 1e-12, "t={t}: estimate {v} dips below the closed form {exact}");
        assert!((v - exact).abs() <= 0.01, "t={t}: estimate {v} vs closed form {exact}");
    }
    let flat = delta_estimate(&NormedSpace::linf(2), &[1.0], 50_000, 7).unwrap();
    let v = flat.values[0].expect("grid point unreached");
    assert!(v <= 0.005, "max-norm delta(1) = {v}, expected flat");
    println!("ACCEPTANCE 2 PASS: Euclidean delta matches 1-sqrt(1-(t/2)^2) within 0.01; max-norm delta(1) <= 0.005");
}

#[test]
fn criterion_03_smoothness_exactness() {
    let grid = geometric_t_grid(2.0, 16);
    for k in [0.5, 1.0, 2.0, 4.0] {
        let est = omega_estimate(&shear2(k), 2, &grid, 400, 3).unwrap();
        assert!(
            est.lip_constant >= 0.99 * k && est.lip_constant <= k,
            "shear k={k}: Lip2 estimate {}",
            est.lip_constant
        );
    }
    for f in registry().into_iter().filter(|f| f.lip2 == 0.0) {
        let grid = geometric_t_grid(2.0 * f.map.domain().radius, 16);
        let est = omega_estimate(&f.map, 2, &grid, 200, 3).unwrap();
        assert_eq!(est.lip_constant, 0.0, "{}: linear map with nonzero Lip2", f.name);
    }
    println!("ACCEPTANCE 3 PASS: shear Lip2 lands in [0.99k, k] for k in {{0.5,1,2,4}}; linear maps report exactly 0");
}

#[test]
fn criterion_04_derivative_consistency() {
    for f in registry() {
        let diameter = 2.0 * f.map.domain().radius;
        let grid = geometric_t_grid(diameter, 14);
        let lip1 = omega_estimate(&f.map, 1, &grid, 250, 5).unwrap().lip_constant;
        let lip2 = omega_estimate(&f.map, 2, &grid, 250, 5).unwrap().lip_constant;
        let check = derivative_check(&f.map, 60, 5).unwrap();
        let opnorm = check.operator_norm_sup.value;
        let lip1_deriv = check.lip1_of_derivative.value;
        assert!(
            lip1 <= opnorm + 1e-6,
            "{}: Lip1 {lip1} exceeds sup|f'| {opnorm}",
            f.name
        );
        assert!(
            lip2 <= lip1_deriv + 1e-6,
            "{}: Lip2 {lip2} exceeds Lip1(f') {lip1_deriv}",
            f.name
        );
        assert!(
            check.frechet_residual_max <= 0.5 * lip1_deriv + 1e-6,
            "{}: Frechet residual {} exceeds Lip1(f')/2 = {}",
            f.name,
            check.frechet_residual_max,
            0.5 * lip1_deriv
        );
    }
    println!("ACCEPTANCE 4 PASS: Lip1 <= sup|f'|, Lip2 <= Lip1(f'), residual <= Lip1(f')/2 on all nine registry maps");
}

#[test]
fn criterion_05_lipo_cross_validation() {
    let map = shear2(1.0);
    let inv = lipo_via_inverse(&map, 150, 9).unwrap();
    let golden = shear_lipo(1.0);
    assert!((inv.value - golden).abs() <= 1e-4, "inverse route {} vs 1/phi {golden}", inv.value);
    let mem = lipo_membership_probe(&map, 12, 3, 48, 9).unwrap();
    let rel = (mem.value - inv.value).abs() / inv.value;
    assert!(rel <= 0.05, "routes disagree by {:.1}%: inverse {} membership {}", 100.0 * rel, inv.value, mem.value);

    let doubling: MapSpec<f64> = MapSpec::endomorphic(
        MapFamily::linear_homogeneous(Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]])),
        Ball::unit(NormedSpace::euclidean(2)),
    )
    .unwrap();
    let inv2 = lipo_via_inverse(&doubling, 100, 9).unwrap();
    let mem2 = lipo_membership_probe(&doubling, 8, 2, 16, 9).unwrap();
    assert!((inv2.value - 2.0).abs() <= 1e-6, "inverse route on 2x: {}", inv2.value);
    assert!((mem2.value - 2.0).abs() <= 1e-6, "membership route on 2x: {}", mem2.value);
    println!("ACCEPTANCE 5 PASS: inverse and membership Lip_o agree within 5% on the shear; both exact on f(x)=2x");
}

#[test]
fn criterion_06_lcr_tightness() {
    for k in [1.0, 2.0, 4.0] {
        let map = shear2(k);
        let truth = (1.0f64 / k).min(1.0);
        let est = estimate_lcr(&map, &[0.0, 0.0], 1.0, 12, 128, 6, LcrMode::AtPoint).unwrap();
        assert!(
            (est.value - truth).abs() <= 0.05 * truth,
            "k={k}: lcr {} vs exact {truth}",
            est.value
        );
        assert!(
            est.bracket.1 - est.bracket.0 <= 0.02,
            "k={k}: bracket width {}",
            est.bracket.1 - est.bracket.0
        );
        let below = 0.9 * est.value;
        let ball = Ball::new(NormedSpace::euclidean(2), vec![0.0, 0.0], below).unwrap();
        let oracle = grid_convexity_oracle_2d(&map, &ball, 256).unwrap();
        assert_eq!(oracle.verdict, GridVerdict::Convex, "k={k}: oracle refutes radius {below}");
        let above = 1.5 * est.value;
        if above <= 1.0 {
            let ball = Ball::new(NormedSpace::euclidean(2), vec![0.0, 0.0], above).unwrap();
            let oracle = grid_convexity_oracle_2d(&map, &ball, 256).unwrap();
            assert_eq!(
                oracle.verdict,
                GridVerdict::NonConvex,
                "k={k}: oracle accepts radius {above}"
            );
        }
    }
    println!("ACCEPTANCE 6 PASS: lcr brackets min(1/k,1) within 5% and width 0.02 for k in {{1,2,4}}, confirmed by the res-256 grid oracle");
}

#[test]
fn criterion_07_theorem_bound_on_the_suite() {
    let opts = TheoremOptions::default();
    for f in registry() {
        let report = check_theorem(&f.map, &opts).unwrap();
        assert!(
            report.bound_holds,
            "{}: effective bound {} not covered by lcr bracket ({}, {})",
            f.name,
            report.effective_bound,
            report.lcr_measured.bracket.0,
            report.lcr_measured.bracket.1
        );
        assert_eq!(
            report.hilbert_bound_holds,
            Some(true),
            "{}: Hilbert specialization failed",
            f.name
        );
    }
    println!("ACCEPTANCE 7 PASS: 8 Lip_o conv2 / Lip2 <= measured lcr (with bias slack) on all nine scenarios, Hilbert form included");
}

#[test]
fn criterion_08_degeneracy_demonstration() {
    let space = NormedSpace::linf(2);
    let map =
        MapSpec::endomorphic(MapFamily::parabolic_shear(1.0), Ball::unit(space.clone())).unwrap();
    for eps in [0.05, 0.1, 0.2, 0.4, 0.8] {
        let ball = Ball::new(space.clone(), vec![0.0, 0.0], eps).unwrap();
        let v = verify_convexity(&map, &ball, 128, 8).unwrap();
        assert_eq!(v.verdict, Verdict::NonConvex, "eps={eps}: image not refuted");
        let w = v.witness.expect("refutation without witness");
        // Certify the witness independently: its midpoint pulls back outside
        // the ball by more than the verifier's tolerance.
        let pre = map.inverse_eval(&w.midpoint).unwrap();
        let depth = -ball.clearance(&pre);
        assert!(depth > v.tolerance, "eps={eps}: witness depth {depth} within tolerance");
    }
    // The same geometry kills the bound: the flat faces drive conv2 to zero,
    // so the guarantee degenerates to lcr >= 0 while every ball is non-convex.
    let conv2 = conv2_estimate(&space, 20_000, 8, true).unwrap();
    assert_eq!(conv2.value, 0.0, "max-norm conv2 should collapse to zero");
    let grid = geometric_t_grid(2.0, 14);
    let lip2 = omega_estimate(&map, 2, &grid, 300, 8).unwrap().lip_constant;
    let lipo = lipo_via_inverse(&map, 100, 8).unwrap().value;
    match theorem_bound(conv2.value, lipo, lip2).unwrap() {
        Bound::Finite(b) => assert_eq!(b, 0.0, "degenerate bound should be exactly zero"),
        Bound::Unbounded => panic!("lip2 {lip2} of the shear cannot be zero"),
    }
    println!("ACCEPTANCE 8 PASS: max-norm shear images non-convex at every tested radius with certified witnesses, bound exactly 0");
}

#[test]
fn criterion_09_claim_chain() {
    for f in registry() {
        let dim = f.map.dim_in();
        let space = f.map.domain_space().clone();
        let bound = if f.lip2 > 0.0 { 8.0 * f.lipo * 0.125 / f.lip2 } else { f64::INFINITY };
        let eps = 0.5 * bound.min(f.map.domain().radius);
        let ball = Ball::new(space.clone(), vec![0.0; dim], eps).unwrap();
        // Pairs with a separation floor: below it delta shrinks under the
        // solver's interior-clearance resolution and the openness certificate
        // degenerates into noise.
        let points = space.sample_ball(eps, 400, 15, SampleMode::Interior).unwrap();
        let pairs: Vec<_> = points
            .chunks_exact(2)
            .filter(|p| space.norm(&lclab::vecops::sub(&p[0], &p[1])).unwrap() >= 0.05 * eps)
            .take(100)
            .collect();
        assert!(pairs.len() == 100, "{}: pair stream too thin", f.name);
        for pair in pairs {
            let t = claim1_trace(&f.map, &ball, &pair[0], &pair[1], f.lipo, f.lip2, 0.125)
                .unwrap();
            assert!(
                t.all_inequalities_hold,
                "{}: chain broke (depth margin {}, deviation margin {}, openness {})",
                f.name,
                t.ball_depth_margin,
                t.deviation_margin,
                t.openness_certified
            );
        }
    }
    // Tightness: for the shear, pairs collinear with the shear direction
    // through the center meet the deviation cap exactly.
    let map = shear2(1.0);
    let eps = 0.3;
    let ball = Ball::new(NormedSpace::euclidean(2), vec![0.0, 0.0], eps).unwrap();
    for i in 1..=10 {
        let s = eps * 0.09 * i as f64;
        let t = claim1_trace(&map, &ball, &[s, 0.0], &[-s, 0.0], shear_lipo(1.0), 1.0, 0.125)
            .unwrap();
        assert!(t.all_inequalities_hold, "axis pair s={s} broke the chain");
        assert!(
            t.deviation_margin.abs() <= 1e-9,
            "axis pair s={s}: deviation margin {} not tight",
            t.deviation_margin
        );
    }
    println!("ACCEPTANCE 9 PASS: claim chain holds on 100 random pairs per scenario; deviation inequality tight to 1e-9 on centered axis pairs");
}

#[test]
fn criterion_10_determinism_and_monotonicity() {
    // Identical seeds give byte-identical serialized reports.
    let map = shear2(1.0);
    let opts = TheoremOptions { lcr_pairs: 64, bisection_steps: 8, ..TheoremOptions::default() };
    let a = serde_json::to_string(&check_theorem(&map, &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&check_theorem(&map, &opts).unwrap()).unwrap();
    assert_eq!(a, b, "repeated runs serialized differently");

    // Doubling the sample count under nested streams never raises a
    // min-estimate or lowers a max-estimate.
    let space = NormedSpace::euclidean(2);
    let grid = geometric_t_grid(2.0, 10);
    for trial in 0..20u64 {
        let seed = 1000 + trial;
        let n = 60 + (trial as usize) * 17 % 300;
        let c_small = conv2_estimate(&space, n, seed, false).unwrap().value;
        let c_large = conv2_estimate(&space, 2 * n, seed, false).unwrap().value;
        assert!(c_large <= c_small, "trial {trial}: conv2 rose from {c_small} to {c_large}");

        let o_small = omega_estimate(&map, 2, &grid, n, seed).unwrap();
        let o_large = omega_estimate(&map, 2, &grid, 2 * n, seed).unwrap();
        assert!(
            o_large.lip_constant >= o_small.lip_constant,
            "trial {trial}: Lip2 fell from {} to {}",
            o_small.lip_constant,
            o_large.lip_constant
        );
        for (s, l) in o_small.omega_values.iter().zip(&o_large.omega_values) {
            assert!(l >= s, "trial {trial}: omega fell at a grid point");
        }

        let d_small = delta_estimate(&space, &grid, n, seed).unwrap();
        let d_large = delta_estimate(&space, &grid, 2 * n, seed).unwrap();
        for (s, l) in d_small.values.iter().zip(&d_large.values) {
            match (s, l) {
                (Some(sv), Some(lv)) => {
                    assert!(lv <= sv, "trial {trial}: delta rose at a grid point")
                }
                (Some(_), None) => panic!("trial {trial}: doubling lost a grid point"),
                _ => {}
            }
        }
    }
    println!("ACCEPTANCE 10 PASS: identical seeds reproduce reports byte-for-byte; 20 nested-sampling trials stay monotone");
}
