//! Openness of registry maps: constrained Newton preimage solves, two
//! independent estimators for the Lipschitz-openness constant
//!
//! ```text
//! Lip_o(f) = sup { c : B_{c eps}(f(x)) subset f(B_eps(x)) for admissible x, eps }
//! ```
//!
//! and a singular-value diagnostic for derivative surjectivity.
//!
//! The two estimators attack the constant from different sides. The inverse
//! route computes `1 / sup |J_f(x)^{-1}|` over the domain, which equals the
//! openness constant for the smooth invertible registry maps. The membership
//! route certifies `f(x) + r d` as a member of `f(B_eps(x))` by Newton solves
//! and reports the certified radius ratio, touching no inverse formula. Their
//! agreement is one of the standing cross checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Bias, Witness};
use crate::linalg::sym_eigenvalues;
use crate::map::{operator_norm, unit_in_norm, MapSpec};
use crate::sample::{self, SampleMode};
use crate::scalar::Real;
use crate::space::Ball;
use crate::vecops;

pub const NEWTON_DEFAULT_MAX_ITER: usize = 50;
pub const NEWTON_DEFAULT_TOL: f64 = 1e-10;

/// Interior clearance a converged iterate must keep from the constraint
/// boundary before it counts as a certified preimage.
const INTERIOR_CLEARANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonFailure {
    /// The Jacobian became numerically singular at an iterate.
    SingularJacobian,
    /// The residual tolerance was not reached within the iteration budget.
    MaxIterations,
    /// No damped step inside the constraint ball reduced the residual.
    Stalled,
    /// The residual converged but the iterate sits on the constraint
    /// boundary, so it does not certify an interior preimage.
    BoundaryContact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreimageResult<F> {
    pub target: Vec<F>,
    /// Certified preimage strictly inside the constraint ball, if found.
    pub preimage: Option<Vec<F>>,
    pub residual: F,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<NewtonFailure>,
}

/// Damped Newton iteration for `f(z) = target`, with every iterate confined
/// to the constraint ball. Success requires the residual to drop below `tol`
/// in the codomain norm and the final iterate to keep positive interior
/// clearance; anything else reports a failure and no preimage.
pub fn newton_preimage<F: Real>(
    map: &MapSpec<F>,
    target: &[F],
    start: &[F],
    constraint: &Ball<F>,
    max_iter: usize,
    tol: F,
) -> Result<PreimageResult<F>> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::InvalidParameter(
            "newton preimage solves need a square map".into(),
        ));
    }
    if target.len() != map.dim_out() {
        return Err(Error::DimensionMismatch { expected: map.dim_out(), got: target.len() });
    }
    if start.len() != map.dim_in() {
        return Err(Error::DimensionMismatch { expected: map.dim_in(), got: start.len() });
    }
    if constraint.dim() != map.dim_in() {
        return Err(Error::DimensionMismatch { expected: map.dim_in(), got: constraint.dim() });
    }

    let clearance_floor = F::of(INTERIOR_CLEARANCE);
    let mut z = start.to_vec();
    if constraint.clearance(&z) < F::zero() {
        let d = constraint.space.dist(&z, &constraint.center);
        let f = constraint.radius / d;
        for (zi, ci) in z.iter_mut().zip(&constraint.center) {
            *zi = *ci + (*zi - *ci) * f;
        }
    }
    let resid_of = |z: &[F]| {
        let r = vecops::sub(target, &map.eval_raw(z));
        map.codomain_space().norm_raw(&r)
    };
    let mut residual = resid_of(&z);
    let mut iterations = 0;
    let mut failure = None;

    while residual > tol {
        if iterations >= max_iter {
            failure = Some(NewtonFailure::MaxIterations);
            break;
        }
        iterations += 1;
        let j = map.jacobian_raw(&z);
        let rhs = vecops::sub(target, &map.eval_raw(&z));
        let p = match j.solve(&rhs) {
            Some(p) => p,
            None => {
                failure = Some(NewtonFailure::SingularJacobian);
                break;
            }
        };
        let mut lam = F::one();
        let mut accepted = false;
        for _ in 0..30 {
            let cand = vecops::axpy(&z, lam, &p);
            if constraint.clearance(&cand) >= F::zero() {
                let r = resid_of(&cand);
                if r < residual {
                    z = cand;
                    residual = r;
                    accepted = true;
                    break;
                }
            }
            lam = lam / F::of(2.0);
        }
        if !accepted {
            failure = Some(NewtonFailure::Stalled);
            break;
        }
    }

    let preimage = if failure.is_none() && residual <= tol {
        if constraint.clearance(&z) > clearance_floor {
            Some(z)
        } else {
            failure = Some(NewtonFailure::BoundaryContact);
            None
        }
    } else {
        None
    };

    Ok(PreimageResult { target: target.to_vec(), preimage, residual, iterations, failure })
}

pub fn newton_preimage_default<F: Real>(
    map: &MapSpec<F>,
    target: &[F],
    start: &[F],
    constraint: &Ball<F>,
) -> Result<PreimageResult<F>> {
    newton_preimage(map, target, start, constraint, NEWTON_DEFAULT_MAX_ITER, F::of(NEWTON_DEFAULT_TOL))
}

/// Estimate of the Lipschitz-openness constant, tagged with the method that
/// produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpennessEstimate<F> {
    pub value: F,
    /// `"inverse_lipschitz"` or `"membership_probe"`.
    pub method: String,
    pub bias: Bias,
    pub probes: usize,
    pub witness: Witness<F>,
    pub seed: u64,
    /// `Lip_1(f^{-1})` as estimated on the inverse route; the headline value
    /// is its reciprocal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse_lipschitz: Option<F>,
}

/// Openness constant via the inverse function: `1 / sup_x |J_f(x)^{-1}|`,
/// the operator norm taken from the codomain norm back to the domain norm.
/// A singular Jacobian anywhere drives the estimate to zero.
pub fn lipo_via_inverse<F: Real>(
    map: &MapSpec<F>,
    samples: usize,
    seed: u64,
) -> Result<OpennessEstimate<F>> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::InvalidParameter("openness estimates need a square map".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let ball = map.domain().clone();
    let dim = map.dim_in();
    let radius = ball.radius;
    let mut rng = sample::rng_for(seed, 0);
    let mut dir_starts: Vec<Vec<F>> = Vec::with_capacity(8);
    for _ in 0..8 {
        dir_starts.push(sample::gaussian_direction::<F>(&mut rng, dim));
    }

    // |J(x)^{-1}| as codomain -> domain operator norm; None when singular.
    let inv_norm_at = |x: &[F], starts: &[Vec<F>]| -> Option<(F, Vec<F>)> {
        let j = map.jacobian_raw(x);
        let jinv = j.inverse()?;
        let mut all: Vec<Vec<F>> = (0..dim)
            .map(|c| {
                let mut e = vec![F::zero(); dim];
                e[c] = F::one();
                e
            })
            .collect();
        all.extend_from_slice(starts);
        Some(operator_norm(map.codomain_space(), map.domain_space(), &jinv, &all))
    };

    let mut candidates: Vec<Vec<F>> = Vec::new();
    for j in 0..dim {
        for &sign in &[F::one(), -F::one()] {
            let mut x = ball.center.clone();
            x[j] = x[j] + sign * radius;
            candidates.push(x);
        }
    }
    candidates.push(ball.center.clone());
    for i in 0..samples {
        let mode = if i % 2 == 0 { SampleMode::Interior } else { SampleMode::Sphere };
        candidates.push(ball.sample(&mut rng, mode));
    }

    let mut sup_inv = F::neg_infinity();
    let mut best_x = ball.center.clone();
    let mut best_dir: Vec<F> = vec![F::one(); dim];
    let mut singular_at: Option<Vec<F>> = None;
    for x in &candidates {
        match inv_norm_at(x, &dir_starts) {
            Some((v, u)) => {
                if v > sup_inv {
                    sup_inv = v;
                    best_x = x.clone();
                    best_dir = u;
                }
            }
            None => {
                singular_at = Some(x.clone());
                break;
            }
        }
    }
    if singular_at.is_none() {
        let mut step = F::of(0.1) * radius;
        while step >= F::of(1e-6) * radius {
            for _ in 0..50 {
                let mut improved = false;
                for c in 0..dim {
                    for &sign in &[F::one(), -F::one()] {
                        let mut cand = best_x.clone();
                        cand[c] = cand[c] + sign * step;
                        let d = ball.space.dist(&cand, &ball.center);
                        if d > radius {
                            let f = radius / d;
                            for (xi, ci) in cand.iter_mut().zip(&ball.center) {
                                *xi = *ci + (*xi - *ci) * f;
                            }
                        }
                        match inv_norm_at(&cand, std::slice::from_ref(&best_dir)) {
                            Some((v, u)) => {
                                if v > sup_inv {
                                    sup_inv = v;
                                    best_x = cand;
                                    best_dir = u;
                                    improved = true;
                                }
                            }
                            None => {
                                singular_at = Some(cand);
                                improved = false;
                                break;
                            }
                        }
                    }
                    if singular_at.is_some() {
                        break;
                    }
                }
                if !improved || singular_at.is_some() {
                    break;
                }
            }
            if singular_at.is_some() {
                break;
            }
            step = step / F::of(2.0);
        }
    }

    let (value, inverse_lipschitz, witness) = match singular_at {
        Some(x) => (F::zero(), None, Witness::Point { x }),
        None => (
            F::one() / sup_inv,
            Some(sup_inv),
            Witness::Direction { x: best_x, direction: best_dir },
        ),
    };
    Ok(OpennessEstimate {
        value,
        method: "inverse_lipschitz".into(),
        bias: Bias::PointEstimate,
        probes: samples,
        witness,
        seed,
        inverse_lipschitz,
    })
}

/// Openness constant via direct membership certification. For each probe
/// ball `B_eps(x)` inside the domain and each codomain direction `d`, the
/// largest `r` with `f(x) + r d` Newton-certified inside `f(B_eps(x))` is
/// bracketed by doubling and bisection; the estimate is the worst ratio
/// `r / eps` seen. A failed Newton solve counts as exclusion, keeping the
/// estimate conservative.
pub fn lipo_membership_probe<F: Real>(
    map: &MapSpec<F>,
    centers: usize,
    radii_per_center: usize,
    directions: usize,
    seed: u64,
) -> Result<OpennessEstimate<F>> {
    if map.dim_in() != map.dim_out() {
        return Err(Error::InvalidParameter("openness estimates need a square map".into()));
    }
    if centers == 0 || radii_per_center == 0 || directions == 0 {
        return Err(Error::InvalidParameter(
            "centers, radii_per_center, and directions must all be at least 1".into(),
        ));
    }
    let ball = map.domain().clone();
    let dim = map.dim_in();
    let dim_out = map.dim_out();
    let radius = ball.radius;
    let shell = F::of(0.97) * radius;

    let mut center_rng = sample::rng_for(seed, 0);
    let mut probe_centers: Vec<Vec<F>> = Vec::with_capacity(centers);
    for i in 0..centers {
        if i < 2 * dim {
            let j = i / 2;
            let sign = if i % 2 == 0 { F::one() } else { -F::one() };
            let mut x = ball.center.clone();
            x[j] = x[j] + sign * shell;
            probe_centers.push(x);
        } else if i < 2 * dim + 16 {
            let g = sample::gaussian_direction::<F>(&mut center_rng, dim);
            let u = unit_in_norm(&ball.space, &g).unwrap_or_else(|| {
                let mut e = vec![F::zero(); dim];
                e[0] = F::one();
                e
            });
            probe_centers.push(vecops::axpy(&ball.center, shell, &u));
        } else {
            probe_centers.push(ball.sample_shrunk(&mut center_rng, shell, SampleMode::Interior));
        }
    }

    let tol = F::of(NEWTON_DEFAULT_TOL);
    let mut worst = F::infinity();
    let mut witness = Witness::Point { x: ball.center.clone() };
    for (ci, x) in probe_centers.iter().enumerate() {
        let headroom = radius - ball.space.dist(x, &ball.center);
        let eps_hi = F::of(0.99) * headroom;
        let eps_lo = F::of(0.01) * radius;
        if !(eps_hi > F::zero()) {
            continue;
        }
        let eps_lo = eps_lo.min(eps_hi / F::of(2.0));
        for ri in 0..radii_per_center {
            let mut rng = sample::rng_for(seed, 1 + (ci as u64) * 1_000_003 + ri as u64);
            let u: F = sample::unit(&mut rng);
            let eps = eps_lo * (eps_hi / eps_lo).powf(u);
            let probe_ball = Ball::new(ball.space.clone(), x.clone(), eps)?;
            let fx = map.eval_raw(x);
            let rot: F = sample::unit(&mut rng);

            let mut dir_worst = F::infinity();
            let mut dir_arg: Vec<F> = vec![F::one(); dim_out];
            for di in 0..directions {
                let dir: Vec<F> = if dim_out == 2 {
                    let theta = (F::of(di as f64) + rot) / F::of(directions as f64)
                        * F::of(std::f64::consts::TAU);
                    vec![theta.cos(), theta.sin()]
                } else if di < 2 * dim_out {
                    let mut e = vec![F::zero(); dim_out];
                    e[di / 2] = if di % 2 == 0 { F::one() } else { -F::one() };
                    e
                } else {
                    sample::gaussian_direction::<F>(&mut rng, dim_out)
                };
                let dir = match unit_in_norm(map.codomain_space(), &dir) {
                    Some(u) => u,
                    None => continue,
                };
                let certify = |r: F| -> bool {
                    let target = vecops::axpy(&fx, r, &dir);
                    matches!(
                        newton_preimage(map, &target, x, &probe_ball, NEWTON_DEFAULT_MAX_ITER, tol),
                        Ok(PreimageResult { preimage: Some(_), .. })
                    )
                };
                let mut lo = F::zero();
                let mut hi = F::of(0.1) * eps;
                if certify(hi) {
                    let mut grow = 0;
                    while grow < 20 {
                        let next = hi * F::of(2.0);
                        if certify(next) {
                            lo = hi;
                            hi = next;
                            grow += 1;
                        } else {
                            lo = hi;
                            hi = next;
                            break;
                        }
                    }
                    if grow == 20 {
                        lo = hi;
                    }
                } else {
                    hi = F::of(0.1) * eps;
                }
                let mut iters = 0;
                while hi - lo > F::of(1e-7) * eps && iters < 60 {
                    let mid = (lo + hi) / F::of(2.0);
                    if certify(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    iters += 1;
                }
                let ratio = lo / eps;
                if ratio < dir_worst {
                    dir_worst = ratio;
                    dir_arg = dir;
                }
            }
            if dir_worst < worst {
                worst = dir_worst;
                witness = Witness::Probe { center: x.clone(), radius: eps, direction: dir_arg };
            }
        }
    }
    if !worst.is_finite() {
        return Err(Error::EmptyAdmissibleSet { t: radius.as_f64() });
    }
    Ok(OpennessEstimate {
        value: worst,
        method: "membership_probe".into(),
        bias: Bias::LowerBound,
        probes: centers * radii_per_center,
        witness,
        seed,
        inverse_lipschitz: None,
    })
}

/// Pointwise surjectivity margin of the derivative: the smallest singular
/// value of the Jacobian, minimized over sampled and pattern-descended
/// domain points. A Euclidean diagnostic; for other norms it bounds rather
/// than equals the metric openness of the derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurjectivityDiagnostic<F> {
    pub min_singular_value: F,
    pub argmin_x: Vec<F>,
    pub samples: usize,
    pub seed: u64,
}

pub fn derivative_surjectivity_diagnostic<F: Real>(
    map: &MapSpec<F>,
    samples: usize,
    seed: u64,
) -> Result<SurjectivityDiagnostic<F>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let ball = map.domain().clone();
    let dim = map.dim_in();
    let radius = ball.radius;
    let sigma_min_at = |x: &[F]| -> F {
        let j = map.jacobian_raw(x);
        let gram = j.matmul(&j.transpose());
        let eigs = sym_eigenvalues(&gram);
        let min = eigs.iter().cloned().fold(F::infinity(), F::min);
        min.max(F::zero()).sqrt()
    };

    let mut rng = sample::rng_for(seed, 0);
    let mut best = F::infinity();
    let mut arg = ball.center.clone();
    let consider = |x: Vec<F>, best: &mut F, arg: &mut Vec<F>| {
        let v = sigma_min_at(&x);
        if v < *best {
            *best = v;
            *arg = x;
        }
    };
    for j in 0..dim {
        for &sign in &[F::one(), -F::one()] {
            let mut x = ball.center.clone();
            x[j] = x[j] + sign * radius;
            consider(x, &mut best, &mut arg);
        }
    }
    consider(ball.center.clone(), &mut best, &mut arg);
    for i in 0..samples {
        let mode = if i % 2 == 0 { SampleMode::Interior } else { SampleMode::Sphere };
        consider(ball.sample(&mut rng, mode), &mut best, &mut arg);
    }
    let mut step = F::of(0.1) * radius;
    while step >= F::of(1e-5) * radius {
        for _ in 0..40 {
            let mut improved = false;
            for c in 0..dim {
                for &sign in &[F::one(), -F::one()] {
                    let mut cand = arg.clone();
                    cand[c] = cand[c] + sign * step;
                    let d = ball.space.dist(&cand, &ball.center);
                    if d > radius {
                        let f = radius / d;
                        for (xi, ci) in cand.iter_mut().zip(&ball.center) {
                            *xi = *ci + (*xi - *ci) * f;
                        }
                    }
                    let v = sigma_min_at(&cand);
                    if v < best {
                        best = v;
                        arg = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step = step / F::of(2.0);
    }
    Ok(SurjectivityDiagnostic { min_singular_value: best, argmin_x: arg, samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::map::MapFamily;
    use crate::space::NormedSpace;

    fn unit_ball2() -> Ball<f64> {
        Ball::unit(NormedSpace::euclidean(2))
    }

    fn shear(k: f64) -> MapSpec<f64> {
        MapSpec::endomorphic(MapFamily::parabolic_shear(k), unit_ball2()).unwrap()
    }

    fn scaling(alpha: f64) -> MapSpec<f64> {
        let m = Mat::from_rows(&[vec![alpha, 0.0], vec![0.0, alpha]]);
        MapSpec::endomorphic(MapFamily::linear_homogeneous(m), unit_ball2()).unwrap()
    }

    const GOLDEN_INV: f64 = 0.6180339887498949;

    #[test]
    fn newton_finds_interior_preimages() {
        let map = shear(1.0);
        let x = [0.3, 0.2];
        let target = map.evaluate(&x).unwrap();
        let ball = map.domain().clone();
        let res = newton_preimage_default(&map, &target, &[0.0, 0.0], &ball).unwrap();
        let z = res.preimage.expect("preimage");
        assert!(res.residual <= 1e-10);
        assert!(vecops::norm2(&vecops::sub(&z, &x)) <= 1e-8);
        assert!(res.failure.is_none());
    }

    #[test]
    fn newton_refuses_boundary_and_exterior_targets() {
        let map = scaling(2.0);
        let ball = map.domain().clone();
        // Preimage of (2, 0) is exactly on the unit sphere.
        let res = newton_preimage_default(&map, &[2.0, 0.0], &[0.5, 0.0], &ball).unwrap();
        assert!(res.preimage.is_none());
        assert!(res.failure.is_some());
        // (3, 0) has no preimage in the ball at all.
        let res = newton_preimage_default(&map, &[3.0, 0.0], &[0.5, 0.0], &ball).unwrap();
        assert!(res.preimage.is_none());
        assert!(res.failure.is_some());
    }

    #[test]
    fn newton_reports_singular_jacobians() {
        let map = MapSpec::endomorphic(
            MapFamily::linear_homogeneous(Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]])),
            unit_ball2(),
        )
        .unwrap();
        let ball = map.domain().clone();
        let res = newton_preimage_default(&map, &[0.5, 0.5], &[0.1, 0.1], &ball).unwrap();
        assert_eq!(res.failure, Some(NewtonFailure::SingularJacobian));
        assert!(res.preimage.is_none());
    }

    #[test]
    fn inverse_route_is_exact_for_scalings() {
        let est = lipo_via_inverse(&scaling(2.0), 100, 3).unwrap();
        assert!((est.value - 2.0).abs() <= 1e-9);
        assert!((est.inverse_lipschitz.unwrap() - 0.5).abs() <= 1e-9);
        assert_eq!(est.method, "inverse_lipschitz");
    }

    #[test]
    fn inverse_route_matches_shear_singular_value() {
        // sup |J^{-1}| is attained at |x_1| = 1 where the Jacobian is the
        // golden-ratio shear matrix [[1,0],[1,1]].
        let est = lipo_via_inverse(&shear(1.0), 200, 5).unwrap();
        assert!(
            (est.value - GOLDEN_INV).abs() <= 1e-6,
            "value {} vs 1/phi {GOLDEN_INV}",
            est.value
        );
    }

    #[test]
    fn inverse_route_collapses_on_singular_maps() {
        let map = MapSpec::endomorphic(
            MapFamily::linear_homogeneous(Mat::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]])),
            unit_ball2(),
        )
        .unwrap();
        let est = lipo_via_inverse(&map, 50, 1).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.inverse_lipschitz.is_none());
    }

    #[test]
    fn membership_route_is_sharp_for_scalings() {
        let est = lipo_membership_probe(&scaling(2.0), 8, 2, 16, 7).unwrap();
        assert!(est.value <= 2.0 * (1.0 + 1e-9), "value {}", est.value);
        assert!(est.value >= 2.0 * (1.0 - 1e-5), "value {}", est.value);
        assert_eq!(est.method, "membership_probe");
        assert_eq!(est.probes, 16);
    }

    #[test]
    fn membership_route_agrees_with_inverse_route_on_the_shear() {
        let map = shear(1.0);
        let inv = lipo_via_inverse(&map, 150, 2).unwrap();
        let mem = lipo_membership_probe(&map, 12, 3, 48, 2).unwrap();
        let rel = (mem.value - inv.value).abs() / inv.value;
        assert!(rel <= 0.05, "inverse {} vs membership {}", inv.value, mem.value);
        assert!(mem.value >= 0.55 && mem.value <= 0.70, "value {}", mem.value);
    }

    #[test]
    fn membership_route_shrinks_with_more_probes() {
        let map = shear(2.0);
        let few = lipo_membership_probe(&map, 6, 2, 24, 9).unwrap();
        let many = lipo_membership_probe(&map, 12, 2, 24, 9).unwrap();
        assert!(many.value <= few.value + 1e-12);
        let again = lipo_membership_probe(&map, 12, 2, 24, 9).unwrap();
        assert_eq!(many, again);
    }

    #[test]
    fn surjectivity_diagnostic_hits_the_golden_ratio() {
        let diag = derivative_surjectivity_diagnostic(&shear(1.0), 100, 4).unwrap();
        assert!(
            (diag.min_singular_value - GOLDEN_INV).abs() <= 1e-9,
            "sigma_min {}",
            diag.min_singular_value
        );
        assert!((diag.argmin_x[0].abs() - 1.0).abs() <= 1e-6);
        let ident = derivative_surjectivity_diagnostic(&scaling(1.0), 20, 1).unwrap();
        assert!((ident.min_singular_value - 1.0).abs() <= 1e-12);
    }
}
