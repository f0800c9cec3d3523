//! The closed registry of analytic map families on ball domains, plus the
//! smoothness estimators built on them: the moduli
//!
//! ```text
//! omega_1(t) = sup |f(x+h) - f(x)|,   omega_2(t) = sup |f(x+h) - 2f(x) + f(x-h)|
//! ```
//!
//! over admissible steps with `|h| <= t`, their Lipschitz constants
//! `Lip_n = sup omega_n(t)/t^n`, and the derivative-based cross checks
//! (operator-norm supremum, Lipschitz constant of the derivative, Fréchet
//! remainder ratio).
//!
//! Every family evaluates, differentiates, and second-differences in closed
//! form. Second differences use the expanded form in which the affine part
//! cancels algebraically, so linear maps report exactly zero and quadratic
//! families avoid catastrophic cancellation at small steps.


use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimate::{Bias, ConstantEstimate, Witness};
use crate::linalg::Mat;
use crate::sample::{self, SampleMode};
use crate::scalar::Real;
use crate::space::{Ball, NormedSpace};
use crate::vecops;

/// Relative slack when testing ball membership, absorbing the rounding of
/// norms of points constructed to lie exactly on the boundary.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum MapFamily<F> {
    /// `x -> A x + b`.
    Linear { matrix: Mat<F>, offset: Vec<F> },
    /// `(x_1, ..., x_n) -> (x_1, ..., x_{n-1}, x_n + (k/2) x_1^2)`.
    ParabolicShear { k: F },
    /// `x -> x + (x' Q_1 x, ..., x' Q_n x)` with each `Q_i` symmetric.
    QuadraticPerturbation { quads: Vec<Mat<F>> },
    /// `x -> A g(x) + b` for an inner registry family `g`.
    Composed { outer_matrix: Mat<F>, outer_offset: Vec<F>, inner: Box<MapFamily<F>> },
}

impl<F: Real> MapFamily<F> {
    pub fn linear(matrix: Mat<F>, offset: Vec<F>) -> Self {
        MapFamily::Linear { matrix, offset }
    }

    pub fn linear_homogeneous(matrix: Mat<F>) -> Self {
        let offset = vec![F::zero(); matrix.nrows()];
        MapFamily::Linear { matrix, offset }
    }

    pub fn parabolic_shear(k: F) -> Self {
        MapFamily::ParabolicShear { k }
    }

    pub fn quadratic_perturbation(quads: Vec<Mat<F>>) -> Self {
        MapFamily::QuadraticPerturbation { quads }
    }

    pub fn composed(outer_matrix: Mat<F>, outer_offset: Vec<F>, inner: MapFamily<F>) -> Self {
        MapFamily::Composed { outer_matrix, outer_offset, inner: Box::new(inner) }
    }

    /// Checks the family against an input dimension and returns the output
    /// dimension.
    fn validate(&self, dim_in: usize) -> Result<usize> {
        match self {
            MapFamily::Linear { matrix, offset } => {
                if matrix.ncols() != dim_in {
                    return Err(Error::DimensionMismatch { expected: dim_in, got: matrix.ncols() });
                }
                if offset.len() != matrix.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: matrix.nrows(),
                        got: offset.len(),
                    });
                }
                Ok(matrix.nrows())
            }
            MapFamily::ParabolicShear { k } => {
                if dim_in < 2 {
                    return Err(Error::InvalidParameter(
                        "parabolic shear needs dimension at least 2".into(),
                    ));
                }
                if !(*k >= F::zero()) || !k.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "shear strength must be a finite real >= 0, got {k}"
                    )));
                }
                Ok(dim_in)
            }
            MapFamily::QuadraticPerturbation { quads } => {
                if quads.len() != dim_in {
                    return Err(Error::DimensionMismatch { expected: dim_in, got: quads.len() });
                }
                for q in quads {
                    if q.nrows() != dim_in || q.ncols() != dim_in {
                        return Err(Error::DimensionMismatch { expected: dim_in, got: q.nrows() });
                    }
                    if !q.is_symmetric(F::of(1e-12)) {
                        return Err(Error::InvalidParameter(
                            "quadratic perturbation matrices must be symmetric".into(),
                        ));
                    }
                }
                Ok(dim_in)
            }
            MapFamily::Composed { outer_matrix, outer_offset, inner } => {
                let mid = inner.validate(dim_in)?;
                if outer_matrix.ncols() != mid {
                    return Err(Error::DimensionMismatch { expected: mid, got: outer_matrix.ncols() });
                }
                if outer_offset.len() != outer_matrix.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: outer_matrix.nrows(),
                        got: outer_offset.len(),
                    });
                }
                Ok(outer_matrix.nrows())
            }
        }
    }

    fn eval_raw(&self, x: &[F]) -> Vec<F> {
        match self {
            MapFamily::Linear { matrix, offset } => vecops::add(&matrix.matvec(x), offset),
            MapFamily::ParabolicShear { k } => {
                let mut y = x.to_vec();
                let n = y.len();
                y[n - 1] = y[n - 1] + *k / F::of(2.0) * x[0] * x[0];
                y
            }
            MapFamily::QuadraticPerturbation { quads } => quads
                .iter()
                .enumerate()
                .map(|(i, q)| x[i] + vecops::dot(x, &q.matvec(x)))
                .collect(),
            MapFamily::Composed { outer_matrix, outer_offset, inner } => {
                vecops::add(&outer_matrix.matvec(&inner.eval_raw(x)), outer_offset)
            }
        }
    }

    /// `f(x+h) - 2f(x) + f(x-h)` in expanded form: the affine part cancels
    /// exactly and only the quadratic terms remain.
    fn second_difference_raw(&self, x: &[F], h: &[F]) -> Vec<F> {
        match self {
            MapFamily::Linear { matrix, .. } => vec![F::zero(); matrix.nrows()],
            MapFamily::ParabolicShear { k } => {
                let mut d = vec![F::zero(); x.len()];
                let n = d.len();
                d[n - 1] = *k * h[0] * h[0];
                d
            }
            MapFamily::QuadraticPerturbation { quads } => quads
                .iter()
                .map(|q| F::of(2.0) * vecops::dot(h, &q.matvec(h)))
                .collect(),
            MapFamily::Composed { outer_matrix, inner, .. } => {
                outer_matrix.matvec(&inner.second_difference_raw(x, h))
            }
        }
    }

    fn jacobian_raw(&self, x: &[F]) -> Mat<F> {
        match self {
            MapFamily::Linear { matrix, .. } => matrix.clone(),
            MapFamily::ParabolicShear { k } => {
                let n = x.len();
                let mut j = Mat::identity(n);
                j[(n - 1, 0)] = j[(n - 1, 0)] + *k * x[0];
                j
            }
            MapFamily::QuadraticPerturbation { quads } => {
                let n = x.len();
                let mut j = Mat::identity(n);
                for (i, q) in quads.iter().enumerate() {
                    let g = q.matvec(x);
                    for c in 0..n {
                        j[(i, c)] = j[(i, c)] + F::of(2.0) * g[c];
                    }
                }
                j
            }
            MapFamily::Composed { outer_matrix, inner, .. } => {
                outer_matrix.matmul(&inner.jacobian_raw(x))
            }
        }
    }

    fn has_analytic_inverse(&self) -> bool {
        match self {
            MapFamily::Linear { matrix, .. } => matrix.inverse().is_some(),
            MapFamily::ParabolicShear { .. } => true,
            MapFamily::QuadraticPerturbation { .. } => false,
            MapFamily::Composed { outer_matrix, inner, .. } => {
                outer_matrix.inverse().is_some() && inner.has_analytic_inverse()
            }
        }
    }

    fn inverse_raw(&self, y: &[F]) -> Result<Vec<F>> {
        match self {
            MapFamily::Linear { matrix, offset } => matrix
                .solve(&vecops::sub(y, offset))
                .ok_or_else(|| Error::MissingAnalyticInverse),
            MapFamily::ParabolicShear { k } => {
                let mut x = y.to_vec();
                let n = x.len();
                x[n - 1] = x[n - 1] - *k / F::of(2.0) * y[0] * y[0];
                Ok(x)
            }
            MapFamily::QuadraticPerturbation { .. } => Err(Error::MissingAnalyticInverse),
            MapFamily::Composed { outer_matrix, outer_offset, inner } => {
                let mid = outer_matrix
                    .solve(&vecops::sub(y, outer_offset))
                    .ok_or_else(|| Error::MissingAnalyticInverse)?;
                inner.inverse_raw(&mid)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            MapFamily::Linear { matrix, .. } => {
                format!("linear({}x{})", matrix.nrows(), matrix.ncols())
            }
            MapFamily::ParabolicShear { k } => format!("parabolic_shear(k={k})"),
            MapFamily::QuadraticPerturbation { quads } => {
                format!("quadratic_perturbation({})", quads.len())
            }
            MapFamily::Composed { inner, .. } => format!("composed(linear . {})", inner.label()),
        }
    }
}

/// One registry map together with its ball domain and codomain norm.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec<F> {
    family: MapFamily<F>,
    domain: Ball<F>,
    codomain_space: NormedSpace<F>,
    dim_out: usize,
}

impl<F: Real> MapSpec<F> {
    pub fn new(family: MapFamily<F>, domain: Ball<F>, codomain_space: NormedSpace<F>) -> Result<Self> {
        let dim_out = family.validate(domain.dim())?;
        if codomain_space.dim() != dim_out {
            return Err(Error::DimensionMismatch { expected: dim_out, got: codomain_space.dim() });
        }
        Ok(MapSpec { family, domain, codomain_space, dim_out })
    }

    /// Convenience for self-maps: the codomain carries the same norm as the
    /// domain space.
    pub fn endomorphic(family: MapFamily<F>, domain: Ball<F>) -> Result<Self> {
        let codomain = domain.space.clone();
        Self::new(family, domain, codomain)
    }

    pub fn family(&self) -> &MapFamily<F> {
        &self.family
    }

    pub fn domain(&self) -> &Ball<F> {
        &self.domain
    }

    pub fn domain_space(&self) -> &NormedSpace<F> {
        &self.domain.space
    }

    pub fn codomain_space(&self) -> &NormedSpace<F> {
        &self.codomain_space
    }

    pub fn dim_in(&self) -> usize {
        self.domain.dim()
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn label(&self) -> String {
        format!("{} on {} ball r={}", self.family.label(), self.domain.space.label(), self.domain.radius)
    }

    fn check_dim_in(&self, x: &[F]) -> Result<()> {
        if x.len() != self.dim_in() {
            return Err(Error::DimensionMismatch { expected: self.dim_in(), got: x.len() });
        }
        Ok(())
    }

    fn check_in_domain(&self, x: &[F]) -> Result<()> {
        self.check_dim_in(x)?;
        let dist = self.domain.space.dist(x, &self.domain.center);
        if dist > self.domain.radius * F::of(1.0 + DOMAIN_SLACK) {
            return Err(Error::OutsideDomain {
                distance: dist.as_f64(),
                radius: self.domain.radius.as_f64(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[F]) -> Result<Vec<F>> {
        self.check_in_domain(x)?;
        Ok(self.family.eval_raw(x))
    }

    pub(crate) fn eval_raw(&self, x: &[F]) -> Vec<F> {
        self.family.eval_raw(x)
    }

    /// `f(x+h) - 2f(x) + f(x-h)`; both endpoints `x ± h` must stay in the
    /// domain ball, which by convexity keeps the whole segment inside.
    pub fn second_difference(&self, x: &[F], h: &[F]) -> Result<Vec<F>> {
        self.check_dim_in(x)?;
        self.check_dim_in(h)?;
        let slack = self.domain.radius * F::of(1.0 + DOMAIN_SLACK);
        let plus = vecops::add(x, h);
        let minus = vecops::sub(x, h);
        if self.domain.space.dist(&plus, &self.domain.center) > slack
            || self.domain.space.dist(&minus, &self.domain.center) > slack
        {
            return Err(Error::SegmentExitsDomain);
        }
        Ok(self.family.second_difference_raw(x, h))
    }

    pub(crate) fn second_difference_raw(&self, x: &[F], h: &[F]) -> Vec<F> {
        self.family.second_difference_raw(x, h)
    }

    /// Jacobian of `f` at `x` in the coordinate basis.
    pub fn derivative(&self, x: &[F]) -> Result<Mat<F>> {
        self.check_in_domain(x)?;
        Ok(self.family.jacobian_raw(x))
    }

    pub(crate) fn jacobian_raw(&self, x: &[F]) -> Mat<F> {
        self.family.jacobian_raw(x)
    }

    pub fn has_analytic_inverse(&self) -> bool {
        self.family.has_analytic_inverse()
    }

    /// Evaluates the analytic inverse at a codomain point. No domain check is
    /// applied to `y`: callers decide what its preimage means to them.
    pub fn inverse_eval(&self, y: &[F]) -> Result<Vec<F>> {
        if y.len() != self.dim_out {
            return Err(Error::DimensionMismatch { expected: self.dim_out, got: y.len() });
        }
        self.family.inverse_raw(y)
    }

    /// Central-difference Jacobian for cross-validating the analytic one.
    /// Evaluates the analytic formulas without domain clipping, so probe
    /// points may sit near the boundary.
    pub fn central_difference_jacobian(&self, x: &[F], step: F) -> Result<Mat<F>> {
        self.check_dim_in(x)?;
        if !(step > F::zero()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
        }
        let n = self.dim_in();
        let mut j = Mat::zeros(self.dim_out, n);
        for c in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] = xp[c] + step;
            xm[c] = xm[c] - step;
            let fp = self.family.eval_raw(&xp);
            let fm = self.family.eval_raw(&xm);
            for r in 0..self.dim_out {
                j[(r, c)] = (fp[r] - fm[r]) / (F::of(2.0) * step);
            }
        }
        Ok(j)
    }
}

// --- operator norms -------------------------------------------------------

/// Scales `v` to unit length in the given norm; `None` for the zero vector.
pub(crate) fn unit_in_norm<F: Real>(space: &NormedSpace<F>, v: &[F]) -> Option<Vec<F>> {
    let n = space.norm_raw(v);
    if !(n > F::of(1e-300)) {
        return None;
    }
    Some(v.iter().map(|&c| c / n).collect())
}

/// Induced operator norm `sup { |M u|_cod : |u|_dom = 1 }`, estimated by
/// evaluating the given start directions and pattern-ascending from the best
/// one on the unit sphere of the domain norm. Returns the value and the
/// maximizing direction; bias is from below.
pub(crate) fn operator_norm<F: Real>(
    dom: &NormedSpace<F>,
    cod: &NormedSpace<F>,
    m: &Mat<F>,
    starts: &[Vec<F>],
) -> (F, Vec<F>) {
    let dim = dom.dim();
    let eval = |u: &[F]| cod.norm_raw(&m.matvec(u));
    let mut best_u: Vec<F> = {
        let mut e = vec![F::zero(); dim];
        e[0] = F::one();
        e
    };
    let mut best = eval(&best_u);
    for s in starts {
        if let Some(u) = unit_in_norm(dom, s) {
            let v = eval(&u);
            if v > best {
                best = v;
                best_u = u;
            }
        }
    }
    let mut step = F::of(0.5);
    while step >= F::of(1e-7) {
        for _ in 0..40 {
            let mut improved = false;
            for c in 0..dim {
                for &sign in &[F::one(), -F::one()] {
                    let mut cand = best_u.clone();
                    cand[c] = cand[c] + sign * step;
                    if let Some(u) = unit_in_norm(dom, &cand) {
                        let v = eval(&u);
                        if v > best {
                            best = v;
                            best_u = u;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step = step / F::of(2.0);
    }
    (best, best_u)
}

fn axis_vectors<F: Real>(dim: usize) -> Vec<Vec<F>> {
    (0..dim)
        .map(|j| {
            let mut e = vec![F::zero(); dim];
            e[j] = F::one();
            e
        })
        .collect()
}

// --- moduli of smoothness -------------------------------------------------

/// Sampled modulus-of-smoothness curve of order 1 or 2, with its Lipschitz
/// constant `max over the grid of omega(t) / t^order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessEstimate<F> {
    pub order: u8,
    pub t_grid: Vec<F>,
    pub omega_values: Vec<F>,
    pub lip_constant: F,
    pub bias: Bias,
    /// `(x, h)` attaining the grid maximum behind `lip_constant`.
    pub witness: (Vec<F>, Vec<F>),
    /// Grid point at which the witness was recorded; the reported constant is
    /// the witness difference norm divided by this value to the order.
    pub witness_t: F,
    pub samples: usize,
    pub seed: u64,
}

/// Difference norm the smoothness witness claims: `|f(x+h) - f(x)|` at order
/// 1, `|f(x+h) - 2f(x) + f(x-h)|` at order 2.
pub fn smoothness_witness_value<F: Real>(
    map: &MapSpec<F>,
    order: u8,
    x: &[F],
    h: &[F],
) -> Result<F> {
    if x.len() != map.dim_in() || h.len() != map.dim_in() {
        return Err(Error::DimensionMismatch { expected: map.dim_in(), got: x.len().max(h.len()) });
    }
    let diff = match order {
        1 => vecops::sub(&map.eval_raw(&vecops::add(x, h)), &map.eval_raw(x)),
        2 => map.second_difference_raw(x, h),
        _ => return Err(Error::InvalidParameter(format!("order must be 1 or 2, got {order}"))),
    };
    Ok(map.codomain_space().norm_raw(&diff))
}

/// Estimates `omega_order` on the grid and the associated Lipschitz constant.
///
/// Each grid point draws from its own seeded stream, so doubling `samples`
/// extends every stream and the estimate grows monotonically. Step directions
/// mix isotropic draws with coordinate axes (every 8th sample) and full
/// magnitude `|h| = t` with shrunk magnitudes (every 5th), which attains the
/// supremum exactly for the axis-extremal registry families.
pub fn omega_estimate<F: Real>(
    map: &MapSpec<F>,
    order: u8,
    t_grid: &[F],
    samples: usize,
    seed: u64,
) -> Result<SmoothnessEstimate<F>> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidParameter(format!("order must be 1 or 2, got {order}")));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("t_grid must not be empty".into()));
    }
    let radius = map.domain().radius;
    let diameter = F::of(2.0) * radius;
    for &t in t_grid {
        if !(t > F::zero()) || t > diameter * F::of(1.0 + DOMAIN_SLACK) {
            return Err(Error::InvalidParameter(format!(
                "t_grid points must lie in (0, {diameter}], got {t}"
            )));
        }
    }
    let mut grid: Vec<F> = t_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let dim = map.dim_in();
    let dom = map.domain_space().clone();
    let mut values: Vec<F> = Vec::with_capacity(grid.len());
    let mut witnesses: Vec<(Vec<F>, Vec<F>)> = Vec::with_capacity(grid.len());
    for (j, &t) in grid.iter().enumerate() {
        let mut rng = sample::rng_for(seed, 1 + j as u64);
        let mut best = F::neg_infinity();
        let mut best_pair: Option<(Vec<F>, Vec<F>)> = None;
        for i in 0..samples {
            let dir: Vec<F> = if i % 8 == 7 {
                let mut e = vec![F::zero(); dim];
                e[(i / 8) % dim] = F::one();
                e
            } else {
                let g = sample::gaussian_direction::<F>(&mut rng, dim);
                match unit_in_norm(&dom, &g) {
                    Some(u) => u,
                    None => continue,
                }
            };
            let scale = if i % 5 == 4 { sample::unit(&mut rng) } else { F::one() };
            let s = t.min(radius) * scale;
            let x = map.domain().sample_shrunk(&mut rng, radius - s, SampleMode::Interior);
            let h = vecops::scale(&dir, s);
            let v = match order {
                1 => {
                    let diff = vecops::sub(&map.eval_raw(&vecops::add(&x, &h)), &map.eval_raw(&x));
                    map.codomain_space().norm_raw(&diff)
                }
                _ => map.codomain_space().norm_raw(&map.second_difference_raw(&x, &h)),
            };
            if v > best {
                best = v;
                best_pair = Some((x, h));
            }
        }
        match best_pair {
            Some(p) => {
                values.push(best);
                witnesses.push(p);
            }
            None => return Err(Error::EmptyAdmissibleSet { t: t.as_f64() }),
        }
    }

    // omega is nondecreasing in t; a step admissible at t is admissible at
    // every larger grid point, so propagate maxima upward.
    for j in 1..values.len() {
        if values[j - 1] > values[j] {
            values[j] = values[j - 1];
            witnesses[j] = witnesses[j - 1].clone();
        }
    }

    let mut lip = F::neg_infinity();
    let mut arg = 0;
    for (j, (&t, &v)) in grid.iter().zip(&values).enumerate() {
        let denom = if order == 1 { t } else { t * t };
        let ratio = v / denom;
        if ratio > lip {
            lip = ratio;
            arg = j;
        }
    }

    Ok(SmoothnessEstimate {
        order,
        t_grid: grid.clone(),
        omega_values: values,
        lip_constant: lip,
        bias: Bias::LowerBoundOfSupremum,
        witness: witnesses[arg].clone(),
        witness_t: grid[arg],
        samples,
        seed,
    })
}

// --- derivative-based checks ----------------------------------------------

/// Derivative-side counterparts of the smoothness constants: the Fréchet
/// remainder ratio, the Lipschitz constant of `x -> f'(x)` in operator norm,
/// and the supremum of `|f'(x)|` over the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck<F> {
    /// Max over probes of `|f(x+h) - f(x) - f'(x)h| / |h|^2`.
    pub frechet_residual_max: F,
    pub lip1_of_derivative: ConstantEstimate<F>,
    pub operator_norm_sup: ConstantEstimate<F>,
}

fn project_into_ball<F: Real>(ball: &Ball<F>, x: &mut Vec<F>) {
    let d = ball.space.dist(x, &ball.center);
    if d > ball.radius {
        let f = ball.radius / d;
        for (xi, ci) in x.iter_mut().zip(&ball.center) {
            *xi = *ci + (*xi - *ci) * f;
        }
    }
}

/// Operator norm of the Jacobian at `x`, with sampled extra start directions.
fn jacobian_norm_at<F: Real>(
    map: &MapSpec<F>,
    x: &[F],
    extra_starts: &[Vec<F>],
) -> (F, Vec<F>) {
    let j = map.jacobian_raw(x);
    let mut starts = axis_vectors::<F>(map.dim_in());
    starts.extend_from_slice(extra_starts);
    operator_norm(map.domain_space(), map.codomain_space(), &j, &starts)
}

/// Estimates `sup |f'(x)|`, `Lip_1(f')`, and the Fréchet remainder ratio by
/// sampling plus deterministic pattern ascent. All three are biased from
/// below; the ascent makes the bias negligible for the registry families,
/// whose extrema sit on the boundary or along coordinate axes.
pub fn derivative_check<F: Real>(
    map: &MapSpec<F>,
    samples: usize,
    seed: u64,
) -> Result<DerivativeCheck<F>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let ball = map.domain().clone();
    let dim = map.dim_in();
    let radius = ball.radius;

    // sup of the Jacobian operator norm over the ball.
    let mut rng = sample::rng_for(seed, 0);
    let mut dir_starts: Vec<Vec<F>> = Vec::with_capacity(8);
    for _ in 0..8 {
        dir_starts.push(sample::gaussian_direction::<F>(&mut rng, dim));
    }
    let mut candidates: Vec<Vec<F>> = Vec::new();
    for j in 0..dim {
        for &sign in &[F::one(), -F::one()] {
            let mut x = ball.center.clone();
            x[j] = x[j] + sign * radius;
            candidates.push(x);
        }
    }
    for i in 0..samples {
        let mode = if i % 2 == 0 { SampleMode::Interior } else { SampleMode::Sphere };
        candidates.push(ball.sample(&mut rng, mode));
    }
    let mut op_best = F::neg_infinity();
    let mut op_x: Vec<F> = ball.center.clone();
    let mut op_dir: Vec<F> = axis_vectors::<F>(dim).swap_remove(0);
    for x in &candidates {
        let (v, u) = jacobian_norm_at(map, x, &dir_starts);
        if v > op_best {
            op_best = v;
            op_x = x.clone();
            op_dir = u;
        }
    }
    let mut step = F::of(0.1) * radius;
    while step >= F::of(1e-6) * radius {
        for _ in 0..50 {
            let mut improved = false;
            for c in 0..dim {
                for &sign in &[F::one(), -F::one()] {
                    let mut cand = op_x.clone();
                    cand[c] = cand[c] + sign * step;
                    project_into_ball(&ball, &mut cand);
                    let (v, u) = jacobian_norm_at(map, &cand, std::slice::from_ref(&op_dir));
                    if v > op_best {
                        op_best = v;
                        op_x = cand;
                        op_dir = u;
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
    let operator_norm_sup = ConstantEstimate {
        value: op_best,
        bias: Bias::LowerBoundOfSupremum,
        witness: Witness::Direction { x: op_x, direction: op_dir.clone() },
        samples,
        seed,
    };

    // Lipschitz constant of the derivative over sampled pairs, then ascent.
    let mut rng = sample::rng_for(seed, 1);
    let pair_floor = F::of(1e-8) * radius;
    let diff_ratio = |x: &[F], y: &[F], starts: &[Vec<F>]| -> Option<(F, Vec<F>)> {
        let d = map.domain_space().dist(x, y);
        if d < pair_floor {
            return None;
        }
        let m = map.jacobian_raw(x).sub(&map.jacobian_raw(y));
        let mut all = axis_vectors::<F>(dim);
        all.extend_from_slice(starts);
        let (v, u) = operator_norm(map.domain_space(), map.codomain_space(), &m, &all);
        Some((v / d, u))
    };
    let mut lip_best = F::zero();
    let mut lip_pair = (ball.center.clone(), ball.center.clone());
    let mut lip_dir: Vec<F> = axis_vectors::<F>(dim).swap_remove(0);
    for i in 0..samples {
        let (x, y) = if i % 4 == 3 {
            let axis = (i / 4) % dim;
            let u: F = sample::unit(&mut rng);
            let s = radius * (F::of(0.05) + F::of(0.45) * u);
            let x = ball.sample_shrunk(&mut rng, radius - s, SampleMode::Interior);
            let mut y = x.clone();
            y[axis] = y[axis] + s;
            (x, y)
        } else {
            (
                ball.sample(&mut rng, SampleMode::Interior),
                ball.sample(&mut rng, SampleMode::Interior),
            )
        };
        if let Some((r, u)) = diff_ratio(&x, &y, &dir_starts) {
            if r > lip_best {
                lip_best = r;
                lip_pair = (x, y);
                lip_dir = u;
            }
        }
    }
    let mut step = F::of(0.1) * radius;
    while step >= F::of(1e-6) * radius {
        for _ in 0..50 {
            let mut improved = false;
            for slot in 0..2 * dim {
                for &sign in &[F::one(), -F::one()] {
                    let mut cx = lip_pair.0.clone();
                    let mut cy = lip_pair.1.clone();
                    let target = if slot < dim { &mut cx } else { &mut cy };
                    let c = slot % dim;
                    target[c] = target[c] + sign * step;
                    project_into_ball(&ball, &mut cx);
                    project_into_ball(&ball, &mut cy);
                    if let Some((r, u)) = diff_ratio(&cx, &cy, std::slice::from_ref(&lip_dir)) {
                        if r > lip_best {
                            lip_best = r;
                            lip_pair = (cx, cy);
                            lip_dir = u;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step = step / F::of(2.0);
    }
    let lip1_of_derivative = ConstantEstimate {
        value: lip_best,
        bias: Bias::LowerBoundOfSupremum,
        witness: Witness::Pair { x: lip_pair.0, y: lip_pair.1 },
        samples,
        seed,
    };

    // Fréchet remainder ratio |f(x+h) - f(x) - f'(x)h| / |h|^2.
    let mut rng = sample::rng_for(seed, 2);
    let mut frechet = F::zero();
    for i in 0..samples {
        let dir: Vec<F> = if i % 8 == 7 {
            let mut e = vec![F::zero(); dim];
            e[(i / 8) % dim] = F::one();
            e
        } else {
            let g = sample::gaussian_direction::<F>(&mut rng, dim);
            match unit_in_norm(map.domain_space(), &g) {
                Some(u) => u,
                None => continue,
            }
        };
        let scale = if i % 5 == 4 { sample::unit(&mut rng) } else { F::one() };
        let s = F::of(0.3) * radius * scale;
        if !(s > F::zero()) {
            continue;
        }
        let x = ball.sample_shrunk(&mut rng, radius - s, SampleMode::Interior);
        let h = vecops::scale(&dir, s);
        let jh = map.jacobian_raw(&x).matvec(&h);
        let fx = map.eval_raw(&x);
        let fxh = map.eval_raw(&vecops::add(&x, &h));
        let resid = vecops::sub(&vecops::sub(&fxh, &fx), &jh);
        let hn = map.domain_space().norm_raw(&h);
        let r = map.codomain_space().norm_raw(&resid) / (hn * hn);
        if r > frechet {
            frechet = r;
        }
    }

    Ok(DerivativeCheck { frechet_residual_max: frechet, lip1_of_derivative, operator_norm_sup })
}

// --- serialization --------------------------------------------------------

fn mat_to_rows<F: Real>(m: &Mat<F>) -> Vec<Vec<f64>> {
    m.to_rows().iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
}

fn mat_from_rows<F: Real, E: serde::de::Error>(rows: &[Vec<f64>]) -> std::result::Result<Mat<F>, E> {
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(E::custom("matrix rows must be non-empty and of equal length"));
    }
    let converted: Vec<Vec<F>> = rows.iter().map(|r| r.iter().map(|&v| F::of(v)).collect()).collect();
    Ok(Mat::from_rows(&converted))
}

#[derive(Serialize, Deserialize)]
struct FamilyParamsRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quads: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outer_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outer_offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inner: Option<Box<FamilyRepr>>,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    family: String,
    params: FamilyParamsRepr,
}

fn family_to_repr<F: Real>(fam: &MapFamily<F>) -> FamilyRepr {
    let empty = || FamilyParamsRepr {
        matrix: None,
        offset: None,
        k: None,
        quads: None,
        outer_matrix: None,
        outer_offset: None,
        inner: None,
    };
    match fam {
        MapFamily::Linear { matrix, offset } => FamilyRepr {
            family: "linear".into(),
            params: FamilyParamsRepr {
                matrix: Some(mat_to_rows(matrix)),
                offset: Some(offset.iter().map(|v| v.as_f64()).collect()),
                ..empty()
            },
        },
        MapFamily::ParabolicShear { k } => FamilyRepr {
            family: "parabolic_shear".into(),
            params: FamilyParamsRepr { k: Some(k.as_f64()), ..empty() },
        },
        MapFamily::QuadraticPerturbation { quads } => FamilyRepr {
            family: "quadratic_perturbation".into(),
            params: FamilyParamsRepr {
                quads: Some(quads.iter().map(mat_to_rows).collect()),
                ..empty()
            },
        },
        MapFamily::Composed { outer_matrix, outer_offset, inner } => FamilyRepr {
            family: "composed".into(),
            params: FamilyParamsRepr {
                outer_matrix: Some(mat_to_rows(outer_matrix)),
                outer_offset: Some(outer_offset.iter().map(|v| v.as_f64()).collect()),
                inner: Some(Box::new(family_to_repr(inner.as_ref()))),
                ..empty()
            },
        },
    }
}

fn family_from_repr<F: Real, E: serde::de::Error>(repr: &FamilyRepr) -> std::result::Result<MapFamily<F>, E> {
    let p = &repr.params;
    match repr.family.as_str() {
        "linear" => {
            let rows = p.matrix.as_ref().ok_or_else(|| E::custom("linear family requires `matrix`"))?;
            let matrix: Mat<F> = mat_from_rows(rows)?;
            let offset = match &p.offset {
                Some(o) => o.iter().map(|&v| F::of(v)).collect(),
                None => vec![F::zero(); matrix.nrows()],
            };
            Ok(MapFamily::Linear { matrix, offset })
        }
        "parabolic_shear" => {
            let k = p.k.ok_or_else(|| E::custom("parabolic_shear family requires `k`"))?;
            Ok(MapFamily::ParabolicShear { k: F::of(k) })
        }
        "quadratic_perturbation" => {
            let qs = p
                .quads
                .as_ref()
                .ok_or_else(|| E::custom("quadratic_perturbation family requires `quads`"))?;
            let quads = qs.iter().map(|q| mat_from_rows(q)).collect::<std::result::Result<_, E>>()?;
            Ok(MapFamily::QuadraticPerturbation { quads })
        }
        "composed" => {
            let rows = p
                .outer_matrix
                .as_ref()
                .ok_or_else(|| E::custom("composed family requires `outer_matrix`"))?;
            let outer_matrix: Mat<F> = mat_from_rows(rows)?;
            let outer_offset = match &p.outer_offset {
                Some(o) => o.iter().map(|&v| F::of(v)).collect(),
                None => vec![F::zero(); outer_matrix.nrows()],
            };
            let inner = p.inner.as_ref().ok_or_else(|| E::custom("composed family requires `inner`"))?;
            Ok(MapFamily::Composed {
                outer_matrix,
                outer_offset,
                inner: Box::new(family_from_repr(inner)?),
            })
        }
        other => Err(E::custom(format!("unknown map family `{other}`"))),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "F: Real", deserialize = "F: Real"))]
struct MapSpecRepr<F> {
    #[serde(flatten)]
    family: FamilyRepr,
    domain: Ball<F>,
    codomain_space: NormedSpace<F>,
}

impl<F: Real> Serialize for MapSpec<F> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MapSpecRepr {
            family: family_to_repr(&self.family),
            domain: self.domain.clone(),
            codomain_space: self.codomain_space.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de, F: Real> Deserialize<'de> for MapSpec<F> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MapSpecRepr::<F>::deserialize(deserializer)?;
        let family = family_from_repr::<F, D::Error>(&repr.family)?;
        MapSpec::new(family, repr.domain, repr.codomain_space)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}
