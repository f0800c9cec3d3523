//! Independent cross-checks for the convexity machinery: a dense-grid
//! convexity oracle for planar maps that shares no code path with the
//! Newton-based verifier, and closed-form witnesses for the parabolic shear.
//!
//! The oracle rasterizes a sub-ball of the domain, maps every grid point
//! forward, and compares the convex hull of the image cloud against the
//! covered cells of an image-plane raster. The uncovered fraction of the
//! hull is the reported margin; a margin above `3 / resolution` flags a
//! non-convex image. The dilation radius applied to covered cells is derived
//! from the largest image displacement between adjacent domain grid points,
//! so genuinely covered regions are never reported as holes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::MapSpec;
use crate::scalar::Real;
use crate::space::Ball;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridVerdict {
    Convex,
    NonConvex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOracleResult<F> {
    pub verdict: GridVerdict,
    /// Shoelace area of the convex hull of the image cloud.
    pub hull_area: F,
    /// Area of the raster cells inside the hull reached by the image.
    pub covered_area: F,
    pub resolution: usize,
    /// Uncovered fraction of the hull raster; the non-convexity signal.
    pub margin: F,
    /// Center of the worst uncovered cell, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<F>>,
}

fn cross<F: Real>(o: &[F; 2], a: &[F; 2], b: &[F; 2]) -> F {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull, counter-clockwise without the closing point.
fn convex_hull<F: Real>(pts: &[[F; 2]]) -> Vec<[F; 2]> {
    let mut pts: Vec<[F; 2]> = pts.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| a == b);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[F; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= F::zero() {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[F; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= F::zero() {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn polygon_area<F: Real>(poly: &[[F; 2]]) -> F {
    if poly.len() < 3 {
        return F::zero();
    }
    let mut s = F::zero();
    for i in 0..poly.len() {
        let a = &poly[i];
        let b = &poly[(i + 1) % poly.len()];
        s = s + a[0] * b[1] - b[0] * a[1];
    }
    (s / F::of(2.0)).abs()
}

fn inside_hull<F: Real>(poly: &[[F; 2]], p: &[F; 2], tol: F) -> bool {
    if poly.len() < 3 {
        return false;
    }
    for i in 0..poly.len() {
        let a = &poly[i];
        let b = &poly[(i + 1) % poly.len()];
        if cross(a, b, p) < -tol {
            return false;
        }
    }
    true
}

/// Dense-grid convexity check of `f(ball)` for planar maps. Deterministic,
/// seedless, and independent of the Newton verifier.
pub fn grid_convexity_oracle_2d<F: Real>(
    map: &MapSpec<F>,
    ball: &Ball<F>,
    resolution: usize,
) -> Result<GridOracleResult<F>> {
    if map.dim_in() != 2 || map.dim_out() != 2 {
        return Err(Error::InvalidParameter("the grid oracle is for planar maps".into()));
    }
    if ball.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ball.dim() });
    }
    if resolution < 16 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 16, got {resolution}"
        )));
    }
    let dom = map.domain();
    let reach = dom.space.dist(&ball.center, &dom.center) + ball.radius;
    if reach > dom.radius * F::of(1.0 + 1e-9) {
        return Err(Error::BallOutsideDomain { radius: ball.radius.as_f64() });
    }

    let res = resolution;
    let r = ball.radius;
    let cx = ball.center[0];
    let cy = ball.center[1];
    let coord = |i: usize| F::of(2.0) * r * (F::of(i as f64) + F::of(0.5)) / F::of(res as f64) - r;

    // Forward-map the masked domain raster, row by row in parallel.
    let rows: Vec<Vec<Option<[F; 2]>>> = (0..res)
        .into_par_iter()
        .map(|iy| {
            let y = cy + coord(iy);
            (0..res)
                .map(|ix| {
                    let x = vec![cx + coord(ix), y];
                    if ball.contains(&x) {
                        let im = map.eval_raw(&x);
                        Some([im[0], im[1]])
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();

    let mut points: Vec<[F; 2]> = Vec::new();
    for row in &rows {
        for p in row.iter().flatten() {
            points.push(*p);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyAdmissibleSet { t: r.as_f64() });
    }

    // Largest image displacement across domain-adjacent grid points bounds
    // how far the image can wander between raster samples.
    let mut max_adj = F::zero();
    for iy in 0..res {
        for ix in 0..res {
            if let Some(p) = &rows[iy][ix] {
                for (nx, ny) in [(ix + 1, iy), (ix, iy + 1)] {
                    if nx < res && ny < res {
                        if let Some(q) = &rows[ny][nx] {
                            let d = ((p[0] - q[0]) * (p[0] - q[0])
                                + (p[1] - q[1]) * (p[1] - q[1]))
                                .sqrt();
                            if d > max_adj {
                                max_adj = d;
                            }
                        }
                    }
                }
            }
        }
    }

    let hull = convex_hull(&points);
    let hull_area = polygon_area(&hull);
    if hull.len() < 3 {
        return Ok(GridOracleResult {
            verdict: GridVerdict::Convex,
            hull_area,
            covered_area: F::zero(),
            resolution: res,
            margin: F::zero(),
            witness: None,
        });
    }

    let mut min_x = F::infinity();
    let mut max_x = F::neg_infinity();
    let mut min_y = F::infinity();
    let mut max_y = F::neg_infinity();
    for p in &points {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(F::of(1e-12));
    let cell_w = ((max_x - min_x) / F::of(res as f64)).max(span * F::of(1e-15));
    let cell_h = ((max_y - min_y) / F::of(res as f64)).max(span * F::of(1e-15));

    let cell_of = |p: &[F; 2]| -> (usize, usize) {
        let fx = ((p[0] - min_x) / cell_w).as_f64().floor();
        let fy = ((p[1] - min_y) / cell_h).as_f64().floor();
        let ix = (fx.max(0.0) as usize).min(res - 1);
        let iy = (fy.max(0.0) as usize).min(res - 1);
        (ix, iy)
    };

    let mut marked = vec![false; res * res];
    for p in &points {
        let (ix, iy) = cell_of(p);
        marked[iy * res + ix] = true;
    }
    let dil_x = (max_adj / cell_w).as_f64().ceil() as isize;
    let dil_y = (max_adj / cell_h).as_f64().ceil() as isize;
    let dil = dil_x.max(dil_y).max(1);
    let mut covered = vec![false; res * res];
    for iy in 0..res as isize {
        for ix in 0..res as isize {
            if marked[iy as usize * res + ix as usize] {
                let y0 = (iy - dil).max(0);
                let y1 = (iy + dil).min(res as isize - 1);
                let x0 = (ix - dil).max(0);
                let x1 = (ix + dil).min(res as isize - 1);
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        covered[y as usize * res + x as usize] = true;
                    }
                }
            }
        }
    }

    let tol = span * F::of(1e-12);
    let mut hull_cells = 0usize;
    let mut covered_in_hull = 0usize;
    let mut uncovered: Vec<[F; 2]> = Vec::new();
    for iy in 0..res {
        for ix in 0..res {
            let p = [
                min_x + cell_w * (F::of(ix as f64) + F::of(0.5)),
                min_y + cell_h * (F::of(iy as f64) + F::of(0.5)),
            ];
            if inside_hull(&hull, &p, tol) {
                hull_cells += 1;
                if covered[iy * res + ix] {
                    covered_in_hull += 1;
                } else {
                    uncovered.push(p);
                }
            }
        }
    }

    let margin = if hull_cells == 0 {
        F::zero()
    } else {
        F::of((hull_cells - covered_in_hull) as f64) / F::of(hull_cells as f64)
    };
    let witness = if uncovered.is_empty() {
        None
    } else {
        let far = uncovered
            .iter()
            .map(|c| {
                let d = points
                    .iter()
                    .map(|p| (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]))
                    .fold(F::infinity(), F::min);
                (d, c)
            })
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .map(|(_, c)| vec![c[0], c[1]]);
        far
    };
    let threshold = F::of(3.0) / F::of(res as f64);
    let verdict = if margin > threshold { GridVerdict::NonConvex } else { GridVerdict::Convex };
    let covered_area = F::of(covered_in_hull as f64) * cell_w * cell_h;
    Ok(GridOracleResult { verdict, hull_area, covered_area, resolution: res, margin, witness })
}

// --- closed-form shear facts ----------------------------------------------

/// Euclidean-domain local convexity radius of the parabolic shear at the
/// origin: images of balls of radius below `1/k` stay convex, above it the
/// mirrored boundary pair bends the image inward.
pub fn shear_lcr_exact<F: Real>(k: F) -> Result<F> {
    if !(k > F::zero()) {
        return Err(Error::InvalidParameter(format!("shear strength must be positive, got {k}")));
    }
    Ok(F::one() / k)
}

/// Mirrored boundary pair on the sup-norm ball of radius `eps` whose image
/// midpoint leaves the image of the ball by `margin`, for every positive
/// radius. The sup-norm shear is nowhere locally convex at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearWitness<F> {
    pub a: Vec<F>,
    pub b: Vec<F>,
    pub midpoint: Vec<F>,
    /// Sup-norm distance from the midpoint's preimage to the ball, which for
    /// the shear equals the exclusion margin in the image.
    pub margin: F,
    pub tau: F,
}

pub fn shear_linf_witness<F: Real>(k: F, eps: F) -> Result<ShearWitness<F>> {
    if !(k > F::zero()) || !(eps > F::zero()) {
        return Err(Error::InvalidParameter(
            "shear witness needs positive strength and radius".into(),
        ));
    }
    let tau = (k * eps / F::of(4.0)).min(F::of(0.5));
    let y = eps * (F::one() - tau);
    let half_k = k / F::of(2.0);
    // Images of (-eps, y) and (eps, y) under (x1, x2) -> (x1, x2 + (k/2) x1^2).
    let a = vec![-eps, y + half_k * eps * eps];
    let b = vec![eps, y + half_k * eps * eps];
    let midpoint = vec![F::zero(), y + half_k * eps * eps];
    // The vertical line x1 = 0 maps to itself, so the preimage of the
    // midpoint is (0, y + (k/2) eps^2), at sup distance y + (k/2) eps^2 - eps
    // beyond the ball.
    let margin = y + half_k * eps * eps - eps;
    Ok(ShearWitness { a, b, midpoint, margin, tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::map::MapFamily;
    use crate::space::NormedSpace;

    fn shear_map(k: f64) -> MapSpec<f64> {
        MapSpec::endomorphic(MapFamily::parabolic_shear(k), Ball::unit(NormedSpace::euclidean(2)))
            .unwrap()
    }

    #[test]
    fn hull_machinery_on_a_square() {
        let pts: Vec<[f64; 2]> = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.2, 0.8],
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!((polygon_area(&hull) - 1.0).abs() < 1e-12);
        assert!(inside_hull(&hull, &[0.5, 0.5], 1e-12));
        assert!(!inside_hull(&hull, &[1.5, 0.5], 1e-12));
    }

    #[test]
    fn oracle_accepts_linear_images() {
        let map = MapSpec::endomorphic(
            MapFamily::linear_homogeneous(Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]])),
            Ball::unit(NormedSpace::euclidean(2)),
        )
        .unwrap();
        let ball = Ball::unit(NormedSpace::euclidean(2));
        let res = grid_convexity_oracle_2d(&map, &ball, 192).unwrap();
        assert_eq!(res.verdict, GridVerdict::Convex);
        let disk = std::f64::consts::PI * 4.0;
        assert!((res.hull_area - disk).abs() < 0.05 * disk, "hull area {}", res.hull_area);
        assert!(res.margin < 3.0 / 192.0);
    }

    #[test]
    fn oracle_flags_the_shear_above_the_critical_radius() {
        let map = shear_map(2.0);
        let ball = Ball::new(NormedSpace::euclidean(2), vec![0.0, 0.0], 0.75).unwrap();
        let res = grid_convexity_oracle_2d(&map, &ball, 256).unwrap();
        assert_eq!(res.verdict, GridVerdict::NonConvex, "margin {}", res.margin);
        assert!(res.witness.is_some());
        // The hole sits under the image of the top boundary arc.
        let w = res.witness.unwrap();
        assert!(w[1] > 0.0);
    }

    #[test]
    fn oracle_accepts_the_shear_below_the_critical_radius() {
        let map = shear_map(2.0);
        let ball = Ball::new(NormedSpace::euclidean(2), vec![0.0, 0.0], 0.45).unwrap();
        let res = grid_convexity_oracle_2d(&map, &ball, 256).unwrap();
        assert_eq!(res.verdict, GridVerdict::Convex, "margin {}", res.margin);
    }

    #[test]
    fn oracle_rejects_balls_leaving_the_domain() {
        let map = shear_map(1.0);
        let ball = Ball::new(NormedSpace::euclidean(2), vec![0.5, 0.0], 0.75).unwrap();
        assert!(matches!(
            grid_convexity_oracle_2d(&map, &ball, 64),
            Err(Error::BallOutsideDomain { .. })
        ));
    }

    #[test]
    fn exact_shear_radius() {
        assert_eq!(shear_lcr_exact(2.0).unwrap(), 0.5);
        assert_eq!(shear_lcr_exact(0.5).unwrap(), 2.0);
        assert!(shear_lcr_exact(0.0).is_err());
    }

    #[test]
    fn sup_norm_witness_has_positive_margin_at_every_radius() {
        for &eps in &[0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 2.0] {
            let w = shear_linf_witness(1.0, eps).unwrap();
            assert!(w.margin > 0.0, "eps {eps}");
            assert!(w.margin >= 0.25 * 0.5 * eps * eps * 0.99, "eps {eps} margin {}", w.margin);
            // Both endpoints really are images of sup-ball points.
            let pre_a: [f64; 2] = [-eps, eps * (1.0 - w.tau)];
            assert!(pre_a[0].abs() <= eps && pre_a[1].abs() <= eps);
            let shear_a = [pre_a[0], pre_a[1] + 0.5 * pre_a[0] * pre_a[0]];
            assert_eq!(shear_a.to_vec(), w.a);
            let mid = [(w.a[0] + w.b[0]) / 2.0, (w.a[1] + w.b[1]) / 2.0];
            assert_eq!(mid.to_vec(), w.midpoint);
        }
        let w = shear_linf_witness(1.0f64, 0.5).unwrap();
        assert!((w.margin - 0.0625).abs() < 1e-15);
    }
}
