//! The nine instances the verification suite runs, with hand-computed
//! constants where the family admits them. Both integration suites draw from
//! this registry so the acceptance run and the property run exercise the same
//! maps the CLI ships.

use lclab::linalg::Mat;
use lclab::map::{MapFamily, MapSpec};
use lclab::space::{Ball, NormedSpace};

// Each integration suite reads a different subset of the fields.
#[allow(dead_code)]
pub struct Fixture {
    pub name: &'static str,
    pub map: MapSpec<f64>,
    /// Lipschitz-openness constant on the domain, from the closed form of the
    /// worst Jacobian.
    pub lipo: f64,
    /// Second-order Lipschitz constant.
    pub lip2: f64,
}

/// `1 / sigma_max` of the shear Jacobian `[[1,0],[a,1]]`: the inner-radius
/// rate of the linearization with the worst off-diagonal entry `a`.
pub fn shear_lipo(a: f64) -> f64 {
    let s2 = 1.0 + a * a / 2.0 + (a.abs() / 2.0) * (a * a + 4.0).sqrt();
    1.0 / s2.sqrt()
}

fn euclid_ball(dim: usize) -> Ball<f64> {
    Ball::unit(NormedSpace::euclidean(dim))
}

fn shear2(k: f64) -> MapSpec<f64> {
    MapSpec::endomorphic(MapFamily::parabolic_shear(k), euclid_ball(2)).unwrap()
}

/// `f(x) = (x1, x2 + x1^2)`: the fold map expressed as a quadratic
/// perturbation, so it carries no analytic inverse and forces the grid
/// exclusion path. Same geometry as the strength-2 shear.
pub fn quad_fold() -> MapSpec<f64> {
    let quads = vec![Mat::zeros(2, 2), Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]])];
    MapSpec::endomorphic(MapFamily::quadratic_perturbation(quads), euclid_ball(2)).unwrap()
}

/// `f(x) = (x1 + x1^2/4, x2)`: a monotone stretch of the first coordinate.
/// Every ball image is convex (the side boundaries are increasing convex
/// reparametrizations of circular arcs), so the local convexity radius is
/// domain-limited while the second-order constant stays positive.
pub fn parabolic_stretch() -> MapSpec<f64> {
    let quads = vec![Mat::from_rows(&[vec![0.25, 0.0], vec![0.0, 0.0]]), Mat::zeros(2, 2)];
    MapSpec::endomorphic(MapFamily::quadratic_perturbation(quads), euclid_ball(2)).unwrap()
}

pub fn registry() -> Vec<Fixture> {
    let mut out = Vec::new();
    for (name, k) in [
        ("shear-0.5", 0.5),
        ("shear-1", 1.0),
        ("shear-2", 2.0),
        ("shear-4", 4.0),
    ] {
        out.push(Fixture { name, map: shear2(k), lipo: shear_lipo(k), lip2: k });
    }
    out.push(Fixture {
        name: "quad-fold",
        map: quad_fold(),
        // Jacobian [[1,0],[2*x1,1]] with |x1| <= 1: worst entry 2.
        lipo: shear_lipo(2.0),
        lip2: 2.0,
    });
    out.push(Fixture {
        name: "parabolic-stretch",
        // Jacobian diag(1 + x1/2, 1): the inverse norm peaks at 1/(1/2) = 2.
        map: parabolic_stretch(),
        lipo: 0.5,
        lip2: 0.5,
    });
    out.push(Fixture {
        name: "doubling",
        map: MapSpec::endomorphic(
            MapFamily::linear_homogeneous(Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]])),
            euclid_ball(2),
        )
        .unwrap(),
        lipo: 2.0,
        lip2: 0.0,
    });
    out.push(Fixture {
        name: "triangular-linear",
        map: MapSpec::endomorphic(
            MapFamily::linear_homogeneous(Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 0.5]])),
            euclid_ball(2),
        )
        .unwrap(),
        // 1 / sigma_max of the inverse [[0.5,-1],[0,2]].
        lipo: {
            let g: [[f64; 2]; 2] = [[0.25, -0.5], [-0.5, 5.0]];
            let tr = g[0][0] + g[1][1];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let lmax = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
            1.0 / lmax.sqrt()
        },
        lip2: 0.0,
    });
    out.push(Fixture {
        name: "shear-1-3d",
        map: MapSpec::endomorphic(MapFamily::parabolic_shear(1.0), euclid_ball(3)).unwrap(),
        lipo: shear_lipo(1.0),
        lip2: 1.0,
    });
    out
}
