//! Numerical laboratory for local convexity of smooth maps on
//! finite-dimensional normed spaces.
//!
//! The crate measures, for concrete map families on ball domains, every
//! quantity in the bound
//!
//! ```text
//! lcr(f) >= 8 Lip_o(f) conv_2(X) / Lip_2(f)
//! ```
//!
//! together with the moduli behind them: moduli of convexity of the spaces,
//! moduli of smoothness of the maps, Lipschitz-openness constants, and
//! certified local convexity radii. Estimators carry explicit bias tags and
//! reproducible witnesses, and independently implemented oracles cross-check
//! the main code paths.
//!
//! Everything is generic over the scalar through [`scalar::Real`]
//! (instantiated at `f32` and `f64`); the `*64` aliases at the crate root
//! name the `f64` instantiations that callers normally want.

pub mod error;
pub mod estimate;
pub mod linalg;
pub mod map;
pub mod openness;
pub mod oracle;
pub mod sample;
pub mod scalar;
pub mod space;
pub mod vecops;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Space64 = space::NormedSpace<f64>;
pub type Ball64 = space::Ball<f64>;
pub type Mat64 = linalg::Mat<f64>;
pub type MapFamily64 = map::MapFamily<f64>;
pub type MapSpec64 = map::MapSpec<f64>;
pub type SmoothnessEstimate64 = map::SmoothnessEstimate<f64>;
pub type DerivativeCheck64 = map::DerivativeCheck<f64>;
pub type ConstantEstimate64 = estimate::ConstantEstimate<f64>;
pub type ModulusCurve64 = space::ModulusCurve<f64>;
pub type Conv2Estimate64 = space::Conv2Estimate<f64>;
pub type OpennessEstimate64 = openness::OpennessEstimate<f64>;
pub type PreimageResult64 = openness::PreimageResult<f64>;
pub type SurjectivityDiagnostic64 = openness::SurjectivityDiagnostic<f64>;
pub type ConvexityVerdict64 = verify::ConvexityVerdict<f64>;
pub type LcrEstimate64 = verify::LcrEstimate<f64>;
pub type Bound64 = verify::Bound<f64>;
pub type BoundReport64 = verify::BoundReport<f64>;
pub type Claim1Trace64 = verify::Claim1Trace<f64>;
pub type GridOracleResult64 = oracle::GridOracleResult<f64>;

pub type Space32 = space::NormedSpace<f32>;
pub type Ball32 = space::Ball<f32>;
pub type MapSpec32 = map::MapSpec<f32>;
pub type MapFamily32 = map::MapFamily<f32>;
