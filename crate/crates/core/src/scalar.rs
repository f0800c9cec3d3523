//! Scalar abstraction for the whole crate.
//!
//! Every estimator is generic over [`Real`], so the same code instantiates at
//! `f32` and `f64`. The crate root exports `f64` aliases, which is what the
//! CLI and the test suite use; tolerances quoted in doc comments are the `f64`
//! ones.

use std::fmt::{Debug, Display};

pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("constant not representable")
    }

    /// Widens to `f64`, mostly for diagnostics and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
