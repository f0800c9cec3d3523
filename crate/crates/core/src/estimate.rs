//! Shared shapes for sampled estimates.
//!
//! All sup/inf-type quantities in this crate are one-sided: a sampled maximum
//! can only undershoot a supremum, a sampled minimum can only overshoot an
//! infimum. Every estimate therefore carries an explicit [`Bias`] tag so that
//! downstream comparisons (the theorem check in particular) know which way
//! each number can be wrong.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Direction in which a sampled estimate can deviate from the true value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bias {
    /// Sampled minimum of an infimum: true value <= estimate.
    UpperBoundOfInfimum,
    /// Sampled maximum of a supremum: estimate <= true value.
    LowerBoundOfSupremum,
    /// Certified from below; failures of the certifier only shrink it.
    LowerBound,
    /// No one-sided guarantee (e.g. a ratio of two one-sided estimates).
    PointEstimate,
}

/// Configuration attaining (or approaching) an estimated constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness<F> {
    Point { x: Vec<F> },
    Pair { x: Vec<F>, y: Vec<F> },
    Direction { x: Vec<F>, direction: Vec<F> },
    PairDirection { x: Vec<F>, y: Vec<F>, direction: Vec<F> },
    Probe { center: Vec<F>, radius: F, direction: Vec<F> },
}

/// A numeric estimate of an inf/sup-type constant together with the
/// configuration that attained it and the sampling budget that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate<F> {
    pub value: F,
    pub bias: Bias,
    pub witness: Witness<F>,
    pub samples: usize,
    pub seed: u64,
}

impl<F: Real> ConstantEstimate<F> {
    pub fn new(value: F, bias: Bias, witness: Witness<F>, samples: usize, seed: u64) -> Self {
        ConstantEstimate { value, bias, witness, samples, seed }
    }
}
