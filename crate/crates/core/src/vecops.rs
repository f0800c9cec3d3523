//! Small dense-vector helpers used throughout the estimators.

use crate::scalar::Real;

pub fn add<F: Real>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<F: Real>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<F: Real>(a: &[F], s: F) -> Vec<F> {
    a.iter().map(|&x| x * s).collect()
}

/// a + s * b
pub fn axpy<F: Real>(a: &[F], s: F, b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn midpoint<F: Real>(a: &[F], b: &[F]) -> Vec<F> {
    let half = F::of(0.5);
    a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect()
}

pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<F: Real>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

pub fn neg<F: Real>(a: &[F]) -> Vec<F> {
    a.iter().map(|&x| -x).collect()
}
