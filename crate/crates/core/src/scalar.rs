//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the comfort math is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn of(x: f64) -> Self;

    /// Widening conversion used for diagnostics and serialization.
    fn as_f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Sums after sorting by value so the result does not depend on input order.
pub(crate) fn order_free_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut v: Vec<T> = values.into_iter().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.into_iter().fold(T::zero(), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_free_sum_ignores_permutation() {
        let a: [f64; 5] = [0.1, 1e16, -1e16, 0.3, 0.7];
        let b: [f64; 5] = [0.7, -1e16, 0.3, 1e16, 0.1];
        assert_eq!(order_free_sum(a).to_bits(), order_free_sum(b).to_bits());
    }

    #[test]
    fn literal_conversion() {
        assert_eq!(<f32 as Scalar>::of(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::of(0.5).as_f64(), 0.5);
    }
}
