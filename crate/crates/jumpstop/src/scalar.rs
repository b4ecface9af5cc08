//! Scalar abstraction: all model math is written once over a floating-point
//! type and instantiated for `f64` (the default used by the CLI) or `f32`.

use std::fmt::{Debug, Display, LowerExp};
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Floating-point scalar usable throughout the crate.
///
/// Besides the usual arithmetic this carries the random draws the simulator
/// needs, so the sampling code does not have to repeat `where` clauses for
/// the `rand_distr` distributions at every call site.
pub trait Scalar:
    Float + FromPrimitive + AddAssign + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// One standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// One unit-rate exponential draw.
    fn standard_exp<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// One uniform draw on [0, 1).
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn standard_exp<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Exp1.sample(rng)
    }
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn standard_exp<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Exp1.sample(rng)
    }
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

/// Lift an `f64` constant into the working scalar type.
#[inline]
pub fn c<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("constant representable in scalar type")
}

/// Deterministic pairwise (tree) summation over ascending index order.
///
/// Gives the same result for any degree of outer parallelism, since the
/// reduction order is fixed by the slice layout, and keeps rounding error
/// at O(log n) instead of O(n).
pub fn pairwise_sum<S: Scalar>(values: &[S]) -> S {
    match values.len() {
        0 => S::zero(),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1001).map(|i| i as f64 * 0.25).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[3.0]), 3.0);
    }
}
