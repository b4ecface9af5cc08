//! Jump-size distributions for the multiplicative factor `1 + U`.
//!
//! Every variant keeps the power moments `E[(1+U)^k]` in closed form for
//! arbitrary real `k` (the solver needs exponents `r*theta` and `1 - r`),
//! so the characteristic function and its derivative never require
//! numerical integration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{c, Scalar};
use crate::{Error, Result};

/// One atom of a discrete jump law: `U = u` with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom<S> {
    pub u: S,
    pub p: S,
}

/// Distribution of the jump percentage `U`, constrained to `U > -1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSizeSpec<S> {
    /// Every jump has the same size `m`.
    Deterministic { m: S },
    /// Finite support; probabilities must sum to one.
    Discrete { atoms: Vec<Atom<S>> },
    /// `ln(1 + U) ~ Normal(a, b^2)`, so the factor `1 + U` is lognormal.
    LogFactor { a: S, b: S },
}

impl<S: Scalar> JumpSizeSpec<S> {
    /// No jump effect: `U = 0` almost surely.
    pub fn none() -> Self {
        JumpSizeSpec::Deterministic { m: S::zero() }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, JumpSizeSpec::Deterministic { .. })
    }

    /// Structural validation: support strictly above -1, probabilities
    /// forming a distribution, finite parameters.
    pub fn check(&self) -> Result<()> {
        match self {
            JumpSizeSpec::Deterministic { m } => {
                if !m.is_finite() || *m <= -S::one() {
                    return Err(Error::Structural(format!(
                        "deterministic jump size m = {m} must be finite and > -1"
                    )));
                }
            }
            JumpSizeSpec::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Structural(
                        "discrete jump law needs at least one atom".into(),
                    ));
                }
                let mut total = S::zero();
                for Atom { u, p } in atoms {
                    if !u.is_finite() || *u <= -S::one() {
                        return Err(Error::Structural(format!(
                            "discrete jump atom u = {u} must be finite and > -1"
                        )));
                    }
                    if !p.is_finite() || *p < S::zero() || *p > S::one() {
                        return Err(Error::Structural(format!(
                            "discrete jump probability p = {p} must lie in [0, 1]"
                        )));
                    }
                    total += *p;
                }
                if (total - S::one()).abs() > c(1e-12) {
                    return Err(Error::Structural(format!(
                        "discrete jump probabilities sum to {total}, expected 1"
                    )));
                }
            }
            JumpSizeSpec::LogFactor { a, b } => {
                if !a.is_finite() || !b.is_finite() || *b < S::zero() {
                    return Err(Error::Structural(format!(
                        "log-factor jump law needs finite a and b >= 0, got a = {a}, b = {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `E[(1+U)^k]` in closed form; positive for every finite `k`.
    pub fn power_moment(&self, k: S) -> S {
        match self {
            JumpSizeSpec::Deterministic { m } => (S::one() + *m).powf(k),
            JumpSizeSpec::Discrete { atoms } => {
                let mut acc = S::zero();
                for Atom { u, p } in atoms {
                    acc += *p * (S::one() + *u).powf(k);
                }
                acc
            }
            JumpSizeSpec::LogFactor { a, b } => (k * *a + k * k * *b * *b / c(2.0)).exp(),
        }
    }

    /// `d/dk E[(1+U)^k]`, closed form per variant. Feeds the analytic
    /// derivative of the characteristic function.
    pub fn power_moment_dk(&self, k: S) -> S {
        match self {
            JumpSizeSpec::Deterministic { m } => {
                let base = S::one() + *m;
                base.ln() * base.powf(k)
            }
            JumpSizeSpec::Discrete { atoms } => {
                let mut acc = S::zero();
                for Atom { u, p } in atoms {
                    let base = S::one() + *u;
                    acc += *p * base.ln() * base.powf(k);
                }
                acc
            }
            JumpSizeSpec::LogFactor { a, b } => {
                (*a + k * *b * *b) * self.power_moment(k)
            }
        }
    }

    /// Mean jump `m = E[U] = E[(1+U)^1] - 1`.
    pub fn mean_jump(&self) -> S {
        self.power_moment(S::one()) - S::one()
    }

    /// Draw one factor `1 + U`; strictly positive.
    pub fn sample_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match self {
            JumpSizeSpec::Deterministic { m } => S::one() + *m,
            JumpSizeSpec::Discrete { atoms } => {
                let roll = S::unit_uniform(rng);
                let mut cum = S::zero();
                for Atom { u, p } in atoms {
                    cum += *p;
                    if roll < cum {
                        return S::one() + *u;
                    }
                }
                // roll landed in the rounding slack past the last atom
                S::one() + atoms.last().expect("checked nonempty").u
            }
            JumpSizeSpec::LogFactor { a, b } => {
                (*a + *b * S::standard_normal(rng)).exp()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn det(m: f64) -> JumpSizeSpec<f64> {
        JumpSizeSpec::Deterministic { m }
    }

    fn two_atom() -> JumpSizeSpec<f64> {
        JumpSizeSpec::Discrete {
            atoms: vec![Atom { u: -0.2, p: 0.5 }, Atom { u: 0.4, p: 0.5 }],
        }
    }

    #[test]
    fn power_moment_examples() {
        // no jump effect
        for k in [-2.0, 0.0, 0.7, 3.0] {
            assert_eq!(det(0.0).power_moment(k), 1.0);
        }
        // two-atom arithmetic
        let m2 = two_atom().power_moment(2.0);
        assert!((m2 - 1.3).abs() < 1e-15, "got {m2}");
        // lognormal closed form
        let lf = JumpSizeSpec::LogFactor { a: 0.1, b: 0.2 };
        assert!((lf.power_moment(3.0) - (0.48f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn mean_jump_examples() {
        assert!((det(0.1).mean_jump() - 0.1).abs() < 1e-15);
        assert!((two_atom().mean_jump() - 0.1).abs() < 1e-15);
        let lf = JumpSizeSpec::LogFactor { a: 0.0, b: 0.3 };
        assert!((lf.mean_jump() - ((0.045f64).exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn moment_derivative_matches_finite_difference() {
        let specs = [
            det(0.25),
            det(-0.4),
            two_atom(),
            JumpSizeSpec::LogFactor { a: -0.1, b: 0.35 },
        ];
        let eps = 1e-6;
        for spec in &specs {
            for k in [-1.5, -0.3, 0.0, 0.8, 2.4] {
                let fd = (spec.power_moment(k + eps) - spec.power_moment(k - eps)) / (2.0 * eps);
                let an = spec.power_moment_dk(k);
                assert!(
                    (fd - an).abs() <= 1e-7 * an.abs().max(1.0),
                    "spec {spec:?} k {k}: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn sample_factor_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(det(0.5).sample_factor(&mut rng), 1.5);
        }
        let single = JumpSizeSpec::Discrete {
            atoms: vec![Atom { u: 0.2, p: 1.0 }],
        };
        for _ in 0..100 {
            assert!((single.sample_factor(&mut rng) - 1.2f64).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_factor_log_mean_within_three_se() {
        let spec: JumpSizeSpec<f64> = JumpSizeSpec::LogFactor { a: 0.0, b: 0.2 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| spec.sample_factor(&mut rng).ln()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn check_rejects_bad_specs() {
        assert!(det(-1.0).check().is_err());
        assert!(JumpSizeSpec::Discrete::<f64> { atoms: vec![] }.check().is_err());
        let bad_sum = JumpSizeSpec::Discrete {
            atoms: vec![Atom { u: 0.1, p: 0.6 }, Atom { u: 0.2, p: 0.6 }],
        };
        assert!(bad_sum.check().is_err());
        assert!(JumpSizeSpec::LogFactor { a: 0.0, b: -0.1 }.check().is_err());
        assert!(det(0.1).check().is_ok());
    }

    fn arb_spec() -> impl Strategy<Value = JumpSizeSpec<f64>> {
        prop_oneof![
            (-0.9..2.0f64).prop_map(|m| det(m)),
            ((-0.8..1.5f64), (-0.8..1.5f64), (0.05..0.95f64)).prop_map(|(u1, u2, p)| {
                JumpSizeSpec::Discrete {
                    atoms: vec![Atom { u: u1, p }, Atom { u: u2, p: 1.0 - p }],
                }
            }),
            ((-0.5..0.5f64), (0.0..0.6f64))
                .prop_map(|(a, b)| JumpSizeSpec::LogFactor { a, b }),
        ]
    }

    proptest! {
        #[test]
        fn zeroth_moment_is_one(spec in arb_spec()) {
            prop_assert!((spec.power_moment(0.0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mean_identity(spec in arb_spec()) {
            let diff = (spec.mean_jump() + 1.0) - spec.power_moment(1.0);
            prop_assert!(diff.abs() < 1e-15, "diff {}", diff);
        }

        #[test]
        fn moments_log_convex(spec in arb_spec(), k1 in -2.0..2.0f64, gap in 0.01..2.0f64) {
            let k2 = k1 + gap;
            let mid = spec.power_moment((k1 + k2) / 2.0);
            let prod = spec.power_moment(k1) * spec.power_moment(k2);
            prop_assert!(mid * mid <= prod * (1.0 + 1e-12));
        }
    }
}
