//! Shared fixtures for unit tests.

use crate::jumps::JumpSizeSpec;
use crate::model::{MarketParams, Model, ProcessParams};

/// Baseline no-jump model: rho = 0.1, theta = 1, kappa = (0.5, 1.5), n = 0,
/// X ~ (0.05, 0.2), I ~ (0.02, 0.1), x0 = 1, i0 = 10.
///
/// Closed-form anchors: h = 0.05, A = 20, j(r) = 0.025 r^2 + 0.015 r - 0.08,
/// r0 ~ 1.6916473, q* ~ 0.1222912.
pub fn m0() -> Model<f64> {
    Model {
        demand: ProcessParams {
            drift: 0.05,
            volatility: 0.2,
            jump_intensity: 0.0,
            jump: JumpSizeSpec::none(),
            initial: 1.0,
        },
        cost: ProcessParams {
            drift: 0.02,
            volatility: 0.1,
            jump_intensity: 0.0,
            jump: JumpSizeSpec::none(),
            initial: 10.0,
        },
        market: MarketParams {
            discount_rate: 0.1,
            elasticity: 1.0,
            kappa0: 0.5,
            kappa1: 1.5,
            lag: 0.0,
        },
    }
}

/// m0 plus deterministic jumps on both processes; still admissible.
pub fn m0_with_jumps() -> Model<f64> {
    let mut model = m0();
    model.demand.jump_intensity = 0.5;
    model.demand.jump = JumpSizeSpec::Deterministic { m: -0.1 };
    model.cost.jump_intensity = 0.3;
    model.cost.jump = JumpSizeSpec::Deterministic { m: 0.15 };
    model
}

/// One-factor degenerate model: constant investment cost, GBM demand.
/// Standard quadratic gives r0 = 0.5 + sqrt(0.25 + 2 rho / sigma_X^2).
pub fn one_factor() -> Model<f64> {
    let mut model = m0();
    model.demand.drift = 0.0;
    model.cost.drift = 0.0;
    model.cost.volatility = 0.0;
    model
}
