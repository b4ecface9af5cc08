//! Optimal timing of an irreversible investment under two independent
//! jump-diffusion uncertainties: a demand index `X` and an investment cost
//! `I`. The profit flow is isoelastic (`kappa x^theta`), and the problem
//! collapses to a one-dimensional threshold rule in `q = x^theta / i`:
//! invest the first time `q` reaches `q*`.
//!
//! The crate provides:
//! - the closed-form solution (`solver`): perpetuity rate `h`, factor `A`,
//!   characteristic root `r0`, threshold `q*`, value function, and
//!   numerical certification of the variational inequalities;
//! - admissibility classification and per-parameter admissible domains
//!   (`model`);
//! - comparative statics of `q*` with analytic derivatives, sign
//!   classification and finite-difference cross-checks (`statics`);
//! - Monte Carlo verification: exact moment checks, policy valuation and
//!   threshold optimality scans (`montecarlo`).
//!
//! All numerics are generic over the floating scalar via [`scalar::Scalar`];
//! the type aliases at the crate root fix `f64`, which is what the `jumpstop`
//! binary uses.

pub mod cli;
pub mod jumps;
pub mod model;
pub mod montecarlo;
pub mod scalar;
pub mod solver;
pub mod statics;
#[cfg(test)]
pub mod testmodels;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its own legal range (negative volatility,
    /// jump support reaching -1, `kappa1 <= kappa0`, ...).
    #[error("invalid parameters: {0}")]
    Structural(String),
    /// Parameters are individually legal but violate the admissibility
    /// conditions (`rho > mu_I` and `h > 0`).
    #[error("model not admissible: {0}")]
    Inadmissible(String),
    /// An argument is outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A root solve failed to bracket or converge.
    #[error("root finding failed: {0}")]
    NoRoot(String),
    /// `h <= 0`: the perpetuity value of the profit difference diverges.
    #[error("divergent perpetuity: {0}")]
    DivergentPerpetuity(String),
    /// The requested closed-form quantity does not exist for this jump
    /// specification; numeric routes remain available.
    #[error("no analytic form: {0}")]
    UnsupportedAnalytic(String),
    /// Intermediate values left the representable floating-point range.
    #[error("numeric range: {0}")]
    NumericRange(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub type Model = model::Model<f64>;
pub type ProcessParams = model::ProcessParams<f64>;
pub type MarketParams = model::MarketParams<f64>;
pub type JumpSizeSpec = jumps::JumpSizeSpec<f64>;
pub type Solution = solver::Solution<f64>;
pub type SimConfig = montecarlo::SimConfig<f64>;
pub type McEstimate = montecarlo::McEstimate<f64>;
pub type SensitivityReport = statics::SensitivityReport<f64>;
