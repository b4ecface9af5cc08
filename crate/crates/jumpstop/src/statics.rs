//! Comparative statics of the investment threshold.
//!
//! `dq*/dy` follows from implicit differentiation of `j(r0) = 0` together
//! with the chain through `h` and `A` for demand-side parameters. Signs are
//! classified against the analytic results where those apply (demand rows
//! only for `1/r0 <= theta <= 1`, jump rows only for deterministic jump
//! sizes); everything else falls back to the local derivative sign or a
//! numeric sweep.

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{self, Classification, Interval, Model};
use crate::scalar::{c, Scalar};
use crate::solver::{self, Solution};
use crate::{Error, Result};

/// Relative agreement demanded between the analytic derivative and the
/// central finite difference of the full solve pipeline.
pub const FD_REL_TOL: f64 = 1e-5;
/// Relaxed tolerance when the check degrades to one-sided at a boundary.
pub const FD_REL_TOL_ONE_SIDED: f64 = 1e-4;

/// The eight model parameters the threshold is differentiated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    MuX,
    SigmaX,
    LambdaX,
    MX,
    MuI,
    SigmaI,
    LambdaI,
    MI,
}

impl ParamId {
    pub const ALL: [ParamId; 8] = [
        ParamId::MuX,
        ParamId::SigmaX,
        ParamId::LambdaX,
        ParamId::MX,
        ParamId::MuI,
        ParamId::SigmaI,
        ParamId::LambdaI,
        ParamId::MI,
    ];

    /// Demand-side parameters also move the threshold through `h` and `A`.
    pub fn is_demand(&self) -> bool {
        matches!(
            self,
            ParamId::MuX | ParamId::SigmaX | ParamId::LambdaX | ParamId::MX
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            ParamId::MuX => "mu_X",
            ParamId::SigmaX => "sigma_X",
            ParamId::LambdaX => "lambda_X",
            ParamId::MX => "m_X",
            ParamId::MuI => "mu_I",
            ParamId::SigmaI => "sigma_I",
            ParamId::LambdaI => "lambda_I",
            ParamId::MI => "m_I",
        }
    }

    pub fn parse(s: &str) -> Option<ParamId> {
        Self::ALL.iter().copied().find(|p| p.name() == s)
    }
}

impl std::fmt::Display for ParamId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `Upsilon_alpha(x) = (1+x)^alpha - (alpha x + 1)` without domain checks.
#[inline]
pub fn upsilon_raw<S: Scalar>(alpha: S, x: S) -> S {
    (S::one() + x).powf(alpha) - (alpha * x + S::one())
}

/// Gap between the power curve and its tangent at zero. Positive for
/// `alpha > 1`, nonpositive for `0 < alpha <= 1`.
pub fn upsilon<S: Scalar>(alpha: S, x: S) -> Result<S> {
    if alpha <= S::zero() {
        return Err(Error::Domain(format!("upsilon needs alpha > 0, got {alpha}")));
    }
    if x <= -S::one() {
        return Err(Error::Domain(format!("upsilon needs x > -1, got {x}")));
    }
    Ok(upsilon_raw(alpha, x))
}

/// `Phi_alpha(x) = 1 - (1+x)^alpha`.
pub fn phi<S: Scalar>(alpha: S, x: S) -> Result<S> {
    if x <= -S::one() {
        return Err(Error::Domain(format!("phi needs x > -1, got {x}")));
    }
    Ok(S::one() - (S::one() + x).powf(alpha))
}

/// `Theta(r) = m_I (r - 1) + (1+m_I)^{1-r} - 1`, the sensitivity of the
/// characteristic function to the cost jump intensity. Requires a
/// deterministic cost jump size.
pub fn theta_fn<S: Scalar>(model: &Model<S>, r: S) -> Result<S> {
    let m = deterministic_jump(model, false)?;
    let one = S::one();
    Ok(m * (r - one) + (one + m).powf(one - r) - one)
}

fn deterministic_jump<S: Scalar>(model: &Model<S>, demand: bool) -> Result<S> {
    let (process, tag) = if demand {
        (&model.demand, "demand")
    } else {
        (&model.cost, "cost")
    };
    match process.jump {
        crate::jumps::JumpSizeSpec::Deterministic { m } => Ok(m),
        _ => Err(Error::UnsupportedAnalytic(format!(
            "analytic jump-parameter sensitivity needs a deterministic {tag} jump size; \
             use a numeric sweep instead"
        ))),
    }
}

/// Read the value a [`ParamId`] refers to.
pub fn get_param<S: Scalar>(model: &Model<S>, param: ParamId) -> Result<S> {
    Ok(match param {
        ParamId::MuX => model.demand.drift,
        ParamId::SigmaX => model.demand.volatility,
        ParamId::LambdaX => model.demand.jump_intensity,
        ParamId::MX => deterministic_jump(model, true)?,
        ParamId::MuI => model.cost.drift,
        ParamId::SigmaI => model.cost.volatility,
        ParamId::LambdaI => model.cost.jump_intensity,
        ParamId::MI => deterministic_jump(model, false)?,
    })
}

/// A copy of the model with one parameter replaced.
pub fn with_param<S: Scalar>(model: &Model<S>, param: ParamId, value: S) -> Result<Model<S>> {
    let mut out = model.clone();
    match param {
        ParamId::MuX => out.demand.drift = value,
        ParamId::SigmaX => out.demand.volatility = value,
        ParamId::LambdaX => out.demand.jump_intensity = value,
        ParamId::MX => {
            deterministic_jump(model, true)?;
            out.demand.jump = crate::jumps::JumpSizeSpec::Deterministic { m: value };
        }
        ParamId::MuI => out.cost.drift = value,
        ParamId::SigmaI => out.cost.volatility = value,
        ParamId::LambdaI => out.cost.jump_intensity = value,
        ParamId::MI => {
            deterministic_jump(model, false)?;
            out.cost.jump = crate::jumps::JumpSizeSpec::Deterministic { m: value };
        }
    }
    Ok(out)
}

/// Closed-form partial derivatives entering the threshold sensitivity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Partials<S> {
    /// `dh/dy`; zero for investment-side parameters (`h` ignores them).
    pub dh_dy: S,
    /// `dj/dy` evaluated at `r = r0`.
    pub dj_dy: S,
}

/// Closed-form `(dh/dy, dj/dy|r0)` for one parameter.
///
/// Jump-size and jump-intensity partials require the corresponding jump
/// law to be deterministic.
pub fn partials<S: Scalar>(
    model: &Model<S>,
    solution: &Solution<S>,
    param: ParamId,
) -> Result<Partials<S>> {
    let theta = model.market.elasticity;
    let r0 = solution.r0;
    let one = S::one();
    let zero = S::zero();
    let (dh_dy, dj_dy) = match param {
        ParamId::MuX => (-theta, theta * r0),
        ParamId::SigmaX => {
            let s = model.demand.volatility;
            (
                -theta * (theta - one) * s,
                theta * r0 * (theta * r0 - one) * s,
            )
        }
        ParamId::LambdaX => {
            let m = deterministic_jump(model, true)?;
            (-upsilon_raw(theta, m), upsilon_raw(theta * r0, m))
        }
        ParamId::MX => {
            let m = deterministic_jump(model, true)?;
            let lam = model.demand.jump_intensity;
            // d/dm of (1+m)^alpha pulls the exponent down by one
            (
                theta * lam * phi(theta - one, m)?,
                -theta * r0 * lam * phi(theta * r0 - one, m)?,
            )
        }
        ParamId::MuI => (zero, one - r0),
        ParamId::SigmaI => (zero, model.cost.volatility * r0 * (r0 - one)),
        ParamId::LambdaI => (zero, theta_fn(model, r0)?),
        ParamId::MI => {
            let m = deterministic_jump(model, false)?;
            let lam = model.cost.jump_intensity;
            (zero, lam * (r0 - one) * phi(-r0, m)?)
        }
    };
    Ok(Partials { dh_dy, dj_dy })
}

/// Local monotonicity classification at the current parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    Increasing,
    Decreasing,
    /// The derivative vanishes here (a turning point of the threshold).
    NonMonotonicAtThisPoint,
    /// No analytic result covers this parameter at these model values.
    NotClassified,
}

impl std::fmt::Display for SignClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SignClass::Increasing => "increasing",
            SignClass::Decreasing => "decreasing",
            SignClass::NonMonotonicAtThisPoint => "non-monotonic-at-this-point",
            SignClass::NotClassified => "not-classified",
        };
        f.write_str(s)
    }
}

/// Full sensitivity record for one parameter.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport<S> {
    pub param: ParamId,
    /// Analytic `dq*/dy`.
    pub derivative: S,
    /// `Delta = j'(r0) > 0`.
    pub delta: S,
    pub dh_dy: S,
    pub dj_dy: S,
    /// Finite-difference estimate of `dq*/dy`; absent when neither
    /// perturbed model is admissible.
    pub fd_estimate: Option<S>,
    /// Relative gap between analytic and finite-difference values.
    pub fd_rel_gap: Option<S>,
    /// True when the check had to degrade to a one-sided difference.
    pub fd_one_sided: bool,
    pub sign_class: SignClass,
}

/// Analytic threshold sensitivity with a finite-difference cross-check.
pub fn dqstar_dy<S: Scalar>(
    model: &Model<S>,
    solution: &Solution<S>,
    param: ParamId,
) -> Result<SensitivityReport<S>> {
    let delta = solver::j_derivative(model, solution.r0);
    let p = partials(model, solution, param)?;
    let r0 = solution.r0;
    let one = S::one();
    let kd = model.kappa_diff();
    let common = one / (delta * kd * solution.perpetuity * (r0 - one) * (r0 - one));
    let derivative = if param.is_demand() {
        let chain =
            delta * r0 * (r0 - one) * (model.market.lag * solution.h + one) / solution.h;
        common * (chain * p.dh_dy + p.dj_dy)
    } else {
        common * p.dj_dy
    };

    // central finite difference of the full solve, degrading to one-sided
    // when a perturbation leaves the admissible region
    let y0 = get_param(model, param)?;
    let eps = c::<S>(1e-6) * y0.abs().max(one);
    let qstar_at = |value: S| -> Option<S> {
        let probe = with_param(model, param, value).ok()?;
        match model::validate(&probe) {
            Ok(report) if report.valid => solver::solve(&probe).ok().map(|s| s.qstar),
            _ => None,
        }
    };
    let plus = qstar_at(y0 + eps);
    let minus = qstar_at(y0 - eps);
    let (fd_estimate, fd_one_sided) = match (plus, minus) {
        (Some(qp), Some(qm)) => (Some((qp - qm) / (c::<S>(2.0) * eps)), false),
        (Some(qp), None) => (Some((qp - solution.qstar) / eps), true),
        (None, Some(qm)) => (Some((solution.qstar - qm) / eps), true),
        (None, None) => (None, false),
    };
    let fd_rel_gap = fd_estimate.map(|fd| {
        let scale = fd.abs().max(derivative.abs());
        if scale < c(1e-10) {
            S::zero()
        } else {
            (fd - derivative).abs() / scale
        }
    });

    let sign_class = classify(model, solution, param, derivative);

    Ok(SensitivityReport {
        param,
        derivative,
        delta,
        dh_dy: p.dh_dy,
        dj_dy: p.dj_dy,
        fd_estimate,
        fd_rel_gap,
        fd_one_sided,
        sign_class,
    })
}

fn classify<S: Scalar>(
    model: &Model<S>,
    solution: &Solution<S>,
    param: ParamId,
    derivative: S,
) -> SignClass {
    let prediction = predict(model, solution, param);
    let from_prediction = match prediction {
        SignPrediction::Increasing => Some(SignClass::Increasing),
        SignPrediction::Decreasing => Some(SignClass::Decreasing),
        SignPrediction::Piecewise(ref pieces) => {
            let y = match get_param(model, param) {
                Ok(y) => y,
                Err(_) => return SignClass::NotClassified,
            };
            let inside = pieces.iter().find(|(iv, _)| iv.contains(y));
            match inside {
                Some((_, Monotonicity::Increasing)) => Some(SignClass::Increasing),
                Some((_, Monotonicity::Decreasing)) => Some(SignClass::Decreasing),
                // between pieces: either a turning point or outside scope
                None if derivative.abs() <= c(1e-12) => {
                    Some(SignClass::NonMonotonicAtThisPoint)
                }
                None => None,
            }
        }
        SignPrediction::NotClassified => None,
    };
    from_prediction.unwrap_or({
        if derivative > c(1e-12) {
            SignClass::Increasing
        } else if derivative < c(-1e-12) {
            SignClass::Decreasing
        } else {
            SignClass::NonMonotonicAtThisPoint
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// Global monotonicity claim for one parameter, when the analysis covers it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SignPrediction<S> {
    Increasing,
    Decreasing,
    NotClassified,
    /// The threshold is monotone piecewise; intervals are in the
    /// parameter's own coordinates.
    Piecewise(Vec<(Interval<S>, Monotonicity)>),
}

impl<S: Scalar> SignPrediction<S> {
    pub fn describe(&self) -> String {
        match self {
            SignPrediction::Increasing => "increasing".into(),
            SignPrediction::Decreasing => "decreasing".into(),
            SignPrediction::NotClassified => "not-classified".into(),
            SignPrediction::Piecewise(pieces) => pieces
                .iter()
                .map(|(iv, m)| {
                    let dir = match m {
                        Monotonicity::Increasing => "increasing",
                        Monotonicity::Decreasing => "decreasing",
                    };
                    format!("{dir} on ({}, {})", iv.lo, iv.hi)
                })
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

fn predict<S: Scalar>(
    model: &Model<S>,
    solution: &Solution<S>,
    param: ParamId,
) -> SignPrediction<S> {
    let theta = model.market.elasticity;
    let one = S::one();
    // the demand results are proved for 1/r0 <= theta <= 1 only
    let demand_in_scope = theta >= one / solution.r0 && theta <= one;
    match param {
        ParamId::MuX => SignPrediction::NotClassified,
        ParamId::SigmaX | ParamId::LambdaX => {
            if demand_in_scope {
                SignPrediction::Increasing
            } else {
                SignPrediction::NotClassified
            }
        }
        ParamId::MX => {
            if !demand_in_scope
                || !model.demand.jump.is_deterministic()
                || model.demand.jump_intensity <= S::zero()
            {
                return SignPrediction::NotClassified;
            }
            let d = match model::demand_d(model) {
                Ok(d) => d,
                Err(_) => return SignPrediction::NotClassified,
            };
            m_x_prediction(theta, d)
        }
        ParamId::MuI => SignPrediction::Decreasing,
        ParamId::SigmaI => SignPrediction::Increasing,
        ParamId::LambdaI => match deterministic_jump(model, false) {
            Ok(m) if m != S::zero() => SignPrediction::Increasing,
            _ => SignPrediction::NotClassified,
        },
        ParamId::MI => {
            if model.cost.jump_intensity > S::zero() && model.cost.jump.is_deterministic() {
                SignPrediction::Piecewise(vec![
                    (Interval::new(-one, S::zero()), Monotonicity::Decreasing),
                    (Interval::new(S::zero(), S::infinity()), Monotonicity::Increasing),
                ])
            } else {
                SignPrediction::NotClassified
            }
        }
    }
}

fn m_x_prediction<S: Scalar>(theta: S, d: S) -> SignPrediction<S> {
    let one = S::one();
    if theta == one {
        return if d > S::zero() {
            SignPrediction::Piecewise(vec![
                (Interval::new(-one, S::zero()), Monotonicity::Decreasing),
                (Interval::new(S::zero(), S::infinity()), Monotonicity::Increasing),
            ])
        } else {
            SignPrediction::NotClassified
        };
    }
    let Ok((xi1, xi2)) = model::xi_roots(theta, d) else {
        return SignPrediction::NotClassified;
    };
    if d > S::zero() {
        SignPrediction::Piecewise(vec![
            (Interval::new(-one, S::zero()), Monotonicity::Decreasing),
            (Interval::new(S::zero(), S::infinity()), Monotonicity::Increasing),
        ])
    } else if d > theta - one {
        // theta - 1 < D <= 0
        match (xi1, xi2) {
            (Some(x1), Some(x2)) => SignPrediction::Piecewise(vec![
                (Interval::new(-one, x1), Monotonicity::Decreasing),
                (Interval::new(x2, S::infinity()), Monotonicity::Increasing),
            ]),
            _ => SignPrediction::NotClassified,
        }
    } else {
        match xi2 {
            Some(x2) => SignPrediction::Piecewise(vec![(
                Interval::new(x2, S::infinity()),
                Monotonicity::Increasing,
            )]),
            None => SignPrediction::NotClassified,
        }
    }
}

/// Predicted sign (or case description) for every parameter.
pub fn sign_table<S: Scalar>(
    model: &Model<S>,
    solution: &Solution<S>,
) -> Vec<(ParamId, SignPrediction<S>)> {
    ParamId::ALL
        .iter()
        .map(|&p| (p, predict(model, solution, p)))
        .collect()
}

/// One row of a numeric parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow<S> {
    pub value: S,
    pub h: S,
    pub r0: Option<S>,
    pub qstar: Option<S>,
    pub admissible: bool,
    /// "admissible", the violated classification, or a structural message.
    pub flag: String,
}

/// Re-solve the model across a list of parameter values. Inadmissible rows
/// are flagged instead of failing; output order follows the input.
pub fn sweep<S: Scalar>(model: &Model<S>, param: ParamId, values: &[S]) -> Vec<SweepRow<S>> {
    values
        .par_iter()
        .map(|&value| {
            let probe = match with_param(model, param, value) {
                Ok(p) => p,
                Err(e) => {
                    return SweepRow {
                        value,
                        h: S::nan(),
                        r0: None,
                        qstar: None,
                        admissible: false,
                        flag: format!("error: {e}"),
                    }
                }
            };
            let h = solver::compute_h(&probe);
            match model::validate(&probe) {
                Ok(report) if report.valid => match solver::solve(&probe) {
                    Ok(sol) => SweepRow {
                        value,
                        h,
                        r0: Some(sol.r0),
                        qstar: Some(sol.qstar),
                        admissible: true,
                        flag: "admissible".into(),
                    },
                    Err(e) => SweepRow {
                        value,
                        h,
                        r0: None,
                        qstar: None,
                        admissible: false,
                        flag: format!("error: {e}"),
                    },
                },
                Ok(report) => SweepRow {
                    value,
                    h,
                    r0: None,
                    qstar: None,
                    admissible: false,
                    flag: report.classification.to_string(),
                },
                Err(e) => SweepRow {
                    value,
                    h,
                    r0: None,
                    qstar: None,
                    admissible: false,
                    flag: format!("error: {e}"),
                },
            }
        })
        .collect()
}

/// Convenience: full sensitivity reports for all eight parameters.
pub fn all_sensitivities<S: Scalar>(
    model: &Model<S>,
    solution: &Solution<S>,
) -> Vec<Result<SensitivityReport<S>>> {
    ParamId::ALL
        .iter()
        .map(|&p| dqstar_dy(model, solution, p))
        .collect()
}

#[allow(unused)]
fn classification_str(c: Classification) -> String {
    c.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::JumpSizeSpec;
    use crate::testmodels::{m0, m0_with_jumps};

    #[test]
    fn upsilon_basics() {
        for alpha in [0.3f64, 1.0, 2.0, 5.0] {
            assert_eq!(upsilon(alpha, 0.0).unwrap(), 0.0);
        }
        assert!((upsilon::<f64>(2.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        // limit at the left edge of the domain is alpha - 1
        assert!((upsilon::<f64>(2.5, -1.0 + 1e-13).unwrap() - 1.5).abs() < 1e-9);
        assert!(upsilon::<f64>(2.0, -1.0).is_err());
        assert!(upsilon::<f64>(0.0, 0.5).is_err());
        // sign law on a grid
        for &x in &[-0.9, -0.3, 0.2, 1.0, 7.0] {
            assert!(upsilon(1.7, x).unwrap() > 0.0, "alpha > 1 at {x}");
            assert!(upsilon(0.6, x).unwrap() <= 0.0, "alpha <= 1 at {x}");
        }
    }

    #[test]
    fn phi_basics() {
        assert_eq!(phi::<f64>(3.0, 0.0).unwrap(), 0.0);
        assert!((phi::<f64>(2.0, 1.0).unwrap() + 3.0).abs() < 1e-15);
        assert!((phi::<f64>(-1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(phi::<f64>(2.0, -1.5).is_err());
    }

    #[test]
    fn theta_fn_basics() {
        let mut model = m0();
        model.cost.jump = JumpSizeSpec::Deterministic { m: 0.5 };
        assert!(theta_fn(&model, 0.0).unwrap().abs() < 1e-15);
        assert!(theta_fn(&model, 1.0).unwrap().abs() < 1e-15);
        assert!((theta_fn(&model, 2.0).unwrap() - (0.5 + 1.0 / 1.5 - 1.0)).abs() < 1e-12);
        // strict convexity via second differences
        let g = |r: f64| theta_fn(&model, r).unwrap();
        for k in 0..20 {
            let r = -1.0 + 0.3 * k as f64;
            assert!(g(r - 0.1) + g(r + 0.1) - 2.0 * g(r) > 0.0);
        }
        // positive past r = 1 when m_I != 0
        for r in [1.2, 2.0, 5.0] {
            assert!(g(r) > 0.0);
        }
        model.cost.jump = JumpSizeSpec::LogFactor { a: 0.0, b: 0.1 };
        assert!(matches!(
            theta_fn(&model, 2.0),
            Err(Error::UnsupportedAnalytic(_))
        ));
    }

    #[test]
    fn partials_match_finite_differences() {
        let model = m0_with_jumps();
        let solution = solver::solve(&model).unwrap();
        let eps = 1e-6;
        for param in ParamId::ALL {
            let p = partials(&model, &solution, param).unwrap();
            let y0 = get_param(&model, param).unwrap();
            let fd = |f: &dyn Fn(&Model<f64>) -> f64| {
                let hi = with_param(&model, param, y0 + eps).unwrap();
                let lo = with_param(&model, param, y0 - eps).unwrap();
                (f(&hi) - f(&lo)) / (2.0 * eps)
            };
            let dh_fd = fd(&|m| solver::compute_h(m));
            let dj_fd = fd(&|m| solver::j_eval(m, solution.r0));
            assert!(
                (dh_fd - p.dh_dy).abs() <= 1e-7 * p.dh_dy.abs().max(1.0),
                "{param}: dh {dh_fd} vs {}",
                p.dh_dy
            );
            assert!(
                (dj_fd - p.dj_dy).abs() <= 1e-7 * p.dj_dy.abs().max(1.0),
                "{param}: dj {dj_fd} vs {}",
                p.dj_dy
            );
        }
    }

    #[test]
    fn partials_spec_anchors() {
        let model = m0();
        let solution = solver::solve(&model).unwrap();
        let p = partials(&model, &solution, ParamId::MuX).unwrap();
        assert!((p.dh_dy + 1.0).abs() < 1e-15); // -theta
        assert!((p.dj_dy - solution.r0).abs() < 1e-12); // theta r0
        let p = partials(&model, &solution, ParamId::MuI).unwrap();
        assert!((p.dj_dy - (1.0 - solution.r0)).abs() < 1e-12);
        assert!((p.dj_dy + 0.6916473).abs() < 1e-6);

        // m_I partial vanishes at m_I = 0
        let mut jumpy = m0();
        jumpy.cost.jump_intensity = 0.4;
        let solution = solver::solve(&jumpy).unwrap();
        let p = partials(&jumpy, &solution, ParamId::MI).unwrap();
        assert_eq!(p.dj_dy, 0.0);
    }

    #[test]
    fn sensitivity_mu_i_anchor() {
        let model = m0();
        let solution = solver::solve(&model).unwrap();
        let report = dqstar_dy(&model, &solution, ParamId::MuI).unwrap();
        assert!((report.derivative + 0.8069801).abs() < 1e-4, "{}", report.derivative);
        assert!(report.delta > 0.0);
        assert!((report.delta - 0.0895824).abs() < 1e-6);
        assert_eq!(report.sign_class, SignClass::Decreasing);
        assert!(!report.fd_one_sided);
        assert!(report.fd_rel_gap.unwrap() <= FD_REL_TOL);
    }

    #[test]
    fn sensitivity_fd_agreement_all_params() {
        let model = m0_with_jumps();
        let solution = solver::solve(&model).unwrap();
        for param in ParamId::ALL {
            let report = dqstar_dy(&model, &solution, param).unwrap();
            assert!(report.delta > 0.0);
            let tol = if report.fd_one_sided {
                FD_REL_TOL_ONE_SIDED
            } else {
                FD_REL_TOL
            };
            assert!(
                report.fd_rel_gap.expect("fd available") <= tol,
                "{param}: gap {:?}",
                report.fd_rel_gap
            );
        }
    }

    #[test]
    fn sigma_i_increases_threshold() {
        let model = m0_with_jumps();
        let solution = solver::solve(&model).unwrap();
        let report = dqstar_dy(&model, &solution, ParamId::SigmaI).unwrap();
        assert!(report.derivative > 0.0);
        assert_eq!(report.sign_class, SignClass::Increasing);
    }

    #[test]
    fn m_i_turning_point_at_zero() {
        let mut model = m0();
        model.cost.jump_intensity = 0.4;
        let solution = solver::solve(&model).unwrap();
        let report = dqstar_dy(&model, &solution, ParamId::MI).unwrap();
        assert!(report.derivative.abs() < 1e-12);
        assert_eq!(report.sign_class, SignClass::NonMonotonicAtThisPoint);

        // either side of zero the predicted direction matches the derivative
        for (m, expected) in [(-0.2, SignClass::Decreasing), (0.2, SignClass::Increasing)] {
            let shifted = with_param(&model, ParamId::MI, m).unwrap();
            let sol = solver::solve(&shifted).unwrap();
            let rep = dqstar_dy(&shifted, &sol, ParamId::MI).unwrap();
            assert_eq!(rep.sign_class, expected, "m_I = {m}");
            match expected {
                SignClass::Decreasing => assert!(rep.derivative < 0.0),
                _ => assert!(rep.derivative > 0.0),
            }
        }
    }

    #[test]
    fn sign_table_scope() {
        let model = m0();
        let solution = solver::solve(&model).unwrap();
        let table = sign_table(&model, &solution);
        let get = |p: ParamId| {
            table
                .iter()
                .find(|(q, _)| *q == p)
                .map(|(_, s)| s.clone())
                .unwrap()
        };
        // theta = 1 with 1/r0 < 1: demand volatility row in scope
        assert_eq!(get(ParamId::SigmaX), SignPrediction::Increasing);
        let rep = dqstar_dy(&model, &solution, ParamId::SigmaX).unwrap();
        assert!(rep.derivative > 0.0);
        assert_eq!(get(ParamId::MuX), SignPrediction::NotClassified);
        assert_eq!(get(ParamId::MuI), SignPrediction::Decreasing);

        // out of the proposition's scope for theta > 1
        let mut steep = m0();
        steep.market.elasticity = 1.5;
        steep.demand.drift = 0.02; // keep admissible
        let sol = solver::solve(&steep).unwrap();
        let table = sign_table(&steep, &sol);
        for (p, s) in table {
            if matches!(p, ParamId::SigmaX | ParamId::LambdaX | ParamId::MX) {
                assert_eq!(s, SignPrediction::NotClassified, "{p}");
            }
        }
    }

    #[test]
    fn sweep_mu_i_monotone() {
        let model = m0();
        let rows = sweep(
            &model,
            ParamId::MuI,
            &[0.0, 0.02, 0.04, 0.06, 0.08, 0.12],
        );
        let qs: Vec<f64> = rows.iter().filter_map(|r| r.qstar).collect();
        assert_eq!(qs.len(), 5);
        for w in qs.windows(2) {
            assert!(w[1] < w[0], "q* should decrease with mu_I");
        }
        assert!(!rows[5].admissible);
        assert_eq!(rows[5].flag, "invest-immediately");
    }

    #[test]
    fn sweep_m_x_u_shape() {
        let mut model = m0();
        model.demand.jump_intensity = 0.5;
        let values: Vec<f64> = (-5..=10).map(|k| k as f64 * 0.1).collect();
        let rows = sweep(&model, ParamId::MX, &values);
        assert!(rows.iter().all(|r| r.admissible));
        let qs: Vec<f64> = rows.iter().map(|r| r.qstar.unwrap()).collect();
        let min_idx = qs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(values[min_idx], 0.0, "minimum of q* at m_X = 0");
        for w in qs[..=min_idx].windows(2) {
            assert!(w[1] <= w[0]);
        }
        for w in qs[min_idx..].windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn investment_sensitivities_scale_with_kappa() {
        let model = m0_with_jumps();
        let solution = solver::solve(&model).unwrap();
        let mut wide = model.clone();
        wide.market.kappa1 = wide.market.kappa0 + 2.0 * model.kappa_diff();
        let sol_wide = solver::solve(&wide).unwrap();
        for param in [ParamId::MuI, ParamId::SigmaI, ParamId::LambdaI, ParamId::MI] {
            let d1 = dqstar_dy(&model, &solution, param).unwrap().derivative;
            let d2 = dqstar_dy(&wide, &sol_wide, param).unwrap().derivative;
            assert!(
                (d2 - d1 / 2.0).abs() <= 1e-12 * d1.abs().max(1.0),
                "{param}: {d1} vs {d2}"
            );
        }
    }

    #[test]
    fn random_jump_specs_refuse_analytic_jump_partials() {
        let mut model = m0();
        model.demand.jump_intensity = 0.3;
        model.demand.jump = JumpSizeSpec::LogFactor { a: 0.0, b: 0.1 };
        let solution = solver::solve(&model).unwrap();
        assert!(matches!(
            dqstar_dy(&model, &solution, ParamId::MX),
            Err(Error::UnsupportedAnalytic(_))
        ));
        assert!(matches!(
            dqstar_dy(&model, &solution, ParamId::LambdaX),
            Err(Error::UnsupportedAnalytic(_))
        ));
        // drift and volatility partials stay available
        assert!(dqstar_dy(&model, &solution, ParamId::MuX).is_ok());
        assert!(dqstar_dy(&model, &solution, ParamId::SigmaX).is_ok());
    }
}
