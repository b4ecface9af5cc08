//! Problem parameterization and admissibility.
//!
//! A [`Model`] bundles the demand process, the investment-cost process and
//! the market/profit parameters. Admissibility means the discount rate
//! dominates the cost drift (`rho > mu_I`) and the perpetuity rate of the
//! profit difference is positive (`h > 0`); outside that region the problem
//! is either trivial (invest immediately) or divergent.

use serde::{Deserialize, Serialize};

use crate::jumps::JumpSizeSpec;
use crate::scalar::{c, Scalar};
use crate::solver;
use crate::statics::upsilon_raw;
use crate::{Error, Result};

/// One jump-diffusion factor: GBM continuous part plus compound Poisson
/// multiplicative jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessParams<S> {
    /// Drift of the continuous part, per unit time.
    #[serde(rename = "mu")]
    pub drift: S,
    /// Volatility of the continuous part, per sqrt(unit time).
    #[serde(rename = "sigma")]
    pub volatility: S,
    /// Poisson jump intensity, per unit time.
    #[serde(rename = "lambda")]
    pub jump_intensity: S,
    /// Law of the jump percentage `U` (support above -1).
    pub jump: JumpSizeSpec<S>,
    /// Initial level, strictly positive.
    pub initial: S,
}

impl<S: Scalar> ProcessParams<S> {
    /// Mean jump size `m = E[U]`.
    pub fn mean_jump(&self) -> S {
        self.jump.mean_jump()
    }

    fn check(&self, tag: &str, problems: &mut Vec<String>) {
        if !self.drift.is_finite() {
            problems.push(format!("{tag}: drift must be finite"));
        }
        // sigma = 0 is allowed so the one-factor degenerate cases stay
        // expressible; the diffusion still needs to be finite.
        if !self.volatility.is_finite() || self.volatility < S::zero() {
            problems.push(format!(
                "{tag}: volatility {} must be finite and >= 0",
                self.volatility
            ));
        }
        if !self.jump_intensity.is_finite() || self.jump_intensity < S::zero() {
            problems.push(format!(
                "{tag}: jump intensity {} must be finite and >= 0",
                self.jump_intensity
            ));
        }
        if !self.initial.is_finite() || self.initial <= S::zero() {
            problems.push(format!(
                "{tag}: initial value {} must be finite and > 0",
                self.initial
            ));
        }
        if let Err(e) = self.jump.check() {
            problems.push(format!("{tag}: {e}"));
        }
    }
}

/// Discounting and isoelastic-profit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams<S> {
    /// Risk-neutral discount rate.
    #[serde(rename = "rho")]
    pub discount_rate: S,
    /// Demand elasticity of the profit function.
    #[serde(rename = "theta")]
    pub elasticity: S,
    /// Profit coefficient before investment.
    pub kappa0: S,
    /// Profit coefficient after investment; `kappa1 > kappa0`.
    pub kappa1: S,
    /// Time-to-build lag between the decision and the enhanced profit flow.
    #[serde(rename = "n")]
    pub lag: S,
}

impl<S: Scalar> MarketParams<S> {
    /// Profit-difference coefficient `kappa1 - kappa0`.
    pub fn kappa_diff(&self) -> S {
        self.kappa1 - self.kappa0
    }

    fn check(&self, problems: &mut Vec<String>) {
        if !self.discount_rate.is_finite() || self.discount_rate <= S::zero() {
            problems.push(format!("market: rho {} must be > 0", self.discount_rate));
        }
        if !self.elasticity.is_finite() || self.elasticity <= S::zero() {
            problems.push(format!("market: theta {} must be > 0", self.elasticity));
        }
        if !self.kappa0.is_finite() || self.kappa0 <= S::zero() {
            problems.push(format!("market: kappa0 {} must be > 0", self.kappa0));
        }
        if !self.kappa1.is_finite() || self.kappa1 <= self.kappa0 {
            problems.push(format!(
                "market: kappa1 {} must exceed kappa0 {}",
                self.kappa1, self.kappa0
            ));
        }
        if !self.lag.is_finite() || self.lag < S::zero() {
            problems.push(format!("market: lag n {} must be >= 0", self.lag));
        }
    }
}

/// The full problem: independent demand and cost processes plus the market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model<S> {
    pub demand: ProcessParams<S>,
    pub cost: ProcessParams<S>,
    pub market: MarketParams<S>,
}

impl<S: Scalar> Model<S> {
    /// Structural validity: every parameter in its admissible range,
    /// independent of the cross-parameter admissibility conditions.
    pub fn check_structural(&self) -> Result<()> {
        let mut problems = Vec::new();
        self.demand.check("demand", &mut problems);
        self.cost.check("cost", &mut problems);
        self.market.check(&mut problems);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Structural(problems.join("; ")))
        }
    }

    /// Shorthand for `kappa1 - kappa0`.
    pub fn kappa_diff(&self) -> S {
        self.market.kappa_diff()
    }

    /// Initial value of the reduced state `q = x^theta / i`.
    pub fn initial_q(&self) -> S {
        self.demand.initial.powf(self.market.elasticity) / self.cost.initial
    }
}

/// Why a structurally valid model is not admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Admissible,
    /// `rho <= mu_I`: waiting is never rewarded, invest at t = 0.
    InvestImmediately,
    /// `h <= 0`: the profit perpetuity diverges and the characteristic
    /// root drops to `r0 <= 1` (`j(1) = -h`).
    Diverging,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Admissible => "admissible",
            Classification::InvestImmediately => "invest-immediately",
            Classification::Diverging => "diverging",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation<S> {
    pub rule: &'static str,
    pub message: String,
    pub value: S,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport<S> {
    pub valid: bool,
    pub violations: Vec<Violation<S>>,
    pub classification: Classification,
}

/// Classify a structurally valid model against the admissibility conditions.
///
/// Structural problems (negative volatility, `kappa1 <= kappa0`, ...) are
/// hard errors; only the admissibility conditions become report entries.
pub fn validate<S: Scalar>(model: &Model<S>) -> Result<ValidationReport<S>> {
    model.check_structural()?;

    let rho = model.market.discount_rate;
    let mu_i = model.cost.drift;
    let h = solver::compute_h(model);

    let mut violations = Vec::new();
    if rho <= mu_i {
        violations.push(Violation {
            rule: "rho-gt-mu_I",
            message: format!("rho = {rho} <= mu_I = {mu_i}: invest immediately"),
            value: mu_i,
        });
    }
    if h <= S::zero() {
        violations.push(Violation {
            rule: "h-positive",
            message: format!("h = {h} <= 0: the profit perpetuity diverges"),
            value: h,
        });
    }

    let classification = if rho <= mu_i {
        Classification::InvestImmediately
    } else if h <= S::zero() {
        Classification::Diverging
    } else {
        Classification::Admissible
    };
    Ok(ValidationReport {
        valid: violations.is_empty(),
        violations,
        classification,
    })
}

/// Ensure the model is admissible, turning a report into an error.
pub fn require_admissible<S: Scalar>(model: &Model<S>) -> Result<()> {
    let report = validate(model)?;
    if report.valid {
        Ok(())
    } else {
        Err(Error::Inadmissible(format!("{}", report.classification)))
    }
}

/// Open interval `(lo, hi)`; infinite endpoints mean unbounded sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: S) -> bool {
        x > self.lo && x < self.hi
    }
}

/// Admissible set for one parameter with the others held fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ParamDomain<S> {
    /// Admissibility does not depend on this parameter.
    Unconstrained,
    Interval(Interval<S>),
    /// Union of disjoint intervals (at most two arise here).
    Union(Vec<Interval<S>>),
    /// No admissible value exists with the other parameters fixed.
    Empty,
}

impl<S: Scalar> ParamDomain<S> {
    pub fn contains(&self, x: S) -> bool {
        match self {
            ParamDomain::Unconstrained => true,
            ParamDomain::Interval(iv) => iv.contains(x),
            ParamDomain::Union(ivs) => ivs.iter().any(|iv| iv.contains(x)),
            ParamDomain::Empty => false,
        }
    }

    /// Finite endpoints, for boundary round-trip checks.
    pub fn finite_endpoints(&self) -> Vec<S> {
        let mut out = Vec::new();
        let mut push = |iv: &Interval<S>| {
            if iv.lo.is_finite() {
                out.push(iv.lo);
            }
            if iv.hi.is_finite() {
                out.push(iv.hi);
            }
        };
        match self {
            ParamDomain::Interval(iv) => push(iv),
            ParamDomain::Union(ivs) => ivs.iter().for_each(push),
            _ => {}
        }
        out
    }
}

/// Admissible region of each demand parameter under `h > 0`,
/// all other parameters held fixed.
#[derive(Debug, Clone, Serialize)]
pub struct DomainBounds<S> {
    pub mu_x: ParamDomain<S>,
    pub sigma_x: ParamDomain<S>,
    pub lambda_x: ParamDomain<S>,
    pub m_x: ParamDomain<S>,
}

/// `D`: the demand-jump admissibility ratio. `h > 0` is equivalent to
/// `Upsilon_theta(m_X) < D` when `lambda_X > 0`.
pub fn demand_d<S: Scalar>(model: &Model<S>) -> Result<S> {
    let lam = model.demand.jump_intensity;
    if lam <= S::zero() {
        return Err(Error::Domain(
            "D is undefined when lambda_X = 0".into(),
        ));
    }
    Ok(jump_free_margin(model) / lam)
}

/// `rho - (mu_X + (theta-1) sigma_X^2 / 2) theta`: the slack in the
/// condition `h > 0` before the jump terms enter.
fn jump_free_margin<S: Scalar>(model: &Model<S>) -> S {
    let theta = model.market.elasticity;
    let mu = model.demand.drift;
    let s2 = model.demand.volatility * model.demand.volatility;
    model.market.discount_rate - (mu + (theta - S::one()) * s2 / c(2.0)) * theta
}

/// Per-parameter admissible regions for the demand process under `h > 0`.
///
/// Requires a deterministic demand jump law; the case analysis for the jump
/// size has no analytic counterpart for random jump laws.
pub fn demand_domain<S: Scalar>(model: &Model<S>) -> Result<DomainBounds<S>> {
    model.check_structural()?;
    let m = match model.demand.jump {
        JumpSizeSpec::Deterministic { m } => m,
        _ => {
            return Err(Error::UnsupportedAnalytic(
                "demand domain bounds require a deterministic demand jump size".into(),
            ))
        }
    };

    let theta = model.market.elasticity;
    let one = S::one();
    let two = c::<S>(2.0);
    let rho = model.market.discount_rate;
    let mu = model.demand.drift;
    let sigma = model.demand.volatility;
    let s2 = sigma * sigma;
    let lam = model.demand.jump_intensity;
    let jump_excess = (one + m).powf(theta) - one;

    // mu_X: always a one-sided upper bound.
    let mu_hi =
        (rho - ((theta - one) * s2 / two - lam * m) * theta - lam * jump_excess) / theta;
    let mu_x = ParamDomain::Interval(Interval::new(S::neg_infinity(), mu_hi));

    // sigma_X: h does not depend on sigma_X at theta = 1.
    let sigma_x = if theta == one {
        ParamDomain::Unconstrained
    } else {
        let inner = two / (theta * (theta - one))
            * (rho - (mu - lam * m) * theta - lam * jump_excess);
        let b = inner.max(S::zero()).sqrt();
        if theta > one {
            if b > S::zero() {
                ParamDomain::Interval(Interval::new(S::zero(), b))
            } else {
                ParamDomain::Empty
            }
        } else {
            ParamDomain::Interval(Interval::new(b, S::infinity()))
        }
    };

    // lambda_X: bound C = max{0, margin / Upsilon_theta(m_X)}.
    let margin = jump_free_margin(model);
    let ups = upsilon_raw(theta, m);
    let lambda_x = if ups == S::zero() {
        // theta = 1 or m_X = 0: the jump terms cancel out of h.
        if margin > S::zero() {
            ParamDomain::Unconstrained
        } else {
            ParamDomain::Empty
        }
    } else {
        let cbound = (margin / ups).max(S::zero());
        if theta > one {
            if cbound > S::zero() {
                ParamDomain::Interval(Interval::new(S::zero(), cbound))
            } else {
                ParamDomain::Empty
            }
        } else {
            ParamDomain::Interval(Interval::new(cbound, S::infinity()))
        }
    };

    // m_X: case analysis on D = margin / lambda_X.
    let m_x = if lam <= S::zero() {
        if margin > S::zero() {
            ParamDomain::Unconstrained
        } else {
            ParamDomain::Empty
        }
    } else {
        let d = margin / lam;
        m_x_domain(theta, d)?
    };

    Ok(DomainBounds {
        mu_x,
        sigma_x,
        lambda_x,
        m_x,
    })
}

fn m_x_domain<S: Scalar>(theta: S, d: S) -> Result<ParamDomain<S>> {
    let one = S::one();
    let neg_one = -one;
    if theta == one {
        return Ok(if d > S::zero() {
            ParamDomain::Interval(Interval::new(neg_one, S::infinity()))
        } else {
            ParamDomain::Empty
        });
    }
    let (xi1, xi2) = xi_roots(theta, d)?;
    if theta > one {
        if d <= S::zero() {
            Ok(ParamDomain::Empty)
        } else if d < theta - one {
            let (Some(x1), Some(x2)) = (xi1, xi2) else {
                return Err(Error::NoRoot(
                    "expected both xi roots for 0 < D < theta - 1".into(),
                ));
            };
            Ok(ParamDomain::Interval(Interval::new(x1, x2)))
        } else {
            let Some(x2) = xi2 else {
                return Err(Error::NoRoot("expected positive xi root for D > 0".into()));
            };
            Ok(ParamDomain::Interval(Interval::new(neg_one, x2)))
        }
    } else {
        // 0 < theta < 1
        if d <= theta - one {
            let Some(x2) = xi2 else {
                return Err(Error::NoRoot("expected positive xi root for D < 0".into()));
            };
            Ok(ParamDomain::Interval(Interval::new(x2, S::infinity())))
        } else if d < S::zero() {
            let (Some(x1), Some(x2)) = (xi1, xi2) else {
                return Err(Error::NoRoot(
                    "expected both xi roots for theta - 1 < D < 0".into(),
                ));
            };
            Ok(ParamDomain::Union(vec![
                Interval::new(neg_one, x1),
                Interval::new(x2, S::infinity()),
            ]))
        } else {
            Ok(ParamDomain::Interval(Interval::new(neg_one, S::infinity())))
        }
    }
}

const XI_RESIDUAL_TOL: f64 = 1e-12;
const XI_MAX_ITER: usize = 200;

/// Roots of `Upsilon_theta(x) = d` on `(-1, 0)` and `(0, +inf)`.
///
/// A branch without a root returns `None`. Found by bisection; the bracket
/// for the positive branch is expanded geometrically.
pub fn xi_roots<S: Scalar>(theta: S, d: S) -> Result<(Option<S>, Option<S>)> {
    let one = S::one();
    if theta <= S::zero() || theta == one {
        return Err(Error::Domain(format!(
            "xi_roots needs theta > 0 and theta != 1, got {theta}"
        )));
    }
    if d == S::zero() {
        // both roots collapse to the degenerate root at 0
        return Ok((None, None));
    }

    // Negative branch: Upsilon is monotone from theta - 1 (at -1) to 0.
    let boundary = theta - one;
    let neg_exists = if theta > one {
        d > S::zero() && d < boundary
    } else {
        d > boundary && d < S::zero()
    };
    let xi1 = if neg_exists {
        Some(bisect_upsilon(theta, d, -one, S::zero()))
    } else {
        None
    };

    // Positive branch: monotone from 0 towards +inf (theta > 1) or -inf.
    let pos_exists = if theta > one { d > S::zero() } else { d < S::zero() };
    let xi2 = if pos_exists {
        let mut hi = one;
        let mut guard = 0usize;
        loop {
            let v = upsilon_raw(theta, hi);
            let bracketed = if theta > one { v >= d } else { v <= d };
            if bracketed {
                break;
            }
            hi = hi * c(2.0);
            guard += 1;
            if guard > 60 {
                return Err(Error::NoRoot(format!(
                    "no positive xi bracket below {hi} for theta = {theta}, d = {d}"
                )));
            }
        }
        Some(bisect_upsilon(theta, d, S::zero(), hi))
    } else {
        None
    };

    Ok((xi1, xi2))
}

fn bisect_upsilon<S: Scalar>(theta: S, d: S, mut lo: S, mut hi: S) -> S {
    // residual sign at lo decides which half keeps the root
    let f = |x: S| upsilon_raw(theta, x) - d;
    let f_lo = f(lo);
    let tol = c::<S>(XI_RESIDUAL_TOL);
    let mut mid = (lo + hi) / c(2.0);
    for _ in 0..XI_MAX_ITER {
        mid = (lo + hi) / c(2.0);
        let fm = f(mid);
        if fm.abs() <= tol {
            return mid;
        }
        if (fm > S::zero()) == (f_lo > S::zero()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}
