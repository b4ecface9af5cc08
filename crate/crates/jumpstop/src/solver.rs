//! Closed-form solution of the optimal stopping problem.
//!
//! The two-dimensional problem collapses to the scalar state
//! `q = x^theta / i`. In the continuation region the value is
//! `f(q) = (q/q*)^{r0} / (r0 - 1)` where `r0 > 1` is the unique positive
//! root of the convex characteristic function `j`, and the threshold is
//! `q* = r0 / ((kappa1 - kappa0) A (r0 - 1))` with `A = e^{-h n} / h`.
//! Everything here is exact up to the root solve; [`Solution::hjb_residuals`]
//! and [`Solution::smooth_pasting_check`] certify the variational
//! inequalities numerically.

use crate::model::{self, Model};
use crate::scalar::{c, Scalar};
use crate::{Error, Result};

/// Residual target for the characteristic root. The solver normally lands
/// near machine precision; this is the acceptance ceiling.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;

const MAX_ROOT_ITER: usize = 200;
const MAX_BRACKET: f64 = 1.0995116e12; // 2^40

/// All derived closed-form quantities for one admissible model.
#[derive(Debug, Clone)]
pub struct Solution<S> {
    pub model: Model<S>,
    /// Effective perpetuity discount rate of the profit difference.
    pub h: S,
    /// Discounted perpetuity factor `A = e^{-h n} / h`.
    pub perpetuity: S,
    /// Positive root of the characteristic function; `r0 > 1`.
    pub r0: S,
    /// Investment threshold in the reduced state `q`.
    pub qstar: S,
    /// `|j(r0)|` actually achieved by the root solve.
    pub root_residual: S,
}

/// `h = rho - (mu_X + (theta-1) sigma_X^2/2 - lambda_X m_X) theta
///        - lambda_X (E[(1+U_X)^theta] - 1)`.
///
/// Only structural validity is needed; `validate` itself calls this.
pub fn compute_h<S: Scalar>(model: &Model<S>) -> S {
    let theta = model.market.elasticity;
    let x = &model.demand;
    let s2 = x.volatility * x.volatility;
    let m = x.mean_jump();
    model.market.discount_rate
        - (x.drift + (theta - S::one()) * s2 / c(2.0) - x.jump_intensity * m) * theta
        - x.jump_intensity * (x.jump.power_moment(theta) - S::one())
}

/// `A = e^{-h n} / h`; requires `h > 0`.
pub fn compute_a<S: Scalar>(h: S, lag: S) -> Result<S> {
    if h <= S::zero() {
        return Err(Error::DivergentPerpetuity(format!(
            "h = {h} <= 0: the profit perpetuity diverges"
        )));
    }
    Ok((-h * lag).exp() / h)
}

/// The characteristic function `j(r)` of the reduced process.
pub fn j_eval<S: Scalar>(model: &Model<S>, r: S) -> S {
    let theta = model.market.elasticity;
    let x = &model.demand;
    let i = &model.cost;
    let two = c::<S>(2.0);
    let sx2 = x.volatility * x.volatility;
    let si2 = i.volatility * i.volatility;
    let mx = x.mean_jump();
    let mi = i.mean_jump();

    let quad = (sx2 * theta * theta + si2) / two;
    // the cost leg enters through I^{1-r}, whose lognormal part contributes
    // -(mu_I + sigma_I^2/2) r to the exponent rate
    let lin = (x.drift - sx2 / two - x.jump_intensity * mx) * theta
        - (i.drift + si2 / two - i.jump_intensity * mi);
    let constant = (i.drift - i.jump_intensity * mi)
        - (x.jump_intensity + i.jump_intensity)
        - model.market.discount_rate;
    quad * r * r
        + lin * r
        + constant
        + x.jump_intensity * x.jump.power_moment(r * theta)
        + i.jump_intensity * i.jump.power_moment(S::one() - r)
}

/// Analytic `dj/dr`; strictly increasing since `j` is strictly convex.
pub fn j_derivative<S: Scalar>(model: &Model<S>, r: S) -> S {
    let theta = model.market.elasticity;
    let x = &model.demand;
    let i = &model.cost;
    let two = c::<S>(2.0);
    let sx2 = x.volatility * x.volatility;
    let si2 = i.volatility * i.volatility;
    let lin = (x.drift - sx2 / two - x.jump_intensity * x.mean_jump()) * theta
        - (i.drift + si2 / two - i.jump_intensity * i.mean_jump());
    (sx2 * theta * theta + si2) * r + lin
        + x.jump_intensity * theta * x.jump.power_moment_dk(r * theta)
        - i.jump_intensity * i.jump.power_moment_dk(S::one() - r)
}

/// Unique positive root of `j`; admissibility forces `r0 > 1`.
///
/// Brackets `[1, r_hi]` by doubling from 2 until `j(r_hi) > 0`, then runs
/// Newton safeguarded by the bracket (a Newton step leaving the bracket is
/// replaced by bisection). Convexity keeps the bracket valid throughout.
pub fn find_r0<S: Scalar>(model: &Model<S>) -> Result<S> {
    model::require_admissible(model)?;

    let one = S::one();
    let mut lo = one; // j(1) = -h < 0 for admissible models
    let mut hi = c::<S>(2.0);
    loop {
        let v = j_eval(model, hi);
        if !v.is_finite() {
            return Err(Error::NumericRange(format!(
                "j({hi}) is not finite; parameters outside the representable range"
            )));
        }
        if v > S::zero() {
            break;
        }
        lo = hi;
        hi = hi * c(2.0);
        if hi > c(MAX_BRACKET) {
            return Err(Error::NoRoot(
                "no sign change of j below r = 2^40; parameters inconsistent".into(),
            ));
        }
    }

    let mut x = hi;
    for _ in 0..MAX_ROOT_ITER {
        let fx = j_eval(model, x);
        if !fx.is_finite() {
            return Err(Error::NumericRange(format!("j({x}) is not finite")));
        }
        if fx > S::zero() {
            hi = x;
        } else if fx < S::zero() {
            lo = x;
        } else {
            return Ok(x);
        }
        let dfx = j_derivative(model, x);
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = (lo + hi) / c(2.0);
        }
        if (next - x).abs() <= c::<S>(1e-15) * x.abs() {
            x = next;
            break;
        }
        x = next;
    }

    let residual = j_eval(model, x).abs();
    if residual <= c(ROOT_RESIDUAL_TOL) {
        Ok(x)
    } else {
        Err(Error::NoRoot(format!(
            "root solve stalled at r = {x} with |j(r)| = {residual}"
        )))
    }
}

/// Assemble the full closed-form [`Solution`] for an admissible model.
pub fn solve<S: Scalar>(model: &Model<S>) -> Result<Solution<S>> {
    let r0 = find_r0(model)?;
    let h = compute_h(model);
    let perpetuity = compute_a(h, model.market.lag)?;
    let kd = model.kappa_diff();
    let qstar = r0 / (kd * perpetuity * (r0 - S::one()));
    let root_residual = j_eval(model, r0).abs();

    // lower bound on the trigger from the U-set inclusion
    let floor = (model.market.discount_rate - model.cost.drift) / (kd * perpetuity * h);
    assert!(
        qstar >= floor * (S::one() - c(1e-12)),
        "trigger {qstar} below its admissible floor {floor}"
    );

    Ok(Solution {
        model: model.clone(),
        h,
        perpetuity,
        r0,
        qstar,
        root_residual,
    })
}

impl<S: Scalar> Solution<S> {
    /// Reduced-state value function, piecewise across the threshold.
    pub fn value_f(&self, q: S) -> Result<S> {
        if !(q > S::zero()) || !q.is_finite() {
            return Err(Error::Domain(format!("value_f needs q > 0, got {q}")));
        }
        if q < self.qstar {
            Ok((q / self.qstar).powf(self.r0) / (self.r0 - S::one()))
        } else {
            Ok(self.payoff_l(q))
        }
    }

    /// Stopping payoff in the reduced state: `l(q) = (k1 - k0) A q - 1`.
    pub fn payoff_l(&self, q: S) -> S {
        self.model.kappa_diff() * self.perpetuity * q - S::one()
    }

    /// Derivative of the continuation branch of `f`.
    pub fn value_f_prime_continuation(&self, q: S) -> S {
        let r0 = self.r0;
        r0 / ((r0 - S::one()) * self.qstar) * (q / self.qstar).powf(r0 - S::one())
    }

    /// Two-dimensional value `V(x, i) = i f(x^theta / i)`.
    pub fn value_v(&self, x: S, i: S) -> Result<S> {
        if !(x > S::zero()) || !(i > S::zero()) {
            return Err(Error::Domain(format!(
                "value_v needs x > 0 and i > 0, got ({x}, {i})"
            )));
        }
        let q = x.powf(self.model.market.elasticity) / i;
        Ok(i * self.value_f(q)?)
    }

    /// Value-matching and smooth-pasting gaps at the threshold:
    /// `(|f(q*-) - l(q*)|, |f'(q*-) - (k1 - k0) A|)`.
    pub fn smooth_pasting_check(&self) -> (S, S) {
        let value_gap = (S::one() / (self.r0 - S::one()) - self.payoff_l(self.qstar)).abs();
        let slope_target = self.model.kappa_diff() * self.perpetuity;
        let deriv_gap = (self.value_f_prime_continuation(self.qstar) - slope_target).abs();
        (value_gap, deriv_gap)
    }

    /// Minimum slacks of the two variational inequalities over a grid:
    /// `f - l` on the continuation side and the closed-form
    /// `(k1 - k0) A h q + (mu_I - rho)` on the stopping side.
    pub fn hjb_residuals(&self, grid: &[S]) -> Result<(S, S)> {
        let mut cont = S::infinity();
        let mut stop = S::infinity();
        let kd = self.model.kappa_diff();
        let gap = self.model.cost.drift - self.model.market.discount_rate;
        for &q in grid {
            if !(q > S::zero()) {
                return Err(Error::Domain(format!("hjb grid point {q} must be > 0")));
            }
            if q < self.qstar {
                cont = cont.min(self.value_f(q)? - self.payoff_l(q));
            } else {
                stop = stop.min(kd * self.perpetuity * self.h * q + gap);
            }
        }
        Ok((cont, stop))
    }

    /// Default certification grid: log-spaced across `[q*/1000, 1000 q*]`.
    pub fn default_q_grid(&self, points: usize) -> Vec<S> {
        log_spaced(self.qstar / c(1000.0), self.qstar * c(1000.0), points)
    }

    /// Free-boundary curve in the original state space: `i = x^theta / q*`.
    /// Points with `i` above the curve are in the continuation region.
    pub fn boundary_curve(&self, xs: &[S]) -> Result<Vec<(S, S)>> {
        let theta = self.model.market.elasticity;
        xs.iter()
            .map(|&x| {
                if !(x > S::zero()) {
                    return Err(Error::Domain(format!("boundary x = {x} must be > 0")));
                }
                Ok((x, x.powf(theta) / self.qstar))
            })
            .collect()
    }
}

/// `points` log-spaced values across `[lo, hi]`.
pub fn log_spaced<S: Scalar>(lo: S, hi: S, points: usize) -> Vec<S> {
    if points == 1 {
        return vec![lo];
    }
    let llo = lo.ln();
    let lhi = hi.ln();
    let step = (lhi - llo) / c(points as f64 - 1.0);
    (0..points)
        .map(|k| (llo + step * c(k as f64)).exp())
        .collect()
}

/// Immediate-investment payoff `g(x, i) = (k1 - k0) A x^theta - i`.
pub fn payoff_g<S: Scalar>(model: &Model<S>, x: S, i: S) -> Result<S> {
    if !(x > S::zero()) || !(i > S::zero()) {
        return Err(Error::Domain(format!(
            "payoff_g needs x > 0 and i > 0, got ({x}, {i})"
        )));
    }
    let a = compute_a(compute_h(model), model.market.lag)?;
    Ok(model.kappa_diff() * a * x.powf(model.market.elasticity) - i)
}

/// `rho zeta(q) - L_Q zeta(q)` for the power test function
/// `zeta(q) = b q^r`, via the closed-form identity `-b q^r j(r)`.
pub fn apply_generator_power<S: Scalar>(model: &Model<S>, b: S, r: S, q: S) -> Result<S> {
    if !(q > S::zero()) {
        return Err(Error::Domain(format!("generator needs q > 0, got {q}")));
    }
    Ok(-b * q.powf(r) * j_eval(model, r))
}

/// Same quantity evaluated the long way: analytic derivatives of `q^r`
/// plugged into the integro-differential generator, jump expectations via
/// exact power moments. Independent route for cross-checking the identity.
pub fn generator_power_direct<S: Scalar>(model: &Model<S>, b: S, r: S, q: S) -> Result<S> {
    if !(q > S::zero()) {
        return Err(Error::Domain(format!("generator needs q > 0, got {q}")));
    }
    let theta = model.market.elasticity;
    let x = &model.demand;
    let i = &model.cost;
    let two = c::<S>(2.0);
    let one = S::one();
    let sx2 = x.volatility * x.volatility;
    let si2 = i.volatility * i.volatility;

    let zeta = b * q.powf(r);
    let zeta_p = b * r * q.powf(r - one);
    let zeta_pp = b * r * (r - one) * q.powf(r - two);

    let diffusion = (theta * theta * sx2 + si2) / two * q * q * zeta_pp;
    let drift = ((x.drift + (theta - one) * sx2 / two - x.jump_intensity * x.mean_jump()) * theta
        - (i.drift - i.jump_intensity * i.mean_jump()))
        * q
        * zeta_p;
    let level = ((i.drift - i.jump_intensity * i.mean_jump())
        - (x.jump_intensity + i.jump_intensity))
        * zeta;
    // E[zeta(q (1+U_X)^theta)] = q^r E[(1+U_X)^{r theta}] etc.
    let jump_x = x.jump_intensity * zeta * x.jump.power_moment(r * theta);
    let jump_i = i.jump_intensity * zeta * i.jump.power_moment(one - r);

    let lq = diffusion + drift + level + jump_x + jump_i;
    Ok(model.market.discount_rate * zeta - lq)
}
