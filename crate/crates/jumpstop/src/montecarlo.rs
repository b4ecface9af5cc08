//! Monte Carlo verification of the closed-form results.
//!
//! Three layers: exact terminal sampling of a single jump-diffusion factor
//! (zero discretization error, used to check the conditional moment
//! formula), an event-driven path walker on the merged grid of jump times
//! and uniform observation times, and policy valuation / threshold scans
//! built on the walker with common random numbers.
//!
//! Reproducibility: every path owns ChaCha substreams derived from the base
//! seed and the path index alone, and aggregation uses deterministic
//! pairwise summation, so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{self, Model, ProcessParams};
use crate::scalar::{c, pairwise_sum, Scalar};
use crate::solver::{self, Solution};
use crate::{Error, Result};

/// 97.5% standard-normal quantile, for 95% confidence intervals.
pub const Z_95: f64 = 1.959964;

/// What an unexercised path contributes at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// Contribute zero: a conservative lower bound on the true value.
    #[default]
    Zero,
    /// Exercise at the horizon whatever the state, even at a loss.
    ForcedExercise,
}

/// Simulation budget and seeding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig<S> {
    /// Truncation horizon `T`.
    pub horizon: S,
    /// Uniform observation step between jump times.
    pub dt: S,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub truncation: TruncationPolicy,
}

impl<S: Scalar> SimConfig<S> {
    /// Default verification budget: `rho T = 5`, `dt = 1e-3`, 10^5 paths.
    pub fn default_for(model: &Model<S>) -> Self {
        SimConfig {
            horizon: c::<S>(5.0) / model.market.discount_rate,
            dt: c(1e-3),
            paths: 100_000,
            seed: 42,
            truncation: TruncationPolicy::Zero,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dt > S::zero()) || !self.dt.is_finite() {
            return Err(Error::Structural(format!(
                "simulation step dt = {} must be > 0",
                self.dt
            )));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(Error::Structural(format!(
                "horizon {} must be finite and >= dt",
                self.horizon
            )));
        }
        if self.paths < 2 {
            return Err(Error::Structural(format!(
                "path count {} must be >= 2",
                self.paths
            )));
        }
        Ok(())
    }
}

/// Sample statistics of one Monte Carlo quantity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate<S> {
    pub mean: S,
    pub std_error: S,
    pub ci95_half_width: S,
    pub paths_used: usize,
    /// Fraction of paths that exercised before the horizon.
    pub fraction_stopped: S,
}

impl<S: Scalar> McEstimate<S> {
    fn from_samples(values: &[S], stopped: usize) -> Self {
        let n = values.len();
        let nf = c::<S>(n as f64);
        let mean = pairwise_sum(values) / nf;
        let sq: Vec<S> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
        let var = if n > 1 {
            pairwise_sum(&sq) / (nf - S::one())
        } else {
            S::zero()
        };
        let std_error = (var / nf).sqrt();
        McEstimate {
            mean,
            std_error,
            ci95_half_width: c::<S>(Z_95) * std_error,
            paths_used: n,
            fraction_stopped: c::<S>(stopped as f64) / nf,
        }
    }

    /// `(mean - target) / SE`; zero when the estimate is exact.
    pub fn z_score(&self, target: S) -> S {
        let gap = self.mean - target;
        if self.std_error > S::zero() {
            gap / self.std_error
        } else if gap == S::zero() {
            S::zero()
        } else {
            S::infinity() * gap.signum()
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exact draw of `Y_t`: lognormal continuous part with exponent
/// `(mu - sigma^2/2 - lambda m) t + sigma sqrt(t) Z`, a Poisson number of
/// jumps realized via exponential interarrivals, and independent jump
/// factors. No time discretization.
pub fn sample_terminal<S: Scalar>(
    process: &ProcessParams<S>,
    t: S,
    rng: &mut ChaCha8Rng,
) -> S {
    let two = c::<S>(2.0);
    let s2 = process.volatility * process.volatility;
    let m = process.mean_jump();
    let mut log = (process.drift - s2 / two - process.jump_intensity * m) * t
        + process.volatility * t.sqrt() * S::standard_normal(rng);
    if process.jump_intensity > S::zero() {
        let mut arrival = S::standard_exp(rng) / process.jump_intensity;
        while arrival < t {
            log = log + process.jump.sample_factor(rng).ln();
            arrival = arrival + S::standard_exp(rng) / process.jump_intensity;
        }
    }
    process.initial * log.exp()
}

/// `E[Y_t^k] / y0^k` in closed form:
/// `exp{[(mu + (k-1) sigma^2/2 - lambda m) k + lambda (E[(1+U)^k] - 1)] t}`.
pub fn analytic_moment<S: Scalar>(process: &ProcessParams<S>, k: S, t: S) -> S {
    let two = c::<S>(2.0);
    let s2 = process.volatility * process.volatility;
    let m = process.mean_jump();
    let rate = (process.drift + (k - S::one()) * s2 / two - process.jump_intensity * m) * k
        + process.jump_intensity * (process.jump.power_moment(k) - S::one());
    (rate * t).exp()
}

/// Empirical `E[Y_t^k] / y0^k` from exact terminal draws, one substream
/// per draw so the estimate is independent of parallelism.
pub fn estimate_moment<S: Scalar>(
    process: &ProcessParams<S>,
    k: S,
    t: S,
    config: &SimConfig<S>,
) -> Result<McEstimate<S>> {
    config.check()?;
    if !(t > S::zero()) {
        return Err(Error::Domain(format!("moment horizon t = {t} must be > 0")));
    }
    let y0k = process.initial.powf(k);
    let values: Vec<S> = (0..config.paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream_rng(config.seed, p as u64);
            sample_terminal(process, t, &mut rng).powf(k) / y0k
        })
        .collect();
    Ok(McEstimate::from_samples(&values, config.paths))
}

/// Why the walker paused at an observation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Start,
    Grid,
    JumpDemand,
    JumpCost,
    Horizon,
}

/// One observation of the bivariate state, in logs to avoid overflow on
/// long horizons.
#[derive(Debug, Clone, Copy)]
pub struct Observation<S> {
    pub time: S,
    pub log_x: S,
    pub log_i: S,
    pub kind: EventKind,
}

/// Drive one path through the merged event grid (uniform observation times
/// plus the exact jump times of both processes), invoking `on_event` at
/// every event. Returning `false` ends the path early.
///
/// Between events the continuous parts advance by exact lognormal
/// increments; at a jump event the jumped process is multiplied by a fresh
/// jump factor. Demand and cost use independent substreams `2p` and
/// `2p + 1`, preserving their independence and enabling common random
/// numbers across policies.
pub fn walk_path<S, F>(model: &Model<S>, config: &SimConfig<S>, path_index: usize, mut on_event: F)
where
    S: Scalar,
    F: FnMut(&Observation<S>) -> bool,
{
    let two = c::<S>(2.0);
    let p = path_index as u64;
    let mut rng_x = stream_rng(config.seed, 2 * p);
    let mut rng_i = stream_rng(config.seed, 2 * p + 1);

    let x = &model.demand;
    let i = &model.cost;
    // per-unit-time log drifts including the jump compensator
    let drift_x = x.drift - x.volatility * x.volatility / two - x.jump_intensity * x.mean_jump();
    let drift_i = i.drift - i.volatility * i.volatility / two - i.jump_intensity * i.mean_jump();

    let mut log_x = x.initial.ln();
    let mut log_i = i.initial.ln();
    let mut t = S::zero();

    if !on_event(&Observation {
        time: t,
        log_x,
        log_i,
        kind: EventKind::Start,
    }) {
        return;
    }

    let next_jump = |lam: S, rng: &mut ChaCha8Rng, from: S| -> S {
        if lam > S::zero() {
            from + S::standard_exp(rng) / lam
        } else {
            S::infinity()
        }
    };
    let mut jump_x_at = next_jump(x.jump_intensity, &mut rng_x, t);
    let mut jump_i_at = next_jump(i.jump_intensity, &mut rng_i, t);
    let mut grid_step: u64 = 1;

    loop {
        let grid_at = config.dt * c(grid_step as f64);
        // earliest pending event; ties resolve in this fixed order
        let (t_next, kind) = if jump_x_at <= jump_i_at && jump_x_at <= grid_at {
            (jump_x_at, EventKind::JumpDemand)
        } else if jump_i_at <= grid_at {
            (jump_i_at, EventKind::JumpCost)
        } else {
            (grid_at, EventKind::Grid)
        };
        let (t_next, kind) = if t_next >= config.horizon {
            (config.horizon, EventKind::Horizon)
        } else {
            (t_next, kind)
        };

        let step = t_next - t;
        if step > S::zero() {
            let sq = step.sqrt();
            if x.volatility > S::zero() {
                log_x += x.volatility * sq * S::standard_normal(&mut rng_x);
            }
            log_x += drift_x * step;
            if i.volatility > S::zero() {
                log_i += i.volatility * sq * S::standard_normal(&mut rng_i);
            }
            log_i += drift_i * step;
        }
        t = t_next;

        match kind {
            EventKind::JumpDemand => {
                log_x += x.jump.sample_factor(&mut rng_x).ln();
                jump_x_at = next_jump(x.jump_intensity, &mut rng_x, t);
            }
            EventKind::JumpCost => {
                log_i += i.jump.sample_factor(&mut rng_i).ln();
                jump_i_at = next_jump(i.jump_intensity, &mut rng_i, t);
            }
            EventKind::Grid => grid_step += 1,
            _ => {}
        }

        let proceed = on_event(&Observation {
            time: t,
            log_x,
            log_i,
            kind,
        });
        if !proceed || matches!(kind, EventKind::Horizon) {
            return;
        }
    }
}

/// One recorded point of a simulated path, in levels.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathPoint<S> {
    pub time: S,
    pub x: S,
    pub i: S,
    pub q: S,
    pub kind: EventKind,
}

/// Materialize full path ensembles. Memory grows as paths x events; meant
/// for diagnostics and plots, not for the 10^5-path verification runs
/// (those stream through [`walk_path`]).
pub fn simulate_paths<S: Scalar>(
    model: &Model<S>,
    config: &SimConfig<S>,
) -> Result<Vec<Vec<PathPoint<S>>>> {
    model.check_structural()?;
    config.check()?;
    let theta = model.market.elasticity;
    Ok((0..config.paths)
        .into_par_iter()
        .map(|p| {
            let mut points = Vec::new();
            walk_path(model, config, p, |obs| {
                points.push(PathPoint {
                    time: obs.time,
                    x: obs.log_x.exp(),
                    i: obs.log_i.exp(),
                    q: (theta * obs.log_x - obs.log_i).exp(),
                    kind: obs.kind,
                });
                true
            });
            points
        })
        .collect())
}

#[derive(Clone, Copy)]
struct Outcome<S> {
    payoff: S,
    stopped: bool,
}

/// Evaluate every threshold on the same path ensemble (common random
/// numbers). `thresholds` need not be sorted; results align with the input.
fn scan_thresholds<S: Scalar>(
    model: &Model<S>,
    thresholds: &[S],
    config: &SimConfig<S>,
) -> Result<Vec<McEstimate<S>>> {
    model::require_admissible(model)?;
    config.check()?;
    if thresholds.iter().any(|&b| !(b > S::zero())) {
        return Err(Error::Domain("thresholds must be > 0".into()));
    }
    let solution = solver::solve(model)?;
    let ka = model.kappa_diff() * solution.perpetuity;
    let theta = model.market.elasticity;
    let rho = model.market.discount_rate;

    // ascending order; crossing checks then only walk a pointer forward
    let mut order: Vec<usize> = (0..thresholds.len()).collect();
    order.sort_by(|&a, &b| thresholds[a].partial_cmp(&thresholds[b]).unwrap());
    let sorted_logs: Vec<S> = order.iter().map(|&k| thresholds[k].ln()).collect();
    let nb = sorted_logs.len();

    let per_path: Vec<Vec<Outcome<S>>> = (0..config.paths)
        .into_par_iter()
        .map(|p| {
            let mut outcomes = vec![
                Outcome {
                    payoff: S::zero(),
                    stopped: false,
                };
                nb
            ];
            let mut ptr = 0usize;
            walk_path(model, config, p, |obs| {
                let log_q = theta * obs.log_x - obs.log_i;
                while ptr < nb && log_q >= sorted_logs[ptr] {
                    let g = ka * (theta * obs.log_x).exp() - obs.log_i.exp();
                    outcomes[ptr] = Outcome {
                        payoff: (-rho * obs.time).exp() * g,
                        stopped: true,
                    };
                    ptr += 1;
                }
                if ptr == nb {
                    return false;
                }
                if matches!(obs.kind, EventKind::Horizon)
                    && config.truncation == TruncationPolicy::ForcedExercise
                {
                    let g = ka * (theta * obs.log_x).exp() - obs.log_i.exp();
                    let forced = (-rho * obs.time).exp() * g;
                    for slot in outcomes.iter_mut().skip(ptr) {
                        slot.payoff = forced;
                    }
                }
                true
            });
            outcomes
        })
        .collect();

    let mut results = vec![None; nb];
    for (slot, &input_idx) in order.iter().enumerate() {
        let values: Vec<S> = per_path.iter().map(|o| o[slot].payoff).collect();
        let stopped = per_path.iter().filter(|o| o[slot].stopped).count();
        results[input_idx] = Some(McEstimate::from_samples(&values, stopped));
    }
    Ok(results.into_iter().map(|r| r.expect("filled")).collect())
}

/// Value of the "invest when `q` first reaches the threshold" policy:
/// mean of `e^{-rho tau} g(X_tau, I_tau)` with horizon truncation.
pub fn evaluate_policy<S: Scalar>(
    model: &Model<S>,
    threshold: S,
    config: &SimConfig<S>,
) -> Result<McEstimate<S>> {
    Ok(scan_thresholds(model, &[threshold], config)?.remove(0))
}

/// Value the thresholds `multiplier * q*` on a common path ensemble.
/// The closed-form optimum predicts the column at multiplier 1 is maximal
/// up to Monte Carlo noise.
pub fn optimality_scan<S: Scalar>(
    model: &Model<S>,
    solution: &Solution<S>,
    multipliers: &[S],
    config: &SimConfig<S>,
) -> Result<Vec<(S, McEstimate<S>)>> {
    if multipliers.iter().any(|&m| !(m > S::zero())) {
        return Err(Error::Domain("scan multipliers must be > 0".into()));
    }
    let thresholds: Vec<S> = multipliers.iter().map(|&m| m * solution.qstar).collect();
    let estimates = scan_thresholds(model, &thresholds, config)?;
    Ok(thresholds.into_iter().zip(estimates).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::JumpSizeSpec;
    use crate::testmodels::{m0, m0_with_jumps};

    fn small_config() -> SimConfig<f64> {
        SimConfig {
            horizon: 50.0,
            dt: 0.01,
            paths: 4_000,
            seed: 7,
            truncation: TruncationPolicy::Zero,
        }
    }

    #[test]
    fn config_invariants() {
        let model = m0();
        let cfg = SimConfig::default_for(&model);
        assert!((cfg.horizon - 50.0).abs() < 1e-12);
        assert!(cfg.check().is_ok());
        let mut bad = cfg.clone();
        bad.dt = 0.0;
        assert!(bad.check().is_err());
        let mut bad = cfg.clone();
        bad.horizon = bad.dt / 2.0;
        assert!(bad.check().is_err());
        let mut bad = cfg;
        bad.paths = 1;
        assert!(bad.check().is_err());
    }

    #[test]
    fn terminal_drift_limit() {
        // lambda = 0, sigma ~ 0: Y_t collapses to y0 e^{mu t}
        let mut process = m0().demand;
        process.volatility = 1e-8;
        let mut rng = stream_rng(3, 0);
        let y = sample_terminal(&process, 2.0, &mut rng);
        let det = process.initial * (0.05f64 * 2.0).exp();
        assert!((y / det - 1.0).abs() < 1e-6);
    }

    #[test]
    fn analytic_moment_examples() {
        // pure GBM, k = 2, t = 1: exp{(mu + sigma^2/2) 2}
        let process = m0().demand;
        let expected = ((0.05 + 0.02) * 2.0f64).exp();
        assert!((analytic_moment(&process, 2.0, 1.0) - expected).abs() < 1e-15);
        // compensated jumps leave the k = 1 moment at drift mu = 0
        let jumpy: ProcessParams<f64> = ProcessParams {
            drift: 0.0,
            volatility: 0.1,
            jump_intensity: 1.0,
            jump: JumpSizeSpec::Deterministic { m: 0.2 },
            initial: 1.0,
        };
        assert!((analytic_moment(&jumpy, 1.0, 2.0) - 1.0).abs() < 1e-15);
        // k = 0 is exactly 1 for any process
        assert!((analytic_moment(&jumpy, 0.0, 3.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_estimates_within_three_se() {
        let cfg = SimConfig {
            horizon: 1.0,
            dt: 1.0,
            paths: 100_000,
            seed: 11,
            truncation: TruncationPolicy::Zero,
        };
        let model = m0_with_jumps();
        for process in [&model.demand, &model.cost] {
            for k in [1.0, 2.0] {
                for t in [0.5, 2.0] {
                    let est = estimate_moment(process, k, t, &cfg).unwrap();
                    let z = est.z_score(analytic_moment(process, k, t));
                    assert!(z.abs() <= 3.0, "k {k} t {t}: z = {z}");
                }
            }
        }
    }

    #[test]
    fn moment_k_zero_exact() {
        let mut cfg = small_config();
        cfg.paths = 100;
        let est = estimate_moment(&m0().demand, 0.0, 1.0, &cfg).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.ci95_half_width, 0.0);
    }

    #[test]
    fn walker_merges_jump_times_into_grid() {
        let mut model = m0();
        model.demand.volatility = 0.0; // drift-only between jumps, so factors are exact
        model.demand.jump_intensity = 3.0;
        model.demand.jump = JumpSizeSpec::Deterministic { m: 0.5 };
        // per-unit-time log drift includes the compensator -lambda m
        let drift = model.demand.drift - 3.0 * 0.5;
        let cfg = SimConfig {
            horizon: 2.0,
            dt: 0.25,
            paths: 2,
            seed: 5,
            truncation: TruncationPolicy::Zero,
        };
        let paths = simulate_paths(&model, &cfg).unwrap();
        for path in &paths {
            let jumps: Vec<_> = path
                .iter()
                .filter(|pt| pt.kind == EventKind::JumpDemand)
                .collect();
            assert!(!jumps.is_empty(), "intensity 3 over t = 2 should jump");
            for jump in jumps {
                // jump events land between grid times, not on them
                assert!(jump.time > 0.0 && jump.time < 2.0);
                // a deterministic jump multiplies X by exactly 1.5 on top of
                // the drift accrued since the previous observation
                let before = path
                    .iter()
                    .take_while(|pt| pt.time < jump.time)
                    .last()
                    .unwrap();
                let expected = 1.5 * (drift * (jump.time - before.time)).exp();
                assert!(
                    (jump.x / before.x - expected).abs() < 1e-9,
                    "jump factor {} vs expected {expected}",
                    jump.x / before.x
                );
            }
            // the uniform observation times are all present
            for k in 0..=8 {
                let tg = 0.25 * k as f64;
                assert!(
                    path.iter().any(|pt| (pt.time - tg).abs() < 1e-12),
                    "missing grid time {tg}"
                );
            }
            assert_eq!(path.last().unwrap().kind, EventKind::Horizon);
        }
    }

    #[test]
    fn walker_gbm_log_increment_stats() {
        let model = m0(); // no jumps
        let cfg = SimConfig {
            horizon: 1.0,
            dt: 0.1,
            paths: 2_000,
            seed: 13,
            truncation: TruncationPolicy::Zero,
        };
        let paths = simulate_paths(&model, &cfg).unwrap();
        let mut increments = Vec::new();
        for path in &paths {
            for w in path.windows(2) {
                increments.push((w[1].x / w[0].x).ln());
            }
        }
        let n = increments.len() as f64;
        let mean = increments.iter().sum::<f64>() / n;
        let expected = (0.05 - 0.02) * 0.1; // (mu - sigma^2/2) dt
        let var = increments
            .iter()
            .map(|d| (d - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} expected {expected}");
        // increment variance ~ sigma^2 dt
        assert!((var - 0.2f64.powi(2) * 0.1).abs() < 5e-4);
    }

    #[test]
    fn walker_is_deterministic() {
        let model = m0_with_jumps();
        let cfg = SimConfig {
            horizon: 1.0,
            dt: 0.05,
            paths: 3,
            seed: 17,
            truncation: TruncationPolicy::Zero,
        };
        let a = simulate_paths(&model, &cfg).unwrap();
        let b = simulate_paths(&model, &cfg).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.len(), pb.len());
            for (oa, ob) in pa.iter().zip(pb) {
                assert_eq!(oa.time.to_bits(), ob.time.to_bits());
                assert_eq!(oa.x.to_bits(), ob.x.to_bits());
                assert_eq!(oa.i.to_bits(), ob.i.to_bits());
            }
        }
    }

    #[test]
    fn immediate_exercise_is_exact() {
        // q0 = 1^1 / 10 = 0.1; threshold below q0 stops at t = 0
        let model = m0();
        let mut cfg = small_config();
        cfg.paths = 50;
        let est = evaluate_policy(&model, 0.05, &cfg).unwrap();
        // payoff g(1, 10) = 1 * 20 * 1 - 10 = 10 on every path
        assert!((est.mean - 10.0).abs() < 1e-12);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.fraction_stopped, 1.0);
    }

    #[test]
    fn unreachable_threshold_values_to_zero() {
        let model = m0();
        let cfg = SimConfig {
            horizon: 0.5,
            dt: 0.05,
            paths: 200,
            seed: 23,
            truncation: TruncationPolicy::Zero,
        };
        let est = evaluate_policy(&model, 1e12, &cfg).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.fraction_stopped, 0.0);
    }

    #[test]
    fn policy_value_tracks_analytic() {
        let model = m0();
        let solution = solver::solve(&model).unwrap();
        let cfg = SimConfig {
            horizon: 50.0,
            dt: 0.005,
            paths: 20_000,
            seed: 29,
            truncation: TruncationPolicy::Zero,
        };
        let est = evaluate_policy(&model, solution.qstar, &cfg).unwrap();
        let v = solution.value_v(1.0, 10.0).unwrap();
        let gap = (est.mean - v).abs();
        assert!(
            gap <= (3.0 * est.std_error).max(0.01 * v),
            "mc {} vs analytic {v} (se {})",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn scan_crn_duplicates_identical() {
        let model = m0();
        let solution = solver::solve(&model).unwrap();
        let cfg = SimConfig {
            horizon: 10.0,
            dt: 0.02,
            paths: 500,
            seed: 31,
            truncation: TruncationPolicy::Zero,
        };
        let scan =
            optimality_scan(&model, &solution, &[1.5, 0.75, 1.5], &cfg).unwrap();
        assert_eq!(scan[0].1.mean.to_bits(), scan[2].1.mean.to_bits());
        assert_eq!(scan[0].1.std_error.to_bits(), scan[2].1.std_error.to_bits());
        assert!((scan[0].0 - 1.5 * solution.qstar).abs() < 1e-15);
    }

    #[test]
    fn scan_degenerate_deep_in_stopping_region() {
        let mut model = m0();
        model.cost.initial = 0.1; // q0 = 10 far above any scanned threshold
        let solution = solver::solve(&model).unwrap();
        let mut cfg = small_config();
        cfg.paths = 20;
        let scan = optimality_scan(&model, &solution, &[0.5, 1.0, 2.0], &cfg).unwrap();
        let g0 = solver::payoff_g(&model, 1.0, 0.1).unwrap();
        for (_, est) in scan {
            assert!((est.mean - g0).abs() < 1e-12);
            assert_eq!(est.std_error, 0.0);
        }
    }

    #[test]
    fn forced_exercise_bounds_zero_truncation_from_above() {
        // short horizon so truncation matters; forced exercise adds the
        // (possibly negative) terminal payoff instead of zero
        let model = m0();
        let mut cfg = SimConfig {
            horizon: 1.0,
            dt: 0.01,
            paths: 2_000,
            seed: 37,
            truncation: TruncationPolicy::Zero,
        };
        let solution = solver::solve(&model).unwrap();
        let zero = evaluate_policy(&model, solution.qstar, &cfg).unwrap();
        cfg.truncation = TruncationPolicy::ForcedExercise;
        let forced = evaluate_policy(&model, solution.qstar, &cfg).unwrap();
        assert!(zero.fraction_stopped < 1.0);
        assert_eq!(zero.fraction_stopped, forced.fraction_stopped);
        // g > 0 everywhere here (A x^theta well above i along these paths),
        // so forcing exercise strictly dominates discarding the payoff
        assert!(forced.mean > zero.mean);
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = m0();
        let cfg = small_config();
        assert!(evaluate_policy(&model, 0.0, &cfg).is_err());
        assert!(evaluate_policy(&model, -1.0, &cfg).is_err());
        let mut inadmissible = m0();
        inadmissible.cost.drift = 0.2;
        assert!(matches!(
            evaluate_policy(&inadmissible, 0.1, &cfg),
            Err(Error::Inadmissible(_))
        ));
        let solution = solver::solve(&model).unwrap();
        assert!(optimality_scan(&model, &solution, &[0.5, -1.0], &cfg).is_err());
    }
}
