//! Step-size schedules, iteration-count formulas, theoretical bound
//! evaluators and two-phase splits, as pure functions of the certified
//! constants (gamma, mu, L, G, R) and the noise level sigma.
//!
//! Every asymptotic budget is realized with an explicit constant so that
//! experiments are reproducible; the constants are recorded in the
//! `PhasePlan` they produce. All functions here are pure: identical inputs
//! give bit-identical outputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{real, real_u64, Real};

/// Descent-lemma constant of the deterministic second phase:
/// `min_k ||grad f(x_k)||^2 <= 2 L eps1 / K` after K plain gradient steps.
pub const STAGE2_DESCENT_CONSTANT: f64 = 2.0;

/// Constant of the stochastic nonconvex second phase, paired with the step
/// `alpha = min(1/(2L), sqrt(eps1 / (L sigma^2 K)))`.
pub const STAGE2_NONCONVEX_CONSTANT: f64 = 16.0;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("{reason}")]
    Regime {
        reason: String,
        /// Smallest iteration count at which the schedule becomes valid,
        /// when one exists.
        min_admissible_t: Option<u64>,
    },
    #[error("invalid schedule parameter: {0}")]
    InvalidParameter(String),
}

/// Constant step size for smooth quasar-convex SGD:
/// `R / (2 sigma sqrt(T))` in the noise-dominated regime
/// `T > R^2 L^2 / sigma^2`, and `1/(2L)` otherwise (including sigma = 0).
/// Always at most `1/(2L)`.
pub fn qc_constant_alpha<S: Real>(r: S, sigma: S, l: S, t: u64) -> S {
    let t_f = real_u64::<S>(t);
    let two = real::<S>(2.0);
    if sigma > S::zero() && t_f > r * r * l * l / (sigma * sigma) {
        r / (two * sigma * t_f.sqrt())
    } else {
        S::one() / (two * l)
    }
}

/// Guaranteed bound on the running average `(1/T) sum_{t=1..T} E[f(x_t) - f*]`
/// under the constant schedule:
///
/// ```text
///     4 ( R sigma / (gamma sqrt(T)) + R^2 L / (gamma T) ).
/// ```
pub fn qc_bound<S: Real>(t: u64, r: S, sigma: S, l: S, gamma: S) -> S {
    let t_f = real_u64::<S>(t);
    real::<S>(4.0) * (r * sigma / (gamma * t_f.sqrt()) + r * r * l / (gamma * t_f))
}

/// Smallest integer T with `qc_bound(T) <= epsilon` (exact inverse of
/// `qc_bound` by integer bisection).
pub fn qc_iterations<S: Real>(epsilon: S, r: S, sigma: S, l: S, gamma: S) -> u64 {
    debug_assert!(epsilon > S::zero());
    let ok = |t: u64| qc_bound(t, r, sigma, l, gamma) <= epsilon;
    if ok(1) {
        return 1;
    }
    let mut hi = 2u64;
    while !ok(hi) {
        if hi >= 1 << 62 {
            return hi; // saturate; unreachable for practical epsilon
        }
        hi <<= 1;
    }
    let mut lo = hi >> 1; // fails
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Regime thresholds of the log-scaled strongly-quasar schedule: the
/// schedule requires
///
/// ```text
///     T > max( 3 sigma^2 / (gamma^2 mu^2 R^2),
///              (6 L / (gamma^2 mu)) (log(2 L mu R^2 / sigma^2) + 1) ).
/// ```
///
/// Returns the smallest admissible integer T.
pub fn sqc_min_t<S: Real>(gamma: S, mu: S, l: S, r: S, sigma: S) -> u64 {
    let t1 = real::<S>(3.0) * sigma * sigma / (gamma * gamma * mu * mu * r * r);
    let arg = real::<S>(2.0) * l * mu * r * r / (sigma * sigma);
    let t2 = real::<S>(6.0) * l / (gamma * gamma * mu) * (arg.ln() + S::one());
    let thr = t1.max(t2).max(S::zero());
    let floor = thr.floor().to_u64().unwrap_or(u64::MAX - 1);
    floor + 1
}

/// Log-scaled constant step for strongly-quasar-convex SGD:
/// `alpha = (1/(gamma mu T)) log(gamma^2 mu^2 T R^2 / sigma^2)`, valid only
/// above the regime thresholds.
pub fn sqc_log_alpha<S: Real>(
    gamma: S,
    mu: S,
    l: S,
    r: S,
    sigma: S,
    t: u64,
) -> Result<S, ScheduleError> {
    if sigma <= S::zero() {
        return Err(ScheduleError::InvalidParameter(
            "log-scaled schedule requires sigma > 0".into(),
        ));
    }
    let min_t = sqc_min_t(gamma, mu, l, r, sigma);
    if t < min_t {
        return Err(ScheduleError::Regime {
            reason: format!("T = {t} below the admissible regime"),
            min_admissible_t: Some(min_t),
        });
    }
    let t_f = real_u64::<S>(t);
    let arg = gamma * gamma * mu * mu * t_f * r * r / (sigma * sigma);
    Ok((S::one() / (gamma * mu * t_f)) * arg.ln())
}

/// Exact bound on `E[f(X) - f*]` for the geometric-weighted output X under
/// the log-scaled schedule:
///
/// ```text
///     [ alpha sigma^2 / (2 (gamma - alpha L))
///       + gamma mu (1 - gamma mu alpha)^T R^2 / (2 (gamma - alpha L)) ]
///     / ( 1 - (1 - gamma mu alpha)^T ).
/// ```
pub fn sqc_bound<S: Real>(
    t: u64,
    gamma: S,
    mu: S,
    l: S,
    r: S,
    sigma: S,
) -> Result<S, ScheduleError> {
    let alpha = sqc_log_alpha(gamma, mu, l, r, sigma, t)?;
    let denom = gamma - alpha * l;
    if denom <= S::zero() {
        return Err(ScheduleError::Regime {
            reason: format!("gamma - alpha L = {denom} must be positive"),
            min_admissible_t: None,
        });
    }
    let q = S::one() - gamma * mu * alpha;
    let q_t = q.powi(t as i32);
    let two = real::<S>(2.0);
    let num = alpha * sigma * sigma / (two * denom) + gamma * mu * q_t * r * r / (two * denom);
    Ok(num / (S::one() - q_t))
}

/// Smallest admissible T with `sqc_bound(T) <= epsilon`.
pub fn sqc_iterations<S: Real>(
    epsilon: S,
    gamma: S,
    mu: S,
    l: S,
    r: S,
    sigma: S,
) -> Result<u64, ScheduleError> {
    let start = sqc_min_t(gamma, mu, l, r, sigma);
    let ok = |t: u64| matches!(sqc_bound(t, gamma, mu, l, r, sigma), Ok(b) if b <= epsilon);
    if ok(start) {
        return Ok(start);
    }
    let mut hi = start.max(1) * 2;
    while !ok(hi) {
        if hi >= 1 << 62 {
            return Err(ScheduleError::Regime {
                reason: "no admissible T reaches the requested bound".into(),
                min_admissible_t: None,
            });
        }
        hi <<= 1;
    }
    let mut lo = hi >> 1;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Distance-minimizing log step `alpha = (1/(mu gamma T)) log(mu^2 gamma^2
/// R^2 T / (2 sigma^2))`; the log argument must exceed 1.
pub fn gower_alpha<S: Real>(gamma: S, mu: S, r: S, sigma: S, t: u64) -> Result<S, ScheduleError> {
    let t_f = real_u64::<S>(t);
    let arg = mu * mu * gamma * gamma * r * r * t_f / (real::<S>(2.0) * sigma * sigma);
    if arg <= S::one() {
        return Err(ScheduleError::Regime {
            reason: format!("log argument {arg} must exceed 1"),
            min_admissible_t: None,
        });
    }
    Ok(arg.ln() / (mu * gamma * t_f))
}

/// Distance bound paired with `gower_alpha`:
/// `exp(-alpha mu gamma T) R^2 + 2 alpha sigma^2 / (mu gamma)`.
pub fn gower_distance_bound<S: Real>(t: u64, gamma: S, mu: S, r: S, sigma: S, alpha: S) -> S {
    let t_f = real_u64::<S>(t);
    (-alpha * mu * gamma * t_f).exp() * r * r
        + real::<S>(2.0) * alpha * sigma * sigma / (mu * gamma)
}

/// Comparison bound for the fixed `alpha = beta / sqrt(T)` schedule:
/// `R^2 / (2 T alpha (gamma - L alpha)) + alpha sigma^2 / (gamma - L alpha)`.
pub fn gower_appendix_b_bound<S: Real>(
    t: u64,
    r: S,
    sigma: S,
    gamma: S,
    l: S,
    beta: S,
) -> Result<S, ScheduleError> {
    let t_f = real_u64::<S>(t);
    let alpha = beta / t_f.sqrt();
    let denom = gamma - l * alpha;
    if denom <= S::zero() {
        return Err(ScheduleError::Regime {
            reason: format!("gamma - L alpha = {denom} must be positive (beta too large)"),
            min_admissible_t: None,
        });
    }
    Ok(r * r / (real::<S>(2.0) * t_f * alpha * denom) + alpha * sigma * sigma / denom)
}

/// Non-smooth constant step `R / (G sqrt(T))`.
pub fn nonsmooth_alpha<S: Real>(r: S, g: S, t: u64) -> S {
    r / (g * real_u64::<S>(t).sqrt())
}

/// Non-smooth harmonic step `alpha_t = 1 / (gamma mu t)`.
pub fn nonsmooth_harmonic_alpha<S: Real>(gamma: S, mu: S, t: u64) -> S {
    debug_assert!(t >= 1);
    S::one() / (gamma * mu * real_u64::<S>(t))
}

/// Bound on the running average for the non-smooth constant schedule:
/// `R G / (gamma sqrt(T))`.
pub fn nonsmooth_bound<S: Real>(t: u64, r: S, g: S, gamma: S) -> S {
    r * g / (gamma * real_u64::<S>(t).sqrt())
}

/// Distance bound for the harmonic schedule on strongly-quasar members:
/// `G^2 / (gamma^2 mu^2 t)`.
pub fn nonsmooth_harmonic_distance_bound<S: Real>(t: u64, g: S, gamma: S, mu: S) -> S {
    g * g / (gamma * gamma * mu * mu * real_u64::<S>(t))
}

/// Gradient-norm target to function-suboptimality target conversion using
/// the provable smoothness constant: `eps_f = eps_grad^2 / (2L)`.
pub fn grad_from_subopt<S: Real>(epsilon_grad: S, l: S) -> S {
    epsilon_grad * epsilon_grad / (real::<S>(2.0) * l)
}

/// Two-phase budget plan: drive suboptimality to `epsilon1` first, then run
/// (stochastic) gradient descent until the gradient norm target is met.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct PhasePlan<S> {
    pub epsilon: S,
    pub epsilon1: S,
    /// First-phase budget; `None` when the plugged stage-one solver supplies
    /// its own complexity formula.
    pub stage1_iters: Option<u64>,
    pub stage2_iters: u64,
    pub stage2_alpha: S,
    /// The explicit constant realized in `stage2_iters`.
    pub stage2_constant: S,
    /// The pair of complexity terms the epsilon1 choice balances (stochastic
    /// splits only); equal within rounding by construction.
    pub stage1_term: Option<S>,
    pub stage2_term: Option<S>,
}

/// Deterministic split: `epsilon1 = (R^2 eps^4 / gamma)^(1/3)`, second phase
/// of `ceil(2 L epsilon1 / eps^2)` plain gradient steps at `alpha = 1/L`.
pub fn split_det<S: Real>(epsilon: S, gamma: S, r: S, l: S) -> PhasePlan<S> {
    debug_assert!(epsilon > S::zero());
    let third = S::one() / real::<S>(3.0);
    let eps4 = epsilon.powi(4);
    let epsilon1 = (r * r * eps4 / gamma).powf(third);
    let k = real::<S>(STAGE2_DESCENT_CONSTANT) * l * epsilon1 / (epsilon * epsilon);
    PhasePlan {
        epsilon,
        epsilon1,
        stage1_iters: None,
        stage2_iters: ceil_u64(k),
        stage2_alpha: S::one() / l,
        stage2_constant: real(STAGE2_DESCENT_CONSTANT),
        stage1_term: None,
        stage2_term: None,
    }
}

/// Stochastic quasar-convex split. `epsilon1 = (R^2 eps^4 / (gamma^2 L))^(1/3)`
/// balances the noise term of the first phase against the second phase:
/// `R^2 sigma^2 / (gamma^2 eps1^2) = L eps1 sigma^2 / eps^4`. Falls back to
/// the deterministic split when sigma = 0.
pub fn split_sto<S: Real>(epsilon: S, gamma: S, r: S, l: S, sigma: S) -> PhasePlan<S> {
    if sigma == S::zero() {
        return split_det(epsilon, gamma, r, l);
    }
    let third = S::one() / real::<S>(3.0);
    let eps4 = epsilon.powi(4);
    let epsilon1 = (r * r * eps4 / (gamma * gamma * l)).powf(third);
    let stage1 = qc_iterations(epsilon1, r, sigma, l, gamma);
    let raw2 = l * epsilon1 * sigma * sigma / eps4;
    let k = real::<S>(STAGE2_NONCONVEX_CONSTANT) * raw2;
    let stage2 = ceil_u64(k);
    PhasePlan {
        epsilon,
        epsilon1,
        stage1_iters: Some(stage1),
        stage2_iters: stage2,
        stage2_alpha: stage2_nonconvex_alpha(epsilon1, l, sigma, stage2),
        stage2_constant: real(STAGE2_NONCONVEX_CONSTANT),
        stage1_term: Some(r * r * sigma * sigma / (gamma * gamma * epsilon1 * epsilon1)),
        stage2_term: Some(raw2),
    }
}

/// Strongly-quasar stochastic split. `epsilon1 = eps^2 / (gamma sqrt(L mu))`
/// balances `sigma^2 / (gamma^2 mu eps1)` against `L sigma^2 eps1 / eps^4`,
/// for a total of order `sqrt(L/mu) sigma^2 / (gamma eps^2)`.
pub fn split_sqc<S: Real>(
    epsilon: S,
    gamma: S,
    mu: S,
    l: S,
    r: S,
    sigma: S,
) -> Result<PhasePlan<S>, ScheduleError> {
    if sigma == S::zero() {
        return Ok(split_det(epsilon, gamma, r, l));
    }
    if mu <= S::zero() {
        return Err(ScheduleError::InvalidParameter(
            "strongly-quasar split requires mu > 0".into(),
        ));
    }
    let eps4 = epsilon.powi(4);
    let epsilon1 = epsilon * epsilon / (gamma * (l * mu).sqrt());
    let stage1 = sqc_iterations(epsilon1, gamma, mu, l, r, sigma)?;
    let raw2 = l * sigma * sigma * epsilon1 / eps4;
    let k = real::<S>(STAGE2_NONCONVEX_CONSTANT) * raw2;
    let stage2 = ceil_u64(k);
    Ok(PhasePlan {
        epsilon,
        epsilon1,
        stage1_iters: Some(stage1),
        stage2_iters: stage2,
        stage2_alpha: stage2_nonconvex_alpha(epsilon1, l, sigma, stage2),
        stage2_constant: real(STAGE2_NONCONVEX_CONSTANT),
        stage1_term: Some(sigma * sigma / (gamma * gamma * mu * epsilon1)),
        stage2_term: Some(raw2),
    })
}

/// Step size of the stochastic nonconvex second phase.
pub fn stage2_nonconvex_alpha<S: Real>(epsilon1: S, l: S, sigma: S, k: u64) -> S {
    let cap = S::one() / (real::<S>(2.0) * l);
    if sigma == S::zero() || k == 0 {
        return cap;
    }
    cap.min((epsilon1 / (l * sigma * sigma * real_u64::<S>(k))).sqrt())
}

fn ceil_u64<S: Real>(x: S) -> u64 {
    let c = x.ceil().to_u64().unwrap_or(0);
    c.max(1)
}

/// Runtime step-size rule consumed by the SGD driver.
#[derive(Clone, Debug, PartialEq)]
pub enum StepSchedule<S> {
    QcConstant { r: S, sigma: S, l: S },
    SqcLog { gamma: S, mu: S, l: S, r: S, sigma: S },
    GowerLog { gamma: S, mu: S, r: S, sigma: S },
    NonsmoothConstant { r: S, g: S },
    NonsmoothHarmonic { gamma: S, mu: S },
    Fixed { alpha: S },
}

impl<S: Real> StepSchedule<S> {
    /// Checks regime preconditions for a horizon of `t_total` iterations.
    pub fn validate(&self, t_total: u64) -> Result<(), ScheduleError> {
        if t_total == 0 {
            return Err(ScheduleError::InvalidParameter("T must be >= 1".into()));
        }
        match self {
            StepSchedule::SqcLog { gamma, mu, l, r, sigma } => {
                sqc_log_alpha(*gamma, *mu, *l, *r, *sigma, t_total).map(|_| ())
            }
            StepSchedule::GowerLog { gamma, mu, r, sigma } => {
                gower_alpha(*gamma, *mu, *r, *sigma, t_total).map(|_| ())
            }
            StepSchedule::Fixed { alpha } => {
                if *alpha > S::zero() {
                    Ok(())
                } else {
                    Err(ScheduleError::InvalidParameter("alpha must be > 0".into()))
                }
            }
            _ => Ok(()),
        }
    }

    /// Step size for iteration `t` (1-based) of a `t_total`-step run.
    pub fn alpha(&self, t: u64, t_total: u64) -> Result<S, ScheduleError> {
        match self {
            StepSchedule::QcConstant { r, sigma, l } => {
                Ok(qc_constant_alpha(*r, *sigma, *l, t_total))
            }
            StepSchedule::SqcLog { gamma, mu, l, r, sigma } => {
                sqc_log_alpha(*gamma, *mu, *l, *r, *sigma, t_total)
            }
            StepSchedule::GowerLog { gamma, mu, r, sigma } => {
                gower_alpha(*gamma, *mu, *r, *sigma, t_total)
            }
            StepSchedule::NonsmoothConstant { r, g } => Ok(nonsmooth_alpha(*r, *g, t_total)),
            StepSchedule::NonsmoothHarmonic { gamma, mu } => {
                Ok(nonsmooth_harmonic_alpha(*gamma, *mu, t))
            }
            StepSchedule::Fixed { alpha } => Ok(*alpha),
        }
    }
}
