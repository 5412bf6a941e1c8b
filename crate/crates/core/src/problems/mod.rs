//! Test objectives with known minimizers, quasar-convexity gap predicates and
//! numerical certification of the structural constants (gamma, mu, L, G) that
//! every step-size schedule consumes.
//!
//! A function f with global minimizer x* is gamma-quasar-convex on a region if
//!
//! ```text
//!     f(x*) >= f(x) + (1/gamma) <grad f(x), x* - x>,      gamma in (0, 1],
//! ```
//!
//! and (gamma, mu)-strongly-quasar-convex if additionally
//!
//! ```text
//!     f(x*) >= f(x) + (1/gamma) <grad f(x), x* - x> + (mu/2) ||x - x*||^2.
//! ```
//!
//! Constants are certified on a compact box rather than all of R^n: several
//! of the nonconvex families only admit a useful gamma on bounded regions.
//! Run harnesses flag any iterate that leaves the certification box.

mod certify;
mod families;

pub use certify::{
    certify, certify_g, certify_gamma, certify_l, certify_mu, CertificationReport, GammaScan,
    MuScan, SAFETY_MARGIN,
};
pub use families::{AbsValue, Family, Plateau, ProblemDoc, Quadratic, SineBump, StrongVariant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::point::{BoxRegion, Point};
use crate::real::{real, Real};

/// An evaluatable objective with a declared global minimizer.
///
/// Gradients are hand-coded per family; non-smooth members return a
/// deterministic subgradient selection (zero at the minimizer, the one-sided
/// slope elsewhere, chosen by sign).
pub trait Objective<S: Real>: Send + Sync {
    fn dimension(&self) -> usize;
    fn minimizer(&self) -> &Point<S>;
    fn min_value(&self) -> S;
    fn value(&self, x: &Point<S>) -> S;
    fn gradient(&self, x: &Point<S>) -> Point<S>;

    /// Whether the gradient is Lipschitz on the certification box. Non-smooth
    /// members advertise a gradient-norm bound G instead of L.
    fn smooth(&self) -> bool {
        true
    }

    /// Analytic constants, when the family knows them exactly.
    fn declared(&self) -> Option<ConstantsCertificate<S>> {
        None
    }

    fn family(&self) -> &'static str;
}

/// How a certificate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    GridCertified,
}

/// The certified tuple (gamma, mu, L, G, R) together with the region it was
/// validated on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct ConstantsCertificate<S> {
    pub gamma: S,
    pub mu: S,
    #[serde(rename = "L")]
    pub l: Option<S>,
    #[serde(rename = "G")]
    pub g: Option<S>,
    #[serde(rename = "R")]
    pub r: S,
    #[serde(rename = "box")]
    pub box_region: BoxRegion<S>,
    pub grid_points: u64,
    pub provenance: Provenance,
}

impl<S: Real> ConstantsCertificate<S> {
    pub fn validate(&self) -> Result<(), ProblemError<S>> {
        if !(self.gamma > S::zero() && self.gamma <= S::one()) {
            return Err(ProblemError::InvalidConstant(format!(
                "gamma = {} must lie in (0, 1]",
                self.gamma
            )));
        }
        if self.mu < S::zero() {
            return Err(ProblemError::InvalidConstant(format!(
                "mu = {} must be >= 0",
                self.mu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ProblemError<S: Real> {
    #[error("objective evaluated to a non-finite value at {point:?}")]
    NonFiniteEvaluation { point: Vec<f64>, _marker: std::marker::PhantomData<S> },
    #[error("invalid constant: {0}")]
    InvalidConstant(String),
    #[error(
        "not quasar-convex on the box: witness {witness:?} has f(x) > f(x*) but \
         <grad f(x), x - x*> = {inner_product} <= 0"
    )]
    NotQuasarConvex { witness: Vec<f64>, inner_product: f64 },
    #[error("operation requires a smooth objective; {family} is non-smooth (advertise G instead)")]
    NotSmooth { family: &'static str },
    #[error("{0}")]
    InvalidInput(String),
}

fn check_finite<S: Real>(v: S, x: &Point<S>) -> Result<S, ProblemError<S>> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ProblemError::NonFiniteEvaluation {
            point: x.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect(),
            _marker: std::marker::PhantomData,
        })
    }
}

/// Quasar-convexity gap at `x`:
///
/// ```text
///     gap = f(x*) - f(x) - (1/gamma) <grad f(x), x* - x>.
/// ```
///
/// `f` is gamma-quasar-convex at `x` iff the gap is >= 0.
pub fn quasar_gap<S: Real>(
    f: &dyn Objective<S>,
    x: &Point<S>,
    gamma: S,
) -> Result<S, ProblemError<S>> {
    if !(gamma > S::zero() && gamma <= S::one()) {
        return Err(ProblemError::InvalidConstant(format!(
            "gamma = {gamma} must lie in (0, 1]"
        )));
    }
    if !x.is_finite() {
        return Err(ProblemError::InvalidInput("x must be finite".into()));
    }
    let fx = check_finite(f.value(x), x)?;
    let grad = f.gradient(x);
    let step = f.minimizer().sub(x);
    let inner = check_finite(grad.dot(&step), x)?;
    Ok(f.min_value() - fx - inner / gamma)
}

/// Strong quasar-convexity gap: `quasar_gap - (mu/2) ||x - x*||^2`.
pub fn strong_quasar_gap<S: Real>(
    f: &dyn Objective<S>,
    x: &Point<S>,
    gamma: S,
    mu: S,
) -> Result<S, ProblemError<S>> {
    if mu < S::zero() {
        return Err(ProblemError::InvalidConstant(format!(
            "mu = {mu} must be >= 0"
        )));
    }
    let gap = quasar_gap(f, x, gamma)?;
    Ok(gap - real::<S>(0.5) * mu * x.dist_sq(f.minimizer()))
}
