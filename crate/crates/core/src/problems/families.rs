//! Built-in problem families. Each family is separable across coordinates,
//! has a declared global minimizer and hand-coded (sub)gradients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ConstantsCertificate, Objective, ProblemError, Provenance};
use crate::point::{BoxRegion, Point};
use crate::real::{real, Real};

/// Diagonal quadratic `f(x) = 1/2 sum_i d_i (x_i - x*_i)^2`.
///
/// Convex, hence 1-quasar-convex, with mu = min(d), L = max(d).
#[derive(Clone, Debug)]
pub struct Quadratic<S> {
    diag: Vec<S>,
    x_star: Point<S>,
    box_region: BoxRegion<S>,
}

impl<S: Real> Quadratic<S> {
    pub fn new(diag: Vec<f64>, x_star: Point<S>, box_region: BoxRegion<S>) -> Self {
        assert_eq!(diag.len(), x_star.dim());
        assert!(diag.iter().all(|&d| d > 0.0), "curvatures must be positive");
        Quadratic {
            diag: diag.iter().map(|&d| real(d)).collect(),
            x_star,
            box_region,
        }
    }

    /// `1/2 x^2` in one dimension on `[-10, 10]`.
    pub fn half_x_squared() -> Self {
        Quadratic::new(vec![1.0], Point::zeros(1), BoxRegion::symmetric(10.0, 1))
    }

    pub fn lambda_min(&self) -> S {
        self.diag.iter().fold(S::infinity(), |m, &d| m.min(d))
    }

    pub fn lambda_max(&self) -> S {
        self.diag.iter().fold(S::zero(), |m, &d| m.max(d))
    }
}

impl<S: Real> Objective<S> for Quadratic<S> {
    fn dimension(&self) -> usize {
        self.diag.len()
    }

    fn minimizer(&self) -> &Point<S> {
        &self.x_star
    }

    fn min_value(&self) -> S {
        S::zero()
    }

    fn value(&self, x: &Point<S>) -> S {
        let mut acc = S::zero();
        for ((&xi, &si), &di) in x.0.iter().zip(&self.x_star.0).zip(&self.diag) {
            let u = xi - si;
            acc += real::<S>(0.5) * di * u * u;
        }
        acc
    }

    fn gradient(&self, x: &Point<S>) -> Point<S> {
        Point(
            x.0.iter()
                .zip(&self.x_star.0)
                .zip(&self.diag)
                .map(|((&xi, &si), &di)| di * (xi - si))
                .collect(),
        )
    }

    fn declared(&self) -> Option<ConstantsCertificate<S>> {
        Some(ConstantsCertificate {
            gamma: S::one(),
            mu: self.lambda_min(),
            l: Some(self.lambda_max()),
            g: None,
            r: self.box_region.circumradius_from(&self.x_star),
            box_region: self.box_region.clone(),
            grid_points: 0,
            provenance: Provenance::Analytic,
        })
    }

    fn family(&self) -> &'static str {
        "quadratic"
    }
}

/// Nonconvex sine family `f(x) = sum_i u_i^2 + a sin^2(b u_i)` with
/// `u = x - x*`. The second derivative per coordinate is
/// `2 + 2ab^2 cos(2bu)`, so the function is globally smooth with
/// `L = 2 + 2ab^2` while dipping to negative curvature `2 - 2ab^2`.
/// Its quasar-convexity constant has no closed form and is grid-certified.
#[derive(Clone, Debug)]
pub struct SineBump<S> {
    a: S,
    b: S,
    x_star: Point<S>,
    box_region: BoxRegion<S>,
}

impl<S: Real> SineBump<S> {
    pub fn new(a: f64, b: f64, x_star: Point<S>, box_region: BoxRegion<S>) -> Self {
        assert!(a >= 0.0 && b > 0.0);
        SineBump {
            a: real(a),
            b: real(b),
            x_star,
            box_region,
        }
    }

    /// The default instance: a = 0.1, b = 5, x* = 0 on `[-10, 10]^dim`.
    pub fn standard(dim: usize) -> Self {
        SineBump::new(0.1, 5.0, Point::zeros(dim), BoxRegion::symmetric(10.0, dim))
    }

    /// Analytic gradient-Lipschitz constant `2 + 2ab^2` (7 for the default
    /// instance).
    pub fn smoothness_bound(&self) -> S {
        real::<S>(2.0) + real::<S>(2.0) * self.a * self.b * self.b
    }
}

impl<S: Real> Objective<S> for SineBump<S> {
    fn dimension(&self) -> usize {
        self.x_star.dim()
    }

    fn minimizer(&self) -> &Point<S> {
        &self.x_star
    }

    fn min_value(&self) -> S {
        S::zero()
    }

    fn value(&self, x: &Point<S>) -> S {
        let mut acc = S::zero();
        for (&xi, &si) in x.0.iter().zip(&self.x_star.0) {
            let u = xi - si;
            let s = (self.b * u).sin();
            acc += u * u + self.a * s * s;
        }
        acc
    }

    fn gradient(&self, x: &Point<S>) -> Point<S> {
        let two = real::<S>(2.0);
        Point(
            x.0.iter()
                .zip(&self.x_star.0)
                .map(|(&xi, &si)| {
                    let u = xi - si;
                    two * u + self.a * self.b * (two * self.b * u).sin()
                })
                .collect(),
        )
    }

    fn family(&self) -> &'static str {
        "sine_bump"
    }
}

/// Non-smooth, nonconvex plateau: per coordinate
///
/// ```text
///     p(u) = |u|                for |u| <= 1,
///     p(u) = 1 + 0.5 (|u| - 1)  for |u| > 1,
/// ```
///
/// The slope ratio `|u| / (1 + |u|)` on the outer piece has infimum 1/2 as
/// |u| -> 1+, so gamma = 1/2; subgradients are bounded by 1.
#[derive(Clone, Debug)]
pub struct Plateau<S> {
    x_star: Point<S>,
    box_region: BoxRegion<S>,
}

impl<S: Real> Plateau<S> {
    pub fn new(x_star: Point<S>, box_region: BoxRegion<S>) -> Self {
        Plateau { x_star, box_region }
    }

    pub fn standard(dim: usize) -> Self {
        Plateau::new(Point::zeros(dim), BoxRegion::symmetric(10.0, dim))
    }
}

impl<S: Real> Objective<S> for Plateau<S> {
    fn dimension(&self) -> usize {
        self.x_star.dim()
    }

    fn minimizer(&self) -> &Point<S> {
        &self.x_star
    }

    fn min_value(&self) -> S {
        S::zero()
    }

    fn value(&self, x: &Point<S>) -> S {
        let mut acc = S::zero();
        for (&xi, &si) in x.0.iter().zip(&self.x_star.0) {
            let u = (xi - si).abs();
            acc += if u <= S::one() {
                u
            } else {
                S::one() + real::<S>(0.5) * (u - S::one())
            };
        }
        acc
    }

    fn gradient(&self, x: &Point<S>) -> Point<S> {
        // Deterministic subgradient selection: 0 at the kink u = 0, the
        // one-sided slope elsewhere (inner slope kept at |u| = 1).
        Point(
            x.0.iter()
                .zip(&self.x_star.0)
                .map(|(&xi, &si)| {
                    let u = xi - si;
                    if u == S::zero() {
                        S::zero()
                    } else if u.abs() <= S::one() {
                        u.signum()
                    } else {
                        real::<S>(0.5) * u.signum()
                    }
                })
                .collect(),
        )
    }

    fn smooth(&self) -> bool {
        false
    }

    fn declared(&self) -> Option<ConstantsCertificate<S>> {
        Some(ConstantsCertificate {
            gamma: real(0.5),
            mu: S::zero(),
            l: None,
            g: Some(real::<S>(self.dimension() as f64).sqrt()),
            r: self.box_region.circumradius_from(&self.x_star),
            box_region: self.box_region.clone(),
            grid_points: 0,
            provenance: Provenance::Analytic,
        })
    }

    fn family(&self) -> &'static str {
        "plateau"
    }
}

/// `f(x) = sum_i |x_i - x*_i|`: convex and non-smooth, gamma = 1.
#[derive(Clone, Debug)]
pub struct AbsValue<S> {
    x_star: Point<S>,
    box_region: BoxRegion<S>,
}

impl<S: Real> AbsValue<S> {
    pub fn new(x_star: Point<S>, box_region: BoxRegion<S>) -> Self {
        AbsValue { x_star, box_region }
    }

    pub fn standard(dim: usize) -> Self {
        AbsValue::new(Point::zeros(dim), BoxRegion::symmetric(5.0, dim))
    }
}

impl<S: Real> Objective<S> for AbsValue<S> {
    fn dimension(&self) -> usize {
        self.x_star.dim()
    }

    fn minimizer(&self) -> &Point<S> {
        &self.x_star
    }

    fn min_value(&self) -> S {
        S::zero()
    }

    fn value(&self, x: &Point<S>) -> S {
        x.0.iter()
            .zip(&self.x_star.0)
            .map(|(&xi, &si)| (xi - si).abs())
            .fold(S::zero(), |acc, v| acc + v)
    }

    fn gradient(&self, x: &Point<S>) -> Point<S> {
        Point(
            x.0.iter()
                .zip(&self.x_star.0)
                .map(|(&xi, &si)| {
                    let u = xi - si;
                    if u == S::zero() {
                        S::zero()
                    } else {
                        u.signum()
                    }
                })
                .collect(),
        )
    }

    fn smooth(&self) -> bool {
        false
    }

    fn declared(&self) -> Option<ConstantsCertificate<S>> {
        Some(ConstantsCertificate {
            gamma: S::one(),
            mu: S::zero(),
            l: None,
            g: Some(real::<S>(self.dimension() as f64).sqrt()),
            r: self.box_region.circumradius_from(&self.x_star),
            box_region: self.box_region.clone(),
            grid_points: 0,
            provenance: Provenance::Analytic,
        })
    }

    fn family(&self) -> &'static str {
        "abs"
    }
}

/// `f(x) + (mu_add/2) ||x - x*||^2`. Keeps the minimizer and the minimum
/// value; used to build strongly-quasar-convex members out of the base
/// families.
///
/// If the base is (gamma, mu0)-strongly-quasar-convex, the variant is
/// (gamma, mu0 + mu_add (2 - gamma)/gamma)-strongly-quasar-convex, and the
/// smoothness constant grows by mu_add.
pub struct StrongVariant<S> {
    base: Arc<dyn Objective<S>>,
    mu_add: S,
}

impl<S: Real> StrongVariant<S> {
    pub fn new(base: Arc<dyn Objective<S>>, mu_add: f64) -> Self {
        assert!(mu_add > 0.0, "mu_add must be positive");
        StrongVariant {
            base,
            mu_add: real(mu_add),
        }
    }

    pub fn mu_add(&self) -> S {
        self.mu_add
    }
}

impl<S: Real> Objective<S> for StrongVariant<S> {
    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    fn minimizer(&self) -> &Point<S> {
        self.base.minimizer()
    }

    fn min_value(&self) -> S {
        self.base.min_value()
    }

    fn value(&self, x: &Point<S>) -> S {
        self.base.value(x) + real::<S>(0.5) * self.mu_add * x.dist_sq(self.base.minimizer())
    }

    fn gradient(&self, x: &Point<S>) -> Point<S> {
        let mut g = self.base.gradient(x);
        let xs = self.base.minimizer();
        for (gi, (&xi, &si)) in g.0.iter_mut().zip(x.0.iter().zip(&xs.0)) {
            *gi = *gi + self.mu_add * (xi - si);
        }
        g
    }

    fn smooth(&self) -> bool {
        self.base.smooth()
    }

    fn declared(&self) -> Option<ConstantsCertificate<S>> {
        let base = self.base.declared()?;
        let two = real::<S>(2.0);
        let mu = base.mu + self.mu_add * (two - base.gamma) / base.gamma;
        Some(ConstantsCertificate {
            gamma: base.gamma,
            mu,
            l: base.l.map(|l| l + self.mu_add),
            // ||grad f + mu_add (x - x*)|| <= G + mu_add R on the box
            g: base.g.map(|g| g + self.mu_add * base.r),
            r: base.r,
            box_region: base.box_region,
            grid_points: base.grid_points,
            provenance: base.provenance,
        })
    }

    fn family(&self) -> &'static str {
        "strong_variant"
    }
}

/// Serialized problem description: `{family, params, dimension, minimizer,
/// certificate}`. Certificates round-trip losslessly through JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemDoc {
    #[serde(flatten)]
    pub family: Family,
    pub dimension: usize,
    pub minimizer: Vec<f64>,
    #[serde(default)]
    pub certificate: Option<ConstantsCertificate<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Quadratic {
        diag: Vec<f64>,
    },
    SineBump {
        #[serde(default = "default_a")]
        a: f64,
        #[serde(default = "default_b")]
        b: f64,
    },
    Plateau {},
    Abs {},
    StrongVariant {
        base: Box<ProblemDoc>,
        mu_add: f64,
    },
}

fn default_a() -> f64 {
    0.1
}

fn default_b() -> f64 {
    5.0
}

impl ProblemDoc {
    /// Instantiates the objective. The certification box defaults to the
    /// family's standard box when the document carries no certificate.
    pub fn build<S: Real>(&self) -> Result<Arc<dyn Objective<S>>, ProblemError<S>> {
        if self.dimension == 0 {
            return Err(ProblemError::InvalidInput("dimension must be >= 1".into()));
        }
        if self.minimizer.len() != self.dimension {
            return Err(ProblemError::InvalidInput(format!(
                "minimizer has {} coordinates but dimension is {}",
                self.minimizer.len(),
                self.dimension
            )));
        }
        let x_star = Point::from_f64(&self.minimizer);
        let box_region = match &self.certificate {
            Some(c) => BoxRegion::new(
                c.box_region.lo.iter().map(|&v| real(v)).collect(),
                c.box_region.hi.iter().map(|&v| real(v)).collect(),
            ),
            None => self.default_box(),
        };
        match &self.family {
            Family::Quadratic { diag } => {
                if diag.len() != self.dimension {
                    return Err(ProblemError::InvalidInput(
                        "diag length must match dimension".into(),
                    ));
                }
                if diag.iter().any(|&d| d <= 0.0) {
                    return Err(ProblemError::InvalidInput(
                        "diag entries must be positive".into(),
                    ));
                }
                Ok(Arc::new(Quadratic::new(diag.clone(), x_star, box_region)))
            }
            Family::SineBump { a, b } => {
                Ok(Arc::new(SineBump::new(*a, *b, x_star, box_region)))
            }
            Family::Plateau {} => Ok(Arc::new(Plateau::new(x_star, box_region))),
            Family::Abs {} => Ok(Arc::new(AbsValue::new(x_star, box_region))),
            Family::StrongVariant { base, mu_add } => {
                if *mu_add <= 0.0 {
                    return Err(ProblemError::InvalidInput("mu_add must be positive".into()));
                }
                let inner = base.build::<S>()?;
                Ok(Arc::new(StrongVariant::new(inner, *mu_add)))
            }
        }
    }

    fn default_box<S: Real>(&self) -> BoxRegion<S> {
        match &self.family {
            Family::Abs {} => BoxRegion::symmetric(5.0, self.dimension),
            Family::StrongVariant { base, .. } => base.default_box(),
            _ => BoxRegion::symmetric(10.0, self.dimension),
        }
    }
}
