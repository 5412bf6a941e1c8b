//! Points in R^n and axis-aligned boxes (certification regions).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::real::{real, Real};

/// A point in R^n. Entries are expected to stay finite; the solvers guard
/// against non-finite iterates explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<S>(pub Vec<S>);

impl<S: Real> Point<S> {
    pub fn zeros(dim: usize) -> Self {
        Point(vec![S::zero(); dim])
    }

    pub fn from_f64(coords: &[f64]) -> Self {
        Point(coords.iter().map(|&c| real(c)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> S {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a * b)
            .fold(S::zero(), |acc, v| acc + v)
    }

    #[inline]
    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> S {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist_sq(&self, other: &Self) -> S {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b) * (a - b))
            .fold(S::zero(), |acc, v| acc + v)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a - b)
                .collect(),
        )
    }

    /// `self += scale * other`, in place.
    pub fn add_scaled(&mut self, scale: S, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a = *a + scale * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl<S> std::ops::Index<usize> for Point<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

/// Axis-aligned box, the region on which structural constants are certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion<S> {
    pub lo: Vec<S>,
    pub hi: Vec<S>,
}

impl<S: Real> BoxRegion<S> {
    pub fn new(lo: Vec<S>, hi: Vec<S>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must share a dimension");
        assert!(
            lo.iter().zip(&hi).all(|(l, h)| l < h),
            "box must have positive extent on every axis"
        );
        BoxRegion { lo, hi }
    }

    /// Symmetric box `[-half, half]^dim`.
    pub fn symmetric(half: f64, dim: usize) -> Self {
        BoxRegion::new(vec![real(-half); dim], vec![real(half); dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &Point<S>) -> bool {
        x.0.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&l, &h))| c >= l && c <= h)
    }

    pub fn diameter(&self) -> S {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| (h - l) * (h - l))
            .fold(S::zero(), |acc, v| acc + v)
            .sqrt()
    }

    /// Largest distance from `center` to a corner of the box. Used as the
    /// worst-case bound on the start-to-minimizer distance.
    pub fn circumradius_from(&self, center: &Point<S>) -> S {
        debug_assert_eq!(self.dim(), center.dim());
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(&center.0)
            .map(|((&l, &h), &c)| {
                let a = (c - l).abs();
                let b = (h - c).abs();
                let m = if a > b { a } else { b };
                m * m
            })
            .fold(S::zero(), |acc, v| acc + v)
            .sqrt()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point<S> {
        Point(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(&l, &h)| {
                    let u: f64 = rng.random();
                    l + (h - l) * real::<S>(u)
                })
                .collect(),
        )
    }

    /// Number of grid nodes per axis so that the full grid holds roughly
    /// `total` points.
    pub fn nodes_per_axis(&self, total: u64) -> u64 {
        let n = self.dim() as f64;
        let per = (total as f64).powf(1.0 / n).floor() as u64;
        per.max(2)
    }

    /// The `idx`-th node of the regular grid with `per_axis` nodes per axis
    /// (endpoints included), axes varying fastest-first.
    pub fn grid_node(&self, per_axis: u64, idx: u64) -> Point<S> {
        let mut rem = idx;
        let denom = real::<S>((per_axis - 1) as f64);
        let coords = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| {
                let k = rem % per_axis;
                rem /= per_axis;
                l + (h - l) * real::<S>(k as f64) / denom
            })
            .collect();
        Point(coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_endpoints() {
        let b = BoxRegion::<f64>::symmetric(10.0, 1);
        let per = b.nodes_per_axis(101);
        assert_eq!(per, 101);
        assert_eq!(b.grid_node(per, 0).0, vec![-10.0]);
        assert_eq!(b.grid_node(per, 100).0, vec![10.0]);
        assert!((b.grid_node(per, 50).0[0]).abs() < 1e-12);
    }

    #[test]
    fn grid_enumerates_full_product_in_2d() {
        let b = BoxRegion::<f64>::symmetric(1.0, 2);
        let per = b.nodes_per_axis(9);
        assert_eq!(per, 3);
        let mut seen = std::collections::HashSet::new();
        for idx in 0..9 {
            let p = b.grid_node(per, idx);
            seen.insert(format!("{:?}", p.0));
            assert!(b.contains(&p));
        }
        assert_eq!(seen.len(), 9);
    }

    #[test]
    fn circumradius_is_worst_corner() {
        let b = BoxRegion::<f64>::new(vec![-1.0, -2.0], vec![3.0, 2.0]);
        let c = Point(vec![0.0, 0.0]);
        let r = b.circumradius_from(&c);
        assert!((r - (9.0f64 + 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn point_ops() {
        let mut a = Point(vec![1.0f64, 2.0]);
        let b = Point(vec![3.0, -1.0]);
        assert_eq!(a.dot(&b), 1.0);
        a.add_scaled(-0.5, &b);
        assert_eq!(a.0, vec![-0.5, 2.5]);
        assert!((a.dist_sq(&b) - (3.5f64.powi(2) + 3.5f64.powi(2))).abs() < 1e-12);
    }
}
