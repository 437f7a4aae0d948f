//! Raw point-cloud inputs: the supports of a measure before any tree
//! metric has been sampled for them.

use crate::error::{Error, Result};

/// A point in `R^d`.
pub type Point = Vec<f64>;

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Arithmetic mean of a point set.
pub fn mean_point(points: &[Point]) -> Point {
    let d = points[0].len();
    let mut m = vec![0.0; d];
    for p in points {
        for i in 0..d {
            m[i] += p[i];
        }
    }
    let n = points.len() as f64;
    for v in &mut m {
        *v /= n;
    }
    m
}

/// A discrete measure given by raw points and normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    /// Builds a weighted point set, normalizing the weights to sum to one.
    ///
    /// Weights must be nonnegative with a positive sum, and all points must
    /// share one dimension.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point set"));
        }
        if points.len() != weights.len() {
            return Err(Error::SizeMismatch(format!(
                "{} points vs {} weights",
                points.len(),
                weights.len()
            )));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::EmptyInput("zero-dimensional point"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::SizeMismatch(format!(
                "point dimension {} differs from first row dimension {}",
                p.len(),
                d
            )));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    /// Uniform weights over the given points.
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}
