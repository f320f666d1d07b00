//! Finite parameter measures and points of the probability simplex.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::TensorFn;

/// Tolerance for the unit-sum check of float simplex points.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// Nonnegative weights on `d` atoms with positive total mass `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure<S> {
    weights: Vec<S>,
    theta: S,
}

impl<S: Scalar> FiniteMeasure<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut theta = S::zero();
        for (i, w) in weights.iter().enumerate() {
            if w.is_negative_value() {
                return Err(Error::InvalidMeasure(format!("negative weight {w} at atom {i}")));
            }
            theta += w;
        }
        if theta <= S::zero() {
            return Err(Error::InvalidMeasure("total mass must be positive".into()));
        }
        Ok(FiniteMeasure { weights, theta })
    }

    pub fn from_ints(weights: &[i64]) -> Result<Self> {
        Self::new(weights.iter().map(|&w| S::from_i64(w)).collect())
    }

    pub fn d(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> &S {
        &self.weights[atom]
    }

    pub fn theta(&self) -> &S {
        &self.theta
    }

    /// Atoms of positive weight.
    pub fn support(&self) -> Vec<bool> {
        self.weights.iter().map(|w| !w.is_zero()).collect()
    }

    pub fn check_dims(&self, d: usize) -> Result<()> {
        if d != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: d,
            });
        }
        Ok(())
    }

    /// `rho(f)` for a one-variable function.
    pub fn integrate(&self, f: &TensorFn<S>) -> Result<S> {
        self.check_dims(f.d())?;
        if f.order() != 1 {
            return Err(Error::InvalidParameter(format!(
                "expected a one-variable function, got order {}",
                f.order()
            )));
        }
        f.contract(&self.weights)
    }

    /// `rho + delta_{x_1} + ... + delta_{x_k}`.
    pub fn shifted(&self, points: &[usize]) -> Result<Self> {
        let mut weights = self.weights.clone();
        let one = S::one();
        for &x in points {
            if x >= weights.len() {
                return Err(Error::AtomOutOfRange {
                    atom: x,
                    d: weights.len(),
                });
            }
            weights[x] += &one;
        }
        let mut theta = self.theta.clone();
        theta += &S::from_usize(points.len());
        Ok(FiniteMeasure { weights, theta })
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FiniteMeasure<T> {
        FiniteMeasure {
            weights: self.weights.iter().map(&f).collect(),
            theta: f(&self.theta),
        }
    }
}

/// A probability vector on `d` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint<S> {
    probs: Vec<S>,
}

impl<S: Scalar> SimplexPoint<S> {
    pub fn new(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidSimplexPoint("no atoms".into()));
        }
        let mut total = S::zero();
        for (i, p) in probs.iter().enumerate() {
            if p.is_negative_value() {
                return Err(Error::InvalidSimplexPoint(format!("negative mass {p} at atom {i}")));
            }
            total += p;
        }
        if !total.close_to(&S::one(), SIMPLEX_TOL) {
            return Err(Error::InvalidSimplexPoint(format!("total mass {total} differs from 1")));
        }
        Ok(SimplexPoint { probs })
    }

    /// The Dirac mass at `x`.
    pub fn dirac(d: usize, x: usize) -> Self {
        let mut probs = vec![S::zero(); d];
        probs[x] = S::one();
        SimplexPoint { probs }
    }

    pub fn d(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn integrate(&self, f: &TensorFn<S>) -> Result<S> {
        f.contract(&self.probs)
    }
}
