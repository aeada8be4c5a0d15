//! Scalar fields: one value per mesh node, tied to the manifold they live on.

use crate::{Error, Result};

/// A scalar function sampled at the nodes of one manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    manifold_id: u64,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(manifold_id: u64, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "scalar field contains non-finite values".into(),
            ));
        }
        Ok(Self { manifold_id, values })
    }

    /// Construct without the finiteness check; used internally where values
    /// are produced by arithmetic already known to be finite.
    pub(crate) fn from_raw(manifold_id: u64, values: Vec<f64>) -> Self {
        Self { manifold_id, values }
    }

    pub fn constant(manifold_id: u64, n: usize, c: f64) -> Self {
        Self { manifold_id, values: vec![c; n] }
    }

    pub fn manifold_id(&self) -> u64 {
        self.manifold_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            manifold_id: self.manifold_id,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.manifold_id, other.manifold_id);
        Self {
            manifold_id: self.manifold_id,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
