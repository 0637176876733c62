//! Dense vector storage and inner-product scoring.

use std::fmt;

use crate::error::{Error, Result};

/// A fixed-length vector of `f32` components.
///
/// Encoded texts are unit-length (or all-zero for degenerate input), but the
/// type itself does not enforce that; it is a plain container.
#[derive(Clone, PartialEq)]
pub struct DenseVector {
    components: Vec<f32>,
}

impl DenseVector {
    pub fn zeros(dimension: usize) -> Self {
        DenseVector {
            components: vec![0.0; dimension],
        }
    }

    pub fn new(components: Vec<f32>) -> Self {
        DenseVector { components }
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f32] {
        &self.components
    }

    pub fn into_components(self) -> Vec<f32> {
        self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&c| c == 0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.components.iter().filter(|&&c| c != 0.0).count()
    }

    /// L2 norm, accumulated in f64.
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|&c| c as f64 * c as f64)
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product, accumulated left to right in f32.
    ///
    /// The accumulation order is part of the contract: scores must be
    /// bit-for-bit reproducible so that ranking ties are deterministic.
    pub fn dot(&self, other: &DenseVector) -> Result<f32> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: other.dimension(),
            });
        }
        let mut acc = 0.0f32;
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a * b;
        }
        Ok(acc)
    }
}

impl fmt::Debug for DenseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseVector")
            .field("dimension", &self.dimension())
            .field("nonzero", &self.nonzero_count())
            .finish()
    }
}

/// Inner product of two vectors; equals cosine similarity when both are
/// unit-normalized, which encoded vectors are.
pub fn cosine_score(query: &DenseVector, doc: &DenseVector) -> Result<f32> {
    query.dot(doc)
}
