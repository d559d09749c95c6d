use serde::{Deserialize, Serialize};

use super::MetaFeatureVector;
use crate::error::{Error, Result};

/// Per-dimension min-max scaling fitted on training attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    /// Fit per-dimension bounds. Panics if `vectors` is empty or ragged.
    pub fn fit<'a>(vectors: impl IntoIterator<Item = &'a MetaFeatureVector>) -> Normalizer {
        let mut iter = vectors.into_iter();
        let first = iter
            .next()
            .expect("fit_normalizer needs at least one vector");
        let mut min = first.values.clone();
        let mut max = first.values.clone();
        for v in iter {
            assert_eq!(v.values.len(), min.len(), "ragged meta-feature vectors");
            for ((lo, hi), x) in min.iter_mut().zip(max.iter_mut()).zip(&v.values) {
                *lo = lo.min(*x);
                *hi = hi.max(*x);
            }
        }
        Normalizer { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Scale into [0, 1], clamping values outside the fitted range; constant
    /// dimensions map to 0.5.
    pub fn apply(&self, v: &MetaFeatureVector) -> Result<MetaFeatureVector> {
        Ok(MetaFeatureVector {
            values: self.apply_values(&v.values)?,
            schema: v.schema.clone(),
        })
    }

    pub fn apply_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.dim() {
            return Err(Error::SchemaMismatch {
                expected: self.dim(),
                actual: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                let width = hi - lo;
                if width > 0.0 && width.is_finite() {
                    ((x - lo) / width).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect())
    }
}
