use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A feature vector with a binary label (0 or 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub features: Vec<T>,
    pub label: u8,
}

impl<T: Scalar> Example<T> {
    pub fn new(features: Vec<T>, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::InvalidLabel { label });
        }
        Ok(Self { features, label })
    }

    pub fn label_scalar(&self) -> T {
        if self.label == 1 {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Per-feature affine standardization `(x - mean) / std`.
///
/// A zero `std` marks a constant column; such columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    /// Population mean and standard deviation of each column.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; dim];
        for row in rows {
            for ((acc, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *acc += (v - m) * (v - m);
            }
        }
        let stds = vars
            .into_iter()
            .zip(&means)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                // relative guard: a column of identical values leaves only rounding noise
                if sd <= 1e-12 * m.abs().max(1.0) {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }
}

/// An ordered collection of examples sharing one feature dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    feature_names: Vec<String>,
    examples: Vec<Example<T>>,
    standardization: Option<Standardization>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(feature_names: Vec<String>, examples: Vec<Example<T>>) -> Result<Self> {
        let dim = feature_names.len();
        for ex in &examples {
            if ex.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: ex.features.len(),
                });
            }
            if ex.label > 1 {
                return Err(Error::InvalidLabel { label: ex.label });
            }
        }
        Ok(Self {
            feature_names,
            examples,
            standardization: None,
        })
    }

    /// Generic names `x0, x1, ...` for datasets built in code.
    pub fn from_examples(examples: Vec<Example<T>>) -> Result<Self> {
        let dim = examples.first().map_or(0, |e| e.features.len());
        Self::new(default_feature_names(dim), examples)
    }

    pub fn with_standardization(mut self, stats: Standardization) -> Self {
        self.standardization = Some(stats);
        self
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn examples(&self) -> &[Example<T>] {
        &self.examples
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.examples.iter().map(|e| e.label)
    }

    /// `(negatives, positives)`
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels().filter(|&l| l == 1).count();
        (self.len() - pos, pos)
    }

    pub fn ensure_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyDataset)
        } else {
            Ok(())
        }
    }

    /// New dataset holding the examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            standardization: self.standardization.clone(),
        }
    }

    /// Same examples with every label flipped.
    pub fn with_flipped_labels(&self) -> Self {
        let mut out = self.clone();
        for ex in &mut out.examples {
            ex.label = 1 - ex.label;
        }
        out
    }
}

pub fn default_feature_names(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}
