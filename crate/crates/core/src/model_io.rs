//! JSON model files.
//!
//! ```json
//! {"kind": "linear", "weights": [..], "bias": 0.1,
//!  "feature_names": ["age", ..], "standardization": {"means": [..], "stds": [..]}}
//! ```
//!
//! Network files carry `hidden_size`, `input_weights` (row-major, one row per
//! hidden unit), `hidden_bias`, `output_weights` and `output_bias` instead.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Standardization;
use crate::error::{Error, Result};
use crate::model::{Classifier, LinearClassifier, Model, NetworkClassifier};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParameters {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Network {
        hidden_size: usize,
        input_weights: Vec<f64>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub parameters: ModelParameters,
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub standardization: Option<Standardization>,
}

fn widen<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn narrow<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

impl ModelFile {
    pub fn from_classifier<T: Scalar>(
        model: &Classifier<T>,
        feature_names: Vec<String>,
        standardization: Option<Standardization>,
    ) -> Self {
        let parameters = match model {
            Classifier::Linear(m) => ModelParameters::Linear {
                weights: widen(&m.weights),
                bias: m.bias.to_f64_lossy(),
            },
            Classifier::Network(m) => ModelParameters::Network {
                hidden_size: m.hidden_size(),
                input_weights: widen(&m.input_weights),
                hidden_bias: widen(&m.hidden_bias),
                output_weights: widen(&m.output_weights),
                output_bias: m.output_bias.to_f64_lossy(),
            },
        };
        Self {
            parameters,
            feature_names,
            standardization,
        }
    }

    pub fn to_classifier<T: Scalar>(&self) -> Result<Classifier<T>> {
        let dim = self.feature_names.len();
        let model = match &self.parameters {
            ModelParameters::Linear { weights, bias } => {
                Classifier::Linear(LinearClassifier::new(narrow(weights), T::lit(*bias)))
            }
            ModelParameters::Network {
                hidden_size,
                input_weights,
                hidden_bias,
                output_weights,
                output_bias,
            } => Classifier::Network(NetworkClassifier::new(
                dim,
                *hidden_size,
                narrow(input_weights),
                narrow(hidden_bias),
                narrow(output_weights),
                T::lit(*output_bias),
            )?),
        };
        if model.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: model.dim(),
            });
        }
        if let Some(s) = &self.standardization {
            if s.dim() != dim || s.stds.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.dim(),
                });
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
