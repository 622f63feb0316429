//! Binary classifiers: logistic regression and a one-hidden-layer network.
//!
//! Both expose the logit, a clipped probability and a hard recommendation at
//! the inclusive 0.5 threshold. Parameters are also reachable as one flat
//! vector so the trainer and the gradient checks can treat both kinds alike.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{clip_probability, sigmoid, Scalar};

/// Probabilities at or above this value recommend label 1.
pub const DECISION_THRESHOLD: f64 = 0.5;

pub const DEFAULT_HIDDEN_SIZE: usize = 10;

const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Linear,
    Network,
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassifierKind::Linear => "linear",
            ClassifierKind::Network => "network",
        })
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lr" => Ok(ClassifierKind::Linear),
            "network" | "mlp" => Ok(ClassifierKind::Network),
            other => Err(Error::InvalidConfig(format!(
                "unknown classifier kind `{other}` (expected linear or network)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub probability: T,
    pub recommendation: u8,
}

/// Shared interface of the classifiers.
pub trait Model<T: Scalar> {
    fn dim(&self) -> usize;

    /// Logit without a dimensionality check. `x.len()` must equal `dim()`.
    fn logit_unchecked(&self, x: &[T]) -> T;

    fn num_parameters(&self) -> usize;

    /// Flat copy of all parameters.
    fn parameters(&self) -> Vec<T>;

    /// Overwrite all parameters from a flat slice of length `num_parameters()`.
    fn set_parameters(&mut self, params: &[T]);

    /// `grad += scale * d(logit)/d(params)` evaluated at `x`.
    fn accumulate_logit_gradient(&self, x: &[T], scale: T, grad: &mut [T]);

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            })
        }
    }

    fn logit(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        Ok(self.logit_unchecked(x))
    }

    fn predict_proba(&self, x: &[T]) -> Result<T> {
        Ok(clip_probability(sigmoid(self.logit(x)?)))
    }

    fn recommend(&self, x: &[T]) -> Result<u8> {
        Ok(recommendation_for(self.predict_proba(x)?))
    }

    fn predict(&self, x: &[T]) -> Result<Prediction<T>> {
        let probability = self.predict_proba(x)?;
        Ok(Prediction {
            probability,
            recommendation: recommendation_for(probability),
        })
    }
}

/// Hard label for a probability; 0.5 itself maps to 1.
pub fn recommendation_for<T: Scalar>(probability: T) -> u8 {
    u8::from(probability >= T::lit(DECISION_THRESHOLD))
}

/// Logistic regression: `sigmoid(w . x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> LinearClassifier<T> {
    pub fn new(weights: Vec<T>, bias: T) -> Self {
        Self { weights, bias }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![T::zero(); dim], T::zero())
    }
}

impl<T: Scalar> Model<T> for LinearClassifier<T> {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn logit_unchecked(&self, x: &[T]) -> T {
        self.weights
            .iter()
            .zip(x)
            .fold(self.bias, |acc, (w, v)| acc + *w * *v)
    }

    fn num_parameters(&self) -> usize {
        self.weights.len() + 1
    }

    fn parameters(&self) -> Vec<T> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn set_parameters(&mut self, params: &[T]) {
        let d = self.weights.len();
        self.weights.copy_from_slice(&params[..d]);
        self.bias = params[d];
    }

    fn accumulate_logit_gradient(&self, x: &[T], scale: T, grad: &mut [T]) {
        let d = self.weights.len();
        for (g, v) in grad[..d].iter_mut().zip(x) {
            *g += scale * *v;
        }
        grad[d] += scale;
    }
}

/// One hidden rectifier layer followed by a sigmoid output unit.
///
/// `input_weights` is row-major `hidden_size x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkClassifier<T> {
    dim: usize,
    hidden_size: usize,
    pub input_weights: Vec<T>,
    pub hidden_bias: Vec<T>,
    pub output_weights: Vec<T>,
    pub output_bias: T,
}

impl<T: Scalar> NetworkClassifier<T> {
    pub fn new(
        dim: usize,
        hidden_size: usize,
        input_weights: Vec<T>,
        hidden_bias: Vec<T>,
        output_weights: Vec<T>,
        output_bias: T,
    ) -> Result<Self> {
        if hidden_size == 0
            || input_weights.len() != dim * hidden_size
            || hidden_bias.len() != hidden_size
            || output_weights.len() != hidden_size
        {
            return Err(Error::InvalidConfig(format!(
                "inconsistent network shapes: dim {dim}, hidden {hidden_size}, \
                 input weights {}, hidden bias {}, output weights {}",
                input_weights.len(),
                hidden_bias.len(),
                output_weights.len()
            )));
        }
        Ok(Self {
            dim,
            hidden_size,
            input_weights,
            hidden_bias,
            output_weights,
            output_bias,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    fn pre_activation(&self, unit: usize, x: &[T]) -> T {
        let row = &self.input_weights[unit * self.dim..(unit + 1) * self.dim];
        row.iter()
            .zip(x)
            .fold(self.hidden_bias[unit], |acc, (w, v)| acc + *w * *v)
    }
}

impl<T: Scalar> Model<T> for NetworkClassifier<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn logit_unchecked(&self, x: &[T]) -> T {
        (0..self.hidden_size).fold(self.output_bias, |acc, j| {
            acc + self.output_weights[j] * self.pre_activation(j, x).max(T::zero())
        })
    }

    fn num_parameters(&self) -> usize {
        self.hidden_size * (self.dim + 2) + 1
    }

    fn parameters(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.num_parameters());
        p.extend_from_slice(&self.input_weights);
        p.extend_from_slice(&self.hidden_bias);
        p.extend_from_slice(&self.output_weights);
        p.push(self.output_bias);
        p
    }

    fn set_parameters(&mut self, params: &[T]) {
        let (w1, rest) = params.split_at(self.dim * self.hidden_size);
        let (b1, rest) = rest.split_at(self.hidden_size);
        let (w2, rest) = rest.split_at(self.hidden_size);
        self.input_weights.copy_from_slice(w1);
        self.hidden_bias.copy_from_slice(b1);
        self.output_weights.copy_from_slice(w2);
        self.output_bias = rest[0];
    }

    fn accumulate_logit_gradient(&self, x: &[T], scale: T, grad: &mut [T]) {
        let (d, h) = (self.dim, self.hidden_size);
        let b1_off = d * h;
        let w2_off = b1_off + h;
        for j in 0..h {
            let pre = self.pre_activation(j, x);
            if pre > T::zero() {
                grad[w2_off + j] += scale * pre;
                let back = scale * self.output_weights[j];
                for (g, v) in grad[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *g += back * *v;
                }
                grad[b1_off + j] += back;
            }
        }
        grad[w2_off + h] += scale;
    }
}

/// Either classifier kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier<T> {
    Linear(LinearClassifier<T>),
    Network(NetworkClassifier<T>),
}

impl<T: Scalar> Classifier<T> {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Linear(_) => ClassifierKind::Linear,
            Classifier::Network(_) => ClassifierKind::Network,
        }
    }

    pub fn hidden_size(&self) -> Option<usize> {
        match self {
            Classifier::Linear(_) => None,
            Classifier::Network(n) => Some(n.hidden_size()),
        }
    }

    /// Subtract `learning_rate * grad` from the parameters.
    pub fn descend(&mut self, grad: &[T], learning_rate: T) {
        let mut params = self.parameters();
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= learning_rate * *g;
        }
        self.set_parameters(&params);
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $body:expr) => {
        match $self {
            Classifier::Linear($m) => $body,
            Classifier::Network($m) => $body,
        }
    };
}

impl<T: Scalar> Model<T> for Classifier<T> {
    fn dim(&self) -> usize {
        dispatch!(self, m => m.dim())
    }

    fn logit_unchecked(&self, x: &[T]) -> T {
        dispatch!(self, m => m.logit_unchecked(x))
    }

    fn num_parameters(&self) -> usize {
        dispatch!(self, m => m.num_parameters())
    }

    fn parameters(&self) -> Vec<T> {
        dispatch!(self, m => m.parameters())
    }

    fn set_parameters(&mut self, params: &[T]) {
        dispatch!(self, m => m.set_parameters(params))
    }

    fn accumulate_logit_gradient(&self, x: &[T], scale: T, grad: &mut [T]) {
        dispatch!(self, m => m.accumulate_logit_gradient(x, scale, grad))
    }
}

/// Seeded initialization, every parameter drawn from uniform(-0.1, 0.1).
///
/// `hidden_size` is ignored for the linear kind.
pub fn init_classifier<T: Scalar>(
    kind: ClassifierKind,
    dim: usize,
    hidden_size: usize,
    seed: u64,
) -> Result<Classifier<T>> {
    if dim == 0 {
        return Err(Error::InvalidConfig("dimensionality must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<T> {
        (0..n)
            .map(|_| T::lit(rng.random_range(-INIT_RANGE..INIT_RANGE)))
            .collect()
    };
    Ok(match kind {
        ClassifierKind::Linear => {
            let mut p = draw(dim + 1);
            let bias = p.pop().expect("non-empty");
            Classifier::Linear(LinearClassifier::new(p, bias))
        }
        ClassifierKind::Network => {
            if hidden_size == 0 {
                return Err(Error::InvalidConfig("hidden_size must be at least 1".into()));
            }
            let w1 = draw(dim * hidden_size);
            let b1 = draw(hidden_size);
            let w2 = draw(hidden_size);
            let b2 = draw(1)[0];
            Classifier::Network(NetworkClassifier::new(dim, hidden_size, w1, b1, w2, b2)?)
        }
    })
}
