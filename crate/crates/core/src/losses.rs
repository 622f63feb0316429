//! Classification loss, dissonance penalties and the combined objective.
//!
//! All losses are non-negative quantities to be minimized. With `h2`'s
//! probability `p2`, the old model's probability `p1` and the indicator
//! `c = 1[h1 is correct]`:
//!
//! ```text
//! new-error        D   = c * logloss(y, p2)
//! imitation        D'  = softlogloss(p1, p2)
//! strict imitation D'' = c * softlogloss(p1, p2)
//! combined         Lc  = logloss(y, p2) + lambda_c * D
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DissonanceKind {
    NewError,
    Imitation,
    StrictImitation,
    None,
}

impl DissonanceKind {
    pub const PENALIZING: [DissonanceKind; 3] = [
        DissonanceKind::NewError,
        DissonanceKind::Imitation,
        DissonanceKind::StrictImitation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DissonanceKind::NewError => "new-error",
            DissonanceKind::Imitation => "imitation",
            DissonanceKind::StrictImitation => "strict-imitation",
            DissonanceKind::None => "none",
        }
    }

    pub fn needs_reference(self) -> bool {
        self != DissonanceKind::None
    }
}

impl std::fmt::Display for DissonanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DissonanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "new-error" => Ok(DissonanceKind::NewError),
            "imitation" => Ok(DissonanceKind::Imitation),
            "strict-imitation" => Ok(DissonanceKind::StrictImitation),
            "none" => Ok(DissonanceKind::None),
            other => Err(Error::InvalidConfig(format!(
                "unknown dissonance kind `{other}` \
                 (expected new-error, imitation, strict-imitation or none)"
            ))),
        }
    }
}

/// The old model's view of one example, frozen before retraining.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference<T> {
    pub probability: T,
    pub correct: bool,
}

/// Everything the per-example loss needs besides `y` and `p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossContext<T> {
    pub lambda_c: T,
    pub kind: DissonanceKind,
    pub h1_probability: Option<T>,
    pub h1_correct: Option<bool>,
}

impl<T: Scalar> LossContext<T> {
    /// Plain log loss.
    pub fn plain() -> Self {
        Self {
            lambda_c: T::zero(),
            kind: DissonanceKind::None,
            h1_probability: None,
            h1_correct: None,
        }
    }

    pub fn new(kind: DissonanceKind, lambda_c: T, reference: Option<Reference<T>>) -> Self {
        Self {
            lambda_c,
            kind,
            h1_probability: reference.map(|r| r.probability),
            h1_correct: reference.map(|r| r.correct),
        }
    }

    fn reference(&self) -> Result<(T, bool)> {
        match (self.h1_probability, self.h1_correct) {
            (Some(p), Some(c)) => Ok((p, c)),
            _ => Err(Error::MissingReference {
                kind: self.kind.name(),
            }),
        }
    }
}

fn indicator<T: Scalar>(flag: bool) -> T {
    if flag {
        T::one()
    } else {
        T::zero()
    }
}

fn label<T: Scalar>(y: u8) -> T {
    indicator(y == 1)
}

/// `-[y ln p + (1 - y) ln(1 - p)]`, with `p` already clipped.
pub fn log_loss<T: Scalar>(y: u8, p: T) -> T {
    if y == 1 {
        -p.ln()
    } else {
        -(T::one() - p).ln()
    }
}

/// Cross-entropy of `p2` against the soft target `p1`.
pub fn soft_log_loss<T: Scalar>(p1: T, p2: T) -> T {
    -(p1 * p2.ln() + (T::one() - p1) * (T::one() - p2).ln())
}

pub fn dissonance<T: Scalar>(ctx: &LossContext<T>, y: u8, p2: T) -> Result<T> {
    Ok(match ctx.kind {
        DissonanceKind::None => T::zero(),
        DissonanceKind::NewError => {
            let (_, correct) = ctx.reference()?;
            if correct {
                log_loss(y, p2)
            } else {
                T::zero()
            }
        }
        DissonanceKind::Imitation => {
            let (p1, _) = ctx.reference()?;
            soft_log_loss(p1, p2)
        }
        DissonanceKind::StrictImitation => {
            let (p1, correct) = ctx.reference()?;
            if correct {
                soft_log_loss(p1, p2)
            } else {
                T::zero()
            }
        }
    })
}

pub fn combined_loss<T: Scalar>(ctx: &LossContext<T>, y: u8, p2: T) -> Result<T> {
    let base = log_loss(y, p2);
    if ctx.kind == DissonanceKind::None {
        return Ok(base);
    }
    Ok(base + ctx.lambda_c * dissonance(ctx, y, p2)?)
}

/// Derivative of [`combined_loss`] with respect to the logit `z`, `p2 = sigmoid(z)`.
pub fn combined_loss_logit_gradient<T: Scalar>(ctx: &LossContext<T>, y: u8, p2: T) -> Result<T> {
    let residual = p2 - label::<T>(y);
    Ok(match ctx.kind {
        DissonanceKind::None => residual,
        DissonanceKind::NewError => {
            let (_, correct) = ctx.reference()?;
            (T::one() + ctx.lambda_c * indicator::<T>(correct)) * residual
        }
        DissonanceKind::Imitation => {
            let (p1, _) = ctx.reference()?;
            residual + ctx.lambda_c * (p2 - p1)
        }
        DissonanceKind::StrictImitation => {
            let (p1, correct) = ctx.reference()?;
            residual + ctx.lambda_c * indicator::<T>(correct) * (p2 - p1)
        }
    })
}
